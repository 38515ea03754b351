//! Dense symmetric eigendecomposition, matrix functions, and trapezoid
//! quadrature on `[0, 1]`.
//!
//! The eigendecomposition is the substrate every estimator runs on: a
//! spectral filter applied to a symmetric PSD system matrix is realized as
//! `V g(D) V^T`. Factorization is delegated to `faer`; this module owns the
//! contract (descending eigenvalues, orthonormal columns, reconstruction
//! accuracy) and the PSD clamping policy.

use faer::{Col, Mat, MatRef, Side};

use crate::consts::{PSD_CLAMP_REL, SYMMETRY_TOL};
use crate::error::{Error, Result};

/// Eigendecomposition of a symmetric real matrix, eigenvalues sorted in
/// descending order, eigenvectors as the columns of an orthonormal matrix.
#[derive(Debug, Clone)]
pub struct SymEigen {
    eigenvalues: Vec<f64>,
    eigenvectors: Mat<f64>,
}

/// Decomposes a square symmetric matrix.
///
/// The input must be symmetric to within [`SYMMETRY_TOL`] (max absolute
/// asymmetry) and contain only finite entries.
pub fn sym_eigen(a: MatRef<'_, f64>) -> Result<SymEigen> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::NonSquare {
            rows: n,
            cols: a.ncols(),
        });
    }
    let mut max_asym = 0.0f64;
    for i in 0..n {
        for j in 0..=i {
            let x = a[(i, j)];
            let y = a[(j, i)];
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::NonFinite {
                    context: "eigendecomposition input",
                });
            }
            max_asym = max_asym.max((x - y).abs());
        }
    }
    if max_asym > SYMMETRY_TOL {
        return Err(Error::NonSymmetric {
            max_asymmetry: max_asym,
            tolerance: SYMMETRY_TOL,
        });
    }

    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::EigenFailed)?;
    // faer returns ascending eigenvalues; flip to descending.
    let s = evd.S().column_vector();
    let u = evd.U();
    let eigenvalues: Vec<f64> = (0..n).map(|q| s[n - 1 - q]).collect();
    let eigenvectors = Mat::from_fn(n, n, |i, q| u[(i, n - 1 - q)]);
    Ok(SymEigen {
        eigenvalues,
        eigenvectors,
    })
}

impl SymEigen {
    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal eigenvector matrix (eigenvectors as columns, matching
    /// the eigenvalue order).
    pub fn eigenvectors(&self) -> MatRef<'_, f64> {
        self.eigenvectors.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Largest eigenvalue (0 for an empty decomposition).
    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    /// `V diag(f(d)) V^T`.
    ///
    /// Errors if `f` produces a non-finite value on any eigenvalue.
    pub fn apply_matrix_function(&self, f: impl Fn(f64) -> f64) -> Result<Mat<f64>> {
        let fd = self.mapped(&f)?;
        let n = self.dim();
        let scaled = Mat::from_fn(n, n, |i, q| self.eigenvectors[(i, q)] * fd[q]);
        Ok(&scaled * self.eigenvectors.transpose())
    }

    /// `V diag(f(d)) V^T v` without forming the matrix.
    pub fn apply_to_vector(&self, f: impl Fn(f64) -> f64, v: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if v.len() != n {
            return Err(Error::ShapeMismatch {
                expected: n,
                got: v.len(),
            });
        }
        let fd = self.mapped(&f)?;
        let v = Col::<f64>::from_fn(n, |i| v[i]);
        let mut proj = self.eigenvectors.transpose() * &v;
        for q in 0..n {
            proj[q] *= fd[q];
        }
        let out = &self.eigenvectors * &proj;
        Ok(out.iter().copied().collect())
    }

    fn mapped(&self, f: &impl Fn(f64) -> f64) -> Result<Vec<f64>> {
        let fd: Vec<f64> = self.eigenvalues.iter().map(|&d| f(d)).collect();
        if fd.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                context: "scalar function of the spectrum",
            });
        }
        Ok(fd)
    }

    /// Clamps the spectrum of a numerically PSD matrix: eigenvalues in
    /// `[-PSD_CLAMP_REL * trace, 0)` become zero, anything lower is an
    /// error.
    pub fn clamped_psd(mut self) -> Result<SymEigen> {
        let trace: f64 = self.eigenvalues.iter().sum();
        let threshold = PSD_CLAMP_REL * trace.max(0.0);
        for d in &mut self.eigenvalues {
            if *d < -threshold {
                return Err(Error::NotPositiveSemidefinite {
                    min_eigenvalue: *d,
                    threshold,
                });
            }
            if *d < 0.0 {
                *d = 0.0;
            }
        }
        Ok(self)
    }
}

/// Uniform trapezoid quadrature grid on `[0, 1]` including both endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid1D {
    /// Builds a uniform grid with `n_nodes >= 2` nodes. Endpoint weights are
    /// `h/2`, interior weights `h`, so the weights sum to one.
    pub fn uniform(n_nodes: usize) -> Result<Grid1D> {
        if n_nodes < 2 {
            return Err(Error::BadSize {
                what: "grid nodes",
                min: 2,
                got: n_nodes,
            });
        }
        let h = 1.0 / (n_nodes - 1) as f64;
        let nodes = (0..n_nodes).map(|i| i as f64 * h).collect();
        let mut weights = vec![h; n_nodes];
        weights[0] = h / 2.0;
        weights[n_nodes - 1] = h / 2.0;
        Ok(Grid1D { nodes, weights })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Trapezoid integral of sampled values.
    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.len() {
            return Err(Error::ShapeMismatch {
                expected: self.len(),
                got: values.len(),
            });
        }
        Ok(self
            .weights
            .iter()
            .zip(values)
            .map(|(w, v)| w * v)
            .sum())
    }
}

/// Discrete `L^2[0, 1]` norm: `sqrt(sum_i w_i v_i^2)`.
pub fn l2_norm_grid(values: &[f64], grid: &Grid1D) -> Result<f64> {
    if values.len() != grid.len() {
        return Err(Error::ShapeMismatch {
            expected: grid.len(),
            got: values.len(),
        });
    }
    let s: f64 = grid
        .weights()
        .iter()
        .zip(values)
        .map(|(w, v)| w * v * v)
        .sum();
    Ok(s.sqrt())
}

/// Discrete `L^2([0,1]^2)` norm over a tensor grid: rows follow `grid_s`,
/// columns follow `grid_t`.
pub fn l2_norm_grid2(values: MatRef<'_, f64>, grid_s: &Grid1D, grid_t: &Grid1D) -> Result<f64> {
    if values.nrows() != grid_s.len() {
        return Err(Error::ShapeMismatch {
            expected: grid_s.len(),
            got: values.nrows(),
        });
    }
    if values.ncols() != grid_t.len() {
        return Err(Error::ShapeMismatch {
            expected: grid_t.len(),
            got: values.ncols(),
        });
    }
    let ws = grid_s.weights();
    let wt = grid_t.weights();
    let mut s = 0.0;
    for j in 0..values.ncols() {
        let mut col = 0.0;
        for i in 0..values.nrows() {
            let v = values[(i, j)];
            col += ws[i] * v * v;
        }
        s += wt[j] * col;
    }
    Ok(s.sqrt())
}

/// Max absolute entry of a matrix.
pub fn max_abs(a: MatRef<'_, f64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].abs());
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn mat(rows: &[&[f64]]) -> Mat<f64> {
        Mat::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
    }

    #[test]
    fn identity_eigenvalues_are_ones() {
        let a = Mat::<f64>::identity(3, 3);
        let e = sym_eigen(a.as_ref()).unwrap();
        for d in e.eigenvalues() {
            assert_abs_diff_eq!(*d, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn diagonal_matrix_sorted_descending() {
        let a = mat(&[&[1.0, 0.0], &[0.0, 2.0]]);
        let e = sym_eigen(a.as_ref()).unwrap();
        assert_abs_diff_eq!(e.eigenvalues()[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.eigenvalues()[1], 1.0, epsilon = 1e-12);
        // eigenvectors are +-unit coordinate vectors
        assert_abs_diff_eq!(e.eigenvectors()[(1, 0)].abs(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.eigenvectors()[(0, 1)].abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn swap_matrix_has_plus_minus_one() {
        let a = mat(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let e = sym_eigen(a.as_ref()).unwrap();
        assert_abs_diff_eq!(e.eigenvalues()[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.eigenvalues()[1], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_asymmetry_and_nonfinite() {
        let a = mat(&[&[0.0, 1.0], &[0.5, 0.0]]);
        assert!(matches!(
            sym_eigen(a.as_ref()),
            Err(Error::NonSymmetric { .. })
        ));
        let b = mat(&[&[f64::NAN, 0.0], &[0.0, 1.0]]);
        assert!(matches!(sym_eigen(b.as_ref()), Err(Error::NonFinite { .. })));
        let c = Mat::<f64>::zeros(2, 3);
        assert!(matches!(sym_eigen(c.as_ref()), Err(Error::NonSquare { .. })));
    }

    #[test]
    fn reconstruction_and_orthonormality() {
        // deterministic symmetric test matrix
        let n = 24;
        let a = Mat::from_fn(n, n, |i, j| {
            let (i, j) = (i as f64, j as f64);
            ((i + 1.0) * (j + 1.0)).sqrt().sin() + if i == j { 2.0 } else { 0.0 }
        });
        let e = sym_eigen(a.as_ref()).unwrap();
        let recon = e.apply_matrix_function(|s| s).unwrap();
        let scale = max_abs(a.as_ref()).max(1.0);
        assert!(max_abs((&recon - &a).as_ref()) <= 1e-8 * scale);
        let vtv = e.eigenvectors().transpose() * e.eigenvectors();
        let eye = Mat::<f64>::identity(n, n);
        assert!(max_abs((&vtv - &eye).as_ref()) <= 1e-10);
        for q in 1..n {
            assert!(e.eigenvalues()[q - 1] >= e.eigenvalues()[q]);
        }
    }

    #[test]
    fn matrix_function_constant_one_gives_identity() {
        let a = mat(&[&[2.0, 0.3], &[0.3, 1.0]]);
        let e = sym_eigen(a.as_ref()).unwrap();
        let one = e.apply_matrix_function(|_| 1.0).unwrap();
        let eye = Mat::<f64>::identity(2, 2);
        assert!(max_abs((&one - &eye).as_ref()) <= 1e-12);
    }

    #[test]
    fn matrix_function_sqrt_on_scalar() {
        let a = mat(&[&[4.0]]);
        let e = sym_eigen(a.as_ref()).unwrap();
        let r = e.apply_matrix_function(f64::sqrt).unwrap();
        assert_abs_diff_eq!(r[(0, 0)], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn matrix_function_rejects_nonfinite_output() {
        let a = mat(&[&[0.0, 0.0], &[0.0, 1.0]]);
        let e = sym_eigen(a.as_ref()).unwrap();
        assert!(matches!(
            e.apply_matrix_function(|s| 1.0 / s),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn composition_matches_product_function() {
        let n = 12;
        let a = Mat::from_fn(n, n, |i, j| {
            1.0 / (1.0 + (i as f64 - j as f64).abs()) + if i == j { 1.0 } else { 0.0 }
        });
        let e = sym_eigen(a.as_ref()).unwrap();
        let f = |s: f64| 1.0 / (s + 0.5);
        let g = |s: f64| s * s;
        let fg = e.apply_matrix_function(|s| f(s) * g(s)).unwrap();
        let comp = {
            let gm = e.apply_matrix_function(g).unwrap();
            let fm = e.apply_matrix_function(f).unwrap();
            &fm * &gm
        };
        assert!(max_abs((&fg - &comp).as_ref()) <= 1e-8);
    }

    #[test]
    fn apply_to_vector_matches_matrix_route() {
        let n = 9;
        let a = Mat::from_fn(n, n, |i, j| ((i * j) as f64).cos() + if i == j { 3.0 } else { 0.0 });
        let sym = Mat::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
        let e = sym_eigen(sym.as_ref()).unwrap();
        let v: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let via_vec = e.apply_to_vector(|s| 1.0 / (s.abs() + 1.0), &v).unwrap();
        let m = e.apply_matrix_function(|s| 1.0 / (s.abs() + 1.0)).unwrap();
        let vv = Col::<f64>::from_fn(n, |i| v[i]);
        let via_mat = &m * &vv;
        for i in 0..n {
            assert_abs_diff_eq!(via_vec[i], via_mat[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn clamping_fixes_roundoff_and_rejects_indefinite() {
        let e = SymEigen {
            eigenvalues: vec![2.0, 1.0, -1e-12],
            eigenvectors: Mat::<f64>::identity(3, 3),
        };
        let c = e.clamped_psd().unwrap();
        assert_eq!(c.eigenvalues()[2], 0.0);

        let bad = SymEigen {
            eigenvalues: vec![2.0, 1.0, -0.5],
            eigenvectors: Mat::<f64>::identity(3, 3),
        };
        assert!(matches!(
            bad.clamped_psd(),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
    }

    #[test]
    fn trapezoid_grid_small_cases() {
        let g = Grid1D::uniform(2).unwrap();
        assert_eq!(g.nodes(), &[0.0, 1.0]);
        assert_eq!(g.weights(), &[0.5, 0.5]);
        let g = Grid1D::uniform(3).unwrap();
        assert_eq!(g.nodes(), &[0.0, 0.5, 1.0]);
        assert_eq!(g.weights(), &[0.25, 0.5, 0.25]);
        assert!(matches!(Grid1D::uniform(1), Err(Error::BadSize { .. })));
    }

    #[test]
    fn trapezoid_exact_on_linear() {
        let g = Grid1D::uniform(101).unwrap();
        let vals: Vec<f64> = g.nodes().to_vec();
        assert_abs_diff_eq!(g.integrate(&vals).unwrap(), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn l2_norms_on_known_functions() {
        let g = Grid1D::uniform(11).unwrap();
        assert_abs_diff_eq!(
            l2_norm_grid(&vec![1.0; 11], &g).unwrap(),
            1.0,
            epsilon = 1e-14
        );
        assert_eq!(l2_norm_grid(&vec![0.0; 11], &g).unwrap(), 0.0);

        let g = Grid1D::uniform(1001).unwrap();
        let vals: Vec<f64> = g.nodes().to_vec();
        assert_abs_diff_eq!(
            l2_norm_grid(&vals, &g).unwrap(),
            (1.0f64 / 3.0).sqrt(),
            epsilon = 1e-5
        );
        assert!(matches!(
            l2_norm_grid(&[1.0], &g),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn l2_norm_2d_on_product_function() {
        let g = Grid1D::uniform(501).unwrap();
        let vals = Mat::from_fn(501, 501, |i, j| g.nodes()[i] * g.nodes()[j]);
        assert_abs_diff_eq!(
            l2_norm_grid2(vals.as_ref(), &g, &g).unwrap(),
            1.0 / 3.0,
            epsilon = 1e-4
        );
        let c = Mat::from_fn(3, 3, |_, _| 1.0);
        let g3 = Grid1D::uniform(3).unwrap();
        assert_abs_diff_eq!(
            l2_norm_grid2(c.as_ref(), &g3, &g3).unwrap(),
            1.0,
            epsilon = 1e-14
        );
        let z = Mat::<f64>::zeros(3, 3);
        assert_eq!(l2_norm_grid2(z.as_ref(), &g3, &g3).unwrap(), 0.0);
    }

    #[test]
    fn sine_norm_is_exact_on_uniform_grids() {
        // sin^2(pi t) is a trig polynomial over a full period, which the
        // trapezoid rule integrates exactly, so the discrete norm hits
        // 1/sqrt(2) at machine precision for every resolution.
        for n in [17, 65, 129] {
            let g = Grid1D::uniform(n).unwrap();
            let vals: Vec<f64> = g
                .nodes()
                .iter()
                .map(|t| (std::f64::consts::PI * t).sin())
                .collect();
            assert_abs_diff_eq!(
                l2_norm_grid(&vals, &g).unwrap(),
                std::f64::consts::FRAC_1_SQRT_2,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn quadrature_error_decays_quadratically() {
        // exp(t) has no periodic cancellation, so the generic O(h^2)
        // trapezoid rate is visible: halving h quarters the error.
        let target = ((std::f64::consts::E.powi(2) - 1.0) / 2.0).sqrt();
        let err = |n: usize| {
            let g = Grid1D::uniform(n).unwrap();
            let vals: Vec<f64> = g.nodes().iter().map(|t| t.exp()).collect();
            (l2_norm_grid(&vals, &g).unwrap() - target).abs()
        };
        let (e1, e2, e3) = (err(65), err(129), err(257));
        for ratio in [e1 / e2, e2 / e3] {
            assert!(
                (3.5..=4.5).contains(&ratio),
                "halving h should quarter the error, got ratio {ratio}"
            );
        }
    }
}

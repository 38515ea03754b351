//! Reproducing kernels on `[0, 1]` and `[0, 1]^2`, Gram assembly, truncated
//! Mercer eigensystems, and the effective-dimension diagnostic.
//!
//! `BrownianMin` (`k(s,t) = min(s,t)`) is the workhorse: its integral
//! operator has the closed-form eigensystem
//! `lambda_i = ((i - 1/2) pi)^{-2}`, `psi_i(t) = sqrt(2) sin((i - 1/2) pi t)`,
//! giving exact polynomial eigenvalue decay with exponent 2. Gaussian and
//! Matern kernels are supported for fitting; their spectra come from a
//! Nystrom discretization.

use std::sync::Arc;

use faer::{Mat, MatRef, Side};

use crate::consts::PSD_CLAMP_REL;
use crate::error::{Error, Result};
use crate::numerics::Grid1D;

/// Kernel families on `[0, 1]`. All satisfy `sup_t k(t, t) <= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel1 {
    /// `k(s, t) = min(s, t)`, the Brownian-motion covariance.
    BrownianMin,
    /// `k(s, t) = exp(-(s - t)^2 / (2 bw^2))`.
    Gaussian { bandwidth: f64 },
    /// Matern kernel with half-integer smoothness 0.5, 1.5 or 2.5.
    Matern { smoothness: f64, lengthscale: f64 },
}

impl Kernel1 {
    pub fn gaussian(bandwidth: f64) -> Result<Kernel1> {
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(Error::BadKernelParam(format!(
                "gaussian bandwidth must be positive, got {bandwidth}"
            )));
        }
        Ok(Kernel1::Gaussian { bandwidth })
    }

    pub fn matern(smoothness: f64, lengthscale: f64) -> Result<Kernel1> {
        if ![0.5, 1.5, 2.5].contains(&smoothness) {
            return Err(Error::BadKernelParam(format!(
                "matern smoothness {smoothness} unsupported; use 0.5, 1.5 or 2.5"
            )));
        }
        if !(lengthscale > 0.0) || !lengthscale.is_finite() {
            return Err(Error::BadKernelParam(format!(
                "matern lengthscale must be positive, got {lengthscale}"
            )));
        }
        Ok(Kernel1::Matern {
            smoothness,
            lengthscale,
        })
    }

    /// Uniform bound on `k(t, t)`.
    pub fn kappa_sq(&self) -> f64 {
        1.0
    }

    /// Evaluates the kernel, checking the domain.
    pub fn eval(&self, s: f64, t: f64) -> Result<f64> {
        check_unit(s)?;
        check_unit(t)?;
        Ok(self.eval_unchecked(s, t))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, s: f64, t: f64) -> f64 {
        match *self {
            Kernel1::BrownianMin => s.min(t),
            Kernel1::Gaussian { bandwidth } => {
                let d = (s - t) / bandwidth;
                (-0.5 * d * d).exp()
            }
            Kernel1::Matern {
                smoothness,
                lengthscale,
            } => matern_profile(smoothness, (s - t).abs() / lengthscale),
        }
    }

    /// Gram matrix over a point set.
    pub fn gram(&self, points: &[f64]) -> Result<Mat<f64>> {
        for &p in points {
            check_unit(p)?;
        }
        let n = points.len();
        let mut g = Mat::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = self.eval_unchecked(points[i], points[j]);
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        Ok(g)
    }
}

fn matern_profile(smoothness: f64, r: f64) -> f64 {
    if smoothness == 0.5 {
        (-r).exp()
    } else if smoothness == 1.5 {
        let u = 3f64.sqrt() * r;
        (1.0 + u) * (-u).exp()
    } else {
        let u = 5f64.sqrt() * r;
        (1.0 + u + u * u / 3.0) * (-u).exp()
    }
}

/// Kernels on pairs, for covariance surfaces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel2 {
    /// `K((s,t),(u,v)) = k(s,u) k(t,v)`.
    Product(Kernel1),
    /// Radial family applied to the Euclidean distance in the unit square;
    /// `BrownianMin` has no radial form and is rejected.
    Direct(Kernel1),
}

impl Kernel2 {
    pub fn product(k: Kernel1) -> Kernel2 {
        Kernel2::Product(k)
    }

    pub fn direct(k: Kernel1) -> Result<Kernel2> {
        if matches!(k, Kernel1::BrownianMin) {
            return Err(Error::BadKernelParam(
                "BrownianMin has no radial 2-D form; use a product kernel".into(),
            ));
        }
        Ok(Kernel2::Direct(k))
    }

    pub fn eval(&self, p: (f64, f64), q: (f64, f64)) -> Result<f64> {
        for v in [p.0, p.1, q.0, q.1] {
            check_unit(v)?;
        }
        Ok(self.eval_unchecked(p, q))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, p: (f64, f64), q: (f64, f64)) -> f64 {
        match self {
            Kernel2::Product(k) => k.eval_unchecked(p.0, q.0) * k.eval_unchecked(p.1, q.1),
            Kernel2::Direct(k) => {
                let d = ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt();
                match *k {
                    Kernel1::Gaussian { bandwidth } => {
                        let u = d / bandwidth;
                        (-0.5 * u * u).exp()
                    }
                    Kernel1::Matern {
                        smoothness,
                        lengthscale,
                    } => matern_profile(smoothness, d / lengthscale),
                    Kernel1::BrownianMin => unreachable!("rejected at construction"),
                }
            }
        }
    }

    /// Gram matrix over pair anchors.
    pub fn gram(&self, anchors: &[(f64, f64)]) -> Result<Mat<f64>> {
        for &(a, b) in anchors {
            check_unit(a)?;
            check_unit(b)?;
        }
        let n = anchors.len();
        let mut g = Mat::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = self.eval_unchecked(anchors[i], anchors[j]);
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        Ok(g)
    }
}

fn check_unit(v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) || !v.is_finite() {
        return Err(Error::OutOfDomain { value: v });
    }
    Ok(())
}

/// How a Mercer system was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MercerSource {
    /// Closed-form eigensystem (BrownianMin).
    Analytic,
    /// Nystrom discretization over a quadrature grid of the given size.
    Nystrom { grid_size: usize },
}

/// Truncated eigensystem of the kernel integral operator on `L^2[0, 1]`.
///
/// Eigenfunctions are available both tabulated on the construction grid and
/// as callables at arbitrary points (closed form for the analytic system,
/// the usual extension formula for Nystrom).
#[derive(Debug, Clone)]
pub struct MercerSystem {
    kernel: Kernel1,
    eigenvalues: Vec<f64>,
    grid: Grid1D,
    /// `L x grid` eigenfunction values.
    basis_on_grid: Mat<f64>,
    source: MercerSource,
}

/// Builds the truncated Mercer system of `k` with up to `truncation` modes.
///
/// BrownianMin returns its closed-form system; other kernels go through a
/// Nystrom eigendecomposition of the weighted Gram matrix on `grid`, which
/// keeps only modes above the numerical PSD floor (rapidly decaying spectra
/// can yield fewer modes than requested — check [`MercerSystem::len`]).
pub fn mercer_system(k: &Kernel1, truncation: usize, grid: &Grid1D) -> Result<MercerSystem> {
    if truncation == 0 {
        return Err(Error::BadSize {
            what: "truncation level",
            min: 1,
            got: 0,
        });
    }
    if truncation > grid.len() {
        return Err(Error::TruncationTooLarge {
            requested: truncation,
            available: grid.len(),
        });
    }
    match k {
        Kernel1::BrownianMin => {
            let eigenvalues: Vec<f64> = (1..=truncation).map(brownian_eigenvalue).collect();
            let basis_on_grid = Mat::from_fn(truncation, grid.len(), |l, j| {
                brownian_eigenfunction(l + 1, grid.nodes()[j])
            });
            Ok(MercerSystem {
                kernel: *k,
                eigenvalues,
                grid: grid.clone(),
                basis_on_grid,
                source: MercerSource::Analytic,
            })
        }
        _ => nystrom_system(k, truncation, grid),
    }
}

/// `lambda_i = 1 / ((i - 1/2)^2 pi^2)` for the min kernel, 1-based.
pub fn brownian_eigenvalue(i: usize) -> f64 {
    let w = (i as f64 - 0.5) * std::f64::consts::PI;
    1.0 / (w * w)
}

/// `psi_i(t) = sqrt(2) sin((i - 1/2) pi t)`, 1-based.
pub fn brownian_eigenfunction(i: usize, t: f64) -> f64 {
    let w = (i as f64 - 0.5) * std::f64::consts::PI;
    2f64.sqrt() * (w * t).sin()
}

fn nystrom_system(k: &Kernel1, truncation: usize, grid: &Grid1D) -> Result<MercerSystem> {
    let n = grid.len();
    let g = k.gram(grid.nodes())?;
    let sqrt_w: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();
    let b = Mat::from_fn(n, n, |i, j| sqrt_w[i] * g[(i, j)] * sqrt_w[j]);
    let evd = b
        .as_ref()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::EigenFailed)?;
    let s = evd.S().column_vector();
    let u = evd.U();

    // descending order; only numerically positive modes are usable, so fast
    // decaying spectra (Gaussian) may yield fewer modes than requested
    let trace: f64 = (0..n).map(|q| s[q]).sum();
    let floor = (PSD_CLAMP_REL * trace.max(0.0)).max(f64::MIN_POSITIVE);
    let usable = (0..truncation)
        .take_while(|&l| s[n - 1 - l] > floor)
        .count();
    if usable == 0 {
        return Err(Error::TruncationTooLarge {
            requested: truncation,
            available: 0,
        });
    }
    let truncation = usable;
    let mut eigenvalues = Vec::with_capacity(truncation);
    let mut basis_on_grid = Mat::<f64>::zeros(truncation, n);
    for l in 0..truncation {
        let q = n - 1 - l;
        let val = s[q];
        eigenvalues.push(val);
        // psi_l(x_j) = u_j / sqrt(w_j); fix the sign so the first
        // significant coordinate is positive, keeping runs reproducible
        let mut sign = 1.0f64;
        for j in 0..n {
            if u[(j, q)].abs() > 1e-8 {
                sign = u[(j, q)].signum();
                break;
            }
        }
        for j in 0..n {
            basis_on_grid[(l, j)] = sign * u[(j, q)] / sqrt_w[j];
        }
    }
    Ok(MercerSystem {
        kernel: *k,
        eigenvalues,
        grid: grid.clone(),
        basis_on_grid,
        source: MercerSource::Nystrom { grid_size: n },
    })
}

impl MercerSystem {
    pub fn kernel(&self) -> &Kernel1 {
        &self.kernel
    }

    /// Number of retained modes.
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Eigenvalues, descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn source(&self) -> MercerSource {
        self.source
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    /// Tabulated eigenfunctions, `L x grid`.
    pub fn basis_on_grid(&self) -> MatRef<'_, f64> {
        self.basis_on_grid.as_ref()
    }

    /// Evaluates eigenfunction `l` (0-based) at an arbitrary point.
    pub fn eval_basis(&self, l: usize, t: f64) -> f64 {
        match self.source {
            MercerSource::Analytic => brownian_eigenfunction(l + 1, t),
            MercerSource::Nystrom { .. } => {
                // Nystrom extension: psi(t) = sum_j w_j k(t, x_j) psi(x_j) / lambda
                let mut acc = 0.0;
                for (j, (&x, &w)) in self
                    .grid
                    .nodes()
                    .iter()
                    .zip(self.grid.weights())
                    .enumerate()
                {
                    acc += w * self.kernel.eval_unchecked(t, x) * self.basis_on_grid[(l, j)];
                }
                acc / self.eigenvalues[l]
            }
        }
    }

    /// Evaluates `sum_l coeffs[l] psi_l(t)`.
    pub fn eval_series(&self, coeffs: &[f64], t: f64) -> Result<f64> {
        if coeffs.len() > self.len() {
            return Err(Error::TruncationTooLarge {
                requested: coeffs.len(),
                available: self.len(),
            });
        }
        Ok(coeffs
            .iter()
            .enumerate()
            .map(|(l, c)| c * self.eval_basis(l, t))
            .sum())
    }

    /// Evaluates `sum_l coeffs[l] psi_l` on a grid.
    pub fn eval_series_on(&self, coeffs: &[f64], grid: &Grid1D) -> Result<Vec<f64>> {
        if coeffs.len() > self.len() {
            return Err(Error::TruncationTooLarge {
                requested: coeffs.len(),
                available: self.len(),
            });
        }
        Ok(grid
            .nodes()
            .iter()
            .map(|&t| {
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(l, c)| c * self.eval_basis(l, t))
                    .sum()
            })
            .collect())
    }

    /// Truncated kernel reconstruction `sum_l lambda_l psi_l(s) psi_l(t)`.
    pub fn reconstruct_kernel(&self, s: f64, t: f64) -> f64 {
        (0..self.len())
            .map(|l| self.eigenvalues[l] * self.eval_basis(l, s) * self.eval_basis(l, t))
            .sum()
    }
}

/// Truncated eigensystem of a product kernel `k (x) k` on `L^2([0,1]^2)`:
/// eigenvalues `lambda_i lambda_j` with eigenfunctions `psi_i (x) psi_j`,
/// re-sorted in descending order.
#[derive(Debug, Clone)]
pub struct TensorMercerSystem {
    base: Arc<MercerSystem>,
    /// 0-based `(i, j)` index pairs into the 1-D system, one per mode.
    index_pairs: Vec<(usize, usize)>,
    eigenvalues: Vec<f64>,
}

/// Builds the tensor system with `truncation` modes from a 1-D system.
pub fn tensor_mercer(base: Arc<MercerSystem>, truncation: usize) -> Result<TensorMercerSystem> {
    let l1 = base.len();
    if truncation == 0 {
        return Err(Error::BadSize {
            what: "tensor truncation",
            min: 1,
            got: 0,
        });
    }
    if truncation > l1 * l1 {
        return Err(Error::TruncationTooLarge {
            requested: truncation,
            available: l1 * l1,
        });
    }
    let mut modes: Vec<(f64, (usize, usize))> = Vec::with_capacity(l1 * l1);
    for i in 0..l1 {
        for j in 0..l1 {
            modes.push((base.eigenvalues()[i] * base.eigenvalues()[j], (i, j)));
        }
    }
    // descending by eigenvalue; index order breaks ties deterministically
    modes.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    modes.truncate(truncation);
    Ok(TensorMercerSystem {
        base,
        eigenvalues: modes.iter().map(|m| m.0).collect(),
        index_pairs: modes.iter().map(|m| m.1).collect(),
    })
}

impl TensorMercerSystem {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn base(&self) -> &MercerSystem {
        &self.base
    }

    pub fn index_pairs(&self) -> &[(usize, usize)] {
        &self.index_pairs
    }

    /// Evaluates mode `r` at a point of the unit square.
    pub fn eval_basis(&self, r: usize, s: f64, t: f64) -> f64 {
        let (i, j) = self.index_pairs[r];
        self.base.eval_basis(i, s) * self.base.eval_basis(j, t)
    }

    /// Evaluates `sum_r coeffs[r] Psi_r` on a tensor grid (rows follow
    /// `grid_s`).
    pub fn eval_series_on(
        &self,
        coeffs: &[f64],
        grid_s: &Grid1D,
        grid_t: &Grid1D,
    ) -> Result<Mat<f64>> {
        if coeffs.len() > self.len() {
            return Err(Error::TruncationTooLarge {
                requested: coeffs.len(),
                available: self.len(),
            });
        }
        // fold the coefficients into a 1-D-mode matrix C and evaluate
        // B_s^T C B_t
        let l1 = self.base.len();
        let mut c = Mat::<f64>::zeros(l1, l1);
        for (r, &v) in coeffs.iter().enumerate() {
            let (i, j) = self.index_pairs[r];
            c[(i, j)] += v;
        }
        let bs = basis_matrix(&self.base, grid_s);
        let bt = basis_matrix(&self.base, grid_t);
        Ok(bs.transpose() * &c * &bt)
    }
}

/// `L x grid` matrix of 1-D eigenfunction values.
pub(crate) fn basis_matrix(base: &MercerSystem, grid: &Grid1D) -> Mat<f64> {
    if grid == base.grid() {
        return base.basis_on_grid().to_owned();
    }
    Mat::from_fn(base.len(), grid.len(), |l, j| {
        base.eval_basis(l, grid.nodes()[j])
    })
}

/// Effective dimension `N(lambda) = sum_i eig_i / (eig_i + lambda)`.
pub fn effective_dimension(eigenvalues: &[f64], lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::BadLambda(lambda));
    }
    Ok(eigenvalues.iter().map(|&e| e / (e + lambda)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::sym_eigen;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn brownian_kernel_values() {
        let k = Kernel1::BrownianMin;
        assert_eq!(k.eval(0.3, 0.7).unwrap(), 0.3);
        assert_eq!(k.eval(0.4, 0.4).unwrap(), 0.4);
        assert_eq!(Kernel1::gaussian(1.0).unwrap().eval(0.2, 0.2).unwrap(), 1.0);
        assert!(matches!(k.eval(1.2, 0.5), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn kernel_construction_validation() {
        assert!(Kernel1::gaussian(0.0).is_err());
        assert!(Kernel1::matern(2.0, 0.5).is_err());
        assert!(Kernel1::matern(1.5, -1.0).is_err());
        assert!(Kernel2::direct(Kernel1::BrownianMin).is_err());
        assert!(Kernel2::direct(Kernel1::gaussian(0.5).unwrap()).is_ok());
    }

    #[test]
    fn gram_small_cases() {
        let k = Kernel1::BrownianMin;
        let g = k.gram(&[0.5]).unwrap();
        assert_eq!(g[(0, 0)], 0.5);
        let g = k.gram(&[0.0, 1.0]).unwrap();
        assert_eq!(g[(0, 0)], 0.0);
        assert_eq!(g[(0, 1)], 0.0);
        assert_eq!(g[(1, 1)], 1.0);
    }

    #[test]
    fn gram_matrices_are_psd_after_clamping() {
        let kernels = [
            Kernel1::BrownianMin,
            Kernel1::gaussian(0.3).unwrap(),
            Kernel1::matern(1.5, 0.25).unwrap(),
        ];
        for (fi, k) in kernels.iter().enumerate() {
            let pts: Vec<f64> = (0..20)
                .map(|i| ((i * 37 + fi * 101 + 13) % 97) as f64 / 96.0)
                .collect();
            let g = k.gram(&pts).unwrap();
            let trace: f64 = (0..20).map(|i| g[(i, i)]).sum();
            let e = sym_eigen(g.as_ref()).unwrap();
            let min = e.eigenvalues().last().copied().unwrap();
            assert!(
                min >= -1e-10 * trace,
                "{k:?}: min eigenvalue {min} below clamp threshold"
            );
            assert!(e.clamped_psd().is_ok());
        }
    }

    #[test]
    fn product_kernel_values() {
        let k2 = Kernel2::product(Kernel1::BrownianMin);
        assert_eq!(k2.eval((0.5, 0.5), (0.5, 0.5)).unwrap(), 0.25);
        assert_eq!(k2.eval((0.0, 0.7), (0.3, 0.9)).unwrap(), 0.0);
    }

    #[test]
    fn brownian_mercer_matches_closed_form() {
        let grid = Grid1D::uniform(512).unwrap();
        let sys = mercer_system(&Kernel1::BrownianMin, 200, &grid).unwrap();
        assert_eq!(sys.source(), MercerSource::Analytic);
        let pi = std::f64::consts::PI;
        assert_abs_diff_eq!(sys.eigenvalues()[0], 4.0 / (pi * pi), epsilon = 1e-15);
        assert_abs_diff_eq!(sys.eval_basis(0, 0.5), 1.0, epsilon = 1e-12);
        // the eigen-equation holds under quadrature:
        // integral of min(s, t) psi_1(s) ds = lambda_1 psi_1(t)
        let fine = Grid1D::uniform(4097).unwrap();
        for &t in &[0.21, 0.5, 0.93] {
            let vals: Vec<f64> = fine
                .nodes()
                .iter()
                .map(|&s| s.min(t) * sys.eval_basis(0, s))
                .collect();
            let lhs = fine.integrate(&vals).unwrap();
            assert_abs_diff_eq!(
                lhs,
                sys.eigenvalues()[0] * sys.eval_basis(0, t),
                epsilon = 1e-6
            );
        }
    }

    #[test]
    fn brownian_eigen_equation_residuals_on_grid() {
        // the trapezoid error grows with the mode frequency, so the 1e-3
        // relative residual is checkable for low modes on a fine grid
        let fine = Grid1D::uniform(4097).unwrap();
        let sys = mercer_system(&Kernel1::BrownianMin, 20, &fine).unwrap();
        for l in 0..10 {
            let lam = sys.eigenvalues()[l];
            let mut worst = 0.0f64;
            for (j, &t) in fine.nodes().iter().enumerate().step_by(256) {
                let vals: Vec<f64> = fine
                    .nodes()
                    .iter()
                    .enumerate()
                    .map(|(m, &s)| s.min(t) * sys.basis_on_grid()[(l, m)])
                    .collect();
                let lhs = fine.integrate(&vals).unwrap();
                worst = worst.max((lhs - lam * sys.basis_on_grid()[(l, j)]).abs());
            }
            assert!(
                worst <= 1e-3 * lam,
                "mode {l}: residual {worst} vs eigenvalue {lam}"
            );
        }
    }

    #[test]
    fn brownian_decay_matches_inverse_square_law() {
        let grid = Grid1D::uniform(64).unwrap();
        let sys = mercer_system(&Kernel1::BrownianMin, 20, &grid).unwrap();
        let pi = std::f64::consts::PI;
        for i in 1..=20 {
            let expected = 1.0 / ((i as f64 - 0.5) * (i as f64 - 0.5) * pi * pi);
            let got = sys.eigenvalues()[i - 1];
            assert!(
                (got - expected).abs() <= 0.05 * expected,
                "mode {i}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn mercer_reconstruction_uniform_error() {
        let grid = Grid1D::uniform(512).unwrap();
        let sys = mercer_system(&Kernel1::BrownianMin, 200, &grid).unwrap();
        let coarse = Grid1D::uniform(101).unwrap();
        let mut worst = 0.0f64;
        for &s in coarse.nodes() {
            for &t in coarse.nodes() {
                let err = (sys.reconstruct_kernel(s, t) - s.min(t)).abs();
                worst = worst.max(err);
            }
        }
        assert!(worst <= 0.02, "uniform reconstruction error {worst}");
    }

    #[test]
    fn nystrom_gaussian_orthonormal_and_consistent() {
        let grid = Grid1D::uniform(512).unwrap();
        let k = Kernel1::gaussian(1.0).unwrap();
        let sys = mercer_system(&k, 8, &grid).unwrap();
        assert_eq!(sys.source(), MercerSource::Nystrom { grid_size: 512 });
        // the Gaussian spectrum decays so fast that only a handful of modes
        // survive the numerical floor
        assert!(sys.len() >= 4, "usable modes: {}", sys.len());
        // grid orthonormality
        for a in 0..4 {
            for b in 0..4 {
                let dot: f64 = (0..grid.len())
                    .map(|j| {
                        grid.weights()[j]
                            * sys.basis_on_grid()[(a, j)]
                            * sys.basis_on_grid()[(b, j)]
                    })
                    .sum();
                let target = if a == b { 1.0 } else { 0.0 };
                assert!((dot - target).abs() <= 1e-3, "<psi_{a}, psi_{b}> = {dot}");
            }
        }
        // eigen-equation residual under the grid operator
        for l in 0..4 {
            let lam = sys.eigenvalues()[l];
            let mut worst = 0.0f64;
            for (j, &t) in grid.nodes().iter().enumerate().step_by(16) {
                let vals: Vec<f64> = grid
                    .nodes()
                    .iter()
                    .enumerate()
                    .map(|(m, &s)| k.eval_unchecked(s, t) * sys.basis_on_grid()[(l, m)])
                    .collect();
                let lhs = grid.integrate(&vals).unwrap();
                worst = worst.max((lhs - lam * sys.basis_on_grid()[(l, j)]).abs());
            }
            assert!(worst <= 1e-3 * lam, "mode {l}: residual {worst} vs {lam}");
        }
        // the Nystrom extension reproduces the tabulated values
        let j = 100;
        let t = grid.nodes()[j];
        assert_abs_diff_eq!(
            sys.eval_basis(2, t),
            sys.basis_on_grid()[(2, j)],
            epsilon = 1e-8
        );
    }

    #[test]
    fn truncation_larger_than_grid_rejected() {
        let grid = Grid1D::uniform(16).unwrap();
        assert!(matches!(
            mercer_system(&Kernel1::BrownianMin, 17, &grid),
            Err(Error::TruncationTooLarge { .. })
        ));
    }

    #[test]
    fn tensor_system_sorted_and_separable() {
        let grid = Grid1D::uniform(64).unwrap();
        let base = Arc::new(mercer_system(&Kernel1::BrownianMin, 10, &grid).unwrap());
        let t2 = tensor_mercer(base.clone(), 40).unwrap();
        assert_eq!(t2.len(), 40);
        for r in 1..40 {
            assert!(t2.eigenvalues()[r - 1] >= t2.eigenvalues()[r]);
        }
        assert_abs_diff_eq!(
            t2.eigenvalues()[0],
            base.eigenvalues()[0] * base.eigenvalues()[0],
            epsilon = 1e-15
        );
        let (i, j) = t2.index_pairs()[3];
        assert_abs_diff_eq!(
            t2.eval_basis(3, 0.3, 0.8),
            base.eval_basis(i, 0.3) * base.eval_basis(j, 0.8),
            epsilon = 1e-12
        );
    }

    #[test]
    fn tensor_series_evaluation_matches_pointwise() {
        let grid = Grid1D::uniform(32).unwrap();
        let base = Arc::new(mercer_system(&Kernel1::BrownianMin, 6, &grid).unwrap());
        let t2 = tensor_mercer(base, 12).unwrap();
        let coeffs: Vec<f64> = (0..12).map(|r| (r as f64 * 0.7).sin()).collect();
        let g = Grid1D::uniform(9).unwrap();
        let m = t2.eval_series_on(&coeffs, &g, &g).unwrap();
        for (a, &s) in g.nodes().iter().enumerate() {
            for (b, &t) in g.nodes().iter().enumerate() {
                let direct: f64 = (0..12).map(|r| coeffs[r] * t2.eval_basis(r, s, t)).sum();
                assert_abs_diff_eq!(m[(a, b)], direct, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn effective_dimension_values() {
        assert_abs_diff_eq!(effective_dimension(&[1.0], 1.0).unwrap(), 0.5);
        assert!(matches!(
            effective_dimension(&[1.0], 0.0),
            Err(Error::BadLambda(_))
        ));
        let eigs = [0.5, 0.25, 0.125];
        let lambda = 1e6;
        let nd = effective_dimension(&eigs, lambda).unwrap();
        assert!(nd <= eigs.iter().sum::<f64>() / lambda);
    }

    #[test]
    fn effective_dimension_inverse_square_scaling() {
        // eigs i^-2: N(lambda) ~ lambda^{-1/2}, so N(lambda)/N(4 lambda) ~ 2
        let eigs: Vec<f64> = (1..=1000).map(|i| 1.0 / (i as f64 * i as f64)).collect();
        let n1 = effective_dimension(&eigs, 0.01).unwrap();
        let n4 = effective_dimension(&eigs, 0.04).unwrap();
        let ratio = n1 / n4;
        assert!((1.8..=2.2).contains(&ratio), "doubling law violated: {ratio}");
        assert!(n1 >= 0.3 / 0.01f64.sqrt() && n1 <= 3.0 / 0.01f64.sqrt());
    }

    #[test]
    fn brownian_effective_dimension_scaling_window() {
        let eigs: Vec<f64> = (1..=100_000).map(brownian_eigenvalue).collect();
        for &lambda in &[1e-1, 1e-2, 1e-3, 1e-4, 1e-5] {
            let nd = effective_dimension(&eigs, lambda).unwrap();
            let scaled = nd * lambda.sqrt();
            assert!(
                (0.3..=3.0).contains(&scaled),
                "lambda={lambda}: N * sqrt(lambda) = {scaled}"
            );
        }
    }

    #[test]
    fn boundedness_on_grid() {
        let grid = Grid1D::uniform(1001).unwrap();
        for k in [
            Kernel1::BrownianMin,
            Kernel1::gaussian(0.7).unwrap(),
            Kernel1::matern(2.5, 0.4).unwrap(),
        ] {
            for &t in grid.nodes() {
                assert!(k.eval_unchecked(t, t) <= k.kappa_sq() + 1e-15);
            }
        }
    }

    #[test]
    fn direct_kernel2_radial_values() {
        let k = Kernel1::gaussian(0.5).unwrap();
        let k2 = Kernel2::direct(k).unwrap();
        let v = k2.eval((0.0, 0.0), (1.0, 1.0)).unwrap();
        let d = 2f64.sqrt();
        assert_abs_diff_eq!(v, (-0.5 * (d / 0.5).powi(2)).exp(), epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn kernels_are_symmetric(s in 0.0f64..=1.0, t in 0.0f64..=1.0) {
            for k in [
                Kernel1::BrownianMin,
                Kernel1::gaussian(0.5).unwrap(),
                Kernel1::matern(0.5, 0.3).unwrap(),
                Kernel1::matern(1.5, 0.3).unwrap(),
                Kernel1::matern(2.5, 0.3).unwrap(),
            ] {
                prop_assert_eq!(k.eval_unchecked(s, t), k.eval_unchecked(t, s));
            }
        }

        #[test]
        fn product_kernel_symmetric_under_argument_swap(
            a in 0.0f64..=1.0,
            b in 0.0f64..=1.0,
            c in 0.0f64..=1.0,
            d in 0.0f64..=1.0,
        ) {
            let k2 = Kernel2::product(Kernel1::BrownianMin);
            prop_assert_eq!(
                k2.eval_unchecked((a, b), (c, d)),
                k2.eval_unchecked((c, d), (a, b))
            );
        }

        #[test]
        fn random_grams_clamp_clean(seed in 0u64..200) {
            let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            let mut pts = Vec::with_capacity(12);
            for _ in 0..12 {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                pts.push((state >> 11) as f64 / (1u64 << 53) as f64);
            }
            let k = Kernel1::gaussian(0.4).unwrap();
            let g = k.gram(&pts).unwrap();
            let e = sym_eigen(g.as_ref()).unwrap();
            prop_assert!(e.clamped_psd().is_ok());
        }
    }
}

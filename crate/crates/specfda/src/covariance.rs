//! Plug-in covariance estimation over within-curve point pairs.
//!
//! For every curve with at least two observations, all ordered pairs
//! `(j, k)` with `j != k` contribute an anchor `(t_ij, t_ik)` and a
//! response `(Y_ij - mu(t_ij)) (Y_ik - mu(t_ik))` centered by the fitted
//! mean. Same-point products are excluded so measurement-error variance
//! does not bias the surface near the diagonal. The coefficients solve the
//! pair-level analogue of the mean system,
//!
//! ```text
//! alpha = g_lambda(K_p W_p K_p) K_p W_p R,
//! ```
//!
//! with `K_p` the Gram of a pair kernel over the anchors and `W_p` the
//! diagonal weights `1/(n m_i (m_i - 1))`.
//!
//! [`CovOperatorSystem`] evaluates the same estimator in the tensor Mercer
//! basis of a product kernel, mirroring the basis-coordinate mean route;
//! its cost scales with the truncation instead of the pair count, which is
//! what makes Monte Carlo sweeps over thousands of pairs tractable.

use faer::Mat;

use crate::consts::DEFAULT_PAIR_CAP;
use crate::error::{Error, Result};
use crate::filter::Filter;
use crate::kernel::{Kernel2, TensorMercerSystem};
use crate::mean::{MeanEstimate, SampleSet};
use crate::numerics::{sym_eigen, Grid1D, SymEigen};

/// Enumerated pair system: anchors, centered product responses, weights.
#[derive(Debug, Clone)]
pub struct PairDesign {
    anchors: Vec<(f64, f64)>,
    responses: Vec<f64>,
    weights: Vec<f64>,
    /// Index of the `(k, j)` twin of each `(j, k)` pair (self for j = k).
    swap_twin: Vec<usize>,
    contributing_curves: usize,
    skipped_curves: usize,
    includes_diagonal: bool,
}

impl PairDesign {
    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn anchors(&self) -> &[(f64, f64)] {
        &self.anchors
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn swap_twin(&self) -> &[usize] {
        &self.swap_twin
    }

    /// Curves with enough observations to contribute pairs.
    pub fn contributing_curves(&self) -> usize {
        self.contributing_curves
    }

    /// Curves skipped for having a single observation.
    pub fn skipped_curves(&self) -> usize {
        self.skipped_curves
    }

    pub fn includes_diagonal(&self) -> bool {
        self.includes_diagonal
    }
}

/// Enumerates pairs centered by a fitted mean estimate.
pub fn assemble_pairs(samples: &SampleSet, mean: &MeanEstimate) -> Result<PairDesign> {
    assemble_pairs_with(samples, |t| mean.evaluate(t), false)
}

/// Enumerates pairs centered by an arbitrary mean function.
///
/// `include_diagonal` switches to the V-statistic variant that keeps the
/// `j = k` products (weights `1/(n m_i^2)`); it exists to demonstrate the
/// measurement-error bias those products carry and is not the estimator.
pub fn assemble_pairs_with(
    samples: &SampleSet,
    center: impl Fn(f64) -> f64,
    include_diagonal: bool,
) -> Result<PairDesign> {
    let n = samples.n_curves() as f64;
    let min_obs = if include_diagonal { 1 } else { 2 };
    let mut anchors = Vec::new();
    let mut responses = Vec::new();
    let mut weights = Vec::new();
    let mut swap_twin = Vec::new();
    let mut contributing = 0usize;

    for curve in samples.curves() {
        let m = curve.len();
        if m < min_obs {
            continue;
        }
        contributing += 1;
        let residuals: Vec<f64> = curve
            .times
            .iter()
            .zip(&curve.values)
            .map(|(&t, &y)| y - center(t))
            .collect();
        let w = if include_diagonal {
            1.0 / (n * (m * m) as f64)
        } else {
            1.0 / (n * (m * (m - 1)) as f64)
        };
        // ordered pairs, curve order then lexicographic (j, k)
        let mut index_of = vec![usize::MAX; m * m];
        for j in 0..m {
            for k in 0..m {
                if j == k && !include_diagonal {
                    continue;
                }
                index_of[j * m + k] = anchors.len();
                anchors.push((curve.times[j], curve.times[k]));
                responses.push(residuals[j] * residuals[k]);
                weights.push(w);
            }
        }
        for j in 0..m {
            for k in 0..m {
                if index_of[j * m + k] != usize::MAX {
                    swap_twin.push(index_of[k * m + j]);
                }
            }
        }
        debug_assert_eq!(anchors.len(), swap_twin.len());
    }

    if anchors.is_empty() {
        return Err(Error::NoPairs);
    }
    Ok(PairDesign {
        anchors,
        responses,
        weights,
        swap_twin,
        contributing_curves: contributing,
        skipped_curves: samples.n_curves() - contributing,
        includes_diagonal: include_diagonal,
    })
}

/// Fitted covariance surface as a pair-kernel-section expansion.
#[derive(Debug, Clone)]
pub struct CovEstimate {
    anchors: Vec<(f64, f64)>,
    coefficients: Vec<f64>,
    kernel: Kernel2,
    lambda: f64,
    eta: Option<f64>,
    filter: Filter,
}

impl CovEstimate {
    pub fn anchors(&self) -> &[(f64, f64)] {
        &self.anchors
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn kernel(&self) -> &Kernel2 {
        &self.kernel
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Mean-fit regularization parameter used for centering, when known.
    pub fn eta(&self) -> Option<f64> {
        self.eta
    }

    pub fn filter(&self) -> Filter {
        self.filter
    }

    /// `C(s, t) = sum_p alpha_p K(anchor_p, (s, t))`.
    pub fn evaluate(&self, s: f64, t: f64) -> f64 {
        self.anchors
            .iter()
            .zip(&self.coefficients)
            .map(|(&a, &c)| c * self.kernel.eval_unchecked(a, (s, t)))
            .sum()
    }

    /// Evaluates the surface on a tensor grid (rows follow `grid_s`).
    pub fn evaluate_on(&self, grid_s: &Grid1D, grid_t: &Grid1D) -> Mat<f64> {
        match self.kernel {
            Kernel2::Product(k) => {
                // C = A^T diag(alpha) B with A[p, i] = k(a_p, s_i),
                // B[p, j] = k(b_p, t_j)
                let p = self.anchors.len();
                let a = Mat::from_fn(p, grid_s.len(), |q, i| {
                    self.coefficients[q] * k.eval_unchecked(self.anchors[q].0, grid_s.nodes()[i])
                });
                let b = Mat::from_fn(p, grid_t.len(), |q, j| {
                    k.eval_unchecked(self.anchors[q].1, grid_t.nodes()[j])
                });
                a.transpose() * &b
            }
            Kernel2::Direct(_) => Mat::from_fn(grid_s.len(), grid_t.len(), |i, j| {
                self.evaluate(grid_s.nodes()[i], grid_t.nodes()[j])
            }),
        }
    }
}

/// Fits the covariance surface from a prepared pair design.
///
/// The dense path forms the `P x P` pair Gram system; `pair_cap` bounds the
/// admissible `P` (the default cap is [`DEFAULT_PAIR_CAP`]).
pub fn fit_covariance_from_pairs(
    pairs: &PairDesign,
    kernel: &Kernel2,
    filter: Filter,
    lambda: f64,
    pair_cap: usize,
) -> Result<CovEstimate> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::BadLambda(lambda));
    }
    let p = pairs.len();
    if p == 0 {
        return Err(Error::NoPairs);
    }
    if p > pair_cap {
        return Err(Error::PairBudgetExceeded {
            pairs: p,
            cap: pair_cap,
        });
    }
    let gram = kernel.gram(pairs.anchors())?;
    let sqrt_w: Vec<f64> = pairs.weights().iter().map(|w| w.sqrt()).collect();
    let b = Mat::from_fn(p, p, |i, j| gram[(i, j)] * sqrt_w[j]);
    let m = &b * b.transpose();
    let m = Mat::from_fn(p, p, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let eig = sym_eigen(m.as_ref())?.clamped_psd()?;
    let range = eig.max_eigenvalue().max(1.0);

    let mut rhs = vec![0.0; p];
    for i in 0..p {
        rhs[i] = (0..p)
            .map(|j| gram[(i, j)] * pairs.weights()[j] * pairs.responses()[j])
            .sum();
    }
    let mut coefficients =
        eig.apply_to_vector(|s| filter.g(lambda, s, range).unwrap_or(f64::NAN), &rhs)?;

    // twin coefficients are equal in exact arithmetic for swap-symmetric
    // kernels; averaging removes eigensolver jitter so the fitted surface
    // is symmetric to machine precision
    if matches!(kernel, Kernel2::Product(_)) {
        let twins = pairs.swap_twin();
        let averaged: Vec<f64> = (0..p)
            .map(|q| 0.5 * (coefficients[q] + coefficients[twins[q]]))
            .collect();
        coefficients = averaged;
    }

    Ok(CovEstimate {
        anchors: pairs.anchors().to_vec(),
        coefficients,
        kernel: *kernel,
        lambda,
        eta: None,
        filter,
    })
}

/// Fits the covariance surface, centering responses with a fitted mean.
pub fn fit_covariance(
    samples: &SampleSet,
    mean: &MeanEstimate,
    kernel: &Kernel2,
    filter: Filter,
    lambda: f64,
) -> Result<CovEstimate> {
    let pairs = assemble_pairs(samples, mean)?;
    let mut est = fit_covariance_from_pairs(&pairs, kernel, filter, lambda, DEFAULT_PAIR_CAP)?;
    est.eta = Some(mean.lambda());
    Ok(est)
}

/// Rate-optimal schedule for the covariance fit:
/// `lambda = (m n)^{-b1 / (1 + 2 min(alpha1, nu) b1)}`.
pub fn oracle_lambda_cov(n: usize, m: f64, alpha1: f64, b1: f64, nu: f64) -> Result<f64> {
    crate::mean::oracle_lambda_mean(n, m, alpha1, b1, nu)
}

/// Prepared basis-coordinate covariance system over a tensor Mercer basis.
///
/// Construction depends only on the pair anchors and weights, so one system
/// serves any number of response vectors on the same design (responses
/// change with the centering mean and the noise level, the factorization
/// does not).
#[derive(Debug, Clone)]
pub struct CovOperatorSystem {
    tensor: TensorMercerSystem,
    n_pairs: usize,
    /// `Phi2[p, r] = sqrt(mu_r) Psi_r(anchor_p)`.
    phi2: Mat<f64>,
    weights: Vec<f64>,
    g_half: Mat<f64>,
    s_eig: SymEigen,
    sqrt_eig: Vec<f64>,
}

/// Builds the tensor-basis system for a pair design.
pub fn cov_operator_system(
    pairs: &PairDesign,
    tensor: &TensorMercerSystem,
) -> Result<CovOperatorSystem> {
    let p = pairs.len();
    if p == 0 {
        return Err(Error::NoPairs);
    }
    let l2 = tensor.len();
    let base = tensor.base();
    let l1_used = tensor
        .index_pairs()
        .iter()
        .map(|&(i, j)| i.max(j) + 1)
        .max()
        .unwrap_or(0);

    // tabulate the 1-D basis at both pair coordinates once
    let left = Mat::from_fn(p, l1_used, |q, l| base.eval_basis(l, pairs.anchors()[q].0));
    let right = Mat::from_fn(p, l1_used, |q, l| base.eval_basis(l, pairs.anchors()[q].1));
    let sqrt_eig: Vec<f64> = tensor.eigenvalues().iter().map(|e| e.sqrt()).collect();
    let phi2 = Mat::from_fn(p, l2, |q, r| {
        let (i, j) = tensor.index_pairs()[r];
        sqrt_eig[r] * left[(q, i)] * right[(q, j)]
    });

    let wphi = Mat::from_fn(p, l2, |q, r| pairs.weights()[q] * phi2[(q, r)]);
    let a_hat = phi2.transpose() * &wphi;
    let gm = phi2.transpose() * &phi2;

    let g_eig = sym_eigen(Mat::from_fn(l2, l2, |i, j| 0.5 * (gm[(i, j)] + gm[(j, i)])).as_ref())?
        .clamped_psd()?;
    let g_half = g_eig.apply_matrix_function(f64::sqrt)?;
    let s = &g_half * &a_hat * &g_half;
    let s = Mat::from_fn(l2, l2, |i, j| 0.5 * (s[(i, j)] + s[(j, i)]));
    let s_eig = sym_eigen(s.as_ref())?.clamped_psd()?;

    Ok(CovOperatorSystem {
        tensor: tensor.clone(),
        n_pairs: p,
        phi2,
        weights: pairs.weights().to_vec(),
        g_half,
        s_eig,
        sqrt_eig,
    })
}

impl CovOperatorSystem {
    pub fn n_pairs(&self) -> usize {
        self.n_pairs
    }

    pub fn tensor(&self) -> &TensorMercerSystem {
        &self.tensor
    }

    /// Solves for the tensor-basis coefficients of the surface
    /// (`C = sum_r c_r Psi_r`) given pair responses on this design.
    pub fn fit(&self, responses: &[f64], filter: Filter, lambda: f64) -> Result<Vec<f64>> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::BadLambda(lambda));
        }
        if responses.len() != self.n_pairs {
            return Err(Error::ShapeMismatch {
                expected: self.n_pairs,
                got: responses.len(),
            });
        }
        let l2 = self.tensor.len();
        let mut v2 = vec![0.0; l2];
        for r in 0..l2 {
            v2[r] = (0..self.n_pairs)
                .map(|q| self.phi2[(q, r)] * self.weights[q] * responses[q])
                .sum();
        }
        let range = self.s_eig.max_eigenvalue().max(1.0);
        let gv = mat_vec(&self.g_half, &v2);
        let filtered = self
            .s_eig
            .apply_to_vector(|s| filter.g(lambda, s, range).unwrap_or(f64::NAN), &gv)?;
        let gf = mat_vec(&self.g_half, &filtered);
        Ok((0..l2).map(|r| self.sqrt_eig[r] * gf[r]).collect())
    }

    /// Fits and evaluates the surface on a tensor grid.
    pub fn fit_on(
        &self,
        responses: &[f64],
        filter: Filter,
        lambda: f64,
        grid: &Grid1D,
    ) -> Result<Mat<f64>> {
        let coeffs = self.fit(responses, filter, lambda)?;
        self.tensor.eval_series_on(&coeffs, grid, grid)
    }
}

fn mat_vec(m: &Mat<f64>, v: &[f64]) -> Vec<f64> {
    let col = faer::Col::<f64>::from_fn(v.len(), |i| v[i]);
    let out = m * &col;
    out.iter().copied().collect()
}

//! Regularized mean estimation from sparse noisy curves.
//!
//! Given observations `Y_ij = X_i(t_ij) + eps_ij`, the estimator expands
//! over kernel sections anchored at the observed points,
//! `mu(t) = sum_ij alpha_ij k(t_ij, t)`, with coefficients obtained by
//! filtering the weighted normal system:
//!
//! ```text
//! alpha = g_lambda(K W K) K W Y,
//! W = diag(1/(n m_1) I_{m_1}, ..., 1/(n m_n) I_{m_n})
//! ```
//!
//! [`fit_mean_operator_form`] evaluates the same estimator in the
//! eigenbasis of the kernel integral operator instead of the anchor basis.
//! With `Phi[p, l] = sqrt(lambda_l) psi_l(t_p)`, `A = Phi^T W Phi`,
//! `G = Phi^T Phi` and `V = Phi^T W Y`, the push-through identity
//! `g(G A) G = G^{1/2} g(G^{1/2} A G^{1/2}) G^{1/2}` (valid for any
//! spectral function) turns the anchor-basis solution into
//!
//! ```text
//! mu-coeffs = Lambda^{1/2} G^{1/2} g_lambda(G^{1/2} A G^{1/2}) G^{1/2} V,
//! ```
//!
//! which needs only truncation-sized eigendecompositions. The two routes
//! agree up to the Mercer truncation tail and cross-check each other in the
//! test suites.

use faer::Mat;

use crate::error::{Error, Result};
use crate::filter::Filter;
use crate::kernel::{basis_matrix, effective_dimension, Kernel1, MercerSystem};
use crate::numerics::{sym_eigen, Grid1D, SymEigen};

/// One observed curve: design points in `[0, 1]` with responses.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl Curve {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Curve> {
        if times.is_empty() {
            return Err(Error::BadSize {
                what: "observations per curve",
                min: 1,
                got: 0,
            });
        }
        if times.len() != values.len() {
            return Err(Error::ShapeMismatch {
                expected: times.len(),
                got: values.len(),
            });
        }
        for &t in &times {
            if !(0.0..=1.0).contains(&t) || !t.is_finite() {
                return Err(Error::OutOfDomain { value: t });
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "curve responses",
            });
        }
        Ok(Curve { times, values })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// A sample of `n` discretely observed curves.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    curves: Vec<Curve>,
    harmonic_mean: f64,
}

impl SampleSet {
    pub fn new(curves: Vec<Curve>) -> Result<SampleSet> {
        if curves.is_empty() {
            return Err(Error::BadSize {
                what: "curves",
                min: 1,
                got: 0,
            });
        }
        let n = curves.len() as f64;
        let harmonic_mean = n / curves.iter().map(|c| 1.0 / c.len() as f64).sum::<f64>();
        Ok(SampleSet {
            curves,
            harmonic_mean,
        })
    }

    pub fn n_curves(&self) -> usize {
        self.curves.len()
    }

    pub fn curves(&self) -> &[Curve] {
        &self.curves
    }

    /// Total number of observations `N = sum_i m_i`.
    pub fn total_obs(&self) -> usize {
        self.curves.iter().map(Curve::len).sum()
    }

    /// Harmonic mean of the per-curve counts, cached at construction.
    pub fn harmonic_mean(&self) -> f64 {
        self.harmonic_mean
    }

    /// Design points flattened in curve order.
    pub fn flat_times(&self) -> Vec<f64> {
        self.curves.iter().flat_map(|c| c.times.clone()).collect()
    }

    /// Responses flattened in curve order.
    pub fn flat_values(&self) -> Vec<f64> {
        self.curves.iter().flat_map(|c| c.values.clone()).collect()
    }
}

/// Diagonal of the block weight matrix: `1/(n m_i)` repeated `m_i` times
/// per curve. The entries sum to one.
pub fn assemble_weight(samples: &SampleSet) -> Vec<f64> {
    let n = samples.n_curves() as f64;
    let mut w = Vec::with_capacity(samples.total_obs());
    for c in samples.curves() {
        let wi = 1.0 / (n * c.len() as f64);
        w.extend(std::iter::repeat(wi).take(c.len()));
    }
    w
}

/// Fitted mean function as a kernel-section expansion.
#[derive(Debug, Clone)]
pub struct MeanEstimate {
    anchors: Vec<f64>,
    coefficients: Vec<f64>,
    kernel: Kernel1,
    lambda: f64,
    filter: Filter,
}

impl MeanEstimate {
    pub fn anchors(&self) -> &[f64] {
        &self.anchors
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn kernel(&self) -> &Kernel1 {
        &self.kernel
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn filter(&self) -> Filter {
        self.filter
    }

    /// `mu(t) = sum_p alpha_p k(anchor_p, t)` (exact kernel expansion, no
    /// interpolation).
    pub fn evaluate(&self, t: f64) -> f64 {
        self.anchors
            .iter()
            .zip(&self.coefficients)
            .map(|(&a, &c)| c * self.kernel.eval_unchecked(a, t))
            .sum()
    }

    /// Evaluates the fit at every grid node.
    pub fn evaluate_on(&self, grid: &Grid1D) -> Vec<f64> {
        grid.nodes().iter().map(|&t| self.evaluate(t)).collect()
    }
}

/// Spectrum and residual diagnostics of one mean fit.
#[derive(Debug, Clone)]
pub struct MeanFitDiagnostics {
    /// Eigenvalues of the filtered system matrix, descending, clamped PSD.
    pub spectrum: Vec<f64>,
    /// Effective dimension of the clamped spectrum at the fitted lambda.
    pub effective_dimension: f64,
    /// Weighted residual sum of squares `sum_j w_j (Y_j - mu(t_j))^2`.
    pub weighted_sse: f64,
}

/// Prepared mean-fit system: Gram pieces and the eigendecomposition of
/// `KWK`, reusable across filters and lambdas on the same data.
#[derive(Debug, Clone)]
pub struct MeanSystem {
    anchors: Vec<f64>,
    values: Vec<f64>,
    weights: Vec<f64>,
    kernel: Kernel1,
    gram: Mat<f64>,
    eig: SymEigen,
    /// `K W Y`.
    rhs: Vec<f64>,
}

/// Assembles the Gram system and decomposes `KWK` once.
pub fn mean_system(samples: &SampleSet, kernel: &Kernel1) -> Result<MeanSystem> {
    let anchors = samples.flat_times();
    let values = samples.flat_values();
    let weights = assemble_weight(samples);
    let n = anchors.len();
    let gram = kernel.gram(&anchors)?;

    // M = (K W^{1/2})(K W^{1/2})^T = K W K, symmetrized against
    // accumulation-order jitter in the product
    let sqrt_w: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let b = Mat::from_fn(n, n, |i, j| gram[(i, j)] * sqrt_w[j]);
    let m = &b * b.transpose();
    let m = Mat::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let eig = sym_eigen(m.as_ref())?.clamped_psd()?;

    let mut rhs = vec![0.0; n];
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..n {
            acc += gram[(i, j)] * weights[j] * values[j];
        }
        rhs[i] = acc;
    }

    Ok(MeanSystem {
        anchors,
        values,
        weights,
        kernel: *kernel,
        gram,
        eig,
        rhs,
    })
}

impl MeanSystem {
    /// Spectrum of `KWK`, descending.
    pub fn spectrum(&self) -> &[f64] {
        self.eig.eigenvalues()
    }

    /// Solves `alpha = g_lambda(KWK) KWY` for one filter/lambda choice.
    pub fn fit(&self, filter: Filter, lambda: f64) -> Result<(MeanEstimate, MeanFitDiagnostics)> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::BadLambda(lambda));
        }
        let range = self.eig.max_eigenvalue().max(1.0);
        let coefficients = self
            .eig
            .apply_to_vector(|s| filter.g(lambda, s, range).unwrap_or(f64::NAN), &self.rhs)?;

        let estimate = MeanEstimate {
            anchors: self.anchors.clone(),
            coefficients,
            kernel: self.kernel,
            lambda,
            filter,
        };

        // fitted values at the anchors are K alpha
        let n = self.anchors.len();
        let mut sse = 0.0;
        for i in 0..n {
            let mut fit_i = 0.0;
            for j in 0..n {
                fit_i += self.gram[(i, j)] * estimate.coefficients[j];
            }
            let r = self.values[i] - fit_i;
            sse += self.weights[i] * r * r;
        }

        let diagnostics = MeanFitDiagnostics {
            spectrum: self.eig.eigenvalues().to_vec(),
            effective_dimension: effective_dimension(self.eig.eigenvalues(), lambda)?,
            weighted_sse: sse,
        };
        Ok((estimate, diagnostics))
    }
}

/// Fits the regularized mean in one call.
pub fn fit_mean(
    samples: &SampleSet,
    kernel: &Kernel1,
    filter: Filter,
    lambda: f64,
) -> Result<(MeanEstimate, MeanFitDiagnostics)> {
    mean_system(samples, kernel)?.fit(filter, lambda)
}

/// Rate-optimal schedule `lambda = (m n)^{-b / (1 + 2 min(alpha, nu) b)}`.
///
/// `m` is the harmonic-mean sampling frequency (possibly fractional), `nu`
/// the filter qualification.
pub fn oracle_lambda_mean(n: usize, m: f64, alpha: f64, b: f64, nu: f64) -> Result<f64> {
    if !(b > 1.0) || !b.is_finite() {
        return Err(Error::BadExponent(b));
    }
    if !(alpha > 0.0) || !(nu > 0.0) {
        return Err(Error::BadRule(format!(
            "smoothness {alpha} and qualification {nu} must be positive"
        )));
    }
    if n == 0 || !(m >= 1.0) {
        return Err(Error::BadSize {
            what: "sample sizes for the oracle schedule",
            min: 1,
            got: 0,
        });
    }
    let r = alpha.min(nu);
    Ok((m * n as f64).powf(-b / (1.0 + 2.0 * r * b)))
}

/// Basis-coordinate mean fit: returns the coefficients of the estimate in
/// the Mercer eigenbasis (`mu = sum_l c_l psi_l`).
pub fn fit_mean_operator_coeffs(
    samples: &SampleSet,
    mercer: &MercerSystem,
    filter: Filter,
    lambda: f64,
) -> Result<Vec<f64>> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::BadLambda(lambda));
    }
    let anchors = samples.flat_times();
    let values = samples.flat_values();
    let weights = assemble_weight(samples);
    let n = anchors.len();
    let l = mercer.len();

    // Phi[p, q] = sqrt(lambda_q) psi_q(t_p)
    let sqrt_eig: Vec<f64> = mercer.eigenvalues().iter().map(|e| e.sqrt()).collect();
    let phi = Mat::from_fn(n, l, |p, q| sqrt_eig[q] * mercer.eval_basis(q, anchors[p]));

    let wphi = Mat::from_fn(n, l, |p, q| weights[p] * phi[(p, q)]);
    let a_hat = phi.transpose() * &wphi;
    let gm = phi.transpose() * &phi;
    let mut v1 = vec![0.0; l];
    for q in 0..l {
        v1[q] = (0..n).map(|p| phi[(p, q)] * weights[p] * values[p]).sum();
    }

    // G^{1/2}
    let g_eig = sym_eigen(Mat::from_fn(l, l, |i, j| 0.5 * (gm[(i, j)] + gm[(j, i)])).as_ref())?
        .clamped_psd()?;
    let g_half = g_eig.apply_matrix_function(f64::sqrt)?;

    // S = G^{1/2} A G^{1/2}
    let s = &g_half * &a_hat * &g_half;
    let s = Mat::from_fn(l, l, |i, j| 0.5 * (s[(i, j)] + s[(j, i)]));
    let s_eig = sym_eigen(s.as_ref())?.clamped_psd()?;
    let range = s_eig.max_eigenvalue().max(1.0);

    // c = Lambda^{1/2} G^{1/2} g(S) G^{1/2} V
    let gv: Vec<f64> = mat_vec(&g_half, &v1);
    let filtered =
        s_eig.apply_to_vector(|s| filter.g(lambda, s, range).unwrap_or(f64::NAN), &gv)?;
    let gf = mat_vec(&g_half, &filtered);
    Ok((0..l).map(|q| sqrt_eig[q] * gf[q]).collect())
}

/// Basis-coordinate mean fit evaluated on a grid.
///
/// Requires a truncation of at least 100 modes and a grid of at least 256
/// nodes so the truncation tail stays below the route's accuracy target.
pub fn fit_mean_operator_form(
    samples: &SampleSet,
    mercer: &MercerSystem,
    filter: Filter,
    lambda: f64,
    grid: &Grid1D,
) -> Result<Vec<f64>> {
    if mercer.len() < 100 {
        return Err(Error::BadSize {
            what: "mercer truncation for the basis-coordinate fit",
            min: 100,
            got: mercer.len(),
        });
    }
    if grid.len() < 256 {
        return Err(Error::BadSize {
            what: "evaluation grid for the basis-coordinate fit",
            min: 256,
            got: grid.len(),
        });
    }
    let coeffs = fit_mean_operator_coeffs(samples, mercer, filter, lambda)?;
    let basis = basis_matrix(mercer, grid);
    Ok((0..grid.len())
        .map(|j| (0..mercer.len()).map(|q| coeffs[q] * basis[(q, j)]).sum())
        .collect())
}

fn mat_vec(m: &Mat<f64>, v: &[f64]) -> Vec<f64> {
    let col = faer::Col::<f64>::from_fn(v.len(), |i| v[i]);
    let out = m * &col;
    out.iter().copied().collect()
}

/// Grid-search lambda selection by held-out-curve validation.
///
/// Splits curves into `folds` interleaved groups, fits on the complement,
/// and scores the weighted squared prediction error on the held-out
/// curves. Ties prefer the larger lambda. This is a convenience utility;
/// the rate harness uses the closed-form schedules instead.
pub fn select_lambda_cv(
    samples: &SampleSet,
    kernel: &Kernel1,
    filter: Filter,
    candidates: &[f64],
    folds: usize,
) -> Result<f64> {
    if candidates.is_empty() {
        return Err(Error::BadSize {
            what: "lambda candidates",
            min: 1,
            got: 0,
        });
    }
    let n = samples.n_curves();
    let folds = folds.min(n);
    if folds < 2 {
        return Err(Error::BadSize {
            what: "cross-validation folds",
            min: 2,
            got: folds,
        });
    }
    let mut scores = vec![0.0f64; candidates.len()];
    for f in 0..folds {
        let train: Vec<Curve> = samples
            .curves()
            .iter()
            .enumerate()
            .filter(|(i, _)| i % folds != f)
            .map(|(_, c)| c.clone())
            .collect();
        let held: Vec<&Curve> = samples
            .curves()
            .iter()
            .enumerate()
            .filter(|(i, _)| i % folds == f)
            .map(|(_, c)| c)
            .collect();
        let system = mean_system(&SampleSet::new(train)?, kernel)?;
        for (ci, &lambda) in candidates.iter().enumerate() {
            let (est, _) = system.fit(filter, lambda)?;
            let mut err = 0.0;
            for c in &held {
                let w = 1.0 / (held.len() as f64 * c.len() as f64);
                for (&t, &y) in c.times.iter().zip(&c.values) {
                    let r = y - est.evaluate(t);
                    err += w * r * r;
                }
            }
            scores[ci] += err;
        }
    }
    let mut best = 0;
    for ci in 1..candidates.len() {
        let better = scores[ci] < scores[best]
            || (scores[ci] == scores[best] && candidates[ci] > candidates[best]);
        if better {
            best = ci;
        }
    }
    Ok(candidates[best])
}

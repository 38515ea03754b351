//! Synthetic processes with controlled mean smoothness and covariance
//! structure, for rate experiments against known ground truth.
//!
//! The mean is built through the spectral calculus of the kernel operator:
//! `mu_0 = sum_l lambda_l^alpha h_l psi_l` places `mu_0` exactly at
//! smoothness `alpha` relative to the kernel's eigenbasis (alpha = 1/2 is
//! membership in the native space, smaller alpha leaves it). Curves are
//! Gaussian Karhunen-Loeve sums `X = mu_0 + sum_k sqrt(xi_k) Z_k phi_k`
//! observed at uniform random design points with additive Gaussian noise:
//!
//! ```text
//! Y_ij = mu_0(t_ij) + sum_k sqrt(xi_k) Z_ik phi_k(t_ij) + sigma0 eps_ij
//! ```
//!
//! Draws are seeded and bit-reproducible; the variate order per curve is
//! fixed (design, then KL coefficients, then noise) and noise variates are
//! consumed even when `sigma0 = 0`, so datasets drawn at different noise
//! levels from the same seed share their design and sample paths.

use std::sync::Arc;

use faer::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::kernel::MercerSystem;
use crate::mean::{Curve, SampleSet};
use crate::numerics::Grid1D;

/// Construction rule for the source coefficients `h`.
#[derive(Debug, Clone, PartialEq)]
pub enum HRule {
    /// `h = e_1`: the mean is a multiple of the leading eigenfunction.
    FixedUnit,
    /// `h_l = l^{-decay}` normalized to unit norm; requires `decay > 1/2`.
    Polynomial { decay: f64 },
    /// Explicit coefficient vector.
    Explicit(Vec<f64>),
}

/// Mean function `mu_0 = sum_l lambda_l^alpha h_l psi_l`.
#[derive(Debug, Clone)]
pub struct SourceMean {
    mercer: Arc<MercerSystem>,
    alpha: f64,
    h: Vec<f64>,
    /// `c_l = lambda_l^alpha h_l`.
    coeffs: Vec<f64>,
}

/// Builds a mean of prescribed smoothness over a Mercer basis.
pub fn make_source_mean(
    mercer: Arc<MercerSystem>,
    alpha: f64,
    rule: HRule,
) -> Result<SourceMean> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::BadRule(format!(
            "smoothness must be positive, got {alpha}"
        )));
    }
    let l = mercer.len();
    let h = match rule {
        HRule::FixedUnit => {
            let mut h = vec![0.0; l];
            h[0] = 1.0;
            h
        }
        HRule::Polynomial { decay } => {
            if !(decay > 0.5) {
                return Err(Error::BadRule(format!(
                    "polynomial source decay must exceed 1/2, got {decay}"
                )));
            }
            let mut h: Vec<f64> = (1..=l).map(|i| (i as f64).powf(-decay)).collect();
            let norm = h.iter().map(|x| x * x).sum::<f64>().sqrt();
            for x in &mut h {
                *x /= norm;
            }
            h
        }
        HRule::Explicit(v) => {
            if v.len() > l {
                return Err(Error::TruncationTooLarge {
                    requested: v.len(),
                    available: l,
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite {
                    context: "source coefficients",
                });
            }
            let mut h = v;
            h.resize(l, 0.0);
            h
        }
    };
    let coeffs: Vec<f64> = h
        .iter()
        .enumerate()
        .map(|(i, &hl)| mercer.eigenvalues()[i].powf(alpha) * hl)
        .collect();
    Ok(SourceMean {
        mercer,
        alpha,
        h,
        coeffs,
    })
}

impl SourceMean {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn mercer(&self) -> &Arc<MercerSystem> {
        &self.mercer
    }

    /// Norm of the source vector `h`.
    pub fn h_norm(&self) -> f64 {
        self.h.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Basis coefficients `c_l = lambda_l^alpha h_l`.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(l, c)| c * self.mercer.eval_basis(l, t))
            .sum()
    }

    pub fn evaluate_on(&self, grid: &Grid1D) -> Vec<f64> {
        grid.nodes().iter().map(|&t| self.evaluate(t)).collect()
    }
}

/// Construction rule for the Karhunen-Loeve variances.
#[derive(Debug, Clone, PartialEq)]
pub enum XiRule {
    /// `xi_k = k^{-decay}` with `decay > 1`.
    Polynomial { decay: f64 },
    /// Explicit nonnegative variances.
    Finite(Vec<f64>),
}

/// Per-curve observation-count scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MScheme {
    /// Every curve gets exactly the target count.
    Constant,
    /// A `fraction` of curves gets `lo` observations, the rest `hi`; the
    /// realized harmonic mean must land within 5% of the draw target.
    TwoPoint { lo: usize, hi: usize, fraction: f64 },
}

/// Full generative description of the observed process.
#[derive(Debug, Clone)]
pub struct ProcessSpec {
    mean: SourceMean,
    xi: Vec<f64>,
    basis: Arc<MercerSystem>,
    sigma0: f64,
    scheme: MScheme,
}

/// Assembles a process over the mean's own eigenbasis.
pub fn make_process(
    mean: SourceMean,
    xi_rule: XiRule,
    kl_modes: usize,
    sigma0: f64,
    scheme: MScheme,
) -> Result<ProcessSpec> {
    let basis = mean.mercer.clone();
    make_process_with_basis(mean, basis, xi_rule, kl_modes, sigma0, scheme)
}

/// Assembles a process with an explicit Karhunen-Loeve basis.
pub fn make_process_with_basis(
    mean: SourceMean,
    basis: Arc<MercerSystem>,
    xi_rule: XiRule,
    kl_modes: usize,
    sigma0: f64,
    scheme: MScheme,
) -> Result<ProcessSpec> {
    if !(sigma0 >= 0.0) || !sigma0.is_finite() {
        return Err(Error::BadRule(format!(
            "noise level must be nonnegative, got {sigma0}"
        )));
    }
    let xi = match xi_rule {
        XiRule::Polynomial { decay } => {
            if !(decay > 1.0) {
                return Err(Error::BadVariances(format!(
                    "polynomial variance decay must exceed 1, got {decay}"
                )));
            }
            (1..=kl_modes).map(|k| (k as f64).powf(-decay)).collect()
        }
        XiRule::Finite(v) => {
            if v.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                return Err(Error::BadVariances(
                    "variances must be nonnegative and finite".into(),
                ));
            }
            v
        }
    };
    if xi.len() > basis.len() {
        return Err(Error::TruncationTooLarge {
            requested: xi.len(),
            available: basis.len(),
        });
    }
    if let MScheme::TwoPoint { lo, hi, fraction } = scheme {
        if lo < 1 || hi < lo || !(0.0..=1.0).contains(&fraction) {
            return Err(Error::BadRule(format!(
                "two-point scheme ({lo}, {hi}, {fraction}) is malformed"
            )));
        }
    }
    Ok(ProcessSpec {
        mean,
        xi,
        basis,
        sigma0,
        scheme,
    })
}

impl ProcessSpec {
    pub fn mean(&self) -> &SourceMean {
        &self.mean
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    pub fn scheme(&self) -> MScheme {
        self.scheme
    }

    /// Upper bound on `sup_t E[(X - mu_0)^2(t)]` over the basis grid.
    pub fn pointwise_variance_bound(&self) -> f64 {
        let grid = self.basis.grid().clone();
        self.xi
            .iter()
            .enumerate()
            .map(|(k, &xi)| {
                let sup = grid
                    .nodes()
                    .iter()
                    .map(|&t| self.basis.eval_basis(k, t).abs())
                    .fold(0.0f64, f64::max);
                xi * sup * sup
            })
            .sum()
    }

    /// True covariance `C_0(s, t) = sum_k xi_k phi_k(s) phi_k(t)`.
    pub fn true_cov_at(&self, s: f64, t: f64) -> f64 {
        self.xi
            .iter()
            .enumerate()
            .map(|(k, &xi)| xi * self.basis.eval_basis(k, s) * self.basis.eval_basis(k, t))
            .sum()
    }

    pub fn true_mean_on(&self, grid: &Grid1D) -> Vec<f64> {
        self.mean.evaluate_on(grid)
    }

    /// Tabulates `C_0` on a tensor grid; symmetric by construction.
    pub fn true_cov_on(&self, grid: &Grid1D) -> Mat<f64> {
        let g = grid.len();
        let phis = Mat::from_fn(self.xi.len(), g, |k, j| {
            self.basis.eval_basis(k, grid.nodes()[j])
        });
        let mut c = Mat::<f64>::zeros(g, g);
        for k in 0..self.xi.len() {
            let xi = self.xi[k];
            for i in 0..g {
                let v = xi * phis[(k, i)];
                for j in 0..g {
                    c[(i, j)] += v * phis[(k, j)];
                }
            }
        }
        c
    }
}

/// One seeded draw from a process.
#[derive(Debug, Clone)]
pub struct DrawnDataset {
    pub samples: SampleSet,
    pub seed: u64,
}

/// Draws `n` curves with target harmonic-mean count `target_m`.
///
/// Two-point schemes admit fractional targets; the constant scheme
/// requires an integral one. The same seed regenerates the dataset bit for
/// bit.
pub fn draw(spec: &ProcessSpec, n: usize, target_m: f64, seed: u64) -> Result<DrawnDataset> {
    if n < 1 || !(target_m >= 1.0) {
        return Err(Error::BadSize {
            what: "draw dimensions",
            min: 1,
            got: n.min(target_m.max(0.0) as usize),
        });
    }
    let counts = realize_counts(spec.scheme, n, target_m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let kl = spec.xi.len();
    let sqrt_xi: Vec<f64> = spec.xi.iter().map(|x| x.sqrt()).collect();

    let mut curves = Vec::with_capacity(n);
    for &m_i in &counts {
        let times: Vec<f64> = (0..m_i).map(|_| rand::Rng::random::<f64>(&mut rng)).collect();
        let z: Vec<f64> = (0..kl).map(|_| normal.sample(&mut rng)).collect();
        // noise variates are always consumed to keep streams aligned
        // across sigma0 settings
        let eps: Vec<f64> = (0..m_i).map(|_| normal.sample(&mut rng)).collect();
        let values: Vec<f64> = times
            .iter()
            .zip(&eps)
            .map(|(&t, &e)| {
                let path: f64 = (0..kl)
                    .map(|k| sqrt_xi[k] * z[k] * spec.basis.eval_basis(k, t))
                    .sum();
                spec.mean.evaluate(t) + path + spec.sigma0 * e
            })
            .collect();
        curves.push(Curve::new(times, values)?);
    }
    Ok(DrawnDataset {
        samples: SampleSet::new(curves)?,
        seed,
    })
}

fn realize_counts(scheme: MScheme, n: usize, target_m: f64) -> Result<Vec<usize>> {
    match scheme {
        MScheme::Constant => {
            if target_m.fract() != 0.0 {
                return Err(Error::BadScheme {
                    target: target_m,
                    achievable: target_m.round(),
                });
            }
            Ok(vec![target_m as usize; n])
        }
        MScheme::TwoPoint { lo, hi, fraction } => {
            let n_lo = ((fraction * n as f64).round() as usize).min(n);
            let achieved =
                n as f64 / (n_lo as f64 / lo as f64 + (n - n_lo) as f64 / hi as f64);
            if (achieved - target_m).abs() > 0.05 * target_m {
                return Err(Error::BadScheme {
                    target: target_m,
                    achievable: achieved,
                });
            }
            let mut counts = vec![lo; n_lo];
            counts.extend(std::iter::repeat(hi).take(n - n_lo));
            Ok(counts)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{mercer_system, Kernel1};
    use crate::numerics::l2_norm_grid2;
    use approx::assert_abs_diff_eq;

    fn brownian_mercer(l: usize) -> Arc<MercerSystem> {
        let grid = Grid1D::uniform(512).unwrap();
        Arc::new(mercer_system(&Kernel1::BrownianMin, l, &grid).unwrap())
    }

    #[test]
    fn fixed_unit_source_coefficient() {
        let mercer = brownian_mercer(50);
        let sm = make_source_mean(mercer, 0.5, HRule::FixedUnit).unwrap();
        // c_1 = lambda_1^{1/2} = 2/pi
        assert_abs_diff_eq!(
            sm.coeffs()[0],
            2.0 / std::f64::consts::PI,
            epsilon = 1e-14
        );
        assert!(sm.coeffs()[1..].iter().all(|&c| c == 0.0));
        assert_abs_diff_eq!(sm.h_norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn vanishing_alpha_recovers_raw_coefficient() {
        let mercer = brownian_mercer(10);
        let sm = make_source_mean(mercer, 1e-12, HRule::FixedUnit).unwrap();
        assert_abs_diff_eq!(sm.coeffs()[0], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn zero_source_gives_zero_mean() {
        let mercer = brownian_mercer(10);
        let sm = make_source_mean(mercer, 0.5, HRule::Explicit(vec![0.0; 10])).unwrap();
        let grid = Grid1D::uniform(33).unwrap();
        assert!(sm.evaluate_on(&grid).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn shallow_polynomial_source_rejected() {
        let mercer = brownian_mercer(10);
        assert!(matches!(
            make_source_mean(mercer, 0.5, HRule::Polynomial { decay: 0.5 }),
            Err(Error::BadRule(_))
        ));
    }

    #[test]
    fn rank_one_covariance_value() {
        let mercer = brownian_mercer(10);
        let sm = make_source_mean(mercer, 0.5, HRule::FixedUnit).unwrap();
        let spec = make_process(sm, XiRule::Finite(vec![1.0]), 1, 0.0, MScheme::Constant).unwrap();
        // C_0(0.5, 0.5) = psi_1(0.5)^2 = 2 sin^2(pi/4) = 1
        assert_abs_diff_eq!(spec.true_cov_at(0.5, 0.5), 1.0, epsilon = 1e-12);
        let grid = Grid1D::uniform(17).unwrap();
        let c = spec.true_cov_on(&grid);
        for i in 0..17 {
            for j in 0..17 {
                assert_eq!(c[(i, j)], c[(j, i)]);
            }
        }
    }

    #[test]
    fn polynomial_variances_trace() {
        let mercer = brownian_mercer(120);
        let sm = make_source_mean(mercer, 0.5, HRule::FixedUnit).unwrap();
        let spec =
            make_process(sm, XiRule::Polynomial { decay: 2.0 }, 100, 0.0, MScheme::Constant)
                .unwrap();
        // trace = integral of C_0(t, t) dt = partial zeta(2)
        let partial: f64 = (1..=100).map(|k| 1.0 / (k as f64 * k as f64)).sum();
        let grid = Grid1D::uniform(2049).unwrap();
        let diag: Vec<f64> = grid
            .nodes()
            .iter()
            .map(|&t| spec.true_cov_at(t, t))
            .collect();
        let quad = grid.integrate(&diag).unwrap();
        assert_abs_diff_eq!(quad, partial, epsilon = 2e-3);
        assert_abs_diff_eq!(partial, std::f64::consts::PI.powi(2) / 6.0, epsilon = 1e-2);
    }

    #[test]
    fn variance_rules_validated() {
        let mercer = brownian_mercer(10);
        let sm = make_source_mean(mercer, 0.5, HRule::FixedUnit).unwrap();
        assert!(matches!(
            make_process(
                sm.clone(),
                XiRule::Polynomial { decay: 1.0 },
                5,
                0.0,
                MScheme::Constant
            ),
            Err(Error::BadVariances(_))
        ));
        assert!(matches!(
            make_process(
                sm,
                XiRule::Finite(vec![-0.1]),
                1,
                0.0,
                MScheme::Constant
            ),
            Err(Error::BadVariances(_))
        ));
    }

    #[test]
    fn two_point_harmonic_mean() {
        // fraction 0.5 of curves at 2, rest at 10:
        // 1 / (0.5/2 + 0.5/10) = 10/3
        let counts = realize_counts(
            MScheme::TwoPoint {
                lo: 2,
                hi: 10,
                fraction: 0.5,
            },
            6,
            10.0 / 3.0,
        )
        .unwrap();
        assert_eq!(counts, vec![2, 2, 2, 10, 10, 10]);
        let hm = 6.0 / counts.iter().map(|&m| 1.0 / m as f64).sum::<f64>();
        assert_abs_diff_eq!(hm, 10.0 / 3.0, epsilon = 1e-12);
        // an unreachable target errors
        assert!(matches!(
            realize_counts(
                MScheme::TwoPoint {
                    lo: 2,
                    hi: 10,
                    fraction: 0.5
                },
                6,
                5.0,
            ),
            Err(Error::BadScheme { .. })
        ));
    }

    #[test]
    fn draws_are_reproducible() {
        let mercer = brownian_mercer(30);
        let sm = make_source_mean(mercer, 0.5, HRule::FixedUnit).unwrap();
        let spec =
            make_process(sm, XiRule::Polynomial { decay: 2.0 }, 20, 0.5, MScheme::Constant)
                .unwrap();
        let d1 = draw(&spec, 5, 4.0, 99).unwrap();
        let d2 = draw(&spec, 5, 4.0, 99).unwrap();
        assert_eq!(d1.samples, d2.samples);
        let d3 = draw(&spec, 5, 4.0, 100).unwrap();
        assert_ne!(d1.samples, d3.samples);
    }

    #[test]
    fn noiseless_degenerate_process_returns_mean_values() {
        let mercer = brownian_mercer(10);
        let sm = make_source_mean(mercer, 0.5, HRule::FixedUnit).unwrap();
        let spec = make_process(sm, XiRule::Finite(vec![]), 0, 0.0, MScheme::Constant).unwrap();
        let d = draw(&spec, 3, 5.0, 7).unwrap();
        for c in d.samples.curves() {
            for (&t, &y) in c.times.iter().zip(&c.values) {
                assert_abs_diff_eq!(y, spec.mean().evaluate(t), epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn same_seed_different_noise_levels_share_designs() {
        let mercer = brownian_mercer(20);
        let sm = make_source_mean(mercer, 0.5, HRule::FixedUnit).unwrap();
        let quiet = make_process(
            sm.clone(),
            XiRule::Polynomial { decay: 2.0 },
            10,
            0.0,
            MScheme::Constant,
        )
        .unwrap();
        let noisy = make_process(
            sm,
            XiRule::Polynomial { decay: 2.0 },
            10,
            0.5,
            MScheme::Constant,
        )
        .unwrap();
        let dq = draw(&quiet, 4, 3.0, 11).unwrap();
        let dn = draw(&noisy, 4, 3.0, 11).unwrap();
        for (cq, cn) in dq.samples.curves().iter().zip(dn.samples.curves()) {
            assert_eq!(cq.times, cn.times);
            // responses differ only by the noise contribution
            assert!(cq.values.iter().zip(&cn.values).any(|(a, b)| a != b));
        }
    }

    #[test]
    fn pointwise_moments_match_kl_variances() {
        // sample variance of X(0.5) over many draws vs sum xi_k phi_k(0.5)^2
        let mercer = brownian_mercer(20);
        let kl = 20usize;
        let xi: Vec<f64> = (1..=kl).map(|k| 1.0 / (k as f64 * k as f64)).collect();
        let phi_at: Vec<f64> = (0..kl).map(|k| mercer.eval_basis(k, 0.5)).collect();
        let target: f64 = xi
            .iter()
            .zip(&phi_at)
            .map(|(&x, &p)| x * p * p)
            .sum();

        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let normal = StandardNormal;
        let reps = 100_000usize;
        let (mut sum, mut sumsq) = (0.0f64, 0.0f64);
        for _ in 0..reps {
            let x: f64 = (0..kl)
                .map(|k| {
                    let z: f64 = normal.sample(&mut rng);
                    xi[k].sqrt() * z * phi_at[k]
                })
                .sum();
            sum += x;
            sumsq += x * x;
        }
        let mean = sum / reps as f64;
        let var = sumsq / reps as f64 - mean * mean;
        // 3 standard errors of a sample variance: 3 * var * sqrt(2/(reps-1))
        let tol = 3.0 * target * (2.0 / (reps as f64 - 1.0)).sqrt();
        assert!(
            (var - target).abs() <= tol,
            "variance {var} vs {target} (tol {tol})"
        );
    }

    #[test]
    fn kl_truncation_tail_is_small_in_l2() {
        let mercer = brownian_mercer(120);
        let sm = make_source_mean(mercer.clone(), 0.5, HRule::FixedUnit).unwrap();
        let c50 = make_process(
            sm.clone(),
            XiRule::Polynomial { decay: 2.0 },
            50,
            0.0,
            MScheme::Constant,
        )
        .unwrap();
        let c100 =
            make_process(sm, XiRule::Polynomial { decay: 2.0 }, 100, 0.0, MScheme::Constant)
                .unwrap();
        let grid = Grid1D::uniform(129).unwrap();
        let diff = &c100.true_cov_on(&grid) - &c50.true_cov_on(&grid);
        // orthonormal tail modes: the L2 norm of the difference is
        // sqrt(sum_{51..100} k^-4) ~ 1.5e-3
        let l2 = l2_norm_grid2(diff.as_ref(), &grid, &grid).unwrap();
        assert!(l2 <= 2e-3, "L2 truncation tail {l2}");
    }

    #[test]
    fn variance_bound_is_finite_and_sane() {
        let mercer = brownian_mercer(40);
        let sm = make_source_mean(mercer, 0.5, HRule::FixedUnit).unwrap();
        let spec =
            make_process(sm, XiRule::Polynomial { decay: 2.0 }, 30, 0.0, MScheme::Constant)
                .unwrap();
        let bound = spec.pointwise_variance_bound();
        // each |phi_k| is bounded by sqrt(2), so the bound is at most
        // 2 * sum xi_k
        let total: f64 = spec.xi().iter().sum();
        assert!(bound > 0.0 && bound <= 2.0 * total + 1e-12);
    }
}

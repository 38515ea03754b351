//! Spectrally regularized estimation of mean and covariance functions from
//! sparsely observed, noise-contaminated curves.
//!
//! Observations follow the longitudinal model `Y_ij = X_i(t_ij) + eps_ij`
//! with a handful of measurements per curve. Estimation runs a spectral
//! filter (Tikhonov, spectral cut-off, Showalter, or Landweber) over the
//! weighted kernel Gram system built from a reproducing kernel on `[0, 1]`:
//! the mean fit solves `alpha = g_lambda(KWK) KWY`, and the covariance fit
//! applies the same machinery to products of centered responses over
//! within-curve point pairs, skipping same-point products so measurement
//! error variance does not leak into the surface.
//!
//! Modules follow the pipeline:
//!
//! * [`numerics`] — dense symmetric eigendecomposition, matrix functions,
//!   trapezoid grids and `L^2` norms on the unit interval and square
//! * [`kernel`] — kernel families, Gram assembly, truncated Mercer systems
//!   (analytic or Nystrom) and the effective-dimension diagnostic
//! * [`filter`] — the regularization families `g_lambda`, their residuals,
//!   qualification, and a numerical verifier of the family conditions
//! * [`mean`] — the regularized mean estimator, its diagnostics, and the
//!   basis-coordinate evaluation path
//! * [`covariance`] — pair enumeration, the plug-in covariance estimator,
//!   and its basis-coordinate evaluation path
//! * [`synth`] — synthetic processes with known mean smoothness,
//!   Karhunen-Loeve covariance structure, and seeded, reproducible draws

pub mod consts;
pub mod covariance;
pub mod error;
pub mod filter;
pub mod kernel;
pub mod mean;
pub mod numerics;
pub mod synth;

pub use error::{Error, Result};
pub use faer::Mat;

/// Caps the number of compute threads used by the dense linear algebra
/// kernels. `1` forces fully sequential execution.
pub fn set_compute_threads(threads: usize) {
    if threads <= 1 {
        faer::set_global_parallelism(faer::Par::Seq);
    } else {
        faer::set_global_parallelism(faer::Par::rayon(threads));
    }
}

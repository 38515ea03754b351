//! Central table of numerical tolerances and default sizes.
//!
//! All tolerances are absolute unless the name says otherwise.

/// Max absolute asymmetry accepted by the symmetric eigensolver.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Reconstruction accuracy demanded of an eigendecomposition, relative to
/// `max(1, max_abs(A))`.
pub const RECONSTRUCTION_TOL: f64 = 1e-8;

/// Orthonormality defect tolerated in eigenvector matrices.
pub const ORTHONORMALITY_TOL: f64 = 1e-10;

/// Eigenvalues of a nominally PSD matrix in `[-PSD_CLAMP_REL * trace, 0)`
/// are clamped to zero; anything lower is an error.
pub const PSD_CLAMP_REL: f64 = 1e-10;

/// Slack added to the declared filter-family constants when checking
/// empirical maxima.
pub const FILTER_CONDITION_SLACK: f64 = 1e-9;

/// Default quadrature grid for Nystrom eigensystems.
pub const DEFAULT_NYSTROM_GRID: usize = 512;

/// Default Mercer truncation level.
pub const DEFAULT_TRUNCATION: usize = 200;

/// Default number of Karhunen-Loeve modes in synthetic processes.
pub const DEFAULT_KL_MODES: usize = 100;

/// Default cap on the number of covariance pair rows for dense fits.
pub const DEFAULT_PAIR_CAP: usize = 6000;

/// Default 1-D norm grid resolution.
pub const DEFAULT_NORM_GRID: usize = 513;

/// Default per-axis resolution of the 2-D norm grid.
pub const DEFAULT_NORM_GRID2: usize = 129;

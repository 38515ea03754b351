use thiserror::Error;

/// Errors produced by the estimation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric (max asymmetry {max_asymmetry:e} exceeds {tolerance:e})")]
    NonSymmetric { max_asymmetry: f64, tolerance: f64 },

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },

    #[error("eigendecomposition failed to converge")]
    EigenFailed,

    #[error(
        "matrix is not positive semidefinite (eigenvalue {min_eigenvalue:e} below -{threshold:e})"
    )]
    NotPositiveSemidefinite { min_eigenvalue: f64, threshold: f64 },

    #[error("{what} must be at least {min}, got {got}")]
    BadSize {
        what: &'static str,
        min: usize,
        got: usize,
    },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("point {value} lies outside [0, 1]")]
    OutOfDomain { value: f64 },

    #[error("invalid kernel parameter: {0}")]
    BadKernelParam(String),

    #[error("truncation level {requested} exceeds the available {available} modes")]
    TruncationTooLarge { requested: usize, available: usize },

    #[error("regularization parameter must be positive, got {0}")]
    BadLambda(f64),

    #[error("spectral argument {sigma} outside [0, {range}]")]
    OutOfSpectralRange { sigma: f64, range: f64 },

    #[error("eigenvalue decay exponent must exceed 1, got {0}")]
    BadExponent(f64),

    #[error("no curve has two or more observations; covariance pairs are empty")]
    NoPairs,

    #[error("pair system has {pairs} rows, above the configured cap {cap}")]
    PairBudgetExceeded { pairs: usize, cap: usize },

    #[error("invalid construction rule: {0}")]
    BadRule(String),

    #[error("invalid variance sequence: {0}")]
    BadVariances(String),

    #[error("sampling scheme cannot reach harmonic mean {target} (achievable {achievable})")]
    BadScheme { target: f64, achievable: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

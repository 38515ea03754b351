//! Monte Carlo experiment harness for the spectral-regularization
//! estimators: configuration parsing, seeded replication sweeps over
//! `(n, m)` cells, log-log slope fits against theoretical exponents, and
//! deterministic CSV/JSON reporting.

pub mod config;
pub mod io;
pub mod report;
pub mod runner;

/// Formats a float with 17 significant digits, the fixed width used by
/// every report file.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Thread budget: `RATE_LAB_THREADS` when set, otherwise the machine's
/// available parallelism.
pub fn thread_budget() -> usize {
    std::env::var("RATE_LAB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&v| v >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|v| v.get())
                .unwrap_or(1)
        })
}

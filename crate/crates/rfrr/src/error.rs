use thiserror::Error;

/// Errors produced by spectrum construction, solvers, and simulators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "fixed-point solver did not converge after {iterations} iterations \
         (residual {residual:.3e}, last nu1 {nu1:.6e}, nu2 {nu2:.6e})"
    )]
    NoConvergence {
        iterations: usize,
        residual: f64,
        nu1: f64,
        nu2: f64,
    },

    /// The evaluation left the regime where the closed forms are valid
    /// (e.g. Upsilon >= 1 or a trace denominator crossed zero).
    #[error("out of regime: {0}")]
    OutOfRegime(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("out of range: {0}")]
    Range(String),

    /// A guarded allocation (cell count, point count) would exceed its budget.
    #[error("resource guard exceeded: {0}")]
    Resource(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The requested spacing lies outside the admissible range of a certificate.
    #[error("delta = {delta:e} exceeds the certified threshold delta0 = {delta0:e}")]
    OutOfCertificate { delta: f64, delta0: f64 },

    #[error("kernel system is ill-conditioned (condition estimate {condition_estimate:e}): {reason}")]
    IllConditioned {
        condition_estimate: f64,
        reason: String,
    },

    #[error("quadrature did not converge: {0}")]
    Convergence(String),

    /// The requested quantity cannot be represented as a native float.
    #[error("overflow guard: {0}")]
    Overflow(String),

    /// A randomized trial produced a degenerate configuration.
    #[error("degenerate trial: {0}")]
    Degenerate(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

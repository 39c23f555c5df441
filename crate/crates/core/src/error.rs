//! Error type shared by all modules.

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A sequence had the wrong length.
    #[error("dimension mismatch: expected {expected} entries, got {actual}")]
    Dimension { expected: usize, actual: usize },

    /// A numeric parameter was outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// An argument combination was inconsistent (e.g. an empty interval).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// An evaluation point was outside the function's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A structural precondition was violated.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Cholesky factorization failed even after diagonal jitter.
    #[error("cholesky factorization failed at pivot {pivot} (pivot value {value:e})")]
    Factorization { pivot: usize, value: f64 },

    /// Least-squares rate fit could not be performed.
    #[error("rate fit failed: {0}")]
    Fit(String),

    /// A serialized artifact could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Operand shapes are incompatible for the requested operation.
    #[error("dimension error in {op}: {detail}")]
    Dimension { op: &'static str, detail: String },

    /// A precondition of an operation was violated.
    #[error("contract violation in {op}: {detail}")]
    Contract { op: &'static str, detail: String },

    /// A NaN or infinity showed up where finite values are required.
    #[error("non-finite value in {what}")]
    NonFinite { what: String },

    /// Cholesky factorization failed even after adding jitter.
    #[error("cholesky factorization failed at pivot {pivot} (value {value:e}); matrix is not positive definite")]
    Factorization { pivot: usize, value: f64 },

    /// Sparse direct solve hit a (numerically) singular system.
    #[error("linear solver: {0}")]
    Solver(String),

    /// Malformed dataset or checkpoint file.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dim(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Dimension {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn contract(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Contract {
            op,
            detail: detail.into(),
        }
    }

    /// True for failures caused by numerics (NaN, singular systems, failed
    /// factorizations) rather than bad usage.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. } | Error::Factorization { .. } | Error::Solver(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

//! Crate-wide error type. Contract violations (bad dimensions, broken
//! preconditions) are reported loudly rather than silently clamped.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Mismatched or invalid matrix/vector dimensions.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// An operation contract was violated (bad input class, out-of-range
    /// argument, malformed pattern, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A driver precondition does not hold for the supplied parameters.
    /// The message names the offending quantity and, where meaningful, the
    /// nearest admissible value.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// A scaling hypothesis required by a cost formula or schedule is not
    /// satisfied by the supplied parameters.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    /// Iterative eigensolver failed to converge.
    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
    pub fn hypothesis(msg: impl Into<String>) -> Self {
        Error::Hypothesis(msg.into())
    }
}

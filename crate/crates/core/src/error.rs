//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by constructions and checks.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("malformed structure: {0}")]
    Malformed(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error("budget exhausted: {0}")]
    Budget(String),
}

pub type Result<T> = std::result::Result<T, Error>;

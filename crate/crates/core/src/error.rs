//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure categories, ordered roughly by how early they occur in a run.
///
/// The CLI maps these onto its exit codes (parse = 2, validation = 3,
/// numeric = 4), so keep the classification stable.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input text or files.
    #[error("parse error: {0}")]
    Parse(String),

    /// Well-formed input that violates a domain invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// A computation would exceed a configured size cap.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Quadrature or iteration failed to meet its tolerance.
    #[error("numeric failure: {0}")]
    Numeric(String),
}

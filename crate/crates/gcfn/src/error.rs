//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Mismatched shapes, invalid hyperparameters, incompatible models.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Dataset violates a precondition (missing column, masked row without z, ...).
    #[error("data error: {0}")]
    Data(String),

    /// Optimization failed; carries the epoch/batch where it surfaced.
    #[error("training error at epoch {epoch}, batch {batch}: {msg}")]
    Training {
        epoch: usize,
        batch: usize,
        msg: String,
    },

    /// Non-finite values produced outside a training loop.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Degenerate designs and other estimator failures.
    #[error("estimation error: {0}")]
    Estimation(String),

    /// Malformed input file; line numbers are 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("positivity violation: {0}")]
    Positivity(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

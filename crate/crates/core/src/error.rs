use thiserror::Error;

/// Errors produced anywhere in the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Tensor or matrix dimensions do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A numerical routine failed (non-convergence, NaN loss, ...).
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Malformed configuration or checkpoint contents.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn shape<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Shape(msg.into()))
}

use thiserror::Error;

/// Errors raised by the validation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FmmtError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A factorization or root solve failed.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Inconsistent configuration (quadrature resolution, partition, levels).
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed input file.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Estimated noise level is zero, so standardized coefficients are undefined.
    #[error("degenerate noise estimate: sigma_hat = 0")]
    DegenerateNoise,
}

pub type Result<T> = std::result::Result<T, FmmtError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(FmmtError::Domain(msg.into()))
}

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(FmmtError::Config(msg.into()))
}

use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid input: {0}")]
    Input(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A computation produced a non-finite value.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("power iteration did not converge after {iterations} iterations (last estimate {estimate})")]
    NotConverged { iterations: usize, estimate: f64 },

    #[error("cannot rescale: spectral radius {0:e} is below 1e-12")]
    CannotScale(f64),

    /// A metric that is not defined for the given data (e.g. NRMSE of a constant series).
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    /// True for failures that come from the numbers rather than from how the
    /// call was made.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Numeric(_) | Error::NotConverged { .. } | Error::CannotScale(_))
    }
}

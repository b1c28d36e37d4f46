use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("vertex {index}: {msg}")]
    Data { index: usize, msg: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("image encoding failed for {path}: {msg}")]
    Encode { path: PathBuf, msg: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Numeric domain violations raised by the per-Gaussian kernels.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum MathError {
    #[error("point at camera depth {0} is not in front of the image plane")]
    BehindCamera(f64),
    #[error("2x2 covariance is singular (det = {0:e})")]
    Singular(f64),
    #[error("cost model parameter must be positive, got {0}")]
    NonPositiveRate(f64),
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument is outside the domain of the operation.
    #[error("parameter error: {0}")]
    Param(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("sampler failure: {reason} (acceptance {acceptance:.4} over {sweeps} sweeps)")]
    Sampler {
        reason: String,
        acceptance: f64,
        sweeps: usize,
    },

    #[error("numerical fault: {0}")]
    Numerical(String),

    #[error("illegal decision: {0}")]
    IllegalDecision(String),

    #[error("game reached the inning cap ({0}) while tied")]
    InningCap(u16),

    #[error("invalid roster: {0}")]
    Roster(String),

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Param(msg.into())
    }

    pub(crate) fn insufficient(msg: impl Into<String>) -> Self {
        Error::InsufficientData(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the environment (files, encoding) rather
    /// than by the content of otherwise readable inputs.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::MissingInput(_))
    }
}

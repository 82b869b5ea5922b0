use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error(
        "detector generation stopped after {attempts} attempts with {found} of {requested} \
         detectors (N or the self radius is too large for this pool)"
    )]
    DetectorShortfall {
        found: usize,
        requested: usize,
        attempts: usize,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("external verifier process failed: {0}")]
    Process(String),

    #[error("external verifier protocol violation: {0}")]
    Protocol(String),

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
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

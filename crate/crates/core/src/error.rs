use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = NifflerError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum NifflerError {
    #[error("failed to read {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("empty collection: no loadable tables under {0:?}")]
    EmptyCollection(PathBuf),

    #[error("table {0} has no columns")]
    EmptyTable(String),
    #[error("threshold {0} is outside (0, 1]")]
    InvalidThreshold(f64),

    #[error("threshold below index resolution: requested {requested}, index built at {build}")]
    ThresholdBelowResolution { requested: f64, build: f64 },

    #[error("self-join paths not supported")]
    SelfJoinPath,

    #[error("unknown table {0}")]
    UnknownTable(String),

    #[error("unknown column {0}")]
    UnknownColumn(String),

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("index file format error: {0}")]
    IndexFormat(String),

    #[error("generation error: {0}")]
    Generation(String),

    #[error("insufficient noise pool: need {needed} values outside the truth column, have {available}")]
    InsufficientNoisePool { needed: usize, available: usize },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl NifflerError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        NifflerError::Io {
            path: path.into(),
            source,
        }
    }
}

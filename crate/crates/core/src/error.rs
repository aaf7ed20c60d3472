use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("format error at row {row}, column {column}: {message}")]
    Format {
        row: usize,
        column: String,
        message: String,
    },

    #[error("format error: {0}")]
    Header(String),

    #[error("dataset already carries complement columns (found `{0}`)")]
    Augment(String),

    #[error("{what} = {value} out of range [{min}, {max}]")]
    Range {
        what: &'static str,
        value: usize,
        min: usize,
        max: usize,
    },

    #[error("fingerprint selection is empty")]
    EmptySelection,

    #[error("fingerprint index {index} invalid for {n_fingerprints} columns")]
    InvalidIndex { index: usize, n_fingerprints: usize },

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    #[error("model has {total} variables; exhaustive solve supports at most {limit}")]
    TooLarge { total: usize, limit: usize },

    #[error("search would evaluate {candidates} candidates, over the budget of {budget}")]
    Budget { candidates: u128, budget: u128 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed report: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

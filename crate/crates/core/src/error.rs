use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("insufficient data: {message} (candidates: {candidates}, usable: {usable})")]
    InsufficientData {
        message: String,
        candidates: usize,
        usable: usize,
    },

    /// CSV parse failure. `row` is 1-based and counts data rows (the header is row 0).
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("unsupported reporting frequency: {0}-minute intervals")]
    UnsupportedFrequency(i64),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("integrity error in {}: {message}", path.display())]
    Integrity { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

use std::fmt;

use loadcast_core::Error;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    NotFound,
    InvalidInput,
    InsufficientData,
    Internal,
}

impl ErrorCode {
    pub fn http_status(self) -> u16 {
        match self {
            ErrorCode::NotFound => 404,
            ErrorCode::InvalidInput => 400,
            ErrorCode::InsufficientData => 422,
            ErrorCode::Internal => 500,
        }
    }

    /// Process exit status of the CLI.
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCode::Internal => 2,
            ErrorCode::NotFound | ErrorCode::InvalidInput | ErrorCode::InsufficientData => 1,
        }
    }
}

/// Error document returned by every endpoint and printed by the CLI.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        ApiError {
            code,
            message: message.into(),
            detail: None,
        }
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        ApiError::new(ErrorCode::NotFound, message)
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        ApiError::new(ErrorCode::InvalidInput, message)
    }

    pub fn insufficient(message: impl Into<String>) -> Self {
        ApiError::new(ErrorCode::InsufficientData, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ApiError::new(ErrorCode::Internal, message)
    }

    fn with_detail(mut self, detail: Value) -> Self {
        self.detail = Some(detail);
        self
    }
}

impl fmt::Display for ApiError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for ApiError {}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::NotFound(_) => ApiError::not_found(message),
            Error::InvalidInput(_) => ApiError::invalid(message),
            Error::Parse { row, .. } => ApiError::invalid(message).with_detail(json!({ "row": row })),
            Error::UnsupportedFrequency(minutes) => {
                ApiError::invalid(message).with_detail(json!({ "interval_minutes": minutes }))
            }
            Error::InsufficientData { candidates, usable, .. } => {
                ApiError::insufficient(message).with_detail(json!({ "candidates": candidates, "usable": usable }))
            }
            Error::Integrity { ref path, .. } => {
                ApiError::internal(message).with_detail(json!({ "path": path.display().to_string() }))
            }
            Error::Configuration(_) | Error::Io(_) => ApiError::internal(message),
        }
    }
}

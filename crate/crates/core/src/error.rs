use thiserror::Error;

/// Errors raised by the network, grammar and persistence layers.
#[derive(Debug, Error)]
pub enum HmError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("pattern {0} is not well-formed")]
    NotWellFormed(String),

    #[error("invalid pattern string {0:?}: expected only '0' and '1'")]
    PatternParse(String),

    #[error("checkpoint validation failed: {0}")]
    Checkpoint(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HmError>;

use thiserror::Error;

/// Errors produced by the estimators, generators and harness.
#[derive(Debug, Error)]
pub enum PuError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// A generator or transform produced an unusable result (empty sample,
    /// constant scores, ...).
    #[error("degenerate output: {0}")]
    Degenerate(String),

    #[error("degenerate component: {0}")]
    DegenerateComponent(String),

    #[error("estimation failed: {0}")]
    EstimationFailed(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl PuError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        PuError::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, PuError>;

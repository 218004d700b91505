use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum FepError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("domain error: {0}")]
    Domain(String),
    /// An engine or caller bug: the requested move is not a legal state change.
    #[error("logic error: {0}")]
    Logic(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("insufficient window: {0}")]
    InsufficientWindow(String),
    #[error("validity window exceeded: {0}")]
    ValidityWindow(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = FepError> = std::result::Result<T, E>;

macro_rules! bail {
    ($variant:ident, $($arg:tt)*) => {
        return Err($crate::error::FepError::$variant(format!($($arg)*)))
    };
}
pub(crate) use bail;

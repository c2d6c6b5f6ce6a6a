use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AdError {
    #[error("{op}: shape error: {msg}")]
    Shape { op: &'static str, msg: String },
    #[error("backward requires a scalar loss, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),
    #[error("duplicate parameter name '{0}'")]
    DuplicateParam(String),
    #[error("unknown parameter '{0}'")]
    UnknownParam(String),
}

pub type Result<T> = std::result::Result<T, AdError>;

pub(crate) fn shape_err<T>(op: &'static str, msg: impl Into<String>) -> Result<T> {
    Err(AdError::Shape { op, msg: msg.into() })
}

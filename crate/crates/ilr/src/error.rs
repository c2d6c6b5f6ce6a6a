use qst_adiff::AdError;
use qst_core::QstError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IlrError {
    #[error(transparent)]
    Tensor(#[from] AdError),
    #[error(transparent)]
    Core(#[from] QstError),
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("input shape: {0}")]
    Input(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, IlrError>;

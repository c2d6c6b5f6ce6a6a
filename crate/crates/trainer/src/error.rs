use qst_adiff::AdError;
use qst_core::QstError;
use qst_ilr::IlrError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Model(#[from] IlrError),
    #[error(transparent)]
    Core(#[from] QstError),
    #[error(transparent)]
    Tensor(#[from] AdError),
    #[error("configuration: {0}")]
    Config(String),
    #[error("dataset does not match the model: {0}")]
    Mismatch(String),
    #[error("non-finite loss {loss} at epoch {epoch}, step {step}")]
    NonFinite { epoch: usize, step: usize, loss: f64 },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, TrainError>;

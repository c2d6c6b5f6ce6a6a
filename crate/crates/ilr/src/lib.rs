//! Transformer model that learns an informative latent representation from
//! masked measurement frequencies, with a frequency decoder for pre-training
//! and state decoders for density-matrix parameters and property vectors.

pub mod checkpoint;
pub mod config;
pub mod error;
pub mod layers;
pub mod model;

pub use config::{Head, ModelConfig};
pub use error::{IlrError, Result};
pub use model::{IlrModel, MaskedBatch, ENCODER, FREQ_DECODER, MU_DECODER, NU_DECODER};

//! Small reverse-mode automatic differentiation engine over dense f64 tensors.

pub mod error;
pub mod gradcheck;
pub mod ops;
pub mod optim;
pub mod params;
pub mod tensor;

pub use error::{AdError, Result};
pub use optim::{cosine_warmup_lr, Adam};
pub use params::{kaiming_uniform, ones_param, zeros_param, ParamStore};
pub use tensor::{no_grad, Tensor};

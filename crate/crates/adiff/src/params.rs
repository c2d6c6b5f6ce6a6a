//! Named parameter registry and initialisers.

use rand::Rng;

use crate::error::{AdError, Result};
use crate::tensor::Tensor;

/// Ordered collection of named trainable leaves.
#[derive(Default, Clone, Debug)]
pub struct ParamStore {
    entries: Vec<(String, Tensor)>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, t: Tensor) -> Result<Tensor> {
        let name = name.into();
        if self.get(&name).is_some() {
            return Err(AdError::DuplicateParam(name));
        }
        self.entries.push((name, t.clone()));
        Ok(t)
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn require(&self, name: &str) -> Result<&Tensor> {
        self.get(name).ok_or_else(|| AdError::UnknownParam(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn n_scalars(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.numel()).sum()
    }

    pub fn zero_grad(&self) {
        for (_, t) in &self.entries {
            t.zero_grad();
        }
    }

    /// Freezes or unfreezes every parameter whose name starts with `prefix`.
    pub fn set_trainable(&self, prefix: &str, on: bool) {
        for (n, t) in &self.entries {
            if n.starts_with(prefix) {
                t.set_requires_grad(on);
            }
        }
    }
}

/// Uniform fan-in initialisation, `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
pub fn kaiming_uniform<R: Rng + ?Sized>(shape: &[usize], fan_in: usize, rng: &mut R) -> Tensor {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.random_range(-bound..bound)).collect();
    Tensor::parameter(shape, data).expect("shape matches data")
}

pub fn zeros_param(shape: &[usize]) -> Tensor {
    Tensor::parameter(shape, vec![0.0; shape.iter().product()]).expect("shape matches data")
}

pub fn ones_param(shape: &[usize]) -> Tensor {
    Tensor::parameter(shape, vec![1.0; shape.iter().product()]).expect("shape matches data")
}

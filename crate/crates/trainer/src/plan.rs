use qst_ilr::{Head, ModelConfig};
use rand::Rng;

use crate::error::{Result, TrainError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Pretrain,
    Qst,
}

/// Mask counts are numbers of masked operators (whole groups).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MaskStrategy {
    Separate(usize),
    Unified(Vec<usize>),
}

impl MaskStrategy {
    /// Multiples of the group size from 0 up to 45% of all operators.
    pub fn default_unified(cfg: &ModelConfig) -> Self {
        let limit = (cfg.n_operators() as f64 * 0.45).floor() as usize;
        MaskStrategy::Unified((0..=limit).step_by(cfg.group_size).collect())
    }

    pub fn counts(&self) -> &[usize] {
        match self {
            MaskStrategy::Separate(m) => std::slice::from_ref(m),
            MaskStrategy::Unified(v) => v,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MaskStrategy::Separate(_) => "separate",
            MaskStrategy::Unified(_) => "unified",
        }
    }

    pub fn validate(&self, cfg: &ModelConfig) -> Result<()> {
        let counts = self.counts();
        if counts.is_empty() {
            return Err(TrainError::Config("unified mask set is empty".into()));
        }
        for &m in counts {
            if m % cfg.group_size != 0 || m >= cfg.n_operators() {
                return Err(TrainError::Config(format!(
                    "mask count {m} must be a multiple of the group size {} below {}",
                    cfg.group_size,
                    cfg.n_operators()
                )));
            }
        }
        Ok(())
    }

    pub fn pick<R: Rng>(&self, rng: &mut R) -> usize {
        let c = self.counts();
        c[rng.random_range(0..c.len())]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainPlan {
    pub stage: Stage,
    pub strategy: MaskStrategy,
    pub epochs: usize,
    pub batch_size: usize,
    pub base_lr: f64,
    pub warmup_epochs: usize,
    pub n_t: u64,
    pub seed: u64,
    pub head: Head,
    /// Draw fresh shot noise every epoch; false keeps one draw per sample.
    pub resample_noise: bool,
    /// Keep encoder and frequency decoder fixed during QST training.
    pub freeze_encoder: bool,
}

impl TrainPlan {
    pub fn new(stage: Stage, strategy: MaskStrategy, n_t: u64) -> Self {
        TrainPlan {
            stage,
            strategy,
            epochs: 50,
            batch_size: 256,
            base_lr: 5e-3,
            warmup_epochs: 4,
            n_t,
            seed: 1,
            head: Head::Nu,
            resample_noise: true,
            freeze_encoder: true,
        }
    }

    pub fn validate(&self, cfg: &ModelConfig) -> Result<()> {
        self.strategy.validate(cfg)?;
        if self.epochs == 0 || self.batch_size == 0 || self.n_t == 0 {
            return Err(TrainError::Config("epochs, batch_size and n_t must be positive".into()));
        }
        if !(self.base_lr > 0.0 && self.base_lr.is_finite()) {
            return Err(TrainError::Config(format!("base_lr {} must be positive", self.base_lr)));
        }
        Ok(())
    }
}

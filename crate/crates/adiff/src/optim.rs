//! Adam and the learning-rate schedule.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::params::ParamStore;

#[derive(Clone, Debug)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    moments: HashMap<String, (Vec<f64>, Vec<f64>)>,
}

impl Default for Adam {
    fn default() -> Self {
        Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8, step: 0, moments: HashMap::new() }
    }
}

impl Adam {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// One bias-corrected update of every trainable parameter holding a gradient.
    pub fn step(&mut self, params: &ParamStore, lr: f64) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (name, p) in params.iter() {
            if !p.requires_grad() {
                continue;
            }
            let Some(g) = p.grad() else { continue };
            let (m, v) = self.moments.entry(name.to_string()).or_insert_with(|| (vec![0.0; g.len()], vec![0.0; g.len()]));
            let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
            p.update_data(|w| {
                for i in 0..w.len() {
                    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                    let mh = m[i] / c1;
                    let vh = v[i] / c2;
                    w[i] -= lr * mh / (vh.sqrt() + eps);
                }
            });
        }
    }
}

/// Linear warmup from 0 to `base`, then cosine decay to 0 at `total`.
pub fn cosine_warmup_lr(step: usize, total: usize, warmup: usize, base: f64) -> f64 {
    if step < warmup {
        return base * step as f64 / warmup as f64;
    }
    let span = total.saturating_sub(warmup);
    if span == 0 {
        return if step >= total && total > 0 { 0.0 } else { base };
    }
    let progress = ((step - warmup) as f64 / span as f64).min(1.0);
    base * 0.5 * (1.0 + (PI * progress).cos())
}

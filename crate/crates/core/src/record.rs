//! Finite-shot frequency simulation and group-level masking.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{QstError, Result};
use crate::measure::{born_probabilities, MeasurementSet};
use crate::seed::rng_from_seed;
use crate::state::DensityMatrix;

const GROUP_SUM_TOL: f64 = 1e-10;

fn check_group_normalized(p: &[f64], group_size: usize) -> Result<()> {
    for (g, chunk) in p.chunks(group_size).enumerate() {
        let s: f64 = chunk.iter().sum();
        if (s - 1.0).abs() > GROUP_SUM_TOL || chunk.iter().any(|&x| x < 0.0 || !x.is_finite()) {
            return Err(QstError::Validation(format!("group {g} probabilities sum to {s}, expected 1")));
        }
    }
    Ok(())
}

/// Draws one multinomial sample of `n_t` shots over `probs`, writing counts / n_t into `out`.
pub fn sample_group<R: Rng>(probs: &[f64], n_t: u64, rng: &mut R, out: &mut [f64]) {
    let mut remaining = n_t;
    let mut mass = 1.0;
    let last = probs.len() - 1;
    for (k, &pk) in probs.iter().enumerate() {
        let count = if k == last || remaining == 0 {
            remaining
        } else {
            let q = if mass > 0.0 { (pk / mass).clamp(0.0, 1.0) } else { 0.0 };
            // Binomial::new only fails for q outside [0, 1]
            Binomial::new(remaining, q).expect("probability in [0,1]").sample(rng)
        };
        out[k] = count as f64 / n_t as f64;
        remaining -= count;
        mass -= pk;
    }
}

/// `f_i = n_i / n_t` with one multinomial draw of `n_t` shots per group.
pub fn sample_frequencies(p: &[f64], ms: &MeasurementSet, n_t: u64, seed: u64) -> Result<Vec<f64>> {
    if n_t == 0 {
        return Err(QstError::Validation("n_t must be at least 1".into()));
    }
    if p.len() != ms.len() {
        return Err(QstError::Shape(format!("p has {} entries, measurement set has {}", p.len(), ms.len())));
    }
    let gs = ms.group_size();
    check_group_normalized(p, gs)?;
    let mut rng = rng_from_seed(seed);
    let mut f = vec![0.0; p.len()];
    for (pg, fg) in p.chunks(gs).zip(f.chunks_mut(gs)) {
        sample_group(pg, n_t, &mut rng, fg);
    }
    Ok(f)
}

/// Chooses `n_masked` distinct groups uniformly at random.
pub fn random_mask<R: Rng>(n_groups: usize, n_masked: usize, rng: &mut R) -> BTreeSet<usize> {
    sample(rng, n_groups, n_masked.min(n_groups)).into_iter().collect()
}

/// Frequencies and operator rows split by a group mask.
#[derive(Clone, Debug)]
pub struct MaskedInput {
    /// Surviving frequencies, original relative order (length M − m).
    pub f_tilde: Vec<f64>,
    /// Rows of O for surviving operators ((M − m) × 2d²).
    pub o_tilde: DMatrix<f64>,
    /// Rows of O for masked operators (m × 2d²), feeding the remedy tokens.
    pub missing_o: DMatrix<f64>,
    pub masked_count: usize,
}

pub fn apply_mask(f: &[f64], ms: &MeasurementSet, masked_groups: &BTreeSet<usize>) -> Result<MaskedInput> {
    if f.len() != ms.len() {
        return Err(QstError::Shape(format!("f has {} entries, measurement set has {}", f.len(), ms.len())));
    }
    if let Some(&g) = masked_groups.iter().find(|&&g| g >= ms.n_groups()) {
        return Err(QstError::Validation(format!("masked group {g} out of range (0..{})", ms.n_groups())));
    }
    if masked_groups.len() >= ms.n_groups() {
        return Err(QstError::EmptyInput("every group is masked".into()));
    }
    let o = ms.flattened_operators();
    let gs = ms.group_size();
    let kept: Vec<usize> = (0..ms.len()).filter(|j| !masked_groups.contains(&(j / gs))).collect();
    let missing: Vec<usize> = (0..ms.len()).filter(|j| masked_groups.contains(&(j / gs))).collect();
    Ok(MaskedInput {
        f_tilde: kept.iter().map(|&j| f[j]).collect(),
        o_tilde: o.select_rows(&kept),
        missing_o: o.select_rows(&missing),
        masked_count: missing.len(),
    })
}

/// Everything known about one simulated state under one measurement setting.
#[derive(Clone, Debug)]
pub struct MeasurementRecord {
    pub p: Vec<f64>,
    pub f: Vec<f64>,
    pub n_t: u64,
    pub mask: BTreeSet<usize>,
    pub nu: Vec<f64>,
    pub mu: Vec<f64>,
}

impl MeasurementRecord {
    pub fn simulate(
        rho: &DensityMatrix,
        ms: &MeasurementSet,
        n_t: u64,
        mask: BTreeSet<usize>,
        properties: crate::props::PropertySet,
        seed: u64,
    ) -> Result<Self> {
        if mask.len() >= ms.n_groups() {
            return Err(QstError::EmptyInput("every group is masked".into()));
        }
        let p = born_probabilities(rho, ms)?;
        let f = sample_frequencies(&p, ms, n_t, seed)?;
        Ok(Self { p, f, n_t, mask, nu: crate::cholesky::cholesky_vector(rho)?, mu: properties.compute(rho)? })
    }

    /// Number of masked operators m.
    pub fn masked_count(&self, group_size: usize) -> usize {
        self.mask.len() * group_size
    }
}

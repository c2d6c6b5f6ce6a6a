//! Held-out evaluation shared by ILR and the classical baselines.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use qst_core::baselines::{lre_with, mle_with, LinearSystem, MleOptions};
use qst_core::dataset::Dataset;
use qst_core::props::PropertySet;
use qst_core::record::random_mask;
use qst_core::seed::{derive_seed, rng_from_seed};
use qst_core::{fidelity, sample_frequencies, vector_to_density, DensityMatrix, MeasurementSet};
use qst_ilr::{Head, IlrModel, MaskedBatch};
use rayon::prelude::*;

use crate::error::{Result, TrainError};

const EVAL_BATCH: usize = 256;

/// Fixed noisy, masked test inputs for one `(N_t, m)` cell.
///
/// Noise seeds ignore `m` and mask seeds ignore `N_t`, so neighbouring grid cells
/// share their randomness and trends are not blurred by resampling.
#[derive(Clone, Debug)]
pub struct TestInputs {
    pub n_t: u64,
    pub m: usize,
    pub freqs: Vec<Vec<f64>>,
    pub masks: Vec<BTreeSet<usize>>,
}

/// Shot count standing for the infinite-shot limit: inputs are the exact probabilities.
pub const NOISELESS: u64 = 0;

pub fn test_inputs(data: &Dataset, ms: &MeasurementSet, n_t: u64, m: usize, seed: u64) -> Result<TestInputs> {
    if !m.is_multiple_of(ms.group_size()) || m >= ms.len() {
        return Err(TrainError::Config(format!("mask count {m} is not a multiple of {} below {}", ms.group_size(), ms.len())));
    }
    let freq_base = derive_seed(seed, "test-freq", n_t);
    let mask_base = derive_seed(seed, "test-mask", 0);
    let mut freqs = Vec::with_capacity(data.len());
    let mut masks = Vec::with_capacity(data.len());
    for (i, s) in data.samples.iter().enumerate() {
        freqs.push(match n_t {
            NOISELESS => s.p.clone(),
            _ => sample_frequencies(&s.p, ms, n_t, derive_seed(freq_base, "sample", i as u64))?,
        });
        let mut rng = rng_from_seed(derive_seed(mask_base, "sample", i as u64));
        masks.push(random_mask(ms.n_groups(), m / ms.group_size(), &mut rng));
    }
    Ok(TestInputs { n_t, m, freqs, masks })
}

/// Runs the model over all test inputs in batches.
pub fn predict(model: &IlrModel, inputs: &TestInputs, head: Option<Head>) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(inputs.freqs.len());
    for start in (0..inputs.freqs.len()).step_by(EVAL_BATCH) {
        let end = (start + EVAL_BATCH).min(inputs.freqs.len());
        let f: Vec<&[f64]> = inputs.freqs[start..end].iter().map(Vec::as_slice).collect();
        let mk: Vec<&BTreeSet<usize>> = inputs.masks[start..end].iter().collect();
        let batch = MaskedBatch::new(&model.config, &f, &mk)?;
        out.extend(model.predict(&batch, head)?);
    }
    Ok(out)
}

pub enum Method<'a> {
    Ilr(&'a IlrModel),
    Lre,
    Mle(MleOptions),
}

impl Method<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Ilr(_) => "ILR",
            Method::Lre => "LRE",
            Method::Mle(_) => "MLE",
        }
    }
}

/// Reconstructed density matrices, one per test sample.
pub fn reconstruct(method: &Method<'_>, ms: &MeasurementSet, inputs: &TestInputs) -> Result<Vec<DensityMatrix>> {
    match method {
        Method::Ilr(model) => predict(model, inputs, Some(Head::Nu))?
            .iter()
            .map(|nu| vector_to_density(nu).map_err(TrainError::from))
            .collect(),
        Method::Lre | Method::Mle(_) => {
            let sys = LinearSystem::new(ms);
            let mle = match method {
                Method::Mle(opts) => Some(*opts),
                _ => None,
            };
            inputs
                .freqs
                .par_iter()
                .zip(inputs.masks.par_iter())
                .map(|(f, mask)| {
                    Ok(match mle {
                        Some(opts) => mle_with(&sys, f, mask, opts)?.state,
                        None => lre_with(&sys, f, mask)?.state,
                    })
                })
                .collect()
        }
    }
}

/// Mean, spread and standard error of a sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub variance: f64,
    pub stderr: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Summary {
        let n = xs.len().max(1) as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let variance = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let stderr = if xs.len() > 1 { (variance * n / (n - 1.0) / n).sqrt() } else { 0.0 };
        let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Summary { mean, min, max, variance, stderr }
    }
}

#[derive(Clone, Debug)]
pub struct StateReport {
    pub fidelities: Vec<f64>,
    pub fidelity: Summary,
    pub infidelity: Summary,
    pub log_infidelity: Summary,
}

pub fn state_report(data: &Dataset, estimates: &[DensityMatrix]) -> Result<StateReport> {
    if estimates.len() != data.len() {
        return Err(TrainError::Mismatch(format!("{} estimates for {} samples", estimates.len(), data.len())));
    }
    let fidelities = data
        .samples
        .par_iter()
        .zip(estimates.par_iter())
        .map(|(s, est)| Ok(fidelity(&s.state()?, est)?))
        .collect::<Result<Vec<f64>>>()?;
    let infid: Vec<f64> = fidelities.iter().map(|f| 1.0 - f).collect();
    let logs: Vec<f64> = infid.iter().map(|x| x.max(qst_core::metrics::INFIDELITY_FLOOR).log10()).collect();
    Ok(StateReport { fidelity: Summary::of(&fidelities), infidelity: Summary::of(&infid), log_infidelity: Summary::of(&logs), fidelities })
}

/// Squared-error summary per property.
pub fn property_errors(set: PropertySet, truth: &[Vec<f64>], pred: &[Vec<f64>]) -> Result<Vec<(&'static str, Summary)>> {
    if truth.len() != pred.len() || truth.iter().zip(pred).any(|(t, p)| t.len() != set.len() || p.len() != set.len()) {
        return Err(TrainError::Mismatch("property vectors do not align".into()));
    }
    Ok(set
        .properties()
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let se: Vec<f64> = truth.iter().zip(pred).map(|(t, q)| (t[j] - q[j]).powi(2)).collect();
            (p.name(), Summary::of(&se))
        })
        .collect())
}

/// Properties computed from reconstructed states (the indirect path).
pub fn properties_of_states(set: PropertySet, states: &[DensityMatrix]) -> Result<Vec<Vec<f64>>> {
    states.par_iter().map(|s| Ok(set.compute(s)?)).collect()
}

/// One aggregated result line: `method,N_t,m,metric,mean,stderr`.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricRow {
    pub method: String,
    pub n_t: u64,
    pub m: usize,
    pub metric: String,
    pub mean: f64,
    pub stderr: f64,
}

pub const METRICS_HEADER: &str = "method,N_t,m,metric,mean,stderr";

/// CSV sorted by method, N_t, m, then metric.
pub fn metrics_csv(rows: &[MetricRow]) -> String {
    let mut rows = rows.to_vec();
    rows.sort_by(|a, b| (&a.method, a.n_t, a.m, &a.metric).cmp(&(&b.method, b.n_t, b.m, &b.metric)));
    let mut s = format!("{METRICS_HEADER}\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{:e},{:e}", r.method, r.n_t, r.m, r.metric, r.mean, r.stderr);
    }
    s
}

pub fn parse_metrics_csv(text: &str) -> Result<Vec<MetricRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(METRICS_HEADER) {
        return Err(TrainError::Mismatch(format!("metrics CSV must start with '{METRICS_HEADER}'")));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            let bad = || TrainError::Mismatch(format!("malformed metrics line '{l}'"));
            if c.len() != 6 {
                return Err(bad());
            }
            Ok(MetricRow {
                method: c[0].to_string(),
                n_t: c[1].parse().map_err(|_| bad())?,
                m: c[2].parse().map_err(|_| bad())?,
                metric: c[3].to_string(),
                mean: c[4].parse().map_err(|_| bad())?,
                stderr: c[5].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

/// Rows for a state-reconstruction evaluation.
pub fn state_rows(method: &str, n_t: u64, m: usize, r: &StateReport) -> Vec<MetricRow> {
    let row = |metric: &str, mean: f64, stderr: f64| MetricRow { method: method.into(), n_t, m, metric: metric.into(), mean, stderr };
    vec![
        row("fidelity", r.fidelity.mean, r.fidelity.stderr),
        row("fidelity_min", r.fidelity.min, 0.0),
        row("fidelity_max", r.fidelity.max, 0.0),
        row("fidelity_var", r.fidelity.variance, 0.0),
        row("infidelity", r.infidelity.mean, r.infidelity.stderr),
        row("log_infidelity", r.log_infidelity.mean, r.log_infidelity.stderr),
    ]
}

pub fn property_rows(method: &str, n_t: u64, m: usize, errs: &[(&str, Summary)]) -> Vec<MetricRow> {
    errs.iter()
        .map(|(name, s)| MetricRow { method: method.into(), n_t, m, metric: format!("mse_{name}"), mean: s.mean, stderr: s.stderr })
        .collect()
}

/// Per-sample fidelities as CSV.
pub fn per_sample_csv(r: &StateReport) -> String {
    let mut s = String::from("index,fidelity,infidelity\n");
    for (i, f) in r.fidelities.iter().enumerate() {
        let _ = writeln!(s, "{i},{f:e},{:e}", 1.0 - f);
    }
    s
}

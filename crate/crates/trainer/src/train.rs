//! Pre-training (masked frequency reconstruction) and QST fine-tuning loops.

use std::collections::BTreeSet;

use qst_adiff::{cosine_warmup_lr, Adam, Tensor};
use qst_core::dataset::Dataset;
use qst_core::record::random_mask;
use qst_core::seed::{derive_seed, rng_from_seed};
use qst_core::{sample_frequencies, MeasurementSet};
use qst_ilr::{Head, IlrModel, MaskedBatch, ModelConfig, ENCODER, FREQ_DECODER, MU_DECODER, NU_DECODER};
use rand::seq::SliceRandom;

use crate::error::{Result, TrainError};
use crate::plan::{Stage, TrainPlan};

/// What the network is asked to output.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    Probabilities,
    State(Head),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossRecord {
    pub epoch: usize,
    pub split: &'static str,
    pub loss: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct History {
    pub records: Vec<LossRecord>,
}

impl History {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,split,loss\n");
        for r in &self.records {
            s.push_str(&format!("{},{},{:e}\n", r.epoch, r.split, r.loss));
        }
        s
    }

    pub fn last_loss(&self) -> Option<f64> {
        self.records.last().map(|r| r.loss)
    }
}

pub fn check_dataset(cfg: &ModelConfig, data: &Dataset) -> Result<()> {
    if data.n_qubits != cfg.n_qubits || data.scheme != cfg.scheme {
        return Err(TrainError::Mismatch(format!(
            "dataset is {} qubits / {} scheme, model is {} qubits / {} scheme",
            data.n_qubits,
            data.scheme.name(),
            cfg.n_qubits,
            cfg.scheme.name()
        )));
    }
    if data.n_ops != cfg.n_operators() {
        return Err(TrainError::Mismatch(format!("dataset has {} operators, model expects {}", data.n_ops, cfg.n_operators())));
    }
    if data.k != cfg.n_props {
        return Err(TrainError::Mismatch(format!("dataset has {} properties, model expects {}", data.k, cfg.n_props)));
    }
    if data.is_empty() {
        return Err(TrainError::Mismatch("dataset is empty".into()));
    }
    Ok(())
}

/// Noisy masked inputs plus regression targets for one batch.
pub struct BatchData {
    pub input: MaskedBatch,
    pub target: Vec<f64>,
}

/// Draws shot noise and masks for `indices`; seeds depend only on the sample index and the given bases.
#[allow(clippy::too_many_arguments)]
pub fn assemble_batch(
    ms: &MeasurementSet,
    cfg: &ModelConfig,
    data: &Dataset,
    indices: &[usize],
    m_ops: usize,
    n_t: u64,
    target: Target,
    freq_seed: u64,
    mask_seed: u64,
) -> Result<BatchData> {
    let mut freqs = Vec::with_capacity(indices.len());
    let mut masks = Vec::with_capacity(indices.len());
    let mut tgt = Vec::new();
    for &i in indices {
        let s = &data.samples[i];
        freqs.push(sample_frequencies(&s.p, ms, n_t, derive_seed(freq_seed, "sample", i as u64))?);
        let mut rng = rng_from_seed(derive_seed(mask_seed, "sample", i as u64));
        masks.push(random_mask(cfg.total_groups, m_ops / cfg.group_size, &mut rng));
        tgt.extend_from_slice(match target {
            Target::Probabilities => &s.p,
            Target::State(Head::Nu) => &s.nu,
            Target::State(Head::Mu) => &s.mu,
        });
    }
    let f: Vec<&[f64]> = freqs.iter().map(Vec::as_slice).collect();
    let mk: Vec<&BTreeSet<usize>> = masks.iter().collect();
    Ok(BatchData { input: MaskedBatch::new(cfg, &f, &mk)?, target: tgt })
}

fn forward(model: &IlrModel, batch: &MaskedBatch, target: Target) -> Result<Tensor> {
    let latent = model.latent(batch)?;
    Ok(match target {
        Target::Probabilities => model.decode_frequencies(&latent)?,
        Target::State(h) => model.decode_state(&latent, h)?,
    })
}

fn mse_loss(pred: &Tensor, target: Vec<f64>) -> Result<Tensor> {
    let t = Tensor::new(pred.shape(), target)?;
    let diff = pred.sub(&t)?;
    Ok(diff.mul(&diff)?.mean())
}

fn set_trainable(model: &IlrModel, plan: &TrainPlan) {
    let ps = &model.params;
    match plan.stage {
        Stage::Pretrain => {
            ps.set_trainable(ENCODER, true);
            ps.set_trainable(FREQ_DECODER, true);
            ps.set_trainable(NU_DECODER, false);
            ps.set_trainable(MU_DECODER, false);
        }
        Stage::Qst => {
            ps.set_trainable(ENCODER, !plan.freeze_encoder);
            ps.set_trainable(FREQ_DECODER, false);
            ps.set_trainable(NU_DECODER, plan.head == Head::Nu);
            ps.set_trainable(MU_DECODER, plan.head == Head::Mu);
        }
    }
}

fn run(model: &IlrModel, data: &Dataset, plan: &TrainPlan, target: Target) -> Result<History> {
    let cfg = &model.config;
    check_dataset(cfg, data)?;
    plan.validate(cfg)?;
    let ms = MeasurementSet::new(cfg.scheme, cfg.n_qubits)?;
    set_trainable(model, plan);

    let n = data.len();
    let per_epoch = n.div_ceil(plan.batch_size);
    let total = plan.epochs * per_epoch;
    let warmup = plan.warmup_epochs * per_epoch;
    let mut adam = Adam::new();
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = History::default();
    let mut step = 0usize;

    for epoch in 0..plan.epochs {
        order.shuffle(&mut rng_from_seed(derive_seed(plan.seed, "shuffle", epoch as u64)));
        let noise_epoch = if plan.resample_noise { epoch as u64 } else { 0 };
        let freq_seed = derive_seed(plan.seed, "train-freq", noise_epoch);
        let mask_seed = derive_seed(plan.seed, "train-mask", epoch as u64);
        let mut sum = 0.0;
        for chunk in order.chunks(plan.batch_size) {
            let m = plan.strategy.pick(&mut rng_from_seed(derive_seed(plan.seed, "mask-count", step as u64)));
            let batch = assemble_batch(&ms, cfg, data, chunk, m, plan.n_t, target, freq_seed, mask_seed)?;
            model.params.zero_grad();
            let loss = mse_loss(&forward(model, &batch.input, target)?, batch.target)?;
            let value = loss.item();
            if !value.is_finite() {
                return Err(TrainError::NonFinite { epoch, step, loss: value });
            }
            loss.backward()?;
            adam.step(&model.params, cosine_warmup_lr(step, total, warmup, plan.base_lr));
            sum += value * chunk.len() as f64;
            step += 1;
        }
        history.records.push(LossRecord { epoch, split: "train", loss: sum / n as f64 });
    }
    model.params.zero_grad();
    Ok(history)
}

/// Trains encoder and frequency decoder to recover `p` from masked noisy frequencies.
pub fn pretrain(model: &IlrModel, data: &Dataset, plan: &TrainPlan) -> Result<History> {
    if plan.stage != Stage::Pretrain {
        return Err(TrainError::Config("pretrain needs a pre-training plan".into()));
    }
    run(model, data, plan, Target::Probabilities)
}

/// Trains the state decoder selected by `plan.head`; the encoder stays frozen unless
/// `plan.freeze_encoder` is false (training from scratch).
pub fn finetune_qst(model: &IlrModel, data: &Dataset, plan: &TrainPlan) -> Result<History> {
    if plan.stage != Stage::Qst {
        return Err(TrainError::Config("finetune_qst needs a QST plan".into()));
    }
    run(model, data, plan, Target::State(plan.head))
}

/// Loads the pre-trained model that QST fine-tuning starts from.
pub fn load_pretrained(path: &std::path::Path) -> Result<IlrModel> {
    if !path.exists() {
        return Err(TrainError::Config(format!("missing pre-trained encoder checkpoint {}", path.display())));
    }
    Ok(qst_ilr::checkpoint::load(path)?)
}

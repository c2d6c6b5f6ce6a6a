//! S2S / U2S / U2U sweeps over an `(N_t, m)` grid.

use qst_core::dataset::Dataset;
use qst_core::MeasurementSet;
use qst_ilr::{checkpoint, IlrModel, ModelConfig};

use crate::error::{Result, TrainError};
use crate::eval::{reconstruct, state_report, state_rows, test_inputs, Method, MetricRow};
use crate::plan::{MaskStrategy, Stage, TrainPlan};
use crate::train::{finetune_qst, pretrain};

/// Pre-training / fine-tuning mask strategy pair (S = Separate, U = Unified).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Combo {
    S2S,
    U2S,
    U2U,
}

impl Combo {
    pub fn name(self) -> &'static str {
        match self {
            Combo::S2S => "S2S",
            Combo::U2S => "U2S",
            Combo::U2U => "U2U",
        }
    }
}

impl std::str::FromStr for Combo {
    type Err = TrainError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "S2S" => Ok(Combo::S2S),
            "U2S" => Ok(Combo::U2S),
            "U2U" => Ok(Combo::U2U),
            _ => Err(TrainError::Config(format!("unknown strategy '{s}' (expected S2S, U2S or U2U)"))),
        }
    }
}

pub struct SweepSetup<'a> {
    pub config: ModelConfig,
    pub train: &'a Dataset,
    pub test: &'a Dataset,
    pub pretrain_epochs: usize,
    pub finetune_epochs: usize,
    pub batch_size: usize,
    pub warmup_epochs: usize,
    pub seed: u64,
    pub unified: MaskStrategy,
}

#[derive(Debug)]
pub struct SweepResult {
    pub rows: Vec<MetricRow>,
    pub pretrain_runs: usize,
}

impl SweepSetup<'_> {
    fn plan(&self, stage: Stage, strategy: MaskStrategy, n_t: u64) -> TrainPlan {
        TrainPlan {
            epochs: if stage == Stage::Pretrain { self.pretrain_epochs } else { self.finetune_epochs },
            batch_size: self.batch_size,
            warmup_epochs: self.warmup_epochs,
            seed: self.seed,
            ..TrainPlan::new(stage, strategy, n_t)
        }
    }

    fn pretrained(&self, strategy: MaskStrategy, n_t: u64) -> Result<Vec<u8>> {
        let model = IlrModel::new(self.config.clone(), self.seed)?;
        pretrain(&model, self.train, &self.plan(Stage::Pretrain, strategy, n_t))?;
        Ok(checkpoint::to_bytes(&model))
    }

    fn finetuned(&self, ckpt: &[u8], strategy: MaskStrategy, n_t: u64) -> Result<IlrModel> {
        let model = checkpoint::from_bytes(ckpt)?;
        finetune_qst(&model, self.train, &self.plan(Stage::Qst, strategy, n_t))?;
        Ok(model)
    }

    fn evaluate(&self, combo: Combo, model: &IlrModel, ms: &MeasurementSet, n_t: u64, m: usize) -> Result<Vec<MetricRow>> {
        let inputs = test_inputs(self.test, ms, n_t, m, self.seed)?;
        let est = reconstruct(&Method::Ilr(model), ms, &inputs)?;
        Ok(state_rows(combo.name(), n_t, m, &state_report(self.test, &est)?))
    }
}

/// Trains and evaluates one strategy over every `(N_t, m)` cell.
pub fn run_strategy(combo: Combo, setup: &SweepSetup<'_>, n_ts: &[u64], masks: &[usize]) -> Result<SweepResult> {
    let ms = MeasurementSet::new(setup.config.scheme, setup.config.n_qubits)?;
    let mut rows = Vec::new();
    let mut pretrain_runs = 0;
    for &n_t in n_ts {
        match combo {
            Combo::S2S => {
                for &m in masks {
                    let ckpt = setup.pretrained(MaskStrategy::Separate(m), n_t)?;
                    pretrain_runs += 1;
                    let model = setup.finetuned(&ckpt, MaskStrategy::Separate(m), n_t)?;
                    rows.extend(setup.evaluate(combo, &model, &ms, n_t, m)?);
                }
            }
            Combo::U2S => {
                let ckpt = setup.pretrained(setup.unified.clone(), n_t)?;
                pretrain_runs += 1;
                for &m in masks {
                    let model = setup.finetuned(&ckpt, MaskStrategy::Separate(m), n_t)?;
                    rows.extend(setup.evaluate(combo, &model, &ms, n_t, m)?);
                }
            }
            Combo::U2U => {
                let ckpt = setup.pretrained(setup.unified.clone(), n_t)?;
                pretrain_runs += 1;
                let model = setup.finetuned(&ckpt, setup.unified.clone(), n_t)?;
                for &m in masks {
                    rows.extend(setup.evaluate(combo, &model, &ms, n_t, m)?);
                }
            }
        }
    }
    if combo != Combo::S2S && pretrain_runs != n_ts.len() {
        return Err(TrainError::Config(format!("{} pre-training runs for {} shot settings", pretrain_runs, n_ts.len())));
    }
    Ok(SweepResult { rows, pretrain_runs })
}

//! Training and evaluation of ILR models: masked pre-training, QST
//! fine-tuning with a frozen encoder, strategy sweeps and metric reports.

pub mod error;
pub mod eval;
pub mod plan;
pub mod rundir;
pub mod strategy;
pub mod train;

pub use error::{Result, TrainError};
pub use eval::{MetricRow, Summary, TestInputs};
pub use plan::{MaskStrategy, Stage, TrainPlan};
pub use strategy::{run_strategy, Combo, SweepSetup};
pub use train::{finetune_qst, load_pretrained, pretrain, History};

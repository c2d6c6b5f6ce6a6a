//! `qst`: generate tomography datasets, train ILR models, run baselines and aggregate reports.

mod commands;
mod error;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::{CliError, Result};

#[derive(Parser)]
#[command(name = "qst", version, about = "Quantum state tomography workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample random states and write a QSTD dataset.
    GenData(GenDataArgs),
    /// Masked pre-training of encoder and frequency decoder.
    Pretrain(PretrainArgs),
    /// Train a state decoder on top of a (frozen) pre-trained encoder.
    TrainQst(QstArgs),
    /// Evaluate LRE or MLE on the held-out split.
    Baseline(BaselineArgs),
    /// Evaluate a trained ILR checkpoint on the held-out split.
    Eval(EvalArgs),
    /// Merge metrics CSVs from run directories.
    Report(ReportArgs),
}

fn flag<T: ToString>(v: &Option<T>) -> Option<String> {
    v.as_ref().map(ToString::to_string)
}

fn switch(on: bool, value: &str) -> Option<String> {
    on.then(|| value.to_string())
}

#[derive(Args)]
struct GenDataArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    qubits: Option<usize>,
    /// pure | mixed | ghz | w
    #[arg(long)]
    family: Option<String>,
    /// cube | nn
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overwrite an existing output file.
    #[arg(long)]
    force: bool,
}

impl GenDataArgs {
    fn flags(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("qubits", flag(&self.qubits)),
            ("family", flag(&self.family)),
            ("scheme", flag(&self.scheme)),
            ("count", flag(&self.count)),
            ("seed", flag(&self.seed)),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
            ("force", switch(self.force, "true")),
        ]
    }
}

/// Options shared by the training subcommands.
#[derive(Args)]
struct TrainCommon {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    run: Option<PathBuf>,
    #[arg(long = "n-t")]
    n_t: Option<u64>,
    /// separate | unified
    #[arg(long)]
    strategy: Option<String>,
    /// Masked operator count for the separate strategy.
    #[arg(long)]
    mask: Option<usize>,
    /// Comma-separated mask counts for the unified strategy.
    #[arg(long)]
    masks: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long = "batch-size")]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Warmup length in epochs.
    #[arg(long)]
    warmup: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Train fraction of the dataset.
    #[arg(long)]
    split: Option<f64>,
    /// desk | full
    #[arg(long)]
    model: Option<String>,
    /// Ablation: drop the operator embedding.
    #[arg(long = "no-operator-embedding")]
    no_operator_embedding: bool,
    /// Draw shot noise once per sample instead of every epoch.
    #[arg(long = "fixed-noise")]
    fixed_noise: bool,
}

impl TrainCommon {
    fn flags(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("data", self.data.as_ref().map(|p| p.display().to_string())),
            ("run", self.run.as_ref().map(|p| p.display().to_string())),
            ("n_t", flag(&self.n_t)),
            ("strategy", flag(&self.strategy)),
            ("mask", flag(&self.mask)),
            ("masks", flag(&self.masks)),
            ("epochs", flag(&self.epochs)),
            ("batch_size", flag(&self.batch_size)),
            ("lr", flag(&self.lr)),
            ("warmup", flag(&self.warmup)),
            ("seed", flag(&self.seed)),
            ("split", flag(&self.split)),
            ("model", flag(&self.model)),
            ("operator_embedding", switch(self.no_operator_embedding, "false")),
            ("resample_noise", switch(self.fixed_noise, "false")),
        ]
    }
}

#[derive(Args)]
struct PretrainArgs {
    #[command(flatten)]
    common: TrainCommon,
}

#[derive(Args)]
struct QstArgs {
    #[command(flatten)]
    common: TrainCommon,
    /// Pre-trained checkpoint (default: <run>/pretrain.qstc).
    #[arg(long)]
    pretrained: Option<PathBuf>,
    /// nu | mu
    #[arg(long)]
    head: Option<String>,
    /// Train encoder and decoder from scratch, without pre-training.
    #[arg(long)]
    scratch: bool,
}

impl QstArgs {
    fn flags(&self) -> Vec<(&'static str, Option<String>)> {
        let mut f = self.common.flags();
        f.push(("pretrained", self.pretrained.as_ref().map(|p| p.display().to_string())));
        f.push(("head", flag(&self.head)));
        f.push(("scratch", switch(self.scratch, "true")));
        f
    }
}

/// Options shared by the evaluation subcommands.
#[derive(Args)]
struct EvalCommon {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    run: Option<PathBuf>,
    /// Comma-separated shot counts; 0 evaluates on exact probabilities.
    #[arg(long = "n-t")]
    n_t: Option<String>,
    /// Comma-separated mask counts.
    #[arg(long)]
    masks: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    split: Option<f64>,
    /// Also report property errors.
    #[arg(long)]
    properties: bool,
}

impl EvalCommon {
    fn flags(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("data", self.data.as_ref().map(|p| p.display().to_string())),
            ("run", self.run.as_ref().map(|p| p.display().to_string())),
            ("n_t", flag(&self.n_t)),
            ("masks", flag(&self.masks)),
            ("seed", flag(&self.seed)),
            ("split", flag(&self.split)),
            ("properties", switch(self.properties, "true")),
        ]
    }
}

#[derive(Args)]
struct BaselineArgs {
    #[command(flatten)]
    common: EvalCommon,
    /// lre | mle
    #[arg(long)]
    method: Option<String>,
    #[arg(long = "mle-iters")]
    mle_iters: Option<usize>,
    #[arg(long = "mle-tol")]
    mle_tol: Option<f64>,
}

impl BaselineArgs {
    fn flags(&self) -> Vec<(&'static str, Option<String>)> {
        let mut f = self.common.flags();
        f.push(("method", flag(&self.method)));
        f.push(("mle_iters", flag(&self.mle_iters)));
        f.push(("mle_tol", flag(&self.mle_tol)));
        f
    }
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: EvalCommon,
    /// Checkpoint to evaluate (default: <run>/qst.qstc).
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Method name used in the metrics file.
    #[arg(long)]
    label: Option<String>,
}

impl EvalArgs {
    fn flags(&self) -> Vec<(&'static str, Option<String>)> {
        let mut f = self.common.flags();
        f.push(("checkpoint", self.checkpoint.as_ref().map(|p| p.display().to_string())));
        f.push(("label", flag(&self.label)));
        f
    }
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated run directories.
    #[arg(long)]
    runs: Option<String>,
    /// Output CSV path; `-` writes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn configure_threads() -> Result<()> {
    if let Ok(raw) = std::env::var("QST_THREADS") {
        let n: usize = raw.parse().map_err(|_| CliError::Usage(format!("QST_THREADS must be a positive integer, got '{raw}'")))?;
        if n == 0 {
            return Err(CliError::Usage("QST_THREADS must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot configure thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::GenData(a) => commands::gen_data(a.config.as_deref(), &a.flags()),
        Command::Pretrain(a) => commands::pretrain(a.common.config.as_deref(), &a.common.flags()),
        Command::TrainQst(a) => commands::train_qst(a.common.config.as_deref(), &a.flags()),
        Command::Baseline(a) => commands::baseline(a.common.config.as_deref(), &a.flags()),
        Command::Eval(a) => commands::eval(a.common.config.as_deref(), &a.flags()),
        Command::Report(a) => {
            let flags = vec![("runs", a.runs.clone()), ("out", a.out.as_ref().map(|p| p.display().to_string()))];
            commands::report(a.config.as_deref(), &flags)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

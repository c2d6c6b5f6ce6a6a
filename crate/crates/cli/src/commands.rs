//! Subcommand implementations operating on resolved settings.

use std::path::{Path, PathBuf};

use qst_core::baselines::MleOptions;
use qst_core::dataset::{generate, metadata_path, metadata_text, Dataset, Family, GenerateSpec};
use qst_core::io::atomic_write;
use qst_core::props::PropertySet;
use qst_core::{MeasurementSet, Scheme};
use qst_ilr::{checkpoint, Head, IlrModel, ModelConfig};
use qst_trainer::eval::{
    metrics_csv, parse_metrics_csv, per_sample_csv, predict, properties_of_states, property_errors, property_rows, reconstruct,
    state_report, state_rows, test_inputs, Method,
};
use qst_trainer::rundir::{config_file, RunDir};
use qst_trainer::{finetune_qst, load_pretrained, pretrain as run_pretrain, MaskStrategy, MetricRow, Stage, Summary, TrainPlan};

use crate::error::{CliError, Result};
use crate::settings::Settings;

type Flags = [(&'static str, Option<String>)];

const VERSION: &str = env!("CARGO_PKG_VERSION");

const GEN_DEFAULTS: &[(&str, &str)] =
    &[("qubits", "2"), ("family", "pure"), ("scheme", "cube"), ("count", "10000"), ("seed", "1"), ("out", ""), ("force", "false")];

const TRAIN_DEFAULTS: &[(&str, &str)] = &[
    ("code_version", VERSION),
    ("data", ""),
    ("run", ""),
    ("n_t", "100"),
    ("strategy", "unified"),
    ("mask", "0"),
    ("masks", ""),
    ("epochs", "50"),
    ("batch_size", "256"),
    ("lr", "0.005"),
    ("warmup", "4"),
    ("seed", "1"),
    ("split", "0.9"),
    ("model", "desk"),
    ("operator_embedding", "true"),
    ("resample_noise", "true"),
];

// fine-tuning defaults to a single fixed mask count
const QST_EXTRA: &[(&str, &str)] = &[("pretrained", ""), ("head", "nu"), ("scratch", "false"), ("strategy", "separate")];

const EVAL_DEFAULTS: &[(&str, &str)] =
    &[("code_version", VERSION), ("data", ""), ("run", ""), ("n_t", "100"), ("masks", "0"), ("seed", "1"), ("split", "0.9"), ("properties", "false")];

const BASELINE_EXTRA: &[(&str, &str)] = &[("method", "lre"), ("mle_iters", "5000"), ("mle_tol", "1e-12")];

const ILR_EVAL_EXTRA: &[(&str, &str)] = &[("checkpoint", ""), ("label", "ILR")];

/// `base` with the entries of `extra` added or overriding.
fn with(base: &[(&'static str, &'static str)], extra: &[(&'static str, &'static str)]) -> Vec<(&'static str, &'static str)> {
    let mut out: Vec<_> = base.iter().filter(|(k, _)| !extra.iter().any(|(e, _)| e == k)).copied().collect();
    out.extend_from_slice(extra);
    out
}

fn parse_enum<T: std::str::FromStr>(s: &Settings, key: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    s.get(key)
}

pub fn gen_data(config: Option<&Path>, flags: &Flags) -> Result<()> {
    let s = Settings::resolve(GEN_DEFAULTS, config, flags)?;
    let out = PathBuf::from(s.required("out")?);
    if out.exists() && !s.get::<bool>("force")? {
        return Err(CliError::Usage(format!("{} already exists (use --force to overwrite)", out.display())));
    }
    let family: Family = parse_enum(&s, "family")?;
    let scheme: Scheme = parse_enum(&s, "scheme")?;
    let spec = GenerateSpec { n_qubits: s.get("qubits")?, family, scheme, count: s.get("count")?, seed: s.get("seed")? };
    if spec.count == 0 {
        return Err(CliError::Usage("count must be positive".into()));
    }
    let data = generate(&spec)?;
    data.save(&out)?;
    atomic_write(&metadata_path(&out), metadata_text(&spec).as_bytes())?;

    println!("wrote {} {} states ({} qubits, {} scheme) to {}", data.len(), family.name(), data.n_qubits, scheme.name(), out.display());
    let set = family.property_set();
    for (j, p) in set.properties().iter().enumerate() {
        let col: Vec<f64> = data.samples.iter().map(|x| x.mu[j]).collect();
        let sm = Summary::of(&col);
        println!("  {:<22} mean {:.6}  min {:.6}  max {:.6}", p.name(), sm.mean, sm.min, sm.max);
    }
    if set == PropertySet::Pure {
        let purity: Vec<f64> = data.samples.iter().map(|x| x.state().map(|r| qst_core::props::purity(&r))).collect::<qst_core::Result<_>>()?;
        println!("  {:<22} mean {:.6}", "purity", Summary::of(&purity).mean);
    }
    Ok(())
}

fn load_dataset(s: &Settings) -> Result<(Dataset, Dataset)> {
    let path = PathBuf::from(s.required("data")?);
    if !path.exists() {
        return Err(CliError::Data(format!("expected dataset file {} (create it with `qst gen-data`)", path.display())));
    }
    let data = Dataset::load(&path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let ratio: f64 = s.get("split")?;
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(CliError::Usage(format!("split must lie in (0, 1), got {ratio}")));
    }
    let (train, test) = data.split(ratio);
    if train.is_empty() || test.is_empty() {
        return Err(CliError::Data(format!("split {ratio} of {} samples leaves an empty part", data.len())));
    }
    Ok((train, test))
}

fn model_config(s: &Settings, ms: &MeasurementSet, k: usize) -> Result<ModelConfig> {
    let base = match s.raw("model") {
        "desk" => ModelConfig::desk(ms, k),
        "full" => ModelConfig::full(ms, k),
        other => return Err(CliError::Usage(format!("unknown model size '{other}' (expected desk or full)"))),
    };
    Ok(ModelConfig { operator_embedding: s.get("operator_embedding")?, ..base })
}

fn strategy(s: &Settings, cfg: &ModelConfig) -> Result<MaskStrategy> {
    match s.raw("strategy") {
        "separate" => Ok(MaskStrategy::Separate(s.get("mask")?)),
        "unified" => {
            let masks: Vec<usize> = s.list("masks")?;
            Ok(if masks.is_empty() { MaskStrategy::default_unified(cfg) } else { MaskStrategy::Unified(masks) })
        }
        other => Err(CliError::Usage(format!("unknown strategy '{other}' (expected separate or unified)"))),
    }
}

fn plan(s: &Settings, stage: Stage, strat: MaskStrategy) -> Result<TrainPlan> {
    Ok(TrainPlan {
        epochs: s.get("epochs")?,
        batch_size: s.get("batch_size")?,
        base_lr: s.get("lr")?,
        warmup_epochs: s.get("warmup")?,
        seed: s.get("seed")?,
        resample_noise: s.get("resample_noise")?,
        ..TrainPlan::new(stage, strat, s.get("n_t")?)
    })
}

/// Returns true when `stage` already completed with identical settings.
fn up_to_date(run: &RunDir, stage: &str, s: &Settings, artifact: &str) -> Result<bool> {
    if !run.exists(&config_file(stage)) {
        return Ok(false);
    }
    let previous = run.read_text(&config_file(stage))?;
    if previous != s.dump() {
        return Err(CliError::Usage(format!(
            "{} already holds a different {stage} configuration; use a new run directory",
            run.root().display()
        )));
    }
    Ok(run.exists(artifact))
}

fn open_run(s: &Settings) -> Result<RunDir> {
    Ok(RunDir::create(Path::new(s.required("run")?))?)
}

pub fn pretrain(config: Option<&Path>, flags: &Flags) -> Result<()> {
    let s = Settings::resolve(TRAIN_DEFAULTS, config, flags)?;
    let run = open_run(&s)?;
    if up_to_date(&run, "pretrain", &s, "pretrain.qstc")? {
        println!("pretrain: {} is up to date", run.path("pretrain.qstc").display());
        return Ok(());
    }
    let (train, test) = load_dataset(&s)?;
    let ms = train.measurement_set()?;
    let cfg = model_config(&s, &ms, train.k)?;
    let strat = strategy(&s, &cfg)?;
    let p = plan(&s, Stage::Pretrain, strat.clone())?;
    run.write_config("pretrain", &s.dump())?;
    let model = IlrModel::new(cfg, p.seed)?;
    let history = run_pretrain(&model, &train, &p)?;
    run.write_history("pretrain", &history)?;
    checkpoint::save(&model, &run.path("pretrain.qstc"))?;

    // held-out reconstruction error of p against the raw-frequency error
    let mut rows = Vec::new();
    for &m in strat.counts() {
        let inputs = test_inputs(&test, &ms, p.n_t, m, p.seed)?;
        let pred = predict(&model, &inputs, None)?;
        let (mut e_model, mut e_raw) = (Vec::new(), Vec::new());
        for ((smp, fp), f) in test.samples.iter().zip(&pred).zip(&inputs.freqs) {
            e_model.push(qst_core::mse(fp, &smp.p)?);
            e_raw.push(qst_core::mse(f, &smp.p)?);
        }
        let (a, b) = (Summary::of(&e_model), Summary::of(&e_raw));
        println!("pretrain: N_t={} m={m}: MSE(p_hat,p)={:.4e}  MSE(f,p)={:.4e}", p.n_t, a.mean, b.mean);
        let row = |metric: &str, sm: Summary| MetricRow { method: "ILR".into(), n_t: p.n_t, m, metric: metric.into(), mean: sm.mean, stderr: sm.stderr };
        rows.push(row("mse_p", a));
        rows.push(row("mse_f_raw", b));
    }
    run.write_metrics("pretrain", &rows)?;
    println!("pretrain: final train loss {:.4e}", history.last_loss().unwrap_or(f64::NAN));
    Ok(())
}

pub fn train_qst(config: Option<&Path>, flags: &Flags) -> Result<()> {
    let defaults = with(TRAIN_DEFAULTS, QST_EXTRA);
    let s = Settings::resolve(&defaults, config, flags)?;
    let run = open_run(&s)?;
    let head: Head = parse_enum(&s, "head")?;
    let stage = format!("qst_{}", head.name());
    if up_to_date(&run, &stage, &s, "qst.qstc")? {
        println!("train-qst: {} is up to date", run.path("qst.qstc").display());
        return Ok(());
    }
    let (train, test) = load_dataset(&s)?;
    let ms = train.measurement_set()?;
    let scratch: bool = s.get("scratch")?;
    let model = if scratch {
        IlrModel::new(model_config(&s, &ms, train.k)?, s.get("seed")?)?
    } else {
        let path = match s.raw("pretrained") {
            "" => run.path("pretrain.qstc"),
            p => PathBuf::from(p),
        };
        if !path.exists() {
            return Err(CliError::Data(format!("expected pre-trained checkpoint {} (run `qst pretrain` first)", path.display())));
        }
        load_pretrained(&path)?
    };
    let strat = strategy(&s, &model.config)?;
    let p = TrainPlan { head, freeze_encoder: !scratch, ..plan(&s, Stage::Qst, strat.clone())? };
    run.write_config(&stage, &s.dump())?;
    let history = finetune_qst(&model, &train, &p)?;
    run.write_history(&stage, &history)?;
    checkpoint::save(&model, &run.path("qst.qstc"))?;
    println!("train-qst: final train loss {:.4e}", history.last_loss().unwrap_or(f64::NAN));
    if head == Head::Nu {
        for &m in strat.counts() {
            let inputs = test_inputs(&test, &ms, p.n_t, m, p.seed)?;
            let r = state_report(&test, &reconstruct(&Method::Ilr(&model), &ms, &inputs)?)?;
            println!("train-qst: N_t={} m={m}: test infidelity {:.4e}", p.n_t, r.infidelity.mean);
        }
    }
    Ok(())
}

fn grid(s: &Settings) -> Result<(Vec<u64>, Vec<usize>)> {
    let n_ts: Vec<u64> = s.list("n_t")?;
    let masks: Vec<usize> = s.list("masks")?;
    if n_ts.is_empty() || masks.is_empty() {
        return Err(CliError::Usage("n_t and masks must be non-empty lists".into()));
    }
    Ok((n_ts, masks))
}

pub fn baseline(config: Option<&Path>, flags: &Flags) -> Result<()> {
    let s = Settings::resolve(&with(EVAL_DEFAULTS, BASELINE_EXTRA), config, flags)?;
    let run = open_run(&s)?;
    let (_, test) = load_dataset(&s)?;
    let ms = test.measurement_set()?;
    let method = match s.raw("method") {
        "lre" => Method::Lre,
        "mle" => Method::Mle(MleOptions { max_iters: s.get("mle_iters")?, tol: s.get("mle_tol")? }),
        other => return Err(CliError::Usage(format!("unknown method '{other}' (expected lre or mle)"))),
    };
    let stage = format!("baseline_{}", s.raw("method"));
    run.write_config(&stage, &s.dump())?;
    let (n_ts, masks) = grid(&s)?;
    let set = PropertySet::for_len(test.k);
    let mut rows = Vec::new();
    for &n_t in &n_ts {
        for &m in &masks {
            let inputs = test_inputs(&test, &ms, n_t, m, s.get("seed")?)?;
            let est = reconstruct(&method, &ms, &inputs)?;
            let r = state_report(&test, &est)?;
            println!(
                "{} N_t={n_t} m={m}: mean infidelity {:.4e}  mean log10 infidelity {:.3}",
                method.name(),
                r.infidelity.mean,
                r.log_infidelity.mean
            );
            rows.extend(state_rows(method.name(), n_t, m, &r));
            if s.get("properties")? {
                let set = set.ok_or_else(|| CliError::Data(format!("no property set has {} entries", test.k)))?;
                let truth: Vec<Vec<f64>> = test.samples.iter().map(|x| x.mu.clone()).collect();
                let errs = property_errors(set, &truth, &properties_of_states(set, &est)?)?;
                rows.extend(property_rows(method.name(), n_t, m, &errs));
            }
        }
    }
    run.write_metrics(&stage, &rows)?;
    Ok(())
}

pub fn eval(config: Option<&Path>, flags: &Flags) -> Result<()> {
    let s = Settings::resolve(&with(EVAL_DEFAULTS, ILR_EVAL_EXTRA), config, flags)?;
    let run = open_run(&s)?;
    let ckpt = match s.raw("checkpoint") {
        "" => run.path("qst.qstc"),
        p => PathBuf::from(p),
    };
    if !ckpt.exists() {
        return Err(CliError::Data(format!("expected checkpoint {} (run `qst train-qst` first)", ckpt.display())));
    }
    let model = checkpoint::load(&ckpt)?;
    let (_, test) = load_dataset(&s)?;
    let ms = test.measurement_set()?;
    let label = s.required("label")?.to_string();
    let stage = format!("eval_{}", label.to_ascii_lowercase().replace(|c: char| !c.is_ascii_alphanumeric(), "_"));
    run.write_config(&stage, &s.dump())?;
    let (n_ts, masks) = grid(&s)?;
    let mut rows = Vec::new();
    for &n_t in &n_ts {
        for &m in &masks {
            let inputs = test_inputs(&test, &ms, n_t, m, s.get("seed")?)?;
            let est = reconstruct(&Method::Ilr(&model), &ms, &inputs)?;
            let r = state_report(&test, &est)?;
            println!("{label} N_t={n_t} m={m}: mean infidelity {:.4e}  mean log10 infidelity {:.3}", r.infidelity.mean, r.log_infidelity.mean);
            run.write_text(&format!("{stage}_samples_nt{n_t}_m{m}.csv"), &per_sample_csv(&r))?;
            rows.extend(state_rows(&label, n_t, m, &r));
            if s.get("properties")? {
                let set = PropertySet::for_len(test.k).ok_or_else(|| CliError::Data(format!("no property set has {} entries", test.k)))?;
                let truth: Vec<Vec<f64>> = test.samples.iter().map(|x| x.mu.clone()).collect();
                let direct = predict(&model, &inputs, Some(Head::Mu))?;
                let errs = property_errors(set, &truth, &direct)?;
                for (name, e) in &errs {
                    println!("  {label} {name}: MSE {:.4e}", e.mean);
                }
                rows.extend(property_rows(&label, n_t, m, &errs));
                let indirect = property_errors(set, &truth, &properties_of_states(set, &est)?)?;
                rows.extend(property_rows(&format!("{label}-B"), n_t, m, &indirect));
            }
        }
    }
    run.write_metrics(&stage, &rows)?;
    Ok(())
}

pub fn report(config: Option<&Path>, flags: &Flags) -> Result<()> {
    let s = Settings::resolve(&[("runs", ""), ("out", "-")], config, flags)?;
    let dirs: Vec<String> = s.list("runs")?;
    if dirs.is_empty() {
        return Err(CliError::Usage("report needs at least one run directory".into()));
    }
    let mut rows = Vec::new();
    for d in &dirs {
        let run = RunDir::open(Path::new(d)).map_err(|e| CliError::Data(e.to_string()))?;
        let files = run.metrics_files()?;
        if files.is_empty() {
            return Err(CliError::Data(format!("no *metrics.csv in {d} (expected e.g. {d}/eval_ilr_metrics.csv)")));
        }
        for f in files {
            let text = std::fs::read_to_string(&f)?;
            rows.extend(parse_metrics_csv(&text).map_err(|e| CliError::Data(format!("{}: {e}", f.display())))?);
        }
    }
    let csv = metrics_csv(&rows);
    match s.raw("out") {
        "-" => print!("{csv}"),
        out => atomic_write(Path::new(out), csv.as_bytes())?,
    }
    Ok(())
}

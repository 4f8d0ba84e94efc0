//! Command-line surface: `gen`, `train`, `eval`, `ablate`, `heatmap`,
//! `gradcheck`.

use std::fs;
use std::path::{Path, PathBuf};

use afdmil_core::data::{generate, split, Dataset, SynthKind};
use afdmil_core::model::{AfdModel, DistillConfig, DistillMode, ModelDims};
use afdmil_core::numerics::{Matrix, Rng};
use clap::{Args, Parser, Subcommand};
use rand_distr::{Distribution, StandardNormal};

use crate::checkpoint::Checkpoint;
use crate::config::RunConfig;
use crate::dataset::{attach_latent, load_dataset, save_dataset};
use crate::experiment::{ablate, evaluate_dataset, fit, partition};
use crate::export::export_instance_scores;
use crate::report::{ablation_csv, history_csv, metrics_csv};
use crate::{Error, Result};

pub const CHECKPOINT_FILE: &str = "checkpoint.afdc";
pub const HISTORY_FILE: &str = "history.csv";
pub const METRICS_FILE: &str = "metrics.csv";
pub const ABLATION_FILE: &str = "ablation.csv";

#[derive(Debug, Parser)]
#[command(name = "afd-mil", version, about = "Attention-based feature distillation for multiple instance learning")]
pub struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset.
    Gen(GenArgs),
    /// Train a model and write its checkpoint and history.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a dataset.
    Eval(EvalArgs),
    /// Sweep k and the component toggles.
    Ablate(AblateArgs),
    /// Export per-instance scores of one bag.
    Heatmap(HeatmapArgs),
    /// Compare analytic and finite-difference gradients.
    Gradcheck(GradcheckArgs),
}

/// Flags shared by every subcommand. Each one overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Distilled features per channel.
    #[arg(long)]
    pub k: Option<usize>,
    /// Instance selection policy: max-p or max-pn.
    #[arg(long)]
    pub mode: Option<String>,
    /// Fusion backend: gated or mean.
    #[arg(long)]
    pub fusion: Option<String>,
    /// Sum the three losses instead of coupling them.
    #[arg(long)]
    pub no_global_loss: bool,
    /// Drop the attention channel and its loss.
    #[arg(long)]
    pub no_attention_channel: bool,
    /// Fuse every instance instead of distilled features.
    #[arg(long)]
    pub no_distillation: bool,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
}

impl Common {
    /// File values with flag overrides applied, validated.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = RunConfig::load_or_default(self.config.as_deref())?;
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(k) = self.k {
            c.train.k = k;
        }
        if let Some(m) = &self.mode {
            c.train.mode = m.clone();
        }
        if let Some(f) = &self.fusion {
            c.model.fusion = f.clone();
        }
        if self.no_global_loss {
            c.train.global_loss = false;
        }
        if self.no_attention_channel {
            c.train.attention_channel = false;
        }
        if self.no_distillation {
            c.train.feature_distillation = false;
        }
        if let Some(t) = self.threshold {
            c.train.threshold = t;
        }
        if let Some(e) = self.epochs {
            c.train.epochs = e;
        }
        if let Some(lr) = self.lr {
            c.train.lr = lr;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// binary or subtype.
    #[arg(long)]
    pub kind: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset manifest; a synthetic set is generated from the config when absent.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Which bags to score: test, train (train plus validation) or all.
    #[arg(long, default_value = "test")]
    pub part: String,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Comma-separated k values.
    #[arg(long, value_delimiter = ',')]
    pub k_list: Option<Vec<usize>>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Bag id to export.
    #[arg(long)]
    pub bag: String,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Feature dimension.
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    /// Width of every hidden layer.
    #[arg(long, default_value_t = 8)]
    pub hidden: usize,
    /// Instances in the random bag.
    #[arg(long, default_value_t = 12)]
    pub bag_size: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub eps: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    #[command(flatten)]
    pub common: Common,
}

fn create_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn dataset_or_generate(data: Option<&Path>, cfg: &RunConfig) -> Result<Dataset> {
    match data {
        Some(p) => load_dataset(p),
        None => Ok(generate(&cfg.synth_config()?, cfg.seed)?),
    }
}

/// Latent labels for evaluation: read from sidecars for files, kept from the
/// generator otherwise.
fn with_latent(data: Option<&Path>, ds: &mut Dataset) -> Result<()> {
    if let Some(p) = data {
        attach_latent(p, ds)?;
    }
    Ok(())
}

pub fn cmd_gen(args: &GenArgs) -> Result<PathBuf> {
    let mut cfg = args.common.resolve()?;
    if let Some(kind) = &args.kind {
        cfg.data.kind = SynthKind::parse(kind)?.as_str().into();
    }
    let synth = cfg.synth_config()?;
    let ds = generate(&synth, cfg.seed)?;
    create_out(&args.common.out)?;
    let manifest = save_dataset(&args.common.out, &ds)?;
    cfg.write_resolved(&args.common.out)?;
    println!("{}", manifest.display());
    Ok(manifest)
}

pub fn cmd_train(args: &TrainArgs) -> Result<Checkpoint> {
    let cfg = args.common.resolve()?;
    let data = args.data.as_deref();
    let ds = dataset_or_generate(data, &cfg)?;
    let part = partition(
        &ds,
        cfg.data.test_fraction,
        cfg.train.validation_fraction,
        cfg.seed,
    )?;
    let dims = cfg.model_dims(ds.feature_dim)?;
    let train_cfg = cfg.train_config()?;
    let out = fit(&part, dims, &train_cfg)?;

    let dir = &args.common.out;
    create_out(dir)?;
    cfg.write_resolved(dir)?;
    write(&dir.join(HISTORY_FILE), &history_csv(&out.history))?;
    let mut ckpt = Checkpoint::new(
        out.best,
        cfg.train.clone(),
        out.best_epoch,
        cfg.seed,
        cfg.data.test_fraction,
    );
    ckpt.validation = out.history[out.best_epoch].validation.clone();
    ckpt.save(&dir.join(CHECKPOINT_FILE))?;
    let auc = ckpt.validation.as_ref().and_then(|m| m.auc);
    println!(
        "trained {} bags for {} epochs; kept epoch {} (validation auc {})",
        part.train.len(),
        train_cfg.epochs,
        ckpt.epoch,
        auc.map_or("n/a".into(), |a| format!("{a:.4}"))
    );
    Ok(ckpt)
}

fn eval_part(ds: &Dataset, part: &str, ckpt: &Checkpoint) -> Result<Dataset> {
    match part {
        "all" => Ok(ds.clone()),
        "train" | "test" => {
            let (train, test) = split(ds, ckpt.test_fraction, ckpt.seed)?;
            Ok(if part == "train" { train } else { test })
        }
        other => Err(Error::Config(format!(
            "--part must be test, train or all, got `{other}`"
        ))),
    }
}

/// Run config describing a command that works from a checkpoint.
fn checkpoint_config(ckpt: &Checkpoint, common: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig {
        seed: ckpt.seed,
        train: ckpt.train.clone(),
        ..RunConfig::default()
    };
    let dims = ckpt.model.dims();
    cfg.data.feature_dim = dims.n;
    cfg.data.test_fraction = ckpt.test_fraction;
    cfg.model.h1 = dims.h1;
    cfg.model.h2 = dims.h2;
    cfg.model.d = dims.d;
    cfg.model.fusion = dims.fusion.as_str().into();
    if let Some(t) = common.threshold {
        cfg.train.threshold = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn cmd_eval(args: &EvalArgs) -> Result<crate::experiment::Evaluation> {
    let mut ds = load_dataset(&args.data)?;
    let ckpt = Checkpoint::load_for_dim(&args.checkpoint, ds.feature_dim)?;
    with_latent(Some(&args.data), &mut ds)?;
    let cfg = checkpoint_config(&ckpt, &args.common)?;
    let subset = eval_part(&ds, &args.part, &ckpt)?;
    let opts = cfg.train_config()?.forward_options();
    let eval = evaluate_dataset(&ckpt.model, &subset, &opts, cfg.train.threshold)?;

    let dir = &args.common.out;
    create_out(dir)?;
    cfg.write_resolved(dir)?;
    write(&dir.join(METRICS_FILE), &metrics_csv(&[(&args.part, &eval)]))?;
    let m = &eval.metrics;
    println!(
        "{} bags, threshold {}: acc {:.4} auc {} recall {:.4} precision {:.4}",
        m.total(),
        m.threshold,
        m.acc,
        m.auc.map_or("n/a".into(), |a| format!("{a:.4}")),
        m.recall,
        m.precision
    );
    Ok(eval)
}

pub fn cmd_ablate(args: &AblateArgs) -> Result<Vec<crate::experiment::AblationRecord>> {
    let mut cfg = args.common.resolve()?;
    if let Some(ks) = &args.k_list {
        cfg.ablate.k_list = ks.clone();
    }
    cfg.validate()?;
    for &k in &cfg.ablate.k_list {
        DistillConfig::new(k, DistillMode::parse(&cfg.train.mode)?)?;
    }
    let data = args.data.as_deref();
    let mut ds = dataset_or_generate(data, &cfg)?;
    with_latent(data, &mut ds)?;
    let part = partition(
        &ds,
        cfg.data.test_fraction,
        cfg.train.validation_fraction,
        cfg.seed,
    )?;
    let dims = cfg.model_dims(ds.feature_dim)?;
    let records = ablate(&part, dims, &cfg.train_config()?, &cfg.ablate.k_list, cfg.seed)?;

    let dir = &args.common.out;
    create_out(dir)?;
    cfg.write_resolved(dir)?;
    let table = ablation_csv(&records);
    write(&dir.join(ABLATION_FILE), &table)?;
    print!("{table}");
    Ok(records)
}

pub fn cmd_heatmap(args: &HeatmapArgs) -> Result<crate::export::ExportedScores> {
    let ds = load_dataset(&args.data)?;
    let ckpt = Checkpoint::load_for_dim(&args.checkpoint, ds.feature_dim)?;
    let Some(i) = ds.find(&args.bag) else {
        return Err(Error::UnknownBag {
            id: args.bag.clone(),
            available: ds.bags.iter().map(|b| b.id.clone()).collect(),
        });
    };
    let cfg = checkpoint_config(&ckpt, &args.common)?;
    let opts = cfg.train_config()?.forward_options();
    let bag = &ds.bags[i];
    let trace = ckpt.model.forward_bag(bag, &opts)?;
    let dir = &args.common.out;
    create_out(dir)?;
    cfg.write_resolved(dir)?;
    let out = export_instance_scores(&trace, bag, dir, "scores")?;
    println!("{}", out.table.display());
    if let Some(r) = &out.raster {
        println!("{}", r.display());
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradcheckResult {
    pub mode: DistillMode,
    pub label: u8,
    pub max_rel_error: f64,
    pub worst_param: String,
}

/// Runs the gradient check for both selection modes and both bag labels.
pub fn gradcheck_cases(n: usize, hidden: usize, bag_size: usize, k: usize, seed: u64, eps: f64) -> Result<Vec<GradcheckResult>> {
    let dims = ModelDims {
        n,
        h1: hidden,
        h2: hidden,
        d: hidden,
        ..ModelDims::new(n)
    };
    let mut results = Vec::new();
    for mode in [DistillMode::MaxPositive, DistillMode::MaxPositiveNegative] {
        let kk = if mode == DistillMode::MaxPositiveNegative && k % 2 == 1 { k + 1 } else { k };
        let opts = afdmil_core::model::ForwardOptions::new(DistillConfig::new(kk, mode)?);
        for label in [0u8, 1] {
            let case = format!("gradcheck/{}/{label}", mode.as_str());
            let mut model = AfdModel::new(dims, &mut Rng::from_stream(seed, &format!("{case}/init")))?;
            let mut rng = Rng::from_stream(seed, &format!("{case}/bag"));
            let data = (0..bag_size * n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let bag = afdmil_core::data::Bag::new("gradcheck", label, Matrix::from_vec(bag_size, n, data)?)?;
            let report = model.grad_check(&bag, &opts, eps)?;
            results.push(GradcheckResult {
                mode,
                label,
                max_rel_error: report.max_rel_error,
                worst_param: report.worst_param,
            });
        }
    }
    Ok(results)
}

pub fn cmd_gradcheck(args: &GradcheckArgs) -> Result<Vec<GradcheckResult>> {
    let cfg = args.common.resolve()?;
    let results = gradcheck_cases(args.n, args.hidden, args.bag_size, cfg.train.k, cfg.seed, args.eps)?;
    let mut text = String::from("mode,label,max_rel_error,worst_param\n");
    for r in &results {
        text.push_str(&format!("{},{},{},{}\n", r.mode.as_str(), r.label, r.max_rel_error, r.worst_param));
        println!(
            "{} label {}: max relative error {:.3e} (worst {})",
            r.mode.as_str(),
            r.label,
            r.max_rel_error,
            r.worst_param
        );
    }
    let dir = &args.common.out;
    create_out(dir)?;
    cfg.write_resolved(dir)?;
    write(&dir.join("gradcheck.csv"), &text)?;
    if let Some(bad) = results.iter().find(|r| !(r.max_rel_error < args.tolerance)) {
        return Err(Error::Config(format!(
            "gradient check failed: {} label {} error {:.3e} >= {:.1e} at `{}`",
            bad.mode.as_str(),
            bad.label,
            bad.max_rel_error,
            args.tolerance,
            bad.worst_param
        )));
    }
    Ok(results)
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Gen(a) => cmd_gen(a).map(drop),
        Command::Train(a) => cmd_train(a).map(drop),
        Command::Eval(a) => cmd_eval(a).map(drop),
        Command::Ablate(a) => cmd_ablate(a).map(drop),
        Command::Heatmap(a) => cmd_heatmap(a).map(drop),
        Command::Gradcheck(a) => cmd_gradcheck(a).map(drop),
    }
}

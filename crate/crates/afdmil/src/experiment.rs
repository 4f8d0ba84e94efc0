//! Train/evaluate drivers shared by the CLI and the acceptance suite.

use afdmil_core::data::{split, Dataset, InstanceLabel};
use afdmil_core::metrics::{classify_metrics, distill_precision_at_k, MetricsReport};
use afdmil_core::model::{AfdModel, ForwardOptions, ForwardTrace, ModelDims};
use afdmil_core::numerics::{derive_seed, Rng};
use afdmil_core::training::{train, validation_split, TrainConfig, TrainOutcome};
use rayon::prelude::*;

use crate::Result;

/// Train / validation / test bags of one run.
#[derive(Clone, Debug)]
pub struct Partition {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
}

/// Stratified test split, then a stratified validation split of the rest,
/// both seeded by `seed`.
pub fn partition(dataset: &Dataset, test_fraction: f64, validation_fraction: f64, seed: u64) -> Result<Partition> {
    let (rest, test) = split(dataset, test_fraction, seed)?;
    let (train, validation) = validation_split(&rest, validation_fraction, seed)?;
    Ok(Partition {
        train,
        validation,
        test,
    })
}

/// Fresh model from the `init` stream of `train.seed`, trained with
/// validation-based checkpoint selection.
pub fn fit(part: &Partition, dims: ModelDims, train_cfg: &TrainConfig) -> Result<TrainOutcome> {
    let model = AfdModel::new(dims, &mut Rng::from_stream(train_cfg.seed, "init"))?;
    Ok(train(
        model,
        &part.train.bags,
        Some(&part.validation.bags),
        train_cfg,
    )?)
}

#[derive(Clone, Debug)]
pub struct Evaluation {
    pub metrics: MetricsReport,
    /// Channel-1 (positive half) precision@k against latent labels.
    pub precision_ins: Option<f64>,
    /// Channel-2 precision@k against latent labels.
    pub precision_att: Option<f64>,
    pub traces: Vec<ForwardTrace>,
}

/// Bag-level metrics and, when latent labels are present, distillation
/// precision over the positive bags.
pub fn evaluate_dataset(
    model: &AfdModel,
    dataset: &Dataset,
    opts: &ForwardOptions,
    threshold: f64,
) -> Result<Evaluation> {
    let traces = dataset
        .bags
        .par_iter()
        .map(|b| model.forward_bag(b, opts))
        .collect::<afdmil_core::Result<Vec<_>>>()?;
    let probs: Vec<f64> = traces.iter().map(|t| t.final_prob).collect();
    let labels = dataset.labels();
    let metrics = classify_metrics(&probs, &labels, threshold)?;
    let latent = dataset.latent.as_deref();
    let precision = |sel: Vec<Vec<usize>>| -> Result<Option<f64>> {
        if sel.iter().any(Vec::is_empty) {
            return Ok(None);
        }
        Ok(distill_precision_at_k(&sel, &labels, latent, InstanceLabel::Positive)?)
    };
    let precision_ins = precision(
        traces
            .iter()
            .map(|t| t.channel1_positive_indices().to_vec())
            .collect(),
    )?;
    let precision_att = precision(traces.iter().map(|t| t.channel2_indices.clone()).collect())?;
    Ok(Evaluation {
        metrics,
        precision_ins,
        precision_att,
        traces,
    })
}

/// The four component configurations compared in the ablation table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AblationRow {
    /// Gated attention over every instance, final loss only.
    Plain,
    /// Instance-channel distillation.
    Distill,
    /// Both distillation channels, losses summed.
    AttentionDistill,
    /// Both channels with the coupled global loss.
    Full,
}

impl AblationRow {
    pub const ALL: [Self; 4] = [Self::Plain, Self::Distill, Self::AttentionDistill, Self::Full];

    pub fn name(self) -> &'static str {
        match self {
            Self::Plain => "plain",
            Self::Distill => "+fd",
            Self::AttentionDistill => "+attention-fd",
            Self::Full => "+global-loss",
        }
    }

    /// `[feature distillation, attention channel, global loss]`.
    pub fn toggles(self) -> [bool; 3] {
        [
            self != Self::Plain,
            matches!(self, Self::AttentionDistill | Self::Full),
            self == Self::Full,
        ]
    }

    pub fn apply(self, cfg: &mut TrainConfig) {
        [cfg.feature_distillation, cfg.attention_channel, cfg.global_loss] = self.toggles();
    }
}

#[derive(Clone, Debug)]
pub struct AblationRecord {
    pub k: usize,
    pub row: AblationRow,
    pub cell_seed: u64,
    pub best_epoch: usize,
    pub test: Evaluation,
}

pub fn cell_seed(master: u64, k: usize, row: AblationRow) -> u64 {
    derive_seed(master, &format!("ablate-cell/k={k}/{}", row.name()))
}

/// Trains and tests every (k, row) cell on the same partition. Cells run in
/// parallel; the result order is `k_list` order, then row order.
pub fn ablate(
    part: &Partition,
    dims: ModelDims,
    base: &TrainConfig,
    k_list: &[usize],
    master_seed: u64,
) -> Result<Vec<AblationRecord>> {
    let cells: Vec<(usize, AblationRow)> = k_list
        .iter()
        .flat_map(|&k| AblationRow::ALL.into_iter().map(move |r| (k, r)))
        .collect();
    cells
        .par_iter()
        .map(|&(k, row)| {
            let mut cfg = base.clone();
            cfg.distill = afdmil_core::model::DistillConfig::new(k, base.distill.mode())?;
            row.apply(&mut cfg);
            cfg.seed = cell_seed(master_seed, k, row);
            let out = fit(part, dims, &cfg)?;
            let test = evaluate_dataset(&out.best, &part.test, &cfg.forward_options(), cfg.threshold)?;
            log::info!(
                "cell k={k} {}: test auc {:?}",
                row.name(),
                test.metrics.auc
            );
            Ok(AblationRecord {
                k,
                row,
                cell_seed: cfg.seed,
                best_epoch: out.best_epoch,
                test,
            })
        })
        .collect()
}

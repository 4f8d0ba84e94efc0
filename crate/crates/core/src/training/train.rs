use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::{Adam, AdamConfig};
use crate::data::{split_with_stream, Bag, Dataset};
use crate::metrics::{classify_metrics, MetricsReport};
use crate::model::{AfdModel, DistillConfig, ForwardOptions, FusionBackend};
use crate::numerics::Rng;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub adam: AdamConfig,
    pub epochs: usize,
    /// Seed of the bag-order shuffle stream.
    pub seed: u64,
    pub distill: DistillConfig,
    pub fusion: FusionBackend,
    pub feature_distillation: bool,
    pub attention_channel: bool,
    pub global_loss: bool,
    /// Decision threshold for validation metrics.
    pub threshold: f64,
}

impl TrainConfig {
    pub fn new(distill: DistillConfig) -> Self {
        Self {
            adam: AdamConfig::default(),
            epochs: 50,
            seed: 0,
            distill,
            fusion: FusionBackend::Gated,
            feature_distillation: true,
            attention_channel: true,
            global_loss: true,
            threshold: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.adam.lr > 0.0) || !self.adam.lr.is_finite() {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.adam.lr
            )));
        }
        if self.epochs < 1 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Config(format!(
                "threshold must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        Ok(())
    }

    pub fn forward_options(&self) -> ForwardOptions {
        ForwardOptions {
            distill: self.distill,
            feature_distillation: self.feature_distillation,
            attention_channel: self.attention_channel,
            global_loss: self.global_loss,
            fixed_global_weight: None,
        }
    }
}

/// Mean losses over one epoch's optimizer steps, plus validation metrics.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss1: f64,
    pub loss2: f64,
    pub loss3: f64,
    pub total: f64,
    pub validation: Option<MetricsReport>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters at the epoch chosen by [`select_checkpoint`].
    pub best: AfdModel,
    pub best_epoch: usize,
    /// Parameters after the last epoch.
    pub last: AfdModel,
    pub history: Vec<EpochRecord>,
}

/// Splits off a stratified validation set from a training dataset.
pub fn validation_split(train: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    split_with_stream(train, fraction, seed, "validation")
}

/// Predicted probabilities of `model` over `bags` (inference path).
pub fn predict(model: &AfdModel, bags: &[Bag], opts: &ForwardOptions) -> Result<Vec<f64>> {
    bags.iter()
        .map(|b| model.forward_bag(b, opts).map(|t| t.final_prob))
        .collect()
}

pub fn evaluate(
    model: &AfdModel,
    bags: &[Bag],
    opts: &ForwardOptions,
    threshold: f64,
) -> Result<MetricsReport> {
    let probs = predict(model, bags, opts)?;
    let labels: Vec<u8> = bags.iter().map(|b| b.label).collect();
    classify_metrics(&probs, &labels, threshold)
}

fn better(candidate: &MetricsReport, incumbent: &MetricsReport) -> bool {
    let (Some(a), Some(b)) = (candidate.auc, incumbent.auc) else {
        return candidate.auc.is_some() && incumbent.auc.is_none();
    };
    a > b || (a == b && candidate.recall > incumbent.recall)
}

/// Epoch with the highest validation AUC; ties go to higher recall, then to
/// the earlier epoch. Without validation metrics the last epoch is returned.
pub fn select_checkpoint(history: &[EpochRecord]) -> Result<usize> {
    if history.is_empty() {
        return Err(Error::EmptyInput("checkpoint selection over an empty history"));
    }
    let mut best: Option<(usize, &MetricsReport)> = None;
    for (i, rec) in history.iter().enumerate() {
        let Some(m) = rec.validation.as_ref().filter(|m| m.auc.is_some()) else {
            continue;
        };
        match best {
            Some((_, b)) if !better(m, b) => {}
            _ => best = Some((i, m)),
        }
    }
    Ok(match best {
        Some((i, _)) => i,
        None => {
            log::warn!("no validation metrics recorded; selecting the final epoch");
            history.len() - 1
        }
    })
}

/// Trains with one optimizer step per bag.
///
/// Bag order is reshuffled every epoch from the `shuffle` stream of
/// `config.seed`. When `validation` is given, metrics are recorded after every
/// epoch and the best epoch's parameters are kept.
pub fn train(
    mut model: AfdModel,
    train_bags: &[Bag],
    validation: Option<&[Bag]>,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if train_bags.is_empty() {
        return Err(Error::EmptyInput("training needs at least one bag"));
    }
    if model.dims().fusion != config.fusion {
        return Err(Error::Config(format!(
            "model uses {} fusion but the training config asks for {}",
            model.dims().fusion.as_str(),
            config.fusion.as_str()
        )));
    }
    let opts = config.forward_options();
    let mut adam = Adam::new(config.adam, &model.params);
    let mut rng = Rng::from_stream(config.seed, "shuffle");
    let mut history = Vec::with_capacity(config.epochs);
    let mut best: Option<(usize, AfdModel, MetricsReport)> = None;

    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..train_bags.len()).collect();
        order.shuffle(&mut rng);
        let mut sums = [0.0f64; 4];
        for &i in &order {
            let trace = model.forward_backward(&train_bags[i], &opts)?;
            if !trace.total_loss.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            adam.step(&mut model.params)?;
            sums[0] += trace.loss1;
            sums[1] += trace.loss2;
            sums[2] += trace.loss3;
            sums[3] += trace.total_loss;
        }
        let n = train_bags.len() as f64;
        let validation = match validation {
            Some(v) if !v.is_empty() => Some(evaluate(&model, v, &opts, config.threshold)?),
            _ => None,
        };
        log::debug!(
            "epoch {epoch}: total {:.5} val auc {:?}",
            sums[3] / n,
            validation.as_ref().and_then(|m| m.auc)
        );
        if let Some(m) = validation.as_ref().filter(|m| m.auc.is_some()) {
            let replace = match &best {
                Some((_, _, b)) => better(m, b),
                None => true,
            };
            if replace {
                best = Some((epoch, model.clone(), m.clone()));
            }
        }
        history.push(EpochRecord {
            epoch,
            loss1: sums[0] / n,
            loss2: sums[1] / n,
            loss3: sums[2] / n,
            total: sums[3] / n,
            validation,
        });
    }

    let best_epoch = select_checkpoint(&history)?;
    let best = match best {
        Some((e, m, _)) => {
            debug_assert_eq!(e, best_epoch);
            m
        }
        None => model.clone(),
    };
    Ok(TrainOutcome {
        best,
        best_epoch,
        last: model,
        history,
    })
}

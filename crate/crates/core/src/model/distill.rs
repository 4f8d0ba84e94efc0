use alloc::vec::Vec;

use super::{DistillConfig, DistillMode};
use crate::numerics::{bce, Matrix};
use crate::{Error, Result};

/// Indices of the `min(k, len)` largest values, largest first. Equal values
/// keep ascending index order.
pub fn top_k(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    // stable sort: ties stay in index order
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    idx.truncate(k.min(values.len()));
    idx
}

/// Indices of the `min(k, len)` smallest values, smallest first, ties to the
/// lower index.
pub fn bottom_k(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    idx.truncate(k.min(values.len()));
    idx
}

/// Instance-channel selection. `negative` is empty in max-positive mode.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceSelection {
    pub positive: Vec<usize>,
    pub negative: Vec<usize>,
}

impl InstanceSelection {
    /// Positive half followed by negative half.
    pub fn indices(&self) -> Vec<usize> {
        let mut all = self.positive.clone();
        all.extend_from_slice(&self.negative);
        all
    }
}

pub fn select_instances(probs: &[f64], config: &DistillConfig) -> Result<InstanceSelection> {
    if probs.is_empty() {
        return Err(Error::EmptyBag("instance selection over an empty bag"));
    }
    Ok(match config.mode() {
        DistillMode::MaxPositive => InstanceSelection {
            positive: top_k(probs, config.k()),
            negative: Vec::new(),
        },
        DistillMode::MaxPositiveNegative => {
            let half = config.k() / 2;
            // top by (1 - p) is bottom by p; both halves draw from the full bag
            InstanceSelection {
                positive: top_k(probs, half),
                negative: bottom_k(probs, half),
            }
        }
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstanceDistillation {
    pub selection: InstanceSelection,
    /// Rows of the bag at `selection.indices()`.
    pub features: Matrix,
    /// Mean cross-entropy of the positive half against the bag label.
    pub loss: f64,
}

/// Selects instance-channel features and evaluates their loss.
pub fn distill_instances(
    probs: &[f64],
    features: &Matrix,
    config: &DistillConfig,
    label: u8,
) -> Result<InstanceDistillation> {
    if probs.len() != features.rows() {
        return Err(Error::Dimension {
            op: "distill_instances",
            left: (probs.len(), 1),
            right: features.shape(),
        });
    }
    let selection = select_instances(probs, config)?;
    let y = f64::from(label);
    let loss = selection
        .positive
        .iter()
        .map(|&i| bce(probs[i], y))
        .sum::<f64>()
        / selection.positive.len() as f64;
    Ok(InstanceDistillation {
        features: features.gather_rows(&selection.indices()),
        selection,
        loss,
    })
}

/// Attention-channel selection: the `min(k, K)` highest weights and their rows.
pub fn distill_by_attention(
    weights: &[f64],
    features: &Matrix,
    k: usize,
) -> Result<(Vec<usize>, Matrix)> {
    if weights.is_empty() {
        return Err(Error::EmptyBag("attention selection over an empty bag"));
    }
    if weights.len() != features.rows() {
        return Err(Error::Dimension {
            op: "distill_by_attention",
            left: (weights.len(), 1),
            right: features.shape(),
        });
    }
    let idx = top_k(weights, k);
    let rows = features.gather_rows(&idx);
    Ok((idx, rows))
}

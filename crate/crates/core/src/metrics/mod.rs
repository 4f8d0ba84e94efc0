//! Bag-level classification metrics and instance-level distillation quality.

use alloc::vec::Vec;

use crate::data::InstanceLabel;
use crate::{Error, Result};

/// Confusion counts and derived rates at one decision threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub acc: f64,
    /// `None` when the scores contain a single class.
    pub auc: Option<f64>,
    pub recall: f64,
    pub precision: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub threshold: f64,
    /// Recall denominator was zero (no positive labels); recall reported as 0.
    pub recall_degenerate: bool,
    /// Precision denominator was zero (no positive predictions).
    pub precision_degenerate: bool,
}

impl MetricsReport {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

fn check_inputs(probs: &[f64], labels: &[u8]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::EmptyInput("metrics over zero predictions"));
    }
    if probs.len() != labels.len() {
        return Err(Error::Dimension {
            op: "metrics",
            left: (probs.len(), 1),
            right: (labels.len(), 1),
        });
    }
    Ok(())
}

/// Thresholded confusion metrics; AUC is attached when both classes occur.
pub fn classify_metrics(probs: &[f64], labels: &[u8], threshold: f64) -> Result<MetricsReport> {
    check_inputs(probs, labels)?;
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Config(alloc::format!(
            "threshold must lie in (0, 1), got {threshold}"
        )));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&p, &y) in probs.iter().zip(labels) {
        match (p >= threshold, y == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    Ok(MetricsReport {
        acc: ratio(tp + tn, probs.len()),
        auc: auc(probs, labels).ok(),
        recall: ratio(tp, tp + fn_),
        precision: ratio(tp, tp + fp),
        tp,
        fp,
        tn,
        fn_,
        threshold,
        recall_degenerate: tp + fn_ == 0,
        precision_degenerate: tp + fp == 0,
    })
}

/// ROC AUC as the Mann-Whitney statistic: the fraction of (positive,
/// negative) pairs ranked correctly, ties counted as half.
///
/// Runs in `O(N log N)` by sorting once and crediting every negative that
/// scores below each positive, with tie groups handled together.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    check_inputs(scores, labels)?;
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedAuc);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let mut credit = 0.0;
    let mut neg_below = 0usize;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let group = &order[i..j];
        let p = group.iter().filter(|&&k| labels[k] == 1).count();
        let n = group.len() - p;
        credit += p as f64 * (neg_below as f64 + 0.5 * n as f64);
        neg_below += n;
        i = j;
    }
    Ok(credit / (pos as f64 * neg as f64))
}

/// Fraction of selected instances whose hidden label is `witness`.
pub fn selection_precision(selected: &[usize], latent: &[InstanceLabel], witness: InstanceLabel) -> Result<f64> {
    if selected.is_empty() {
        return Err(Error::EmptyInput("precision of an empty selection"));
    }
    let hits = selected.iter().filter(|&&i| latent[i] == witness).count();
    Ok(hits as f64 / selected.len() as f64)
}

/// Mean per-bag [`selection_precision`] over the bags that carry a label of 1.
///
/// `None` when no latent labels are available (real data) or no bag is
/// positive.
pub fn distill_precision_at_k(
    selections: &[Vec<usize>],
    bag_labels: &[u8],
    latent: Option<&[Vec<InstanceLabel>]>,
    witness: InstanceLabel,
) -> Result<Option<f64>> {
    let Some(latent) = latent else {
        return Ok(None);
    };
    let mut sum = 0.0;
    let mut count = 0usize;
    for ((sel, &y), lat) in selections.iter().zip(bag_labels).zip(latent) {
        if y != 1 {
            continue;
        }
        sum += selection_precision(sel, lat, witness)?;
        count += 1;
    }
    Ok((count > 0).then(|| sum / count as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;
    use rand::Rng as _;

    // Oracle: trapezoidal area under the ROC curve built from distinct
    // thresholds.
    fn trapezoid_auc(scores: &[f64], labels: &[u8]) -> f64 {
        let pos = labels.iter().filter(|&&y| y == 1).count() as f64;
        let neg = labels.len() as f64 - pos;
        let mut thresholds: Vec<f64> = scores.to_vec();
        thresholds.sort_by(|a, b| b.total_cmp(a));
        thresholds.dedup();
        let mut pts = alloc::vec![(0.0, 0.0)];
        for t in thresholds {
            let tp = scores.iter().zip(labels).filter(|(s, y)| **s >= t && **y == 1).count();
            let fp = scores.iter().zip(labels).filter(|(s, y)| **s >= t && **y == 0).count();
            pts.push((fp as f64 / neg, tp as f64 / pos));
        }
        pts.windows(2)
            .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
            .sum()
    }

    fn pairwise(scores: &[f64], labels: &[u8]) -> f64 {
        let mut c = 0.0;
        let mut n = 0.0;
        for (i, &si) in scores.iter().enumerate() {
            for (j, &sj) in scores.iter().enumerate() {
                if labels[i] == 1 && labels[j] == 0 {
                    n += 1.0;
                    if si > sj {
                        c += 1.0;
                    } else if si == sj {
                        c += 0.5;
                    }
                }
            }
        }
        c / n
    }

    #[test]
    fn classify_examples() {
        let r = classify_metrics(&[0.9, 0.1], &[1, 0], 0.5).unwrap();
        assert_eq!((r.acc, r.recall, r.precision), (1.0, 1.0, 1.0));
        assert_eq!(r.auc, Some(1.0));
        let r = classify_metrics(&[0.9, 0.9], &[1, 0], 0.5).unwrap();
        assert_eq!((r.acc, r.recall, r.precision), (0.5, 1.0, 0.5));
        let r = classify_metrics(&[0.9, 0.2], &[0, 0], 0.5).unwrap();
        assert_eq!(r.recall, 0.0);
        assert!(r.recall_degenerate);
        assert_eq!(r.auc, None);
        assert!(classify_metrics(&[], &[], 0.5).is_err());
        assert!(classify_metrics(&[0.5], &[1], 1.0).is_err());
    }

    #[test]
    fn threshold_is_inclusive() {
        let r = classify_metrics(&[0.5], &[1], 0.5).unwrap();
        assert_eq!(r.tp, 1);
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[0.9, 0.8, 0.2, 0.1], &[1, 1, 0, 0]).unwrap(), 1.0);
        assert_eq!(auc(&[0.3; 4], &[1, 0, 1, 0]).unwrap(), 0.5);
        assert_eq!(auc(&[0.9, 0.8, 0.7, 0.1], &[1, 0, 1, 0]).unwrap(), 0.75);
        assert_eq!(auc(&[0.9, 0.8], &[1, 1]), Err(Error::UndefinedAuc));
    }

    #[test]
    fn precision_at_k() {
        use InstanceLabel::*;
        let latent = [Negative, Negative, Positive, Negative, Negative, Positive];
        assert_eq!(selection_precision(&[1, 2], &latent, Positive).unwrap(), 0.5);
        assert_eq!(selection_precision(&[5, 2], &latent, Positive).unwrap(), 1.0);
        // 2 witnesses, 4 selected: ceiling 2/4
        let p = selection_precision(&[0, 2, 4, 5], &latent, Positive).unwrap();
        assert!(p <= 2.0 / 4.0);

        let sels = alloc::vec![alloc::vec![2, 5], alloc::vec![0, 1], alloc::vec![1, 2]];
        let lat = alloc::vec![latent.to_vec(), latent.to_vec(), latent.to_vec()];
        let got = distill_precision_at_k(&sels, &[1, 0, 1], Some(&lat), Positive).unwrap();
        assert_eq!(got, Some(0.75));
        assert_eq!(distill_precision_at_k(&sels, &[1, 0, 1], None, Positive).unwrap(), None);
    }

    #[test]
    fn mann_whitney_equals_trapezoid_on_random_tied_inputs() {
        let mut rng = Rng::from_stream(5, "auc");
        for _ in 0..300 {
            let len = rng.random_range(2..=50);
            let mut labels: Vec<u8> = (0..len).map(|_| rng.random_range(0..=1)).collect();
            labels[0] = 1;
            labels[1] = 0;
            // coarse grid forces ties
            let scores: Vec<f64> = (0..len).map(|_| rng.random_range(0..8) as f64 / 8.0).collect();
            let a = auc(&scores, &labels).unwrap();
            assert!((a - trapezoid_auc(&scores, &labels)).abs() < 1e-12);
            assert!((a - pairwise(&scores, &labels)).abs() < 1e-12);
        }
    }

    proptest::proptest! {
        #[test]
        fn auc_symmetry_and_monotone_invariance(
            scores in proptest::collection::vec(-5.0f64..5.0, 2..30),
            seed in 0u64..1000,
        ) {
            let mut rng = Rng::from_stream(seed, "labels");
            let mut labels: Vec<u8> = (0..scores.len()).map(|_| rng.random_range(0..=1)).collect();
            labels[0] = 1;
            labels[1] = 0;
            let a = auc(&scores, &labels).unwrap();
            let mut distinct = scores.clone();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            if distinct.len() == scores.len() {
                let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
                proptest::prop_assert!((a - (1.0 - auc(&neg, &labels).unwrap())).abs() < 1e-12);
            }
            let warped: Vec<f64> = scores.iter().map(|s| libm::exp(*s) * 3.0 + 1.0).collect();
            proptest::prop_assert!((a - auc(&warped, &labels).unwrap()).abs() < 1e-12);
            let probs: Vec<f64> = scores.iter().map(|s| crate::numerics::sigmoid(*s)).collect();
            let r = classify_metrics(&probs, &labels, 0.5).unwrap();
            proptest::prop_assert_eq!(r.total(), scores.len());
        }
    }
}

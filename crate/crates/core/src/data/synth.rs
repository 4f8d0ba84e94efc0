use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use super::bag::{Bag, Dataset, InstanceLabel, Provenance, SynthKind};
use crate::numerics::{Matrix, Rng};
use crate::{Error, Result};

/// Parameters of the synthetic bag generators.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub kind: SynthKind,
    pub bags_per_class: usize,
    pub k_min: usize,
    pub k_max: usize,
    pub feature_dim: usize,
    /// Fraction of witnesses in a witness-carrying bag.
    pub witness_rate: f64,
    /// Lower bound on the witness count of a witness-carrying bag.
    pub min_witnesses: usize,
    /// Distance between cluster means.
    pub separation: f64,
    /// Per-coordinate standard deviation.
    pub sigma: f64,
    /// Attach raster-order grid coordinates to every bag.
    pub coords: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            kind: SynthKind::Binary,
            bags_per_class: 150,
            k_min: 50,
            k_max: 200,
            feature_dim: 32,
            witness_rate: 0.05,
            min_witnesses: 1,
            separation: 2.0,
            sigma: 1.0,
            coords: true,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: alloc::string::String| Err(Error::Config(msg));
        if !(self.witness_rate > 0.0 && self.witness_rate <= 1.0) {
            return fail(format!(
                "witness rate must lie in (0, 1], got {}",
                self.witness_rate
            ));
        }
        if self.k_min < 1 || self.k_min > self.k_max {
            return fail(format!(
                "bag size range needs 1 <= k_min <= k_max, got [{}, {}]",
                self.k_min, self.k_max
            ));
        }
        if self.min_witnesses < 1 || self.min_witnesses > self.k_min {
            return fail(format!(
                "witness count {} exceeds the smallest bag size K = {} (or is zero)",
                self.min_witnesses, self.k_min
            ));
        }
        if !(self.separation > 0.0) || !self.separation.is_finite() {
            return fail(format!("separation must be positive, got {}", self.separation));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return fail(format!("sigma must be positive, got {}", self.sigma));
        }
        if self.feature_dim == 0 {
            return fail("feature dim must be positive".into());
        }
        if self.kind == SynthKind::Subtype && self.feature_dim < 2 {
            return fail("subtype generator needs feature dim >= 2".into());
        }
        if self.bags_per_class == 0 {
            return fail("bags per class must be positive".into());
        }
        Ok(())
    }

    /// Witness count for a bag of `k` instances.
    pub fn witnesses(&self, k: usize) -> usize {
        let w = libm::ceil(self.witness_rate * k as f64) as usize;
        w.max(self.min_witnesses).min(k)
    }
}

fn gaussian_vec(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

/// Two random orthonormal directions (Gram-Schmidt).
fn directions(rng: &mut Rng, n: usize, count: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(count);
    while out.len() < count {
        let mut v = gaussian_vec(rng, n);
        for d in &out {
            let dot: f64 = v.iter().zip(d).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(d).for_each(|(a, b)| *a -= dot * b);
        }
        let len = norm(&v);
        if len > 1e-6 {
            v.iter_mut().for_each(|a| *a /= len);
            out.push(v);
        }
    }
    out
}

fn scaled(v: &[f64], s: f64) -> Vec<f64> {
    v.iter().map(|x| x * s).collect()
}

struct BagPlan {
    label: u8,
    size: usize,
}

fn plan_bags(cfg: &SynthConfig, rng: &mut Rng) -> Vec<BagPlan> {
    let mut labels: Vec<u8> = (0..cfg.bags_per_class * 2)
        .map(|i| (i % 2) as u8)
        .collect();
    labels.shuffle(rng);
    labels
        .into_iter()
        .map(|label| BagPlan {
            label,
            size: rng.random_range(cfg.k_min..=cfg.k_max),
        })
        .collect()
}

fn grid_coords(k: usize) -> Vec<[f64; 2]> {
    let width = libm::ceil(libm::sqrt(k as f64)) as usize;
    (0..k)
        .map(|i| [(i % width) as f64, (i / width) as f64])
        .collect()
}

/// Samples one bag: `witness` instances drawn around `witness_mean`, the rest
/// around `filler_mean`, witness positions shuffled through the bag.
#[allow(clippy::too_many_arguments)]
fn sample_bag(
    rng: &mut Rng,
    cfg: &SynthConfig,
    id: alloc::string::String,
    plan: &BagPlan,
    witnesses: usize,
    witness_mean: &[f64],
    witness_label: InstanceLabel,
    filler_mean: &[f64],
    filler_label: InstanceLabel,
) -> Result<(Bag, Vec<InstanceLabel>)> {
    let n = cfg.feature_dim;
    let mut labels: Vec<InstanceLabel> = (0..plan.size)
        .map(|i| {
            if i < witnesses {
                witness_label
            } else {
                filler_label
            }
        })
        .collect();
    labels.shuffle(rng);
    let mut data = Vec::with_capacity(plan.size * n);
    for &l in &labels {
        let mean = if l == witness_label {
            witness_mean
        } else {
            filler_mean
        };
        for &m in mean {
            let z: f64 = StandardNormal.sample(rng);
            data.push(m + cfg.sigma * z);
        }
    }
    let mut bag = Bag::new(id, plan.label, Matrix::from_vec(plan.size, n, data)?)?;
    if cfg.coords {
        bag = bag.with_coords(grid_coords(plan.size))?;
    }
    Ok((bag, labels))
}

fn finish(
    cfg: &SynthConfig,
    seed: u64,
    bags: Vec<(Bag, Vec<InstanceLabel>)>,
    means: Vec<Vec<f64>>,
) -> Result<Dataset> {
    let (bags, latent): (Vec<_>, Vec<_>) = bags.into_iter().unzip();
    let mut ds = Dataset::new(
        format!("{}-seed{}", cfg.kind.as_str(), seed),
        cfg.feature_dim,
        bags,
    )?;
    ds.latent = Some(latent);
    ds.provenance = Some(Provenance {
        kind: cfg.kind,
        seed,
        config: cfg.clone(),
        means,
    });
    ds.check_bag_rule()?;
    Ok(ds)
}

/// Witness-versus-background bags.
///
/// Negative instances come from `N(0, σ²I)`, positive ones from `N(μ⁺, σ²I)`
/// with `‖μ⁺‖ = separation` along a random direction. Positive bags carry
/// `max(ceil(rate·K), min_witnesses)` positives; negative bags none.
pub fn gen_binary(cfg: &SynthConfig, seed: u64) -> Result<Dataset> {
    if cfg.kind != SynthKind::Binary {
        return Err(Error::Config("gen_binary needs kind = binary".into()));
    }
    cfg.validate()?;
    let mut rng = Rng::from_stream(seed, "data");
    let n = cfg.feature_dim;
    let dir = directions(&mut rng, n, 1).remove(0);
    let neg_mean = alloc::vec![0.0; n];
    let pos_mean = scaled(&dir, cfg.separation);

    let plans = plan_bags(cfg, &mut rng);
    let mut bags = Vec::with_capacity(plans.len());
    for (i, plan) in plans.iter().enumerate() {
        let w = if plan.label == 1 {
            cfg.witnesses(plan.size)
        } else {
            0
        };
        bags.push(sample_bag(
            &mut rng,
            cfg,
            format!("bag{i:04}"),
            plan,
            w,
            &pos_mean,
            InstanceLabel::Positive,
            &neg_mean,
            InstanceLabel::Negative,
        )?);
    }
    finish(cfg, seed, bags, alloc::vec![neg_mean, pos_mean])
}

/// Two-subtype bags with shared filler tissue.
///
/// Subtype A (label-1 witnesses), subtype B (label-0 witnesses) and filler
/// (`Other`) sit on an equilateral triangle of side `separation`: A and B at
/// `±separation/2` along one direction, filler midway between them and offset
/// along an orthogonal direction. A bag holds witnesses of exactly one subtype.
pub fn gen_subtype(cfg: &SynthConfig, seed: u64) -> Result<Dataset> {
    if cfg.kind != SynthKind::Subtype {
        return Err(Error::Config("gen_subtype needs kind = subtype".into()));
    }
    cfg.validate()?;
    let mut rng = Rng::from_stream(seed, "data");
    let n = cfg.feature_dim;
    let dirs = directions(&mut rng, n, 2);
    let half = cfg.separation / 2.0;
    let a_mean = scaled(&dirs[0], half);
    let b_mean = scaled(&dirs[0], -half);
    let other_mean = scaled(&dirs[1], cfg.separation * libm::sqrt(3.0) / 2.0);

    let plans = plan_bags(cfg, &mut rng);
    let mut bags = Vec::with_capacity(plans.len());
    for (i, plan) in plans.iter().enumerate() {
        let w = cfg.witnesses(plan.size);
        let (mean, label) = if plan.label == 1 {
            (&a_mean, InstanceLabel::Positive)
        } else {
            (&b_mean, InstanceLabel::Negative)
        };
        bags.push(sample_bag(
            &mut rng,
            cfg,
            format!("bag{i:04}"),
            plan,
            w,
            mean,
            label,
            &other_mean,
            InstanceLabel::Other,
        )?);
    }
    finish(cfg, seed, bags, alloc::vec![a_mean, b_mean, other_mean])
}

/// Dispatches on `cfg.kind`.
pub fn generate(cfg: &SynthConfig, seed: u64) -> Result<Dataset> {
    match cfg.kind {
        SynthKind::Binary => gen_binary(cfg, seed),
        SynthKind::Subtype => gen_subtype(cfg, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: SynthKind) -> SynthConfig {
        SynthConfig {
            kind,
            bags_per_class: 10,
            k_min: 5,
            k_max: 30,
            feature_dim: 6,
            ..SynthConfig::default()
        }
    }

    fn dist(a: &[f64], b: &[f64]) -> f64 {
        libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
    }

    #[test]
    fn binary_bags_follow_the_bag_rule() {
        let ds = gen_binary(&small(SynthKind::Binary), 3).unwrap();
        assert_eq!(ds.len(), 20);
        let latent = ds.latent.as_ref().unwrap();
        for (bag, l) in ds.bags.iter().zip(latent) {
            let pos = l.iter().filter(|&&x| x == InstanceLabel::Positive).count();
            if bag.label == 1 {
                assert!(pos >= 1);
                assert_eq!(pos, small(SynthKind::Binary).witnesses(bag.len()));
            } else {
                assert_eq!(pos, 0);
            }
            assert!((5..=30).contains(&bag.len()));
            assert_eq!(bag.coords.as_ref().unwrap().len(), bag.len());
        }
        assert_eq!(ds.labels().iter().filter(|&&y| y == 1).count(), 10);
    }

    #[test]
    fn full_witness_rate_fills_positive_bags() {
        let cfg = SynthConfig {
            witness_rate: 1.0,
            ..small(SynthKind::Binary)
        };
        let ds = gen_binary(&cfg, 5).unwrap();
        for (bag, l) in ds.bags.iter().zip(ds.latent.as_ref().unwrap()) {
            if bag.label == 1 {
                assert!(l.iter().all(|&x| x == InstanceLabel::Positive));
            }
        }
        let cfg = SynthConfig {
            witness_rate: 1.0,
            ..small(SynthKind::Subtype)
        };
        let ds = gen_subtype(&cfg, 5).unwrap();
        assert!(ds
            .latent
            .as_ref()
            .unwrap()
            .iter()
            .flatten()
            .all(|&x| x != InstanceLabel::Other));
    }

    #[test]
    fn subtype_bags_never_mix_subtypes() {
        let ds = gen_subtype(&small(SynthKind::Subtype), 9).unwrap();
        for (bag, l) in ds.bags.iter().zip(ds.latent.as_ref().unwrap()) {
            let a = l.iter().filter(|&&x| x == InstanceLabel::Positive).count();
            let b = l.iter().filter(|&&x| x == InstanceLabel::Negative).count();
            if bag.label == 1 {
                assert!(a >= 1 && b == 0);
            } else {
                assert!(b >= 1 && a == 0);
            }
        }
        ds.check_bag_rule().unwrap();
    }

    #[test]
    fn infeasible_configs_are_rejected() {
        let cfg = SynthConfig {
            min_witnesses: 6,
            ..small(SynthKind::Binary)
        };
        let err = gen_binary(&cfg, 1).unwrap_err();
        assert!(matches!(&err, Error::Config(m) if m.contains("witness count")));
        for bad in [
            SynthConfig { witness_rate: 0.0, ..small(SynthKind::Binary) },
            SynthConfig { witness_rate: 1.5, ..small(SynthKind::Binary) },
            SynthConfig { k_min: 0, ..small(SynthKind::Binary) },
            SynthConfig { separation: 0.0, ..small(SynthKind::Binary) },
        ] {
            assert!(gen_binary(&bad, 1).is_err());
        }
        assert!(gen_binary(&small(SynthKind::Subtype), 1).is_err());
    }

    #[test]
    fn generators_are_pure_in_seed() {
        let cfg = small(SynthKind::Binary);
        assert_eq!(gen_binary(&cfg, 4).unwrap(), gen_binary(&cfg, 4).unwrap());
        assert_ne!(gen_binary(&cfg, 4).unwrap(), gen_binary(&cfg, 5).unwrap());
    }

    // Statistical oracle: sample means of 10k instances sit within
    // 3σ/√N of the configured cluster mean on every coordinate.
    #[test]
    fn binary_instance_means_match_config() {
        let cfg = SynthConfig {
            bags_per_class: 50,
            k_min: 100,
            k_max: 100,
            feature_dim: 4,
            witness_rate: 1.0,
            ..SynthConfig::default()
        };
        let ds = gen_binary(&cfg, 17).unwrap();
        let means = &ds.provenance.as_ref().unwrap().means;
        assert!((dist(&means[0], &means[1]) - cfg.separation).abs() < 1e-12);
        for (class, mean) in [(0u8, &means[0]), (1u8, &means[1])] {
            let mut sum = [0.0; 4];
            let mut count = 0usize;
            for bag in ds.bags.iter().filter(|b| b.label == class) {
                for r in 0..bag.len() {
                    for (s, v) in sum.iter_mut().zip(bag.features.row(r)) {
                        *s += v;
                    }
                    count += 1;
                }
            }
            assert_eq!(count, 5000);
            let tol = 3.0 * cfg.sigma / libm::sqrt(count as f64);
            for (s, m) in sum.iter().zip(mean.iter()) {
                assert!((s / count as f64 - m).abs() < tol);
            }
        }
    }

    #[test]
    fn subtype_cluster_distances_match_config() {
        let cfg = SynthConfig {
            kind: SynthKind::Subtype,
            bags_per_class: 50,
            k_min: 100,
            k_max: 100,
            feature_dim: 5,
            witness_rate: 0.5,
            separation: 3.0,
            ..SynthConfig::default()
        };
        let ds = gen_subtype(&cfg, 23).unwrap();
        let latent = ds.latent.as_ref().unwrap();
        let mut sums = [[0.0; 5]; 3];
        let mut counts = [0usize; 3];
        for (bag, labels) in ds.bags.iter().zip(latent) {
            for (r, l) in labels.iter().enumerate() {
                let c = match l {
                    InstanceLabel::Positive => 0,
                    InstanceLabel::Negative => 1,
                    InstanceLabel::Other => 2,
                };
                counts[c] += 1;
                for (s, v) in sums[c].iter_mut().zip(bag.features.row(r)) {
                    *s += v;
                }
            }
        }
        let emp: Vec<Vec<f64>> = (0..3)
            .map(|c| sums[c].iter().map(|s| s / counts[c] as f64).collect())
            .collect();
        let min_count = *counts.iter().min().unwrap() as f64;
        // mean estimate error per cluster is ~σ√(n/N); allow 3x for each end
        let tol = 6.0 * cfg.sigma * libm::sqrt(5.0 / min_count);
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            assert!((dist(&emp[i], &emp[j]) - cfg.separation).abs() < tol);
        }
        let means = &ds.provenance.as_ref().unwrap().means;
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            assert!((dist(&means[i], &means[j]) - cfg.separation).abs() < 1e-12);
        }
    }
}

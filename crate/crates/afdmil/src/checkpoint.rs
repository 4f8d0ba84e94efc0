//! Model checkpoints.
//!
//! Layout: magic `AFDC`, little-endian `u32` format version, `u64` manifest
//! length, the UTF-8 TOML manifest, then every tensor listed in the manifest
//! as row-major little-endian `f64` values, in manifest order.

use std::fs;
use std::path::Path;

use afdmil_core::metrics::MetricsReport;
use afdmil_core::model::{AfdModel, FusionBackend, ModelDims};
use afdmil_core::numerics::{Matrix, ParamStore, RNG_ALGORITHM};
use serde::{Deserialize, Serialize};

use crate::config::TrainSection;
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"AFDC";
pub const VERSION: u32 = 1;
const PREFIX_LEN: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    format_version: u32,
    epoch: usize,
    seed: u64,
    rng: String,
    test_fraction: f64,
    dims: DimsSection,
    train: TrainSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    validation: Option<MetricsSection>,
    tensors: Vec<TensorEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DimsSection {
    n: usize,
    h1: usize,
    h2: usize,
    d: usize,
    fusion: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorEntry {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricsSection {
    acc: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    auc: Option<f64>,
    recall: f64,
    precision: f64,
    tp: usize,
    fp: usize,
    tn: usize,
    #[serde(rename = "fn")]
    fn_: usize,
    threshold: f64,
}

impl MetricsSection {
    fn from_report(m: &MetricsReport) -> Self {
        Self {
            acc: m.acc,
            auc: m.auc,
            recall: m.recall,
            precision: m.precision,
            tp: m.tp,
            fp: m.fp,
            tn: m.tn,
            fn_: m.fn_,
            threshold: m.threshold,
        }
    }

    fn to_report(&self) -> MetricsReport {
        MetricsReport {
            acc: self.acc,
            auc: self.auc,
            recall: self.recall,
            precision: self.precision,
            tp: self.tp,
            fp: self.fp,
            tn: self.tn,
            fn_: self.fn_,
            threshold: self.threshold,
            recall_degenerate: self.tp + self.fn_ == 0,
            precision_degenerate: self.tp + self.fp == 0,
        }
    }
}

/// A trained model plus what is needed to reproduce and audit it.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub model: AfdModel,
    /// Training parameters the model was produced with.
    pub train: TrainSection,
    /// Epoch whose parameters were kept.
    pub epoch: usize,
    /// Master seed of the run.
    pub seed: u64,
    pub rng: String,
    /// Held-out share used when the run split its dataset.
    pub test_fraction: f64,
    pub validation: Option<MetricsReport>,
}

impl Checkpoint {
    pub fn new(model: AfdModel, train: TrainSection, epoch: usize, seed: u64, test_fraction: f64) -> Self {
        Self {
            model,
            train,
            epoch,
            seed,
            rng: RNG_ALGORITHM.into(),
            test_fraction,
            validation: None,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let dims = self.model.dims();
        let manifest = Manifest {
            format_version: VERSION,
            epoch: self.epoch,
            seed: self.seed,
            rng: self.rng.clone(),
            test_fraction: self.test_fraction,
            dims: DimsSection {
                n: dims.n,
                h1: dims.h1,
                h2: dims.h2,
                d: dims.d,
                fusion: dims.fusion.as_str().into(),
            },
            train: self.train.clone(),
            validation: self.validation.as_ref().map(MetricsSection::from_report),
            tensors: self
                .model
                .params
                .iter()
                .map(|p| TensorEntry {
                    name: p.name.clone(),
                    rows: p.value.rows(),
                    cols: p.value.cols(),
                })
                .collect(),
        };
        let text = toml::to_string(&manifest).expect("checkpoint manifest serializes");
        let payload: usize = self.model.params.scalar_count() * 8;
        let mut out = Vec::with_capacity(PREFIX_LEN + text.len() + payload);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(text.len() as u64).to_le_bytes());
        out.extend_from_slice(text.as_bytes());
        for p in self.model.params.iter() {
            for v in p.value.as_slice() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    /// Parses a checkpoint; `path` is only used in error messages.
    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let bad = |msg: String| Error::format(path, msg);
        if bytes.len() < PREFIX_LEN {
            return Err(bad(format!("{} bytes is too short for a checkpoint", bytes.len())));
        }
        if &bytes[..4] != MAGIC {
            return Err(bad(format!("bad magic {:?}, expected \"AFDC\"", &bytes[..4])));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(bad(format!("unsupported checkpoint version {version}")));
        }
        let mlen = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
        let body = &bytes[PREFIX_LEN..];
        let mlen = usize::try_from(mlen)
            .ok()
            .filter(|&m| m <= body.len())
            .ok_or_else(|| bad(format!("manifest length {mlen} exceeds the file")))?;
        let text = std::str::from_utf8(&body[..mlen])
            .map_err(|_| bad("manifest is not UTF-8".into()))?;
        let manifest: Manifest = toml::from_str(text).map_err(|source| Error::Toml {
            path: path.into(),
            source,
        })?;
        if manifest.format_version != VERSION {
            return Err(bad(format!(
                "manifest declares version {}",
                manifest.format_version
            )));
        }

        let mut params = ParamStore::new();
        let mut rest = &body[mlen..];
        for t in &manifest.tensors {
            let need = t.rows * t.cols * 8;
            if rest.len() < need {
                return Err(bad(format!(
                    "tensor `{}` ({}x{}) is truncated: {} of {need} bytes present",
                    t.name,
                    t.rows,
                    t.cols,
                    rest.len()
                )));
            }
            let data = rest[..need]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            rest = &rest[need..];
            params.add(&t.name, Matrix::from_vec(t.rows, t.cols, data)?)?;
        }
        if !rest.is_empty() {
            return Err(bad(format!("{} trailing bytes after the last tensor", rest.len())));
        }
        let dims = ModelDims {
            n: manifest.dims.n,
            h1: manifest.dims.h1,
            h2: manifest.dims.h2,
            d: manifest.dims.d,
            fusion: FusionBackend::parse(&manifest.dims.fusion)?,
        };
        let model = AfdModel::from_params(dims, params)?;
        Ok(Self {
            model,
            train: manifest.train,
            epoch: manifest.epoch,
            seed: manifest.seed,
            rng: manifest.rng,
            test_fraction: manifest.test_fraction,
            validation: manifest.validation.as_ref().map(MetricsSection::to_report),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }

    /// Loads a checkpoint and checks it accepts `n`-dimensional features.
    pub fn load_for_dim(path: &Path, n: usize) -> Result<Self> {
        let ckpt = Self::load(path)?;
        let have = ckpt.model.dims().n;
        if have != n {
            return Err(afdmil_core::Error::Dimension {
                op: "checkpoint feature dim vs dataset",
                left: (1, have),
                right: (1, n),
            }
            .into());
        }
        Ok(ckpt)
    }
}

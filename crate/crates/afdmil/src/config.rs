//! Run configuration: one TOML document, overridden by command-line flags.
//!
//! Every section and key is optional; missing keys take the defaults below.
//!
//! ```toml
//! seed = 0
//!
//! [data]
//! kind = "binary"          # or "subtype"
//! bags_per_class = 150
//! k_min = 50
//! k_max = 200
//! feature_dim = 32
//! witness_rate = 0.05
//! min_witnesses = 1
//! separation = 2.0
//! sigma = 1.0
//! coords = true
//! test_fraction = 0.3333333333333333
//!
//! [model]
//! h1 = 256
//! h2 = 128
//! d = 128
//! fusion = "gated"         # or "mean"
//!
//! [train]
//! lr = 1e-4
//! beta1 = 0.9
//! beta2 = 0.999
//! eps = 1e-8
//! weight_decay = 1e-5
//! epochs = 50
//! k = 8
//! mode = "max-p"           # or "max-pn"
//! feature_distillation = true
//! attention_channel = true
//! global_loss = true
//! threshold = 0.5
//! validation_fraction = 0.2
//!
//! [ablate]
//! k_list = [2, 4, 8, 16, 32, 64]
//! ```

use std::fs;
use std::path::Path;

use afdmil_core::data::{SynthConfig, SynthKind};
use afdmil_core::model::{DistillConfig, DistillMode, FusionBackend, ModelDims};
use afdmil_core::training::{AdamConfig, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const RESOLVED_CONFIG_FILE: &str = "config.toml";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub data: DataSection,
    pub model: ModelSection,
    pub train: TrainSection,
    pub ablate: AblateSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub kind: String,
    pub bags_per_class: usize,
    pub k_min: usize,
    pub k_max: usize,
    pub feature_dim: usize,
    pub witness_rate: f64,
    pub min_witnesses: usize,
    pub separation: f64,
    pub sigma: f64,
    pub coords: bool,
    /// Share of each class held out for testing by `train`, `eval` and `ablate`.
    pub test_fraction: f64,
}

impl Default for DataSection {
    fn default() -> Self {
        let s = SynthConfig::default();
        Self {
            kind: s.kind.as_str().into(),
            bags_per_class: s.bags_per_class,
            k_min: s.k_min,
            k_max: s.k_max,
            feature_dim: s.feature_dim,
            witness_rate: s.witness_rate,
            min_witnesses: s.min_witnesses,
            separation: s.separation,
            sigma: s.sigma,
            coords: s.coords,
            test_fraction: 1.0 / 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub h1: usize,
    pub h2: usize,
    pub d: usize,
    pub fusion: String,
}

impl Default for ModelSection {
    fn default() -> Self {
        let m = ModelDims::new(1);
        Self {
            h1: m.h1,
            h2: m.h2,
            d: m.d,
            fusion: m.fusion.as_str().into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub k: usize,
    pub mode: String,
    pub feature_distillation: bool,
    pub attention_channel: bool,
    pub global_loss: bool,
    pub threshold: f64,
    pub validation_fraction: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self {
            lr: adam.lr,
            beta1: adam.beta1,
            beta2: adam.beta2,
            eps: adam.eps,
            weight_decay: adam.weight_decay,
            epochs: 50,
            k: 8,
            mode: DistillMode::MaxPositive.as_str().into(),
            feature_distillation: true,
            attention_channel: true,
            global_loss: true,
            threshold: 0.5,
            validation_fraction: 0.2,
        }
    }
}

impl TrainSection {
    pub fn from_train_config(c: &TrainConfig, validation_fraction: f64) -> Self {
        Self {
            lr: c.adam.lr,
            beta1: c.adam.beta1,
            beta2: c.adam.beta2,
            eps: c.adam.eps,
            weight_decay: c.adam.weight_decay,
            epochs: c.epochs,
            k: c.distill.k(),
            mode: c.distill.mode().as_str().into(),
            feature_distillation: c.feature_distillation,
            attention_channel: c.attention_channel,
            global_loss: c.global_loss,
            threshold: c.threshold,
            validation_fraction,
        }
    }

    pub fn distill(&self) -> Result<DistillConfig> {
        Ok(DistillConfig::new(self.k, DistillMode::parse(&self.mode)?)?)
    }

    /// Core training parameters; `fusion` and `seed` come from elsewhere in
    /// the run configuration.
    pub fn to_train_config(&self, fusion: FusionBackend, seed: u64) -> Result<TrainConfig> {
        let mut c = TrainConfig::new(self.distill()?);
        c.adam = AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
            weight_decay: self.weight_decay,
        };
        c.epochs = self.epochs;
        c.seed = seed;
        c.fusion = fusion;
        c.feature_distillation = self.feature_distillation;
        c.attention_channel = self.attention_channel;
        c.global_loss = self.global_loss;
        c.threshold = self.threshold;
        c.validate()?;
        Ok(c)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblateSection {
    pub k_list: Vec<usize>,
}

impl Default for AblateSection {
    fn default() -> Self {
        Self {
            k_list: vec![2, 4, 8, 16, 32, 64],
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|source| Error::Toml {
            path: path.into(),
            source,
        })
    }

    /// Reads `path` when given, otherwise starts from the defaults.
    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    /// Writes the resolved configuration into `dir`.
    pub fn write_resolved(&self, dir: &Path) -> Result<()> {
        let path = dir.join(RESOLVED_CONFIG_FILE);
        fs::write(&path, self.to_toml()).map_err(|e| Error::io(&path, e))
    }

    pub fn synth_config(&self) -> Result<SynthConfig> {
        let d = &self.data;
        let cfg = SynthConfig {
            kind: SynthKind::parse(&d.kind)?,
            bags_per_class: d.bags_per_class,
            k_min: d.k_min,
            k_max: d.k_max,
            feature_dim: d.feature_dim,
            witness_rate: d.witness_rate,
            min_witnesses: d.min_witnesses,
            separation: d.separation,
            sigma: d.sigma,
            coords: d.coords,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn fusion(&self) -> Result<FusionBackend> {
        Ok(FusionBackend::parse(&self.model.fusion)?)
    }

    pub fn model_dims(&self, n: usize) -> Result<ModelDims> {
        let dims = ModelDims {
            n,
            h1: self.model.h1,
            h2: self.model.h2,
            d: self.model.d,
            fusion: self.fusion()?,
        };
        dims.validate()?;
        Ok(dims)
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        self.train.to_train_config(self.fusion()?, self.seed)
    }

    /// Checks every section without touching the disk.
    pub fn validate(&self) -> Result<()> {
        self.synth_config()?;
        self.model_dims(self.data.feature_dim)?;
        self.train_config()?;
        let frac_ok = |f: f64| f > 0.0 && f < 1.0;
        if !frac_ok(self.data.test_fraction) {
            return Err(Error::Config(format!(
                "test_fraction must lie in (0, 1), got {}",
                self.data.test_fraction
            )));
        }
        if !frac_ok(self.train.validation_fraction) {
            return Err(Error::Config(format!(
                "validation_fraction must lie in (0, 1), got {}",
                self.train.validation_fraction
            )));
        }
        if self.ablate.k_list.is_empty() {
            return Err(Error::Config("ablate.k_list is empty".into()));
        }
        Ok(())
    }
}

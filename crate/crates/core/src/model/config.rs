use alloc::format;

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DistillMode {
    /// Top-k instances by positive probability.
    MaxPositive,
    /// Top-k/2 by positive probability plus top-k/2 by negative probability.
    MaxPositiveNegative,
}

impl DistillMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::MaxPositive => "max-p",
            Self::MaxPositiveNegative => "max-pn",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "max-p" => Ok(Self::MaxPositive),
            "max-pn" => Ok(Self::MaxPositiveNegative),
            other => Err(Error::Config(format!(
                "unknown distill mode `{other}` (expected max-p or max-pn)"
            ))),
        }
    }
}

/// Number of distilled features per channel and the instance-channel policy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DistillConfig {
    k: usize,
    mode: DistillMode,
}

impl DistillConfig {
    pub fn new(k: usize, mode: DistillMode) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("distilled feature count k must be >= 1".into()));
        }
        if mode == DistillMode::MaxPositiveNegative && k % 2 == 1 {
            return Err(Error::Config(format!(
                "max-pn splits k into two equal halves; k must be even, got {k}"
            )));
        }
        Ok(Self { k, mode })
    }

    pub fn max_positive(k: usize) -> Result<Self> {
        Self::new(k, DistillMode::MaxPositive)
    }

    pub fn max_positive_negative(k: usize) -> Result<Self> {
        Self::new(k, DistillMode::MaxPositiveNegative)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn mode(&self) -> DistillMode {
        self.mode
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FusionBackend {
    /// Gated attention pooling.
    Gated,
    /// Plain average of the distilled features.
    Mean,
}

impl FusionBackend {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Gated => "gated",
            Self::Mean => "mean",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gated" => Ok(Self::Gated),
            "mean" => Ok(Self::Mean),
            other => Err(Error::Config(format!(
                "unknown fusion backend `{other}` (expected gated or mean)"
            ))),
        }
    }
}

/// Layer widths of every sub-network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ModelDims {
    /// Instance feature dimension.
    pub n: usize,
    /// Hidden width of the instance classifier and of the final classifier.
    pub h1: usize,
    /// Hidden width of the attention scorer.
    pub h2: usize,
    /// Width of the gated-attention fusion branches.
    pub d: usize,
    pub fusion: FusionBackend,
}

impl ModelDims {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            h1: 256,
            h2: 128,
            d: 128,
            fusion: FusionBackend::Gated,
        }
    }

    /// Every hidden width equal to 8; used by gradient checks and examples.
    pub fn small(n: usize) -> Self {
        Self {
            n,
            h1: 8,
            h2: 8,
            d: 8,
            fusion: FusionBackend::Gated,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.h1 == 0 || self.h2 == 0 || self.d == 0 {
            return Err(Error::Config(format!(
                "model widths must be positive: n={} h1={} h2={} d={}",
                self.n, self.h1, self.h2, self.d
            )));
        }
        Ok(())
    }
}

/// Per-forward switches, including the ablation toggles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForwardOptions {
    pub distill: DistillConfig,
    /// When off, every instance is fused directly and only the final loss
    /// remains (conventional attention MIL).
    pub feature_distillation: bool,
    /// Attention channel: its k features join the fusion input and its loss
    /// joins the total.
    pub attention_channel: bool,
    /// Scale the distillation losses by `exp(-|loss3|)`; otherwise sum them.
    pub global_loss: bool,
    /// Overrides the `exp(-|loss3|)` factor with a fixed value. Gradient checks
    /// use it to hold the detached coefficient constant across perturbations.
    pub fixed_global_weight: Option<f64>,
}

impl ForwardOptions {
    /// Full model: both channels and the global loss.
    pub fn new(distill: DistillConfig) -> Self {
        Self {
            distill,
            feature_distillation: true,
            attention_channel: true,
            global_loss: true,
            fixed_global_weight: None,
        }
    }
}

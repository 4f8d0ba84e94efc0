use alloc::string::String;
use alloc::vec::Vec;

use crate::numerics::Matrix;
use crate::{Error, Result};

/// Hidden ground truth for one instance of a synthetic bag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum InstanceLabel {
    Negative = 0,
    Positive = 1,
    /// Tissue that belongs to neither class.
    Other = 2,
}

impl InstanceLabel {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Self::Negative),
            1 => Ok(Self::Positive),
            2 => Ok(Self::Other),
            other => Err(Error::Config(alloc::format!(
                "instance label must be 0, 1 or 2, got {other}"
            ))),
        }
    }
}

/// One slide: `K` instance feature rows and a binary bag label.
#[derive(Clone, Debug, PartialEq)]
pub struct Bag {
    pub id: String,
    pub label: u8,
    pub features: Matrix,
    /// Optional per-instance grid position, `[x, y]`.
    pub coords: Option<Vec<[f64; 2]>>,
}

impl Bag {
    pub fn new(id: impl Into<String>, label: u8, features: Matrix) -> Result<Self> {
        let bag = Self {
            id: id.into(),
            label,
            features,
            coords: None,
        };
        bag.validate()?;
        Ok(bag)
    }

    pub fn with_coords(mut self, coords: Vec<[f64; 2]>) -> Result<Self> {
        self.coords = Some(coords);
        self.validate()?;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.rows() == 0
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn target(&self) -> f64 {
        f64::from(self.label)
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.rows() == 0 {
            return Err(Error::EmptyBag("bag has no instances"));
        }
        if self.label > 1 {
            return Err(Error::Config(alloc::format!(
                "bag `{}` label must be 0 or 1, got {}",
                self.id,
                self.label
            )));
        }
        if let Some(c) = &self.coords {
            if c.len() != self.len() {
                return Err(Error::Dimension {
                    op: "bag coords",
                    left: (self.len(), 2),
                    right: (c.len(), 2),
                });
            }
        }
        Ok(())
    }
}

/// Kind of synthetic generator that produced a dataset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SynthKind {
    /// Witnesses against background, a tumour versus normal analog.
    Binary,
    /// Two witness subtypes plus shared filler tissue.
    Subtype,
}

impl SynthKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Binary => "binary",
            Self::Subtype => "subtype",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(Self::Binary),
            "subtype" => Ok(Self::Subtype),
            other => Err(Error::Config(alloc::format!(
                "unknown generator kind `{other}` (expected binary or subtype)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub kind: SynthKind,
    pub seed: u64,
    pub config: super::SynthConfig,
    /// Cluster means; binary: `[negative, positive]`, subtype: `[a, b, other]`.
    pub means: Vec<Vec<f64>>,
}

/// A named collection of bags.
///
/// Latent instance labels are kept beside the bags rather than inside them so
/// the training path, which only sees `&[Bag]`, cannot read them.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub feature_dim: usize,
    pub bags: Vec<Bag>,
    pub latent: Option<Vec<Vec<InstanceLabel>>>,
    pub provenance: Option<Provenance>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, feature_dim: usize, bags: Vec<Bag>) -> Result<Self> {
        let ds = Self {
            name: name.into(),
            feature_dim,
            bags,
            latent: None,
            provenance: None,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.bags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bags.is_empty()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.bags.iter().map(|b| b.label).collect()
    }

    pub fn find(&self, id: &str) -> Option<usize> {
        self.bags.iter().position(|b| b.id == id)
    }

    pub fn latent_for(&self, bag: usize) -> Option<&[InstanceLabel]> {
        self.latent.as_ref().map(|l| l[bag].as_slice())
    }

    /// A dataset made of the listed bags, latent labels carried along.
    pub fn subset(&self, indices: &[usize], name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            feature_dim: self.feature_dim,
            bags: indices.iter().map(|&i| self.bags[i].clone()).collect(),
            latent: self
                .latent
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i].clone()).collect()),
            provenance: self.provenance.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for bag in &self.bags {
            bag.validate()?;
            if bag.feature_dim() != self.feature_dim {
                return Err(Error::Dimension {
                    op: "dataset feature dim",
                    left: (bag.len(), bag.feature_dim()),
                    right: (bag.len(), self.feature_dim),
                });
            }
        }
        if let Some(latent) = &self.latent {
            if latent.len() != self.bags.len() {
                return Err(Error::Config(alloc::format!(
                    "latent labels for {} bags, dataset has {}",
                    latent.len(),
                    self.bags.len()
                )));
            }
            for (bag, labels) in self.bags.iter().zip(latent) {
                if labels.len() != bag.len() {
                    return Err(Error::Dimension {
                        op: "latent labels",
                        left: (bag.len(), 1),
                        right: (labels.len(), 1),
                    });
                }
            }
        }
        Ok(())
    }

    /// Bag label rule: a bag is positive iff it holds a positive instance.
    pub fn check_bag_rule(&self) -> Result<()> {
        let Some(latent) = &self.latent else {
            return Ok(());
        };
        for (bag, labels) in self.bags.iter().zip(latent) {
            let any_pos = labels.contains(&InstanceLabel::Positive);
            if any_pos != (bag.label == 1) {
                return Err(Error::Config(alloc::format!(
                    "bag `{}` has label {} but {} positive instances",
                    bag.id,
                    bag.label,
                    if any_pos { "some" } else { "no" }
                )));
            }
        }
        Ok(())
    }
}

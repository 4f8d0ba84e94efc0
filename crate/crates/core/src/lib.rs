//! Attention-based feature distillation for multiple instance learning.
//!
//! This crate holds the numerical core: a small dense matrix type, a
//! reverse-mode gradient tape over a named parameter store, the dual-channel
//! distillation network with its gated-attention fusion head, the Adam
//! training loop, synthetic bag generators and bag-level metrics.
//!
//! It is `no_std` and only needs an allocator. File formats, experiment
//! drivers and the command line live in the `afdmil` companion crate.
//!
//! ```
//! use afdmil_core::data::{gen_binary, SynthConfig};
//! use afdmil_core::model::{AfdModel, DistillConfig, ForwardOptions, ModelDims};
//! use afdmil_core::numerics::Rng;
//!
//! let mut synth = SynthConfig::default();
//! synth.bags_per_class = 2;
//! synth.feature_dim = 8;
//! let data = gen_binary(&synth, 7).unwrap();
//!
//! let dims = ModelDims::small(8);
//! let model = AfdModel::new(dims, &mut Rng::from_stream(7, "init")).unwrap();
//! let opts = ForwardOptions::new(DistillConfig::max_positive(4).unwrap());
//! let trace = model.forward_bag(&data.bags[0], &opts).unwrap();
//! assert!(trace.final_prob > 0.0 && trace.final_prob < 1.0);
//! ```
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod data;
mod error;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod training;

pub use error::{Error, Result};

//! File formats, experiment drivers and the `afd-mil` command line for the
//! attention-based feature distillation MIL toolkit in [`afdmil_core`].

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod dataset;
mod error;
pub mod experiment;
pub mod export;
pub mod features;
pub mod report;

pub use error::{Error, Result};

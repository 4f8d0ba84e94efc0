//! Bags, datasets, synthetic generators and stratified splitting.

mod bag;
mod split;
mod synth;

pub use bag::{Bag, Dataset, InstanceLabel, Provenance, SynthKind};
pub use split::split;
pub(crate) use split::split_stream as split_with_stream;
pub use synth::{gen_binary, gen_subtype, generate, SynthConfig};

//! The dual-channel distillation network.

mod config;
mod distill;
mod network;

pub use config::{DistillConfig, DistillMode, ForwardOptions, FusionBackend, ModelDims};
pub use distill::{
    bottom_k, distill_by_attention, distill_instances, select_instances, top_k,
    InstanceDistillation, InstanceSelection,
};
pub use network::{
    global_loss, param_layout, AfdModel, AttentionOutput, ForwardTrace, Network,
};

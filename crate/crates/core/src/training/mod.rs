//! Optimizer, epoch loop and checkpoint selection.

mod adam;
mod train;

pub use adam::{Adam, AdamConfig};
pub use train::{
    evaluate, predict, select_checkpoint, train, validation_split, EpochRecord, TrainConfig,
    TrainOutcome,
};

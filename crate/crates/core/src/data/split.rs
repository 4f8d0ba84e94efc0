use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::Dataset;
use crate::numerics::Rng;
use crate::{Error, Result};

/// Stratified split into `(train, test)`.
///
/// Each class contributes `round(fraction · count)` bags to the test side.
/// Both partitions keep the original bag order.
pub fn split(dataset: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    split_stream(dataset, test_fraction, seed, "split")
}

pub(crate) fn split_stream(
    dataset: &Dataset,
    test_fraction: f64,
    seed: u64,
    stream: &str,
) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!(
            "split fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let mut rng = Rng::from_stream(seed, stream);
    let mut in_test = alloc::vec![false; dataset.len()];
    for class in [0u8, 1u8] {
        let mut members: Vec<usize> = dataset
            .bags
            .iter()
            .enumerate()
            .filter(|(_, b)| b.label == class)
            .map(|(i, _)| i)
            .collect();
        if members.is_empty() {
            return Err(Error::Config(format!(
                "cannot stratify: dataset `{}` has no bags of class {class}",
                dataset.name
            )));
        }
        members.shuffle(&mut rng);
        let take = libm::round(test_fraction * members.len() as f64) as usize;
        for &i in &members[..take] {
            in_test[i] = true;
        }
    }
    let (test, train): (Vec<usize>, Vec<usize>) = (0..dataset.len()).partition(|&i| in_test[i]);
    Ok((
        dataset.subset(&train, format!("{}-train", dataset.name)),
        dataset.subset(&test, format!("{}-test", dataset.name)),
    ))
}

use serde::{Deserialize, Serialize};

use super::cart::{Result, TreeError};
use super::rng::{SeededRng, SPLIT_STREAM};

pub const TRAIN_RATIO: f64 = 0.75;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffles `0..n` with Fisher–Yates on the split stream of `seed` and puts
/// the first `ceil(ratio * n)` indices in the training fold.
pub fn split_train_test(n: usize, ratio: f64, seed: u64) -> Result<SplitSpec> {
    let cut = (ratio * n as f64).ceil() as usize;
    if !(ratio > 0.0 && ratio < 1.0) || n < 2 || cut == 0 || cut >= n {
        return Err(TreeError::DegenerateSplit { n, ratio });
    }
    let mut order: Vec<usize> = (0..n).collect();
    SeededRng::with_stream(seed, SPLIT_STREAM).shuffle(&mut order);
    let test = order.split_off(cut);
    Ok(SplitSpec { train: order, test })
}

//! Scan-level train/validation split.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SplitError {
    #[error("need at least 2 scans to split, got {0}")]
    TooFewScans(usize),
    #[error("split fraction must lie in (0, 1), got {0}")]
    BadFraction(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train_scans: Vec<String>,
    pub validation_scans: Vec<String>,
    pub split_fraction: f64,
    pub seed: u64,
}

impl DatasetSplit {
    pub fn is_validation(&self, scan_id: &str) -> bool {
        self.validation_scans.iter().any(|s| s == scan_id)
    }
}

/// Withholds `round(fraction * N)` whole scans (at least one, at most `N - 1`)
/// for validation. Both output lists keep the input order.
pub fn split_train_validation(
    scans: &[String],
    fraction: f64,
    seed: u64,
) -> Result<DatasetSplit, SplitError> {
    if scans.len() < 2 {
        return Err(SplitError::TooFewScans(scans.len()));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(SplitError::BadFraction(fraction));
    }
    let n = scans.len();
    let n_val = ((fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut is_val = vec![false; n];
    for &i in &order[..n_val] {
        is_val[i] = true;
    }
    let pick = |want: bool| {
        scans
            .iter()
            .zip(&is_val)
            .filter(|(_, &v)| v == want)
            .map(|(s, _)| s.clone())
            .collect()
    };
    Ok(DatasetSplit {
        train_scans: pick(false),
        validation_scans: pick(true),
        split_fraction: fraction,
        seed,
    })
}

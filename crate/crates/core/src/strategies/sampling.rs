//! Random and scan-stratified random sampling.

use std::collections::BTreeMap;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::StrategyError;
use crate::pool::SliceId;

fn check_k(k: usize, available: usize) -> Result<(), StrategyError> {
    if k > available {
        return Err(StrategyError::Argument(format!(
            "cannot select {k} slices from {available} unlabeled"
        )));
    }
    Ok(())
}

/// `k` distinct candidates drawn uniformly. Candidates should be in a fixed
/// order (the pool's sorted order) for the result to depend only on the seed.
pub fn select_random(
    candidates: &[SliceId],
    k: usize,
    seed: u64,
) -> Result<Vec<SliceId>, StrategyError> {
    check_k(k, candidates.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(index::sample(&mut rng, candidates.len(), k)
        .into_iter()
        .map(|i| candidates[i].clone())
        .collect())
}

/// Per-scan quotas for `k` picks. Quotas differ by at most one, with the larger
/// ones going to randomly chosen scans; scans that run out contribute all they
/// have and their deficit is spread over the others by the same rule.
pub fn stratified_quotas(available: &[usize], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let k = k.min(available.iter().sum());
    // largest common level t with sum(min(available, t)) <= k
    let filled = |t: usize| available.iter().map(|&a| a.min(t)).sum::<usize>();
    let mut level = 0;
    while filled(level + 1) <= k && filled(level + 1) > filled(level) {
        level += 1;
    }
    let mut quotas: Vec<usize> = available.iter().map(|&a| a.min(level)).collect();
    let mut open: Vec<usize> = (0..available.len())
        .filter(|&s| available[s] > level)
        .collect();
    open.shuffle(rng);
    for &s in open.iter().take(k - filled(level)) {
        quotas[s] += 1;
    }
    quotas
}

/// Equal share per scan (each scan is a stratum), uniform within a scan.
pub fn select_stratified(
    candidates: &[SliceId],
    k: usize,
    seed: u64,
) -> Result<Vec<SliceId>, StrategyError> {
    check_k(k, candidates.len())?;
    let mut by_scan: BTreeMap<&str, Vec<&SliceId>> = BTreeMap::new();
    for c in candidates {
        by_scan.entry(c.scan_id.as_str()).or_default().push(c);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes: Vec<usize> = by_scan.values().map(Vec::len).collect();
    let quotas = stratified_quotas(&sizes, k, &mut rng);
    let mut picked = Vec::with_capacity(k);
    for (slices, quota) in by_scan.values().zip(quotas) {
        picked.extend(
            index::sample(&mut rng, slices.len(), quota)
                .into_iter()
                .map(|i| slices[i].clone()),
        );
    }
    Ok(picked)
}

//! Representativeness sampling in the reduced embedding space: average
//! distance to the labeled set, and mean-shift clusters sampled in proportion
//! to their size.

use super::StrategyError;
use crate::pool::SliceId;

pub const DEFAULT_BANDWIDTH: f64 = 5.0;
const SHIFT_TOLERANCE: f64 = 1e-3;
const MAX_SHIFT_ITERATIONS: usize = 300;

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `s(x)`: mean Euclidean distance from each candidate to the labeled vectors.
pub fn distance_scores(candidates: &[Vec<f64>], labeled: &[Vec<f64>]) -> Vec<f64> {
    candidates
        .iter()
        .map(|x| labeled.iter().map(|f| euclidean(f, x)).sum::<f64>() / labeled.len() as f64)
        .collect()
}

/// The `k` candidates farthest on average from the labeled set, ties by slice id.
pub fn select_distance_representative(
    candidates: &[(SliceId, Vec<f64>)],
    labeled: &[Vec<f64>],
    k: usize,
) -> Result<Vec<SliceId>, StrategyError> {
    if labeled.is_empty() {
        return Err(StrategyError::NoLabeledSlices);
    }
    if k > candidates.len() {
        return Err(StrategyError::Argument(format!(
            "cannot select {k} slices from {} candidates",
            candidates.len()
        )));
    }
    let vectors: Vec<Vec<f64>> = candidates.iter().map(|(_, v)| v.clone()).collect();
    let scores = distance_scores(&vectors, labeled);
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then_with(|| candidates[a].0.cmp(&candidates[b].0))
    });
    Ok(order
        .into_iter()
        .take(k)
        .map(|i| candidates[i].0.clone())
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterAssignment {
    pub modes: Vec<Vec<f64>>,
    /// Cluster index of each input point.
    pub membership: Vec<usize>,
}

impl ClusterAssignment {
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.modes.len()];
        for &c in &self.membership {
            sizes[c] += 1;
        }
        sizes
    }
}

/// Flat-kernel mean shift. Every point climbs to the mean of all points within
/// `bandwidth` of its current position until it moves less than 1e-3 (or 300
/// steps). Converged positions closer than `bandwidth / 2` to an existing mode
/// join it, visiting points in input order.
pub fn mean_shift(points: &[Vec<f64>], bandwidth: f64) -> Result<ClusterAssignment, StrategyError> {
    if points.is_empty() {
        return Err(StrategyError::Argument(
            "mean shift needs at least one point".into(),
        ));
    }
    if !(bandwidth > 0.0) {
        return Err(StrategyError::Argument(format!(
            "bandwidth must be > 0, got {bandwidth}"
        )));
    }
    let dims = points[0].len();
    let mut modes: Vec<Vec<f64>> = Vec::new();
    let mut membership = Vec::with_capacity(points.len());
    for p in points {
        let mut x = p.clone();
        for _ in 0..MAX_SHIFT_ITERATIONS {
            let mut mean = vec![0.0; dims];
            let mut count = 0usize;
            for q in points {
                if euclidean(q, &x) <= bandwidth {
                    for (m, v) in mean.iter_mut().zip(q) {
                        *m += v;
                    }
                    count += 1;
                }
            }
            mean.iter_mut().for_each(|m| *m /= count as f64);
            let shift = euclidean(&mean, &x);
            x = mean;
            if shift < SHIFT_TOLERANCE {
                break;
            }
        }
        match modes
            .iter()
            .position(|m| euclidean(m, &x) < bandwidth / 2.0)
        {
            Some(c) => membership.push(c),
            None => {
                membership.push(modes.len());
                modes.push(x);
            }
        }
    }
    Ok(ClusterAssignment { modes, membership })
}

/// Largest-remainder allocation of `k` proportional to `sizes`; equal
/// remainders favour the lower cluster index.
pub fn cluster_quotas(sizes: &[usize], k: usize) -> Vec<usize> {
    let total: usize = sizes.iter().sum();
    if total == 0 {
        return vec![0; sizes.len()];
    }
    let mut quotas: Vec<usize> = sizes.iter().map(|&s| k * s / total).collect();
    let mut rest: Vec<usize> = (0..sizes.len()).collect();
    // remainders compared exactly as integers (k*s mod total)
    rest.sort_by(|&a, &b| {
        ((k * sizes[b]) % total)
            .cmp(&((k * sizes[a]) % total))
            .then(a.cmp(&b))
    });
    let missing = k.min(total) - quotas.iter().sum::<usize>();
    for &c in rest.iter().take(missing) {
        quotas[c] += 1;
    }
    quotas
}

/// Per-cluster quotas filled with the points nearest the cluster mode.
pub fn select_cluster_representative(
    clusters: &ClusterAssignment,
    candidates: &[(SliceId, Vec<f64>)],
    k: usize,
) -> Result<Vec<SliceId>, StrategyError> {
    if clusters.membership.len() != candidates.len() {
        return Err(StrategyError::Argument(
            "cluster membership does not cover the candidates".into(),
        ));
    }
    if k > candidates.len() {
        return Err(StrategyError::Argument(format!(
            "cannot select {k} slices from {} candidates",
            candidates.len()
        )));
    }
    let quotas = cluster_quotas(&clusters.sizes(), k);
    let mut picked = Vec::with_capacity(k);
    for (c, &quota) in quotas.iter().enumerate() {
        let mut members: Vec<(f64, &SliceId)> = candidates
            .iter()
            .zip(&clusters.membership)
            .filter(|(_, &m)| m == c)
            .map(|((id, v), _)| (euclidean(v, &clusters.modes[c]), id))
            .collect();
        members.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
        picked.extend(members.into_iter().take(quota).map(|(_, id)| id.clone()));
    }
    Ok(picked)
}

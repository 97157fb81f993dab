//! Least-confidence and entropy scores measured as distance to the maximum
//! uncertainty value alpha, and top-k selection with the one-slice-per-scan cap.

use std::collections::BTreeSet;

use super::StrategyError;
use crate::learner::ProbabilityMap;
use crate::pool::SliceId;
use crate::volume::LabelMode;

const MIN_DISTANCE: f64 = 1e-12;

/// 0.5 for independent per-class outputs, `1 / C` for mutually exclusive ones.
pub fn uncertainty_alpha(mode: LabelMode, classes: usize) -> f64 {
    match mode {
        LabelMode::MultiLabel => 0.5,
        LabelMode::SingleLabel => 1.0 / classes as f64,
    }
}

/// `-sum |alpha - p|` over classes and pixels; 0 when every prediction equals alpha.
pub fn score_least_confidence(probs: &ProbabilityMap, alpha: f64) -> f64 {
    -probs
        .values()
        .iter()
        .map(|p| (alpha - p).abs())
        .sum::<f64>()
}

/// `sum d ln d` with `d = |alpha - p|`, taking `0 ln 0 = 0`.
pub fn score_entropy(probs: &ProbabilityMap, alpha: f64) -> f64 {
    probs
        .values()
        .iter()
        .map(|p| {
            let d = (alpha - p).abs();
            if d == 0.0 {
                0.0
            } else {
                let d = d.max(MIN_DISTANCE);
                d * d.ln()
            }
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SliceScore {
    pub slice: SliceId,
    pub score: f64,
}

/// The `k` highest-scoring slices, taken in rounds that draw at most one slice
/// per scan; a scan gets a second slice only once every scan with candidates
/// left has contributed to the current round. Ties go to the smaller `(scan_id, z)`.
pub fn select_top_uncertain(
    scores: &[SliceScore],
    k: usize,
) -> Result<Vec<SliceId>, StrategyError> {
    if k > scores.len() {
        return Err(StrategyError::Argument(format!(
            "cannot select {k} slices from {} candidates",
            scores.len()
        )));
    }
    if let Some(s) = scores.iter().find(|s| !s.score.is_finite()) {
        return Err(StrategyError::Argument(format!(
            "score of {} is {}",
            s.slice, s.score
        )));
    }
    let mut order: Vec<&SliceScore> = scores.iter().collect();
    order.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.slice.cmp(&b.slice))
    });
    let mut taken = vec![false; order.len()];
    let mut picked = Vec::with_capacity(k);
    while picked.len() < k {
        let mut in_round = BTreeSet::new();
        for (i, s) in order.iter().enumerate() {
            if picked.len() == k {
                break;
            }
            if taken[i] || in_round.contains(s.slice.scan_id.as_str()) {
                continue;
            }
            in_round.insert(s.slice.scan_id.as_str());
            taken[i] = true;
            picked.push(s.slice.clone());
        }
    }
    Ok(picked)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn score(scan: &str, z: usize, score: f64) -> SliceScore {
        SliceScore {
            slice: SliceId::new(scan, z),
            score,
        }
    }

    fn map(values: Vec<f64>, classes: usize) -> ProbabilityMap {
        let n = values.len() / classes;
        ProbabilityMap::new(classes, 1, n, values)
    }

    #[test]
    fn least_confidence_examples() {
        assert_eq!(score_least_confidence(&map(vec![0.5], 1), 0.5), 0.0);
        assert_eq!(score_least_confidence(&map(vec![1.0], 1), 0.5), -0.5);
        let uniform = map(vec![0.25; 8], 4);
        assert_eq!(
            score_least_confidence(&uniform, uncertainty_alpha(LabelMode::SingleLabel, 4)),
            0.0
        );
        assert_eq!(
            score_entropy(&uniform, uncertainty_alpha(LabelMode::SingleLabel, 4)),
            0.0
        );
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(score_entropy(&map(vec![0.5], 1), 0.5), 0.0);
        let s = score_entropy(&map(vec![0.9], 1), 0.5);
        assert!((s - 0.4 * 0.4f64.ln()).abs() < 1e-12);
        assert!((s + 0.36652).abs() < 1e-5);
        let near = score_entropy(&map(vec![0.6], 1), 0.5);
        assert!((near + 0.2303).abs() < 1e-4);
        let picked = select_top_uncertain(&[score("a", 0, s), score("b", 0, near)], 1).unwrap();
        assert_eq!(picked, vec![SliceId::new("b", 0)]);
    }

    #[test]
    fn cap_moves_second_pick_to_another_scan() {
        let scores = [
            score("a", 0, -0.1),
            score("a", 1, -0.2),
            score("b", 0, -0.5),
            score("c", 0, -0.9),
        ];
        let picked = select_top_uncertain(&scores, 2).unwrap();
        assert_eq!(picked, vec![SliceId::new("a", 0), SliceId::new("b", 0)]);
    }

    #[test]
    fn round_robin_with_fewer_scans_than_picks() {
        let scores = [
            score("a", 0, -0.1),
            score("a", 1, -0.2),
            score("a", 2, -0.3),
            score("b", 0, -0.7),
            score("b", 1, -0.8),
        ];
        let picked = select_top_uncertain(&scores, 4).unwrap();
        let from_a = picked.iter().filter(|s| s.scan_id == "a").count();
        assert_eq!(from_a, 2);
        assert_eq!(picked.len(), 4);
    }

    #[test]
    fn ties_resolve_lexicographically() {
        let scores: Vec<SliceScore> = ["b", "a"]
            .iter()
            .flat_map(|s| (0..3).rev().map(move |z| score(s, z, 0.0)))
            .collect();
        let picked = select_top_uncertain(&scores, 3).unwrap();
        assert_eq!(
            picked,
            vec![
                SliceId::new("a", 0),
                SliceId::new("b", 0),
                SliceId::new("a", 1)
            ]
        );
    }

    #[test]
    fn too_many_requested() {
        assert!(select_top_uncertain(&[score("a", 0, 0.0)], 2).is_err());
    }
}

//! Validation metrics: Dice, Hausdorff distance, sensitivity and specificity.

use crate::interpolation::{euclidean_distance_transform, BinaryMask};
use crate::learner::ProbabilityMap;
use crate::volume::LabelMode;

use super::SimulationError;

/// `2|P ∩ T| / (|P| + |T|)`, and 1 when both are empty.
pub fn dice(pred: &[bool], truth: &[bool]) -> f64 {
    assert_eq!(pred.len(), truth.len());
    let (mut inter, mut total) = (0usize, 0usize);
    for (&p, &t) in pred.iter().zip(truth) {
        inter += (p && t) as usize;
        total += p as usize + t as usize;
    }
    if total == 0 {
        1.0
    } else {
        2.0 * inter as f64 / total as f64
    }
}

/// Foreground pixels with a 4-neighbour outside the mask (the image border counts as outside).
pub fn boundary(mask: &BinaryMask) -> BinaryMask {
    let (h, w) = mask.shape();
    BinaryMask::from_fn(h, w, |r, c| {
        mask.get(r, c)
            && (r == 0
                || c == 0
                || r + 1 == h
                || c + 1 == w
                || !mask.get(r - 1, c)
                || !mask.get(r + 1, c)
                || !mask.get(r, c - 1)
                || !mask.get(r, c + 1))
    })
}

fn directed(from: &BinaryMask, to: &BinaryMask) -> f64 {
    // distance to the nearest boundary pixel of `to` is the EDT of its complement
    let dist = euclidean_distance_transform(&!to);
    from.data()
        .iter()
        .zip(dist.values())
        .filter(|(&b, _)| b)
        .map(|(_, &d)| d)
        .fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance between the boundaries of two 2D masks, in pixels.
/// Both empty gives 0; exactly one empty gives the image diagonal.
pub fn hausdorff_2d(pred: &BinaryMask, truth: &BinaryMask) -> f64 {
    assert_eq!(pred.shape(), truth.shape());
    let (h, w) = pred.shape();
    match (pred.is_empty(), truth.is_empty()) {
        (true, true) => 0.0,
        (true, false) | (false, true) => ((h * h + w * w) as f64).sqrt(),
        (false, false) => {
            let (bp, bt) = (boundary(pred), boundary(truth));
            directed(&bp, &bt).max(directed(&bt, &bp))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Metrics {
    /// One entry per foreground class `1..C`.
    pub per_class_dice: Vec<f64>,
    pub mean_dice: f64,
    pub hausdorff: f64,
    pub sensitivity: f64,
    pub specificity: f64,
}

/// Predictions and ground truth for the slices of one validation volume, in z order.
pub struct VolumeEvaluation<'a> {
    pub predictions: Vec<ProbabilityMap>,
    pub truth: Vec<&'a [u8]>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

/// Dice and Hausdorff per volume averaged over volumes then classes;
/// sensitivity and specificity pooled over all pixels per class, then averaged.
pub fn compute_metrics(
    volumes: &[VolumeEvaluation<'_>],
    num_classes: usize,
    mode: LabelMode,
) -> Result<Metrics, SimulationError> {
    if volumes.is_empty() {
        return Err(SimulationError::Argument("no validation volumes".into()));
    }
    if num_classes < 2 {
        return Err(SimulationError::Argument(
            "need at least one foreground class".into(),
        ));
    }
    let fg = num_classes - 1;
    let mut dice_sum = vec![0.0; fg];
    let mut hausdorff_sum = vec![0.0; fg];
    let mut counts = vec![[0u64; 4]; fg]; // tp, fn, tn, fp
    for volume in volumes {
        if volume.predictions.len() != volume.truth.len() || volume.predictions.is_empty() {
            return Err(SimulationError::Argument(format!(
                "{} predictions for {} truth slices",
                volume.predictions.len(),
                volume.truth.len()
            )));
        }
        for c in 1..num_classes {
            let (mut inter, mut total) = (0u64, 0u64);
            let mut worst: f64 = 0.0;
            for (probs, truth) in volume.predictions.iter().zip(&volume.truth) {
                if probs.classes() != num_classes || probs.pixels() != truth.len() {
                    return Err(SimulationError::Argument(format!(
                        "prediction {}x{}x{} does not match a {}-pixel truth slice with {num_classes} classes",
                        probs.classes(),
                        probs.height(),
                        probs.width(),
                        truth.len()
                    )));
                }
                let pred = probs.predicted_mask(c, mode);
                let gt: Vec<bool> = truth.iter().map(|&l| l as usize == c).collect();
                let k = &mut counts[c - 1];
                for (&p, &t) in pred.iter().zip(&gt) {
                    inter += (p && t) as u64;
                    total += p as u64 + t as u64;
                    match (p, t) {
                        (true, true) => k[0] += 1,
                        (false, true) => k[1] += 1,
                        (false, false) => k[2] += 1,
                        (true, false) => k[3] += 1,
                    }
                }
                let (h, w) = (probs.height(), probs.width());
                worst = worst.max(hausdorff_2d(
                    &BinaryMask::new(h, w, pred),
                    &BinaryMask::new(h, w, gt),
                ));
            }
            dice_sum[c - 1] += if total == 0 {
                1.0
            } else {
                2.0 * inter as f64 / total as f64
            };
            hausdorff_sum[c - 1] += worst;
        }
    }
    let n = volumes.len() as f64;
    let per_class_dice: Vec<f64> = dice_sum.iter().map(|d| d / n).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let sens: Vec<f64> = counts.iter().map(|k| ratio(k[0], k[0] + k[1])).collect();
    let spec: Vec<f64> = counts.iter().map(|k| ratio(k[2], k[2] + k[3])).collect();
    Ok(Metrics {
        mean_dice: mean(&per_class_dice),
        per_class_dice,
        hausdorff: hausdorff_sum.iter().sum::<f64>() / (n * fg as f64),
        sensitivity: mean(&sens),
        specificity: mean(&spec),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_hot(labels: &[u8], classes: usize, h: usize, w: usize) -> ProbabilityMap {
        let n = labels.len();
        let mut values = vec![0.0; classes * n];
        for (i, &l) in labels.iter().enumerate() {
            values[l as usize * n + i] = 1.0;
        }
        ProbabilityMap::new(classes, h, w, values)
    }

    #[test]
    fn dice_examples() {
        let p = [true, true, true, false, false];
        let t = [false, false, true, true, false];
        assert_eq!(dice(&p, &t), 0.4);
        assert_eq!(dice(&t, &p), 0.4);
        assert_eq!(dice(&[false; 3], &[false; 3]), 1.0);
        assert_eq!(dice(&[true, false], &[false, true]), 0.0);
    }

    #[test]
    fn perfect_prediction() {
        let truth: Vec<u8> = (0..16).map(|i| u8::from(i % 5 == 0)).collect();
        let vol = VolumeEvaluation {
            predictions: vec![one_hot(&truth, 2, 4, 4)],
            truth: vec![&truth],
        };
        let m = compute_metrics(&[vol], 2, LabelMode::SingleLabel).unwrap();
        assert_eq!(m.per_class_dice, vec![1.0]);
        assert_eq!(
            (m.mean_dice, m.hausdorff, m.sensitivity, m.specificity),
            (1.0, 0.0, 1.0, 1.0)
        );
    }

    #[test]
    fn hausdorff_of_shifted_squares() {
        let a = BinaryMask::from_fn(10, 10, |r, c| (2..5).contains(&r) && (2..5).contains(&c));
        let b = BinaryMask::from_fn(10, 10, |r, c| (2..5).contains(&r) && (5..8).contains(&c));
        assert_eq!(hausdorff_2d(&a, &b), 3.0);
        assert_eq!(hausdorff_2d(&a, &a), 0.0);
        let empty = BinaryMask::empty(3, 4);
        assert_eq!(hausdorff_2d(&empty, &empty), 0.0);
        assert_eq!(
            hausdorff_2d(&BinaryMask::from_fn(3, 4, |_, _| true), &empty),
            5.0
        );
    }

    #[test]
    fn hausdorff_matches_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let a = BinaryMask::from_fn(7, 6, |_, _| rng.random_bool(0.4));
            let b = BinaryMask::from_fn(7, 6, |_, _| rng.random_bool(0.4));
            if a.is_empty() || b.is_empty() {
                continue;
            }
            let pts = |m: &BinaryMask| {
                let bd = boundary(m);
                (0..7)
                    .flat_map(move |r| (0..6).map(move |c| (r, c)))
                    .filter(|&(r, c)| bd.get(r, c))
                    .collect::<Vec<_>>()
            };
            let (pa, pb) = (pts(&a), pts(&b));
            let d = |p: (usize, usize), q: (usize, usize)| {
                (((p.0 as f64 - q.0 as f64).powi(2)) + (p.1 as f64 - q.1 as f64).powi(2)).sqrt()
            };
            let dir = |x: &[(usize, usize)], y: &[(usize, usize)]| {
                x.iter()
                    .map(|&p| y.iter().map(|&q| d(p, q)).fold(f64::INFINITY, f64::min))
                    .fold(0.0, f64::max)
            };
            let expected = dir(&pa, &pb).max(dir(&pb, &pa));
            assert!((hausdorff_2d(&a, &b) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn pooled_rates_and_volume_averaged_dice() {
        // volume 1: perfect, volume 2: prediction misses everything
        let t1: Vec<u8> = vec![1, 1, 0, 0];
        let t2: Vec<u8> = vec![1, 0, 0, 0];
        let v1 = VolumeEvaluation {
            predictions: vec![one_hot(&t1, 2, 2, 2)],
            truth: vec![&t1],
        };
        let v2 = VolumeEvaluation {
            predictions: vec![one_hot(&[0; 4], 2, 2, 2)],
            truth: vec![&t2],
        };
        let m = compute_metrics(&[v1, v2], 2, LabelMode::SingleLabel).unwrap();
        assert_eq!(m.mean_dice, 0.5);
        assert!((m.sensitivity - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.specificity, 1.0);
        assert_eq!(m.hausdorff, 8f64.sqrt() / 2.0);
    }

    #[test]
    fn multilabel_thresholds_at_one_half() {
        let truth = vec![1u8, 0];
        let probs = ProbabilityMap::new(2, 1, 2, vec![0.1, 0.9, 0.51, 0.5]);
        let v = VolumeEvaluation {
            predictions: vec![probs],
            truth: vec![&truth],
        };
        let m = compute_metrics(&[v], 2, LabelMode::MultiLabel).unwrap();
        assert_eq!(m.mean_dice, 1.0);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let truth = vec![0u8; 3];
        let v = VolumeEvaluation {
            predictions: vec![one_hot(&[0; 4], 2, 2, 2)],
            truth: vec![&truth],
        };
        assert!(matches!(
            compute_metrics(&[v], 2, LabelMode::SingleLabel),
            Err(SimulationError::Argument(_))
        ));
    }
}

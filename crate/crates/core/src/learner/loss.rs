//! Cross-entropy, focal and soft Dice losses on probability maps.

use serde::{Deserialize, Serialize};

use super::{LearnerError, ProbabilityMap};
use crate::volume::LabelMode;

/// Probabilities are clamped to `[PROB_EPS, 1 - PROB_EPS]` before logarithms.
pub const PROB_EPS: f64 = 1e-7;
/// Additive smoothing in numerator and denominator of the soft Dice ratio.
pub const DICE_SMOOTH: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Focal,
    CrossEntropy,
    Dice,
}

/// `-(1 - p)^gamma * ln p` on the clamped probability of the true outcome.
/// Cross-entropy is the `gamma = 0` case.
#[inline]
pub(crate) fn focal_term(p_true: f64, gamma: f64) -> f64 {
    let p = p_true.clamp(PROB_EPS, 1.0 - PROB_EPS);
    if gamma == 0.0 {
        -p.ln()
    } else {
        -(1.0 - p).powf(gamma) * p.ln()
    }
}

/// Derivative of [`focal_term`] with respect to `p_true` (zero where clamped).
#[inline]
pub(crate) fn focal_term_grad(p_true: f64, gamma: f64) -> f64 {
    if !(PROB_EPS..=1.0 - PROB_EPS).contains(&p_true) {
        return 0.0;
    }
    let p = p_true;
    if gamma == 0.0 {
        -1.0 / p
    } else {
        let q = 1.0 - p;
        gamma * q.powf(gamma - 1.0) * p.ln() - q.powf(gamma) / p
    }
}

/// Loss of one probability map against a label mask.
///
/// Cross-entropy and focal losses average over pixels (and over classes in
/// multi-label mode). Dice averages `1 - (2 sum(p t) + 1) / (sum p + sum t + 1)`
/// over the foreground classes `1..C`.
pub fn compute_loss(
    kind: LossKind,
    probs: &ProbabilityMap,
    target: &[u8],
    gamma: f64,
    mode: LabelMode,
) -> Result<f64, LearnerError> {
    let pixels = probs.pixels();
    if target.len() != pixels {
        return Err(LearnerError::Argument(format!(
            "target has {} pixels, probability map has {pixels}",
            target.len()
        )));
    }
    let classes = probs.classes();
    let gamma = match kind {
        LossKind::CrossEntropy => 0.0,
        _ => gamma,
    };
    match (kind, mode) {
        (LossKind::Dice, _) => {
            let mut total = 0.0;
            for c in 1..classes {
                let (mut inter, mut sum_p, mut sum_t) = (0.0, 0.0, 0.0);
                for (i, &t) in target.iter().enumerate() {
                    let p = probs.get(c, i);
                    let t = if t as usize == c { 1.0 } else { 0.0 };
                    inter += p * t;
                    sum_p += p;
                    sum_t += t;
                }
                total += 1.0 - (2.0 * inter + DICE_SMOOTH) / (sum_p + sum_t + DICE_SMOOTH);
            }
            Ok(total / (classes - 1) as f64)
        }
        (_, LabelMode::SingleLabel) => {
            let sum: f64 = target
                .iter()
                .enumerate()
                .map(|(i, &t)| focal_term(probs.get(t as usize, i), gamma))
                .sum();
            Ok(sum / pixels as f64)
        }
        (_, LabelMode::MultiLabel) => {
            let mut sum = 0.0;
            for (i, &t) in target.iter().enumerate() {
                for c in 0..classes {
                    let p = probs.get(c, i);
                    let p_true = if t as usize == c { p } else { 1.0 - p };
                    sum += focal_term(p_true, gamma);
                }
            }
            Ok(sum / (pixels * classes) as f64)
        }
    }
}

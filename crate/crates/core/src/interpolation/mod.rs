//! Pseudo-labels for the intermediate slices of a strided block.
//!
//! Each foreground class channel is interpolated independently and the channels
//! are recombined into one label slice. Blocks whose endpoints share no
//! foreground pixel of any class are not interpolated at all.

mod edt;
mod mask;
mod morphological;
mod signed;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use edt::{all_foreground_cap, euclidean_distance_transform, DistanceMap};
pub use mask::BinaryMask;
pub use morphological::{interpolate_morphological, morphological_median};
pub use signed::{blend_signed, interpolate_signed_distance, signed_distance_map};

use crate::simulation::metrics::dice;
use crate::volume::{LabelMode, LabelVolume};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpolationMethod {
    SignedDistance,
    Morphological,
}

#[derive(Debug, Error, PartialEq)]
pub enum InterpolationError {
    #[error("endpoint shapes differ: {top:?} vs {bottom:?}")]
    ShapeMismatch {
        top: (usize, usize),
        bottom: (usize, usize),
    },
    #[error("at least one intermediate slice is required")]
    NoIntermediates,
    #[error("endpoint masks do not overlap")]
    NoOverlap,
}

/// True iff some foreground class has a pixel set in both slices.
pub fn overlap_gate(top: &[u8], bottom: &[u8], num_classes: usize) -> bool {
    assert_eq!(top.len(), bottom.len());
    let mut shared = vec![false; num_classes];
    for (&t, &b) in top.iter().zip(bottom) {
        if t == b && t != 0 {
            shared[t as usize] = true;
        }
    }
    shared.iter().any(|&s| s)
}

/// Label slices between `top` and `bottom`, or `None` when the overlap gate fails.
///
/// Single-label signed-distance interpolation assigns each pixel to the class
/// with the largest positive blended distance (background when none is
/// positive). Otherwise channels are thresholded separately and, where two
/// claim the same pixel, the higher class id wins. Morphological interpolation
/// leaves a class empty when its endpoint channels do not overlap.
#[allow(clippy::too_many_arguments)]
pub fn interpolate_labels(
    top: &[u8],
    bottom: &[u8],
    height: usize,
    width: usize,
    n_intermediate: usize,
    num_classes: usize,
    mode: LabelMode,
    method: InterpolationMethod,
) -> Result<Option<Vec<Vec<u8>>>, InterpolationError> {
    if top.len() != height * width || bottom.len() != height * width {
        return Err(InterpolationError::ShapeMismatch {
            top: (top.len(), 1),
            bottom: (bottom.len(), 1),
        });
    }
    if n_intermediate == 0 {
        return Err(InterpolationError::NoIntermediates);
    }
    if !overlap_gate(top, bottom, num_classes) {
        return Ok(None);
    }
    let mut out = vec![vec![0u8; height * width]; n_intermediate];
    let channels = 1..num_classes as u8;
    match (method, mode) {
        (InterpolationMethod::SignedDistance, LabelMode::SingleLabel) => {
            let mut best = vec![vec![0.0f64; height * width]; n_intermediate];
            for class in channels {
                let d_top =
                    signed_distance_map(&BinaryMask::from_labels(top, height, width, class));
                let d_bottom =
                    signed_distance_map(&BinaryMask::from_labels(bottom, height, width, class));
                for (j, (labels, best)) in out.iter_mut().zip(&mut best).enumerate() {
                    let blended = blend_signed(&d_top, &d_bottom, j + 1, n_intermediate + 1);
                    for ((l, b), d) in labels.iter_mut().zip(best.iter_mut()).zip(blended) {
                        if d > *b {
                            *b = d;
                            *l = class;
                        }
                    }
                }
            }
        }
        (method, _) => {
            for class in channels {
                let a = BinaryMask::from_labels(top, height, width, class);
                let b = BinaryMask::from_labels(bottom, height, width, class);
                let masks = match method {
                    InterpolationMethod::SignedDistance => {
                        interpolate_signed_distance(&a, &b, n_intermediate)?
                    }
                    InterpolationMethod::Morphological => {
                        if a.intersection(&b).is_empty() {
                            continue;
                        }
                        interpolate_morphological(&a, &b, n_intermediate)?
                    }
                };
                for (labels, mask) in out.iter_mut().zip(&masks) {
                    for (l, &fg) in labels.iter_mut().zip(mask.data()) {
                        if fg {
                            *l = class;
                        }
                    }
                }
            }
        }
    }
    Ok(Some(out))
}

/// Dice of every pseudo-label produced by sliding a block of span `block_size`
/// over each slice position of `labels`, against the ground truth.
///
/// Scores are averaged over foreground classes per slice; blocks failing the
/// overlap gate contribute nothing.
pub fn block_interpolation_dice(
    labels: &LabelVolume,
    block_size: usize,
    method: InterpolationMethod,
) -> Result<Vec<f64>, InterpolationError> {
    let shape = labels.shape();
    let mut scores = Vec::new();
    if block_size < 2 || block_size >= shape.depth {
        return Ok(scores);
    }
    for z_top in 0..shape.depth - block_size {
        let z_bottom = z_top + block_size;
        let pseudo = interpolate_labels(
            labels.slice(z_top),
            labels.slice(z_bottom),
            shape.height,
            shape.width,
            block_size - 1,
            labels.num_classes(),
            labels.label_mode(),
            method,
        )?;
        let Some(pseudo) = pseudo else { continue };
        for (offset, predicted) in pseudo.iter().enumerate() {
            let truth = labels.slice(z_top + 1 + offset);
            let per_class: f64 = (1..labels.num_classes() as u8)
                .map(|c| {
                    let p: Vec<bool> = predicted.iter().map(|&l| l == c).collect();
                    let t: Vec<bool> = truth.iter().map(|&l| l == c).collect();
                    dice(&p, &t)
                })
                .sum();
            scores.push(per_class / (labels.num_classes() - 1) as f64);
        }
    }
    Ok(scores)
}

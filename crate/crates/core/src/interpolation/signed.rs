use super::edt::{euclidean_distance_transform, DistanceMap};
use super::mask::BinaryMask;
use super::InterpolationError;

/// `edt(mask) - edt(!mask) + 0.5`: positive exactly on foreground pixels.
pub fn signed_distance_map(mask: &BinaryMask) -> DistanceMap {
    let inside = euclidean_distance_transform(mask);
    let outside = euclidean_distance_transform(&!mask);
    let values = inside
        .values()
        .iter()
        .zip(outside.values())
        .map(|(a, b)| a - b + 0.5)
        .collect();
    DistanceMap::new(mask.height(), mask.width(), values)
}

/// Blend of two signed maps at position `step` of `steps` (0 = top, `steps` = bottom).
///
/// Both weights are computed directly from integers so that swapping the
/// endpoints and mirroring the position gives bit-identical values.
pub fn blend_signed(
    top: &DistanceMap,
    bottom: &DistanceMap,
    step: usize,
    steps: usize,
) -> Vec<f64> {
    let w_bottom = step as f64 / steps as f64;
    let w_top = (steps - step) as f64 / steps as f64;
    top.values()
        .iter()
        .zip(bottom.values())
        .map(|(a, b)| w_top * a + w_bottom * b)
        .collect()
}

/// Masks for the `n` evenly spaced slices strictly between `top` and `bottom`,
/// thresholding the linearly blended signed distance maps at zero.
pub fn interpolate_signed_distance(
    top: &BinaryMask,
    bottom: &BinaryMask,
    n_intermediate: usize,
) -> Result<Vec<BinaryMask>, InterpolationError> {
    check_pair(top, bottom, n_intermediate)?;
    let d_top = signed_distance_map(top);
    let d_bottom = signed_distance_map(bottom);
    let steps = n_intermediate + 1;
    Ok((1..=n_intermediate)
        .map(|j| {
            let blended = blend_signed(&d_top, &d_bottom, j, steps);
            BinaryMask::new(
                top.height(),
                top.width(),
                blended.iter().map(|&d| d > 0.0).collect(),
            )
        })
        .collect())
}

pub(super) fn check_pair(
    top: &BinaryMask,
    bottom: &BinaryMask,
    n: usize,
) -> Result<(), InterpolationError> {
    if top.shape() != bottom.shape() {
        return Err(InterpolationError::ShapeMismatch {
            top: top.shape(),
            bottom: bottom.shape(),
        });
    }
    if n == 0 {
        return Err(InterpolationError::NoIntermediates);
    }
    Ok(())
}

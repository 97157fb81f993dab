//! Simplified morphological interpolation by recursive median sets.
//!
//! This is not the ITK contour-correspondence algorithm. The median of two
//! overlapping shapes `a` and `b` is the set of pixels at least as close to
//! `a & b` as to the outside of `a | b`; intermediate slices are filled by
//! recursive bisection with that median.

use super::edt::euclidean_distance_transform;
use super::mask::BinaryMask;
use super::signed::check_pair;
use super::InterpolationError;

pub fn morphological_median(
    a: &BinaryMask,
    b: &BinaryMask,
) -> Result<BinaryMask, InterpolationError> {
    if a.shape() != b.shape() {
        return Err(InterpolationError::ShapeMismatch {
            top: a.shape(),
            bottom: b.shape(),
        });
    }
    let core = a.intersection(b);
    if core.is_empty() {
        return Err(InterpolationError::NoOverlap);
    }
    let hull = a.union(b);
    // distance to the nearest pixel of `core` / of the outside of `hull`
    let to_core = euclidean_distance_transform(&!&core);
    let to_outside = euclidean_distance_transform(&hull);
    let data = to_core
        .values()
        .iter()
        .zip(to_outside.values())
        .map(|(c, o)| c <= o)
        .collect();
    Ok(BinaryMask::new(a.height(), a.width(), data))
}

pub fn interpolate_morphological(
    top: &BinaryMask,
    bottom: &BinaryMask,
    n_intermediate: usize,
) -> Result<Vec<BinaryMask>, InterpolationError> {
    check_pair(top, bottom, n_intermediate)?;
    let mut slots: Vec<Option<BinaryMask>> = vec![None; n_intermediate + 2];
    slots[0] = Some(top.clone());
    slots[n_intermediate + 1] = Some(bottom.clone());
    fill(&mut slots, 0, n_intermediate + 1)?;
    Ok(slots
        .into_iter()
        .skip(1)
        .take(n_intermediate)
        .map(|m| m.expect("every slot filled"))
        .collect())
}

fn fill(slots: &mut [Option<BinaryMask>], lo: usize, hi: usize) -> Result<(), InterpolationError> {
    let gap = hi - lo - 1;
    if gap == 0 {
        return Ok(());
    }
    let mid = lo + gap.div_ceil(2);
    let median = morphological_median(slots[lo].as_ref().unwrap(), slots[hi].as_ref().unwrap())?;
    slots[mid] = Some(median);
    fill(slots, lo, mid)?;
    fill(slots, mid, hi)
}

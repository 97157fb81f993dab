//! Exact Euclidean distance transform via two separable passes of the
//! lower envelope of parabolas (Felzenszwalb & Huttenlocher).

use super::mask::BinaryMask;

/// Per-pixel distances in pixel units, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMap {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl DistanceMap {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), height * width);
        DistanceMap {
            height,
            width,
            values,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }
}

/// Distance value used for every pixel of a mask without any background.
pub fn all_foreground_cap(height: usize, width: usize) -> f64 {
    (height + width) as f64
}

/// Distance from each pixel to the nearest background (`false`) pixel.
///
/// Background pixels map to 0. A mask with no background at all maps to the
/// finite cap `height + width` everywhere.
pub fn euclidean_distance_transform(mask: &BinaryMask) -> DistanceMap {
    let (h, w) = mask.shape();
    if !mask.data().iter().any(|&v| !v) {
        return DistanceMap::new(h, w, vec![all_foreground_cap(h, w); h * w]);
    }
    let mut sq: Vec<f64> = mask
        .data()
        .iter()
        .map(|&fg| if fg { f64::INFINITY } else { 0.0 })
        .collect();

    let n = h.max(w);
    let mut line = vec![0.0; n];
    let mut out = vec![0.0; n];
    let mut scratch = Envelope::with_capacity(n);

    for col in 0..w {
        for row in 0..h {
            line[row] = sq[row * w + col];
        }
        scratch.transform(&line[..h], &mut out[..h]);
        for row in 0..h {
            sq[row * w + col] = out[row];
        }
    }
    for row in 0..h {
        line[..w].copy_from_slice(&sq[row * w..(row + 1) * w]);
        scratch.transform(&line[..w], &mut out[..w]);
        sq[row * w..(row + 1) * w].copy_from_slice(&out[..w]);
    }
    DistanceMap::new(h, w, sq.into_iter().map(f64::sqrt).collect())
}

struct Envelope {
    sites: Vec<usize>,
    bounds: Vec<f64>,
}

impl Envelope {
    fn with_capacity(n: usize) -> Self {
        Envelope {
            sites: Vec::with_capacity(n),
            bounds: Vec::with_capacity(n + 1),
        }
    }

    /// 1D squared distance transform of sampled function `f`; infinite samples are
    /// not parabola sites.
    fn transform(&mut self, f: &[f64], out: &mut [f64]) {
        self.sites.clear();
        self.bounds.clear();
        for q in 0..f.len() {
            if !f[q].is_finite() {
                continue;
            }
            let fq = f[q] + (q * q) as f64;
            let mut s = f64::NEG_INFINITY;
            while let Some(&v) = self.sites.last() {
                s = (fq - (f[v] + (v * v) as f64)) / (2.0 * (q as f64 - v as f64));
                if s <= *self.bounds.last().unwrap() {
                    self.sites.pop();
                    self.bounds.pop();
                    s = f64::NEG_INFINITY;
                } else {
                    break;
                }
            }
            self.sites.push(q);
            self.bounds.push(s);
        }
        if self.sites.is_empty() {
            out.fill(f64::INFINITY);
            return;
        }
        let mut k = 0;
        for (q, o) in out.iter_mut().enumerate() {
            while k + 1 < self.sites.len() && self.bounds[k + 1] < q as f64 {
                k += 1;
            }
            let v = self.sites[k];
            let d = q as f64 - v as f64;
            *o = d * d + f[v];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Nearest-background search over every pixel pair.
    fn brute_force(mask: &BinaryMask) -> Vec<f64> {
        let (h, w) = mask.shape();
        let background: Vec<(usize, usize)> = (0..h * w)
            .filter(|&i| !mask.data()[i])
            .map(|i| (i / w, i % w))
            .collect();
        (0..h * w)
            .map(|i| {
                if background.is_empty() {
                    return all_foreground_cap(h, w);
                }
                let (r, c) = (i / w, i % w);
                background
                    .iter()
                    .map(|&(br, bc)| {
                        let dr = r as f64 - br as f64;
                        let dc = c as f64 - bc as f64;
                        (dr * dr + dc * dc).sqrt()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    #[test]
    fn center_pixel_of_three_by_three() {
        let mask = BinaryMask::from_fn(3, 3, |r, c| r == 1 && c == 1);
        let d = euclidean_distance_transform(&mask);
        assert_eq!(d.get(1, 1), 1.0);
        assert_eq!(d.values().iter().filter(|&&v| v == 0.0).count(), 8);
    }

    #[test]
    fn all_background_is_zero() {
        let d = euclidean_distance_transform(&BinaryMask::empty(4, 5));
        assert!(d.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn all_foreground_uses_cap() {
        let d = euclidean_distance_transform(&BinaryMask::from_fn(3, 4, |_, _| true));
        assert!(d.values().iter().all(|&v| v == 7.0));
    }

    #[test]
    fn exhaustive_three_by_three() {
        for bits in 0u32..512 {
            let mask = BinaryMask::from_fn(3, 3, |r, c| bits >> (r * 3 + c) & 1 == 1);
            assert_eq!(
                euclidean_distance_transform(&mask).values(),
                brute_force(&mask).as_slice(),
                "{bits:09b}"
            );
        }
    }

    #[test]
    fn random_rectangular_masks() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let h = rng.random_range(1..=9);
            let w = rng.random_range(1..=9);
            let p: f64 = rng.random_range(0.0..1.0);
            let mask = BinaryMask::new(h, w, (0..h * w).map(|_| rng.random_bool(p)).collect());
            assert_eq!(
                euclidean_distance_transform(&mask).values(),
                brute_force(&mask).as_slice()
            );
        }
    }

    #[test]
    fn single_background_pixel_far_corner() {
        let mask = BinaryMask::from_fn(5, 7, |r, c| !(r == 4 && c == 6));
        let d = euclidean_distance_transform(&mask);
        assert_eq!(d.get(0, 0), (16.0f64 + 36.0).sqrt());
    }
}

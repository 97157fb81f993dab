//! Seeded synthetic scans: smooth, slightly sheared ellipsoids on a noisy background.
//!
//! Each foreground class gets one ellipsoid per scan. Its cross-section changes
//! gradually from slice to slice, so neighbouring slices carry mostly redundant
//! information, and its z-extent never covers the whole scan.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::volume::{LabelMode, LabelVolume, ScanVolume, Shape3};

const BACKGROUND_MEAN: f64 = 0.2;
const FOREGROUND_SPAN: f64 = 0.6;

#[derive(Debug, Error, PartialEq)]
pub enum SyntheticError {
    #[error("invalid synthetic spec: {0}")]
    Spec(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub num_scans: usize,
    pub shape: Shape3,
    /// Foreground classes; the label volumes carry `num_classes + 1` classes.
    pub num_classes: usize,
    pub noise: f64,
    #[serde(default = "default_label_mode")]
    pub label_mode: LabelMode,
}

fn default_label_mode() -> LabelMode {
    LabelMode::SingleLabel
}

impl SyntheticSpec {
    /// 20 scans of 24x64x64 with one foreground class and noise 0.1.
    pub fn standard() -> Self {
        SyntheticSpec {
            num_scans: 20,
            shape: Shape3::new(24, 64, 64),
            num_classes: 1,
            noise: 0.1,
            label_mode: LabelMode::SingleLabel,
        }
    }

    fn validate(&self) -> Result<(), SyntheticError> {
        if self.num_scans == 0 {
            return Err(SyntheticError::Spec("num_scans must be at least 1".into()));
        }
        if self.num_classes == 0 || self.num_classes > 255 {
            return Err(SyntheticError::Spec(format!(
                "foreground classes must be in 1..=255, got {}",
                self.num_classes
            )));
        }
        if !(self.noise >= 0.0) || !self.noise.is_finite() {
            return Err(SyntheticError::Spec(format!(
                "noise must be >= 0, got {}",
                self.noise
            )));
        }
        let Shape3 {
            depth,
            height,
            width,
        } = self.shape;
        // smallest semi-axes must still cover one voxel
        if (depth as f64) * 0.25 < 1.0
            || (height as f64) * 0.15 < 1.0
            || (width as f64) * 0.15 < 1.0
        {
            return Err(SyntheticError::Spec(format!(
                "an ellipsoid cannot fit in shape {:?} (need depth >= 4, height and width >= 7)",
                [depth, height, width]
            )));
        }
        Ok(())
    }
}

struct Ellipsoid {
    center: [f64; 3],
    semi_axes: [f64; 3],
    // in-plane centre drift per slice away from the z centre
    shear: [f64; 2],
}

impl Ellipsoid {
    fn sample(shape: Shape3, rng: &mut ChaCha8Rng) -> Self {
        let (d, h, w) = (shape.depth as f64, shape.height as f64, shape.width as f64);
        let az = rng.random_range(0.25 * d..=0.4 * d);
        let ay = rng.random_range(0.15 * h..=0.28 * h);
        let ax = rng.random_range(0.15 * w..=0.28 * w);
        let cz = uniform_or_mid(rng, az, d - 1.0 - az);
        let mut shear = [rng.random_range(-0.3..=0.3), rng.random_range(-0.3..=0.3)];
        let mut centre = |extent: f64, axis: f64, s: &mut f64| {
            let lo = axis + 1.0 + s.abs() * az;
            let hi = extent - 2.0 - axis - s.abs() * az;
            if lo <= hi {
                rng.random_range(lo..=hi)
            } else {
                *s = 0.0;
                uniform_or_mid(rng, axis, extent - 1.0 - axis)
            }
        };
        let cy = centre(h, ay, &mut shear[0]);
        let cx = centre(w, ax, &mut shear[1]);
        Ellipsoid {
            center: [cz, cy, cx],
            semi_axes: [az, ay, ax],
            shear,
        }
    }

    fn contains(&self, z: usize, y: usize, x: usize) -> bool {
        let dz = z as f64 - self.center[0];
        let cy = self.center[1] + self.shear[0] * dz;
        let cx = self.center[2] + self.shear[1] * dz;
        let u = dz / self.semi_axes[0];
        let v = (y as f64 - cy) / self.semi_axes[1];
        let t = (x as f64 - cx) / self.semi_axes[2];
        u * u + v * v + t * t <= 1.0
    }
}

fn uniform_or_mid(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if lo < hi {
        rng.random_range(lo..=hi)
    } else {
        0.5 * (lo + hi)
    }
}

pub fn make_synthetic_dataset(
    spec: &SyntheticSpec,
    seed: u64,
) -> Result<Vec<(ScanVolume, LabelVolume)>, SyntheticError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = spec.shape;
    let mut out = Vec::with_capacity(spec.num_scans);
    for index in 0..spec.num_scans {
        let scan_id = format!("scan_{index:03}");
        let mut labels = vec![0u8; shape.len()];
        for class in 1..=spec.num_classes {
            let ellipsoid = Ellipsoid::sample(shape, &mut rng);
            for z in 0..shape.depth {
                for y in 0..shape.height {
                    for x in 0..shape.width {
                        if ellipsoid.contains(z, y, x) {
                            labels[(z * shape.height + y) * shape.width + x] = class as u8;
                        }
                    }
                }
            }
        }
        let voxels = labels
            .iter()
            .map(|&l| {
                let mean = BACKGROUND_MEAN + FOREGROUND_SPAN * l as f64 / spec.num_classes as f64;
                let n: f64 = rng.sample(StandardNormal);
                (mean + spec.noise * n) as f32
            })
            .collect();
        let scan = ScanVolume::new(scan_id.clone(), shape, voxels, [1.0, 1.0, 1.0])
            .map_err(|e| SyntheticError::Spec(e.to_string()))?;
        let labels = LabelVolume::new(
            scan_id,
            shape,
            labels,
            spec.num_classes + 1,
            spec.label_mode,
        )
        .map_err(|e| SyntheticError::Spec(e.to_string()))?;
        out.push((scan, labels));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(scans: usize, shape: [usize; 3], noise: f64) -> SyntheticSpec {
        SyntheticSpec {
            num_scans: scans,
            shape: shape.into(),
            num_classes: 1,
            noise,
            label_mode: LabelMode::SingleLabel,
        }
    }

    fn components_26(labels: &LabelVolume) -> usize {
        let s = labels.shape();
        let mut seen = vec![false; s.len()];
        let mut count = 0;
        for start in 0..s.len() {
            if labels.labels()[start] == 0 || seen[start] {
                continue;
            }
            count += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(i) = stack.pop() {
                let (z, y, x) = (i / s.slice_len(), (i / s.width) % s.height, i % s.width);
                for dz in -1i64..=1 {
                    for dy in -1i64..=1 {
                        for dx in -1i64..=1 {
                            let (nz, ny, nx) = (z as i64 + dz, y as i64 + dy, x as i64 + dx);
                            if nz < 0 || ny < 0 || nx < 0 {
                                continue;
                            }
                            let (nz, ny, nx) = (nz as usize, ny as usize, nx as usize);
                            if nz >= s.depth || ny >= s.height || nx >= s.width {
                                continue;
                            }
                            let j = (nz * s.height + ny) * s.width + nx;
                            if labels.labels()[j] != 0 && !seen[j] {
                                seen[j] = true;
                                stack.push(j);
                            }
                        }
                    }
                }
            }
        }
        count
    }

    #[test]
    fn single_scan_forms_one_ellipsoid() {
        let data = make_synthetic_dataset(&spec(1, [8, 16, 16], 0.0), 3).unwrap();
        let (_, labels) = &data[0];
        assert!(labels.labels().iter().any(|&l| l == 1));
        assert_eq!(components_26(labels), 1);
    }

    #[test]
    fn generation_is_deterministic() {
        let s = spec(1, [8, 16, 16], 0.0);
        assert_eq!(
            make_synthetic_dataset(&s, 9).unwrap(),
            make_synthetic_dataset(&s, 9).unwrap()
        );
        assert_ne!(
            make_synthetic_dataset(&s, 9).unwrap(),
            make_synthetic_dataset(&s, 10).unwrap()
        );
    }

    #[test]
    fn standard_scans_have_empty_and_nonempty_slices() {
        let data = make_synthetic_dataset(&spec(20, [24, 64, 64], 0.1), 42).unwrap();
        for (_, labels) in &data {
            let nonempty = (0..24)
                .filter(|&z| labels.slice(z).iter().any(|&l| l > 0))
                .count();
            assert!(nonempty >= 1, "{}", labels.scan_id());
            assert!(nonempty < 24, "{}", labels.scan_id());
        }
    }

    #[test]
    fn too_small_shape_is_rejected() {
        let err = make_synthetic_dataset(&spec(1, [2, 16, 16], 0.0), 0).unwrap_err();
        assert!(matches!(err, SyntheticError::Spec(_)));
        assert!(make_synthetic_dataset(&spec(1, [8, 4, 16], 0.0), 0).is_err());
    }

    #[test]
    fn multiple_classes_are_labelled() {
        let mut s = spec(3, [12, 32, 32], 0.05);
        s.num_classes = 2;
        let data = make_synthetic_dataset(&s, 1).unwrap();
        for (_, labels) in &data {
            assert_eq!(labels.num_classes(), 3);
            assert!(labels.labels().iter().any(|&l| l == 2));
        }
    }
}

//! Hand-crafted per-pixel features for the reference learner.

/// intensity, mean3, std3, mean7, std7, gradient magnitude, row, col
pub const FEATURE_COUNT: usize = 8;

/// Per-pixel feature vectors stored pixel-major: `values[p * features + f]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureGrid {
    features: usize,
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl FeatureGrid {
    pub fn new(features: usize, height: usize, width: usize, values: Vec<f64>) -> Self {
        assert_eq!(
            values.len(),
            features * height * width,
            "feature grid size mismatch"
        );
        FeatureGrid {
            features,
            height,
            width,
            values,
        }
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn pixel(&self, p: usize) -> &[f64] {
        &self.values[p * self.features..(p + 1) * self.features]
    }

    /// Feature `f` at `(row, col)`.
    pub fn get(&self, f: usize, row: usize, col: usize) -> f64 {
        self.values[(row * self.width + col) * self.features + f]
    }
}

/// Box mean and standard deviation over a `(2r+1)^2` window with edge-clamped
/// coordinates. Sums are taken relative to the centre pixel so that constant
/// windows give exactly the centre value and zero spread.
fn box_stats(
    img: &[f64],
    height: usize,
    width: usize,
    radius: usize,
    row: usize,
    col: usize,
) -> (f64, f64) {
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let r = radius as isize;
    let n = ((2 * radius + 1) * (2 * radius + 1)) as f64;
    let centre = img[row * width + col];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for dy in -r..=r {
        let y = clamp(row as isize + dy, height);
        for dx in -r..=r {
            let d = img[y * width + clamp(col as isize + dx, width)] - centre;
            sum += d;
            sum_sq += d * d;
        }
    }
    let shift = sum / n;
    let var = (sum_sq / n - shift * shift).max(0.0);
    (centre + shift, var.sqrt())
}

pub fn extract_pixel_features(slice: &[f32], height: usize, width: usize) -> FeatureGrid {
    assert_eq!(slice.len(), height * width);
    let img: Vec<f64> = slice.iter().map(|&v| v as f64).collect();
    let mut values = Vec::with_capacity(height * width * FEATURE_COUNT);
    let at = |r: usize, c: usize| img[r * width + c];
    for row in 0..height {
        for col in 0..width {
            let (m3, s3) = box_stats(&img, height, width, 1, row, col);
            let (m7, s7) = box_stats(&img, height, width, 3, row, col);
            let gy = (at((row + 1).min(height - 1), col) - at(row.saturating_sub(1), col)) / 2.0;
            let gx = (at(row, (col + 1).min(width - 1)) - at(row, col.saturating_sub(1))) / 2.0;
            let rel = |i: usize, n: usize| {
                if n > 1 {
                    i as f64 / (n - 1) as f64
                } else {
                    0.0
                }
            };
            values.extend_from_slice(&[
                at(row, col),
                m3,
                s3,
                m7,
                s7,
                (gx * gx + gy * gy).sqrt(),
                rel(row, height),
                rel(col, width),
            ]);
        }
    }
    FeatureGrid::new(FEATURE_COUNT, height, width, values)
}

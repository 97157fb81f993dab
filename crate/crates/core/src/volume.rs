//! Scan and label volumes plus the on-disk directory format.
//!
//! A volume directory holds three files:
//!
//! - `meta.json`: `{"scan_id", "shape": [D,H,W], "spacing_mm": [z,y,x], "num_classes", "label_mode"}`
//! - `image.f32le`: `D*H*W` little-endian `f32` intensities, z-major then row-major
//! - `labels.u8le`: `D*H*W` class ids in the same order
//!
//! Label-only directories (used for standalone masks) omit `image.f32le`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const META_FILE: &str = "meta.json";
pub const IMAGE_FILE: &str = "image.f32le";
pub const LABELS_FILE: &str = "labels.u8le";

#[derive(Debug, Error)]
pub enum VolumeError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed volume data in {path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("invalid volume: {0}")]
    Invalid(String),
}

impl VolumeError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        VolumeError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn format(path: &Path, reason: impl Into<String>) -> Self {
        VolumeError::Format {
            path: path.to_path_buf(),
            reason: reason.into(),
        }
    }
}

/// Volume extent in voxels: `depth` slices of `height` x `width`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 3]", into = "[usize; 3]")]
pub struct Shape3 {
    pub depth: usize,
    pub height: usize,
    pub width: usize,
}

impl Shape3 {
    pub fn new(depth: usize, height: usize, width: usize) -> Self {
        Shape3 {
            depth,
            height,
            width,
        }
    }

    pub fn slice_len(&self) -> usize {
        self.height * self.width
    }

    pub fn len(&self) -> usize {
        self.depth * self.slice_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl From<[usize; 3]> for Shape3 {
    fn from(v: [usize; 3]) -> Self {
        Shape3::new(v[0], v[1], v[2])
    }
}

impl From<Shape3> for [usize; 3] {
    fn from(s: Shape3) -> Self {
        [s.depth, s.height, s.width]
    }
}

/// Whether classes are mutually exclusive (softmax) or independent (sigmoid).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LabelMode {
    #[serde(rename = "single")]
    SingleLabel,
    #[serde(rename = "multi")]
    MultiLabel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanVolume {
    scan_id: String,
    shape: Shape3,
    voxels: Vec<f32>,
    spacing: [f64; 3],
}

impl ScanVolume {
    pub fn new(
        scan_id: impl Into<String>,
        shape: Shape3,
        voxels: Vec<f32>,
        spacing: [f64; 3],
    ) -> Result<Self, VolumeError> {
        if shape.depth == 0 || shape.height == 0 || shape.width == 0 {
            return Err(VolumeError::Invalid(format!("empty shape {shape:?}")));
        }
        if voxels.len() != shape.len() {
            return Err(VolumeError::Invalid(format!(
                "{} voxels for shape {:?}",
                voxels.len(),
                shape
            )));
        }
        if let Some(i) = voxels.iter().position(|v| !v.is_finite()) {
            return Err(VolumeError::Invalid(format!(
                "non-finite intensity at voxel {i}"
            )));
        }
        if spacing.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(VolumeError::Invalid(format!(
                "spacing must be positive, got {spacing:?}"
            )));
        }
        Ok(ScanVolume {
            scan_id: scan_id.into(),
            shape,
            voxels,
            spacing,
        })
    }

    pub fn scan_id(&self) -> &str {
        &self.scan_id
    }

    pub fn shape(&self) -> Shape3 {
        self.shape
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn voxels(&self) -> &[f32] {
        &self.voxels
    }

    pub fn slice(&self, z: usize) -> &[f32] {
        let n = self.shape.slice_len();
        &self.voxels[z * n..(z + 1) * n]
    }

    /// Per-scan min-max rescaling to `[0, 1]`. A constant scan maps to zeros.
    pub fn normalized(&self) -> ScanVolume {
        let (lo, hi) = self
            .voxels
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let range = hi - lo;
        let voxels = if range > 0.0 {
            self.voxels.iter().map(|&v| (v - lo) / range).collect()
        } else {
            vec![0.0; self.voxels.len()]
        };
        ScanVolume {
            voxels,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabelVolume {
    scan_id: String,
    shape: Shape3,
    labels: Vec<u8>,
    num_classes: usize,
    label_mode: LabelMode,
}

impl LabelVolume {
    pub fn new(
        scan_id: impl Into<String>,
        shape: Shape3,
        labels: Vec<u8>,
        num_classes: usize,
        label_mode: LabelMode,
    ) -> Result<Self, VolumeError> {
        if shape.depth == 0 || shape.height == 0 || shape.width == 0 {
            return Err(VolumeError::Invalid(format!("empty shape {shape:?}")));
        }
        if !(2..=256).contains(&num_classes) {
            return Err(VolumeError::Invalid(format!(
                "num_classes must be in 2..=256, got {num_classes}"
            )));
        }
        if labels.len() != shape.len() {
            return Err(VolumeError::Invalid(format!(
                "{} labels for shape {:?}",
                labels.len(),
                shape
            )));
        }
        if let Some(i) = labels.iter().position(|&l| l as usize >= num_classes) {
            return Err(VolumeError::Invalid(format!(
                "label {} at voxel {i} is not below num_classes {num_classes}",
                labels[i]
            )));
        }
        Ok(LabelVolume {
            scan_id: scan_id.into(),
            shape,
            labels,
            num_classes,
            label_mode,
        })
    }

    pub fn scan_id(&self) -> &str {
        &self.scan_id
    }

    pub fn shape(&self) -> Shape3 {
        self.shape
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn label_mode(&self) -> LabelMode {
        self.label_mode
    }

    pub fn slice(&self, z: usize) -> &[u8] {
        let n = self.shape.slice_len();
        &self.labels[z * n..(z + 1) * n]
    }
}

/// Contents of `meta.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolumeMeta {
    pub scan_id: String,
    pub shape: Shape3,
    pub spacing_mm: [f64; 3],
    pub num_classes: usize,
    pub label_mode: LabelMode,
}

pub fn save_volume(scan: &ScanVolume, labels: &LabelVolume, dir: &Path) -> Result<(), VolumeError> {
    if scan.shape != labels.shape {
        return Err(VolumeError::Invalid(format!(
            "image shape {:?} does not match label shape {:?}",
            scan.shape, labels.shape
        )));
    }
    if scan.scan_id != labels.scan_id {
        return Err(VolumeError::Invalid(format!(
            "image scan id {:?} does not match label scan id {:?}",
            scan.scan_id, labels.scan_id
        )));
    }
    save_labels(labels, scan.spacing, dir)?;
    let mut bytes = Vec::with_capacity(scan.voxels.len() * 4);
    for v in &scan.voxels {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let path = dir.join(IMAGE_FILE);
    fs::write(&path, bytes).map_err(|e| VolumeError::io(&path, e))
}

/// Writes `meta.json` and `labels.u8le` only.
pub fn save_labels(labels: &LabelVolume, spacing: [f64; 3], dir: &Path) -> Result<(), VolumeError> {
    fs::create_dir_all(dir).map_err(|e| VolumeError::io(dir, e))?;
    let meta = VolumeMeta {
        scan_id: labels.scan_id.clone(),
        shape: labels.shape,
        spacing_mm: spacing,
        num_classes: labels.num_classes,
        label_mode: labels.label_mode,
    };
    let path = dir.join(META_FILE);
    let json = serde_json::to_string_pretty(&meta).expect("meta serializes");
    fs::write(&path, json).map_err(|e| VolumeError::io(&path, e))?;
    let path = dir.join(LABELS_FILE);
    fs::write(&path, &labels.labels).map_err(|e| VolumeError::io(&path, e))
}

pub fn load_meta(dir: &Path) -> Result<VolumeMeta, VolumeError> {
    let path = dir.join(META_FILE);
    let text = fs::read_to_string(&path).map_err(|e| VolumeError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| VolumeError::format(&path, e.to_string()))
}

/// Reads `meta.json` and `labels.u8le`, ignoring any image payload.
pub fn load_labels(dir: &Path) -> Result<(VolumeMeta, LabelVolume), VolumeError> {
    let meta = load_meta(dir)?;
    let path = dir.join(LABELS_FILE);
    let labels = fs::read(&path).map_err(|e| VolumeError::io(&path, e))?;
    if labels.len() != meta.shape.len() {
        return Err(VolumeError::format(
            &path,
            format!(
                "{} bytes, expected {} for shape {:?}",
                labels.len(),
                meta.shape.len(),
                meta.shape
            ),
        ));
    }
    let volume = LabelVolume::new(
        meta.scan_id.clone(),
        meta.shape,
        labels,
        meta.num_classes,
        meta.label_mode,
    )
    .map_err(|e| VolumeError::format(&path, e.to_string()))?;
    Ok((meta, volume))
}

pub fn load_volume(dir: &Path) -> Result<(ScanVolume, LabelVolume), VolumeError> {
    let (meta, labels) = load_labels(dir)?;
    let path = dir.join(IMAGE_FILE);
    let bytes = fs::read(&path).map_err(|e| VolumeError::io(&path, e))?;
    if bytes.len() != meta.shape.len() * 4 {
        return Err(VolumeError::format(
            &path,
            format!(
                "{} bytes, expected {} for shape {:?}",
                bytes.len(),
                meta.shape.len() * 4,
                meta.shape
            ),
        ));
    }
    let voxels = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let scan = ScanVolume::new(meta.scan_id, meta.shape, voxels, meta.spacing_mm)
        .map_err(|e| VolumeError::format(&path, e.to_string()))?;
    Ok((scan, labels))
}

//! Datasets prepared for simulation: normalized intensities, per-slice
//! features computed once, ground truth behind the simulated annotator.

use rayon::prelude::*;

use super::SimulationError;
use crate::learner::{extract_pixel_features, FeatureGrid};
use crate::pool::SliceId;
use crate::split::DatasetSplit;
use crate::volume::{LabelMode, LabelVolume, ScanVolume, Shape3};

#[derive(Clone, Debug)]
pub struct PreparedScan {
    pub id: String,
    pub shape: Shape3,
    /// One grid per slice, in z order.
    pub features: Vec<FeatureGrid>,
    pub labels: LabelVolume,
}

/// Scans in a fixed order with their features. Shared read-only by every run.
#[derive(Clone, Debug)]
pub struct PreparedDataset {
    scans: Vec<PreparedScan>,
    num_classes: usize,
    mode: LabelMode,
}

impl PreparedDataset {
    /// Min-max normalizes each scan and extracts features for every slice.
    pub fn new(pairs: Vec<(ScanVolume, LabelVolume)>) -> Result<Self, SimulationError> {
        let Some((_, first)) = pairs.first() else {
            return Err(SimulationError::Argument("dataset has no scans".into()));
        };
        let (num_classes, mode) = (first.num_classes(), first.label_mode());
        let mut ids = std::collections::BTreeSet::new();
        for (scan, labels) in &pairs {
            if scan.scan_id() != labels.scan_id() || scan.shape() != labels.shape() {
                return Err(SimulationError::Argument(format!(
                    "image and labels of `{}` do not match",
                    scan.scan_id()
                )));
            }
            if labels.num_classes() != num_classes || labels.label_mode() != mode {
                return Err(SimulationError::Argument(format!(
                    "scan `{}` has a different class count or label mode",
                    scan.scan_id()
                )));
            }
            if !ids.insert(scan.scan_id().to_string()) {
                return Err(SimulationError::Argument(format!(
                    "duplicate scan id `{}`",
                    scan.scan_id()
                )));
            }
        }
        let scans = pairs
            .into_par_iter()
            .map(|(scan, labels)| {
                let scan = scan.normalized();
                let shape = scan.shape();
                let features = (0..shape.depth)
                    .map(|z| extract_pixel_features(scan.slice(z), shape.height, shape.width))
                    .collect();
                PreparedScan {
                    id: scan.scan_id().to_string(),
                    shape,
                    features,
                    labels,
                }
            })
            .collect();
        Ok(PreparedDataset {
            scans,
            num_classes,
            mode,
        })
    }

    pub fn scans(&self) -> &[PreparedScan] {
        &self.scans
    }

    pub fn scan(&self, id: &str) -> Option<&PreparedScan> {
        self.scans.iter().find(|s| s.id == id)
    }

    pub fn scan_ids(&self) -> Vec<String> {
        self.scans.iter().map(|s| s.id.clone()).collect()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn label_mode(&self) -> LabelMode {
        self.mode
    }

    pub fn total_slices(&self) -> usize {
        self.scans.iter().map(|s| s.shape.depth).sum()
    }

    pub fn features(&self, slice: &SliceId) -> Option<&FeatureGrid> {
        self.scan(&slice.scan_id)?.features.get(slice.z)
    }
}

/// The oracle annotator: the ground-truth mask of a training slice.
pub fn simulated_annotate<'a>(
    slice: &SliceId,
    ground_truth: &'a LabelVolume,
    split: &DatasetSplit,
) -> Result<&'a [u8], SimulationError> {
    if split.is_validation(&slice.scan_id) {
        return Err(SimulationError::Protocol(format!(
            "{slice} belongs to a validation scan"
        )));
    }
    if ground_truth.scan_id() != slice.scan_id {
        return Err(SimulationError::Argument(format!(
            "{slice} looked up in the labels of `{}`",
            ground_truth.scan_id()
        )));
    }
    if slice.z >= ground_truth.shape().depth {
        return Err(SimulationError::Argument(format!(
            "{slice} is out of range"
        )));
    }
    Ok(ground_truth.slice(slice.z))
}

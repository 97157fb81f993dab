//! Labeled / pseudo-labeled / unlabeled bookkeeping for the training pool.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interpolation::InterpolationMethod;

/// One 2D slice of a scan. Orders lexicographically by `(scan_id, z)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SliceId {
    pub scan_id: String,
    pub z: usize,
}

impl SliceId {
    pub fn new(scan_id: impl Into<String>, z: usize) -> Self {
        SliceId {
            scan_id: scan_id.into(),
            z,
        }
    }
}

impl fmt::Display for SliceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.scan_id, self.z)
    }
}

/// A strided block `z_top..=z_bottom` of one scan, drawn with maximum size `block_size`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BlockRef {
    pub scan_id: String,
    pub z_top: usize,
    pub z_bottom: usize,
    pub block_size: usize,
}

impl BlockRef {
    pub fn slices(&self) -> impl Iterator<Item = SliceId> + '_ {
        (self.z_top..=self.z_bottom).map(|z| SliceId::new(self.scan_id.clone(), z))
    }

    pub fn intermediate(&self) -> impl Iterator<Item = SliceId> + '_ {
        (self.z_top + 1..self.z_bottom).map(|z| SliceId::new(self.scan_id.clone(), z))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PseudoLabel {
    pub mask: Vec<u8>,
    pub height: usize,
    pub width: usize,
    pub source_block: BlockRef,
    pub method: InterpolationMethod,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PoolEvent {
    Label(SliceId),
    PseudoLabel(SliceId, PseudoLabel),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SliceStatus {
    Labeled,
    PseudoLabeled,
    Unlabeled,
}

#[derive(Debug, Error, PartialEq)]
pub enum PoolError {
    #[error("slice {0} is not part of the training pool")]
    UnknownSlice(SliceId),
    #[error("slice {0} is already labeled")]
    AlreadyLabeled(SliceId),
    #[error("slice {0} already carries a pseudo-label")]
    AlreadyPseudoLabeled(SliceId),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PoolState {
    labeled: BTreeSet<SliceId>,
    pseudo_labeled: BTreeMap<SliceId, PseudoLabel>,
    unlabeled: BTreeSet<SliceId>,
}

impl PoolState {
    /// A pool with every given slice unlabeled.
    pub fn new(slices: impl IntoIterator<Item = SliceId>) -> Self {
        PoolState {
            unlabeled: slices.into_iter().collect(),
            ..Default::default()
        }
    }

    pub fn from_scans<'a>(scans: impl IntoIterator<Item = (&'a str, usize)>) -> Self {
        Self::new(
            scans
                .into_iter()
                .flat_map(|(id, depth)| (0..depth).map(move |z| SliceId::new(id, z))),
        )
    }

    pub fn labeled(&self) -> &BTreeSet<SliceId> {
        &self.labeled
    }

    pub fn pseudo_labeled(&self) -> &BTreeMap<SliceId, PseudoLabel> {
        &self.pseudo_labeled
    }

    pub fn unlabeled(&self) -> &BTreeSet<SliceId> {
        &self.unlabeled
    }

    pub fn len(&self) -> usize {
        self.labeled.len() + self.pseudo_labeled.len() + self.unlabeled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn status(&self, slice: &SliceId) -> Option<SliceStatus> {
        if self.labeled.contains(slice) {
            Some(SliceStatus::Labeled)
        } else if self.pseudo_labeled.contains_key(slice) {
            Some(SliceStatus::PseudoLabeled)
        } else if self.unlabeled.contains(slice) {
            Some(SliceStatus::Unlabeled)
        } else {
            None
        }
    }

    /// Applies one transition. On error the pool is left unchanged.
    pub fn apply(&mut self, event: PoolEvent) -> Result<(), PoolError> {
        match event {
            PoolEvent::Label(slice) => match self.status(&slice) {
                None => Err(PoolError::UnknownSlice(slice)),
                Some(SliceStatus::Labeled) => Err(PoolError::AlreadyLabeled(slice)),
                Some(SliceStatus::PseudoLabeled) => {
                    self.pseudo_labeled.remove(&slice);
                    self.labeled.insert(slice);
                    Ok(())
                }
                Some(SliceStatus::Unlabeled) => {
                    self.unlabeled.remove(&slice);
                    self.labeled.insert(slice);
                    Ok(())
                }
            },
            PoolEvent::PseudoLabel(slice, label) => match self.status(&slice) {
                None => Err(PoolError::UnknownSlice(slice)),
                Some(SliceStatus::Labeled) => Err(PoolError::AlreadyLabeled(slice)),
                Some(SliceStatus::PseudoLabeled) => Err(PoolError::AlreadyPseudoLabeled(slice)),
                Some(SliceStatus::Unlabeled) => {
                    self.unlabeled.remove(&slice);
                    self.pseudo_labeled.insert(slice, label);
                    Ok(())
                }
            },
        }
    }

    /// Value-style transition.
    pub fn transition(mut self, event: PoolEvent) -> Result<PoolState, PoolError> {
        self.apply(event)?;
        Ok(self)
    }

    /// Number of scans with at least one unlabeled slice.
    pub fn scans_with_unlabeled(&self) -> usize {
        let scans: BTreeSet<&str> = self.unlabeled.iter().map(|s| s.scan_id.as_str()).collect();
        scans.len()
    }
}

//! Strided block selection.
//!
//! A block `z_top..=z_bottom` has its two endpoints annotated and its interior
//! pseudo-labeled. Blocks are searched at the largest span first; when no block
//! of the current span fits between existing labels, the span shrinks by one
//! down to a single step (two adjacent slices). Once every slice carries a
//! label or pseudo-label the span resets to `l` and blocks made of
//! pseudo-labeled slices become eligible, so pseudo-labels are gradually
//! replaced by true labels.
//!
//! Selection is driven by an annotation budget: a block costs its two
//! endpoints. Unlabeled slices that cannot be part of any block (isolated
//! between labels), and the last unit of an odd budget, are taken as single
//! slices.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::StrategyError;
use crate::pool::{BlockRef, PoolState, SliceId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockMode {
    Random,
    Uncertainty,
}

/// How to choose among eligible blocks: uniformly, or by the highest mean
/// per-slice entropy score.
#[derive(Clone, Copy, Debug)]
pub enum BlockScoring<'a> {
    Random,
    Uncertainty(&'a BTreeMap<SliceId, f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StridedPhase {
    /// Blocks of unlabeled slices only.
    Unlabeled,
    /// Every slice has a label or pseudo-label; blocks of pseudo-labeled slices.
    PseudoLabeled,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StridedPick {
    Block {
        block: BlockRef,
        phase: StridedPhase,
    },
    Single {
        slice: SliceId,
        phase: StridedPhase,
    },
}

impl StridedPick {
    /// Slices that receive a true label.
    pub fn annotated(&self) -> Vec<SliceId> {
        match self {
            StridedPick::Block { block, .. } => vec![
                SliceId::new(block.scan_id.clone(), block.z_top),
                SliceId::new(block.scan_id.clone(), block.z_bottom),
            ],
            StridedPick::Single { slice, .. } => vec![slice.clone()],
        }
    }

    pub fn cost(&self) -> usize {
        match self {
            StridedPick::Block { .. } => 2,
            StridedPick::Single { .. } => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StridedSelection {
    pub picks: Vec<StridedPick>,
    /// Set when the budget could not be spent because nothing eligible was left.
    pub shortage: bool,
}

impl StridedSelection {
    pub fn blocks(&self) -> impl Iterator<Item = &BlockRef> {
        self.picks.iter().filter_map(|p| match p {
            StridedPick::Block { block, .. } => Some(block),
            StridedPick::Single { .. } => None,
        })
    }
}

struct Search<'a> {
    pool: &'a PoolState,
    depths: &'a BTreeMap<String, usize>,
    scoring: BlockScoring<'a>,
    claimed: BTreeSet<SliceId>,
}

impl Search<'_> {
    fn eligible(&self, slice: &SliceId, phase: StridedPhase) -> bool {
        !self.claimed.contains(slice)
            && match phase {
                StridedPhase::Unlabeled => self.pool.unlabeled().contains(slice),
                StridedPhase::PseudoLabeled => {
                    self.pool.unlabeled().contains(slice)
                        || self.pool.pseudo_labeled().contains_key(slice)
                }
            }
    }

    fn blocks(&self, span: usize, max_size: usize, phase: StridedPhase) -> Vec<BlockRef> {
        let mut out = Vec::new();
        for (scan, &depth) in self.depths {
            for z_top in 0..depth.saturating_sub(span) {
                let block = BlockRef {
                    scan_id: scan.clone(),
                    z_top,
                    z_bottom: z_top + span,
                    block_size: max_size,
                };
                if block.slices().all(|s| self.eligible(&s, phase)) {
                    out.push(block);
                }
            }
        }
        out
    }

    fn singles(&self, phase: StridedPhase) -> Vec<SliceId> {
        let mut out = Vec::new();
        for (scan, &depth) in self.depths {
            out.extend(
                (0..depth)
                    .map(|z| SliceId::new(scan.clone(), z))
                    .filter(|s| self.eligible(s, phase)),
            );
        }
        out
    }

    fn score(&self, slice: &SliceId) -> Result<f64, StrategyError> {
        match self.scoring {
            BlockScoring::Random => Ok(0.0),
            BlockScoring::Uncertainty(scores) => scores.get(slice).copied().ok_or_else(|| {
                StrategyError::Argument(format!("no uncertainty score for {slice}"))
            }),
        }
    }

    /// Index of the chosen item: uniform in random mode, otherwise the first
    /// item with the highest score.
    fn choose<T>(
        &self,
        items: &[T],
        rng: &mut ChaCha8Rng,
        score: impl Fn(&T) -> Result<f64, StrategyError>,
    ) -> Result<usize, StrategyError> {
        match self.scoring {
            BlockScoring::Random => Ok(rng.random_range(0..items.len())),
            BlockScoring::Uncertainty(_) => {
                let mut best = 0;
                let mut best_score = f64::NEG_INFINITY;
                for (i, item) in items.iter().enumerate() {
                    let s = score(item)?;
                    if s > best_score {
                        best = i;
                        best_score = s;
                    }
                }
                Ok(best)
            }
        }
    }
}

/// Spends `budget` annotations on strided blocks (2 each) and, where no block
/// fits, single slices (1 each). `depths` gives the slice count of every
/// training scan in the pool.
pub fn select_strided_blocks(
    pool: &PoolState,
    depths: &BTreeMap<String, usize>,
    block_size: usize,
    budget: usize,
    scoring: BlockScoring<'_>,
    seed: u64,
) -> Result<StridedSelection, StrategyError> {
    if block_size < 2 {
        return Err(StrategyError::Argument(format!(
            "block size must be >= 2, got {block_size}"
        )));
    }
    if budget == 0 {
        return Err(StrategyError::Argument("budget must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut search = Search {
        pool,
        depths,
        scoring,
        claimed: BTreeSet::new(),
    };
    let mut picks = Vec::new();
    let mut remaining = budget;
    let mut phase = StridedPhase::Unlabeled;
    let mut span = block_size;
    let mut shortage = false;
    while remaining > 0 {
        if remaining >= 2 {
            let mut candidates = Vec::new();
            while span >= 1 {
                candidates = search.blocks(span, block_size, phase);
                if !candidates.is_empty() {
                    break;
                }
                span -= 1;
            }
            if !candidates.is_empty() {
                let i = search.choose(&candidates, &mut rng, |b| {
                    let scores: Result<Vec<f64>, _> =
                        b.slices().map(|s| search.score(&s)).collect();
                    let scores = scores?;
                    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
                })?;
                let block = candidates.swap_remove(i);
                search.claimed.extend(block.slices());
                picks.push(StridedPick::Block { block, phase });
                remaining -= 2;
                continue;
            }
        }
        let singles = search.singles(phase);
        if !singles.is_empty() {
            let i = search.choose(&singles, &mut rng, |s| search.score(s))?;
            let slice = singles[i].clone();
            search.claimed.insert(slice.clone());
            picks.push(StridedPick::Single { slice, phase });
            remaining -= 1;
        } else if phase == StridedPhase::Unlabeled {
            phase = StridedPhase::PseudoLabeled;
            span = block_size;
        } else {
            shortage = true;
            break;
        }
    }
    Ok(StridedSelection { picks, shortage })
}

//! One seeded active-learning run: split, initial random batch, then
//! select / annotate / fine-tune / evaluate for each iteration.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use super::dataset::{simulated_annotate, PreparedDataset};
use super::metrics::{compute_metrics, VolumeEvaluation};
use super::{ALConfig, SimulationError};
use crate::interpolation::interpolate_labels;
use crate::learner::{Learner, ProbabilityMap, ReferenceLearner, TrainingSample};
use crate::pool::{PoolEvent, PoolState, PseudoLabel, SliceId};
use crate::split::{split_train_validation, DatasetSplit};
use crate::strategies::{
    mean_shift, reduce_embeddings, score_entropy, score_least_confidence,
    select_cluster_representative, select_distance_representative, select_random,
    select_stratified, select_strided_blocks, select_top_uncertain, uncertainty_alpha, BlockMode,
    BlockScoring, SliceScore, StrategyError, StrategySpec, StridedPhase, StridedPick,
    DEFAULT_BANDWIDTH,
};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub labeled_count: usize,
    pub pseudo_count: usize,
    pub per_class_dice: Vec<f64>,
    pub mean_dice: f64,
    pub hausdorff: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub train_loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LearningCurve {
    pub seed: u64,
    pub records: Vec<IterationRecord>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub curve: LearningCurve,
    /// The pool ran out before all configured iterations were performed.
    pub truncated: bool,
    pub split: DatasetSplit,
    /// Final pool state, for inspection.
    pub pool: PoolState,
    /// Iterations in which distance sampling had no labeled slice and fell back to random.
    pub fallbacks: Vec<usize>,
}

#[derive(Debug, Error)]
#[error("seed {seed}, iteration {iteration}: {source}")]
pub struct RunError {
    pub seed: u64,
    pub iteration: usize,
    /// Records completed before the failure.
    pub partial: LearningCurve,
    #[source]
    pub source: SimulationError,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Write a learner checkpoint after every iteration's training step.
    pub checkpoint_dir: Option<PathBuf>,
    /// Prefix for checkpoint file names.
    pub label: String,
}

/// Runs the protocol with the reference learner.
pub fn run_active_learning(
    config: &ALConfig,
    dataset: &PreparedDataset,
    seed: u64,
    options: &RunOptions,
) -> Result<RunOutcome, RunError> {
    let fail = |source: SimulationError| RunError {
        seed,
        iteration: 0,
        partial: LearningCurve {
            seed,
            records: vec![],
        },
        source,
    };
    config.validate().map_err(fail)?;
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    // the fourth draw of the run's generator; see `Seeds`
    for _ in 0..3 {
        seeds.next_u64();
    }
    let model_seed = seeds.next_u64() ^ config.learner.seed;
    let learner_config = crate::learner::LearnerConfig {
        seed: model_seed,
        ..config.effective_learner()
    };
    let learner =
        ReferenceLearner::new(learner_config, dataset.num_classes(), dataset.label_mode())
            .map_err(|e| fail(e.into()))?;
    run_with_learner(config, dataset, seed, learner, options)
}

/// Independent sub-seeds drawn in a fixed order from the run seed.
struct Seeds {
    rng: ChaCha8Rng,
}

impl Seeds {
    fn new(seed: u64) -> Self {
        Seeds {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn next(&mut self) -> u64 {
        self.rng.next_u64()
    }
}

struct Run<'a, L: Learner> {
    config: &'a ALConfig,
    dataset: &'a PreparedDataset,
    split: DatasetSplit,
    pool: PoolState,
    learner: L,
    depths: BTreeMap<String, usize>,
}

/// Runs the protocol with any learner. The learner's own initialization is
/// the caller's responsibility; everything else is derived from `seed`.
pub fn run_with_learner<L: Learner + Sync>(
    config: &ALConfig,
    dataset: &PreparedDataset,
    seed: u64,
    learner: L,
    options: &RunOptions,
) -> Result<RunOutcome, RunError> {
    let mut curve = LearningCurve {
        seed,
        records: vec![],
    };
    let mut iteration = 0;
    let result = (|| -> Result<(bool, DatasetSplit, PoolState, Vec<usize>), SimulationError> {
        config.validate()?;
        let mut seeds = Seeds::new(seed);
        let split_seed = seeds.next();
        let initial_seed = seeds.next();
        let _reserved = seeds.next();
        let _model_seed = seeds.next();

        let split =
            split_train_validation(&dataset.scan_ids(), config.validation_fraction, split_seed)?;
        let depths: BTreeMap<String, usize> = split
            .train_scans
            .iter()
            .map(|id| {
                (
                    id.clone(),
                    dataset.scan(id).expect("split of dataset ids").shape.depth,
                )
            })
            .collect();
        let pool = PoolState::from_scans(depths.iter().map(|(id, &d)| (id.as_str(), d)));
        let mut run = Run {
            config,
            dataset,
            split,
            pool,
            learner,
            depths,
        };

        let candidates: Vec<SliceId> = run.pool.unlabeled().iter().cloned().collect();
        if candidates.len() < config.initial_slices {
            return Err(SimulationError::Argument(format!(
                "{} training slices cannot provide {} initial slices",
                candidates.len(),
                config.initial_slices
            )));
        }
        for s in select_random(&candidates, config.initial_slices, initial_seed)? {
            run.annotate(s)?;
        }
        curve.records.push(run.train_and_evaluate(0, options)?);

        let mut truncated = false;
        let mut fallbacks = Vec::new();
        for it in 1..=config.iterations {
            iteration = it;
            let strategy_seed = seeds.next();
            let selected = run.select(strategy_seed, it, &mut fallbacks)?;
            if selected == 0 {
                truncated = true;
                break;
            }
            curve.records.push(run.train_and_evaluate(it, options)?);
            if selected < config.slices_per_iteration {
                truncated = true;
                break;
            }
        }
        if truncated {
            log::info!(
                "seed {seed}: pool exhausted after {} iterations ({} labeled)",
                curve.records.len() - 1,
                run.pool.labeled().len()
            );
        }
        Ok((truncated, run.split, run.pool, fallbacks))
    })();
    match result {
        Ok((truncated, split, pool, fallbacks)) => Ok(RunOutcome {
            curve,
            truncated,
            split,
            pool,
            fallbacks,
        }),
        Err(source) => Err(RunError {
            seed,
            iteration,
            partial: curve,
            source,
        }),
    }
}

fn annotate_from<'a>(
    dataset: &'a PreparedDataset,
    split: &DatasetSplit,
    slice: &SliceId,
) -> Result<&'a [u8], SimulationError> {
    let scan = dataset
        .scan(&slice.scan_id)
        .ok_or_else(|| SimulationError::Argument(format!("unknown scan of {slice}")))?;
    simulated_annotate(slice, &scan.labels, split)
}

impl<'a, L: Learner + Sync> Run<'a, L> {
    fn truth(&self, slice: &SliceId) -> Result<&'a [u8], SimulationError> {
        annotate_from(self.dataset, &self.split, slice)
    }

    fn annotate(&mut self, slice: SliceId) -> Result<(), SimulationError> {
        self.truth(&slice)?;
        self.pool.apply(PoolEvent::Label(slice))?;
        Ok(())
    }

    fn predict(&self, slices: &[SliceId]) -> Result<Vec<ProbabilityMap>, SimulationError> {
        let learner = &self.learner;
        let dataset = self.dataset;
        slices
            .par_iter()
            .map(|s| {
                let f = dataset
                    .features(s)
                    .expect("pool slices come from the dataset");
                Ok(learner.predict_proba(f)?)
            })
            .collect()
    }

    fn embed(&self, slices: &[SliceId]) -> Result<Vec<Vec<f64>>, SimulationError> {
        let learner = &self.learner;
        let dataset = self.dataset;
        slices
            .par_iter()
            .map(|s| {
                Ok(learner.embed_slice(
                    dataset
                        .features(s)
                        .expect("pool slices come from the dataset"),
                )?)
            })
            .collect()
    }

    fn entropy_scores(&self, slices: &[SliceId]) -> Result<Vec<SliceScore>, SimulationError> {
        let alpha = uncertainty_alpha(self.dataset.label_mode(), self.dataset.num_classes());
        let probs = self.predict(slices)?;
        Ok(slices
            .iter()
            .zip(&probs)
            .map(|(s, p)| SliceScore {
                slice: s.clone(),
                score: score_entropy(p, alpha),
            })
            .collect())
    }

    /// Applies one query step and returns the number of newly annotated slices.
    fn select(
        &mut self,
        seed: u64,
        iteration: usize,
        fallbacks: &mut Vec<usize>,
    ) -> Result<usize, SimulationError> {
        let budget = self.config.slices_per_iteration;
        let unlabeled: Vec<SliceId> = self.pool.unlabeled().iter().cloned().collect();
        let strategy = self.config.strategy.clone();
        if let StrategySpec::Strided {
            block_size,
            block_mode,
            interpolation,
        } = strategy
        {
            let scores;
            let scoring = match block_mode {
                BlockMode::Random => BlockScoring::Random,
                BlockMode::Uncertainty => {
                    let open: Vec<SliceId> = unlabeled
                        .iter()
                        .chain(self.pool.pseudo_labeled().keys())
                        .cloned()
                        .collect();
                    scores = self
                        .entropy_scores(&open)?
                        .into_iter()
                        .map(|s| (s.slice, s.score))
                        .collect::<BTreeMap<_, _>>();
                    BlockScoring::Uncertainty(&scores)
                }
            };
            let selection =
                select_strided_blocks(&self.pool, &self.depths, block_size, budget, scoring, seed)?;
            let mut count = 0;
            for pick in &selection.picks {
                for s in pick.annotated() {
                    self.annotate(s)?;
                    count += 1;
                }
                if let (
                    StridedPick::Block {
                        block,
                        phase: StridedPhase::Unlabeled,
                    },
                    Some(method),
                ) = (pick, interpolation)
                {
                    if block.z_bottom - block.z_top < 2 {
                        continue;
                    }
                    let scan = self
                        .dataset
                        .scan(&block.scan_id)
                        .expect("block of a training scan");
                    let shape = scan.shape;
                    let top = self.truth(&SliceId::new(block.scan_id.clone(), block.z_top))?;
                    let bottom =
                        self.truth(&SliceId::new(block.scan_id.clone(), block.z_bottom))?;
                    let masks = interpolate_labels(
                        top,
                        bottom,
                        shape.height,
                        shape.width,
                        block.z_bottom - block.z_top - 1,
                        self.dataset.num_classes(),
                        self.dataset.label_mode(),
                        method,
                    )?;
                    if let Some(masks) = masks {
                        for (slice, mask) in block.intermediate().zip(masks) {
                            let label = PseudoLabel {
                                mask,
                                height: shape.height,
                                width: shape.width,
                                source_block: block.clone(),
                                method,
                            };
                            self.pool.apply(PoolEvent::PseudoLabel(slice, label))?;
                        }
                    }
                }
            }
            return Ok(count);
        }

        let k = budget.min(unlabeled.len());
        if k == 0 {
            return Ok(0);
        }
        let picked = match strategy {
            StrategySpec::Random => select_random(&unlabeled, k, seed)?,
            StrategySpec::Stratified => select_stratified(&unlabeled, k, seed)?,
            StrategySpec::LeastConfidence | StrategySpec::Entropy => {
                let alpha =
                    uncertainty_alpha(self.dataset.label_mode(), self.dataset.num_classes());
                let probs = self.predict(&unlabeled)?;
                let scores: Vec<SliceScore> = unlabeled
                    .iter()
                    .zip(&probs)
                    .map(|(s, p)| SliceScore {
                        slice: s.clone(),
                        score: if strategy == StrategySpec::Entropy {
                            score_entropy(p, alpha)
                        } else {
                            score_least_confidence(p, alpha)
                        },
                    })
                    .collect();
                select_top_uncertain(&scores, k)?
            }
            StrategySpec::DistRepr | StrategySpec::ClusterRepr => {
                let labeled: Vec<SliceId> = self.pool.labeled().iter().cloned().collect();
                let all: Vec<SliceId> = labeled.iter().chain(&unlabeled).cloned().collect();
                let raw = self.embed(&all)?;
                let reduced = if raw.len() >= 2 {
                    reduce_embeddings(&raw)?.vectors
                } else {
                    vec![Vec::new(); raw.len()]
                };
                let (lab, unl) = reduced.split_at(labeled.len());
                let candidates: Vec<(SliceId, Vec<f64>)> =
                    unlabeled.iter().cloned().zip(unl.iter().cloned()).collect();
                if strategy == StrategySpec::DistRepr {
                    match select_distance_representative(&candidates, lab, k) {
                        Err(StrategyError::NoLabeledSlices) => {
                            log::warn!("iteration {iteration}: no labeled slices for distance sampling, using random");
                            fallbacks.push(iteration);
                            select_random(&unlabeled, k, seed)?
                        }
                        other => other?,
                    }
                } else {
                    let points: Vec<Vec<f64>> = unl.to_vec();
                    let clusters = mean_shift(&points, DEFAULT_BANDWIDTH)?;
                    select_cluster_representative(&clusters, &candidates, k)?
                }
            }
            StrategySpec::Strided { .. } => unreachable!("handled above"),
        };
        let count = picked.len();
        for s in picked {
            self.annotate(s)?;
        }
        Ok(count)
    }

    fn train_and_evaluate(
        &mut self,
        iteration: usize,
        options: &RunOptions,
    ) -> Result<IterationRecord, SimulationError> {
        let dataset = self.dataset;
        let labeled: Vec<SliceId> = self.pool.labeled().iter().cloned().collect();
        let mut samples = Vec::with_capacity(labeled.len() + self.pool.pseudo_labeled().len());
        for s in &labeled {
            let mask = self.truth(s)?;
            samples.push(TrainingSample {
                features: dataset.features(s).expect("labeled slice in dataset"),
                mask,
                weight: 1.0,
            });
        }
        for (s, p) in self.pool.pseudo_labeled() {
            samples.push(TrainingSample {
                features: dataset
                    .features(s)
                    .expect("pseudo-labeled slice in dataset"),
                mask: &p.mask,
                weight: 1.0,
            });
        }
        let report = self.learner.train_epochs(&samples)?;
        if let Some(dir) = &options.checkpoint_dir {
            let name = format!("ckpt_{}_{:03}.bin", options.label, iteration);
            self.learner.save_checkpoint(&dir.join(name))?;
        }

        let mut volumes = Vec::with_capacity(self.split.validation_scans.len());
        for id in &self.split.validation_scans {
            let scan = dataset.scan(id).expect("validation scan in dataset");
            let predictions = scan
                .features
                .par_iter()
                .map(|f| self.learner.predict_proba(f))
                .collect::<Result<Vec<_>, _>>()?;
            let truth = (0..scan.shape.depth)
                .map(|z| scan.labels.slice(z))
                .collect();
            volumes.push(VolumeEvaluation { predictions, truth });
        }
        let metrics = compute_metrics(&volumes, dataset.num_classes(), dataset.label_mode())?;
        debug_assert!(self
            .pool
            .labeled()
            .iter()
            .chain(self.pool.pseudo_labeled().keys())
            .all(|s| !self.split.is_validation(&s.scan_id)));
        Ok(IterationRecord {
            iteration,
            labeled_count: self.pool.labeled().len(),
            pseudo_count: self.pool.pseudo_labeled().len(),
            per_class_dice: metrics.per_class_dice,
            mean_dice: metrics.mean_dice,
            hausdorff: metrics.hausdorff,
            sensitivity: metrics.sensitivity,
            specificity: metrics.specificity,
            train_loss: report.final_loss().unwrap_or(f64::NAN),
        })
    }
}

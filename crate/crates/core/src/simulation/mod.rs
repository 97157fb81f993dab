//! The seeded active-learning loop, its metrics and multi-seed aggregation.

mod aggregate;
mod dataset;
pub mod metrics;
mod output;
mod run;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use aggregate::{aggregate_runs, AggregateCurve};
pub use dataset::{simulated_annotate, PreparedDataset, PreparedScan};
pub use metrics::{compute_metrics, dice, hausdorff_2d, Metrics, VolumeEvaluation};
pub use output::{curve_csv, curve_header, summary_csv};
pub use run::{
    run_active_learning, run_with_learner, IterationRecord, LearningCurve, RunError, RunOptions,
    RunOutcome,
};

use crate::interpolation::InterpolationError;
use crate::learner::{LearnerConfig, LearnerError};
use crate::pool::PoolError;
use crate::split::SplitError;
use crate::strategies::{StrategyError, StrategySpec};

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error(transparent)]
    Pool(#[from] PoolError),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Interpolation(#[from] InterpolationError),
}

fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3]
}

/// Protocol settings of one experiment (one strategy, any number of seeds).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ALConfig {
    #[serde(default = "ALConfig::default_initial")]
    pub initial_slices: usize,
    #[serde(default = "ALConfig::default_per_iteration")]
    pub slices_per_iteration: usize,
    #[serde(default = "ALConfig::default_iterations")]
    pub iterations: usize,
    /// Overrides `learner.epochs_per_iteration`.
    #[serde(default = "ALConfig::default_epochs")]
    pub epochs_per_iteration: usize,
    pub strategy: StrategySpec,
    #[serde(default)]
    pub learner: LearnerConfig,
    #[serde(default = "ALConfig::default_fraction")]
    pub validation_fraction: f64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
}

impl ALConfig {
    fn default_initial() -> usize {
        32
    }
    fn default_per_iteration() -> usize {
        16
    }
    fn default_iterations() -> usize {
        50
    }
    fn default_epochs() -> usize {
        10
    }
    fn default_fraction() -> f64 {
        0.2
    }

    /// Protocol defaults (32 initial slices, 16 per iteration, 50 iterations,
    /// 10 epochs, 20% validation scans, seeds 1-3) for `strategy`.
    pub fn new(strategy: StrategySpec) -> Self {
        ALConfig {
            initial_slices: Self::default_initial(),
            slices_per_iteration: Self::default_per_iteration(),
            iterations: Self::default_iterations(),
            epochs_per_iteration: Self::default_epochs(),
            strategy,
            learner: LearnerConfig::default(),
            validation_fraction: Self::default_fraction(),
            seeds: default_seeds(),
        }
    }

    pub fn validate(&self) -> Result<(), SimulationError> {
        let bad = |m: &str| Err(SimulationError::Argument(m.into()));
        if self.initial_slices == 0 {
            return bad("initial_slices must be >= 1");
        }
        if self.slices_per_iteration == 0 {
            return bad("slices_per_iteration must be >= 1");
        }
        if self.epochs_per_iteration == 0 {
            return bad("epochs_per_iteration must be >= 1");
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad("validation_fraction must lie in (0, 1)");
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required");
        }
        self.effective_learner().validate()?;
        Ok(())
    }

    /// The learner configuration with the protocol's epoch count applied.
    pub fn effective_learner(&self) -> LearnerConfig {
        LearnerConfig {
            epochs_per_iteration: self.epochs_per_iteration,
            ..self.learner.clone()
        }
    }
}

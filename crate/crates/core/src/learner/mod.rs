//! Learner contract and the built-in per-pixel MLP reference learner.

mod checkpoint;
mod features;
mod loss;
mod model;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use features::{extract_pixel_features, FeatureGrid, FEATURE_COUNT};
pub use loss::{compute_loss, LossKind, DICE_SMOOTH, PROB_EPS};
pub use model::{ModelState, TrainReport, TrainingSample, MAX_PIXELS_PER_SLICE};

use crate::volume::LabelMode;

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("non-finite value at pixel {pixel}: {context}")]
    Numeric { pixel: usize, context: String },
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearnerConfig {
    pub learning_rate: f64,
    pub focal_gamma: f64,
    pub epochs_per_iteration: usize,
    /// Pixels per mini-batch, drawn from all training slices.
    pub batch_size: usize,
    #[serde(rename = "loss")]
    pub loss_kind: LossKind,
    pub hidden_width: usize,
    pub seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            learning_rate: 1e-4,
            focal_gamma: 5.0,
            epochs_per_iteration: 10,
            batch_size: 64,
            loss_kind: LossKind::Focal,
            hidden_width: 16,
            seed: 0,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<(), LearnerError> {
        let bad = |msg: String| Err(LearnerError::Argument(msg));
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return bad(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            ));
        }
        if !(self.focal_gamma >= 0.0) || !self.focal_gamma.is_finite() {
            return bad(format!(
                "focal_gamma must be >= 0, got {}",
                self.focal_gamma
            ));
        }
        if self.epochs_per_iteration == 0 {
            return bad("epochs_per_iteration must be >= 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1".into());
        }
        if self.hidden_width == 0 {
            return bad("hidden_width must be >= 1".into());
        }
        Ok(())
    }
}

/// Per-class probabilities stored class-major: `values[c * H * W + pixel]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityMap {
    classes: usize,
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl ProbabilityMap {
    pub fn new(classes: usize, height: usize, width: usize, values: Vec<f64>) -> Self {
        assert_eq!(
            values.len(),
            classes * height * width,
            "probability map size mismatch"
        );
        ProbabilityMap {
            classes,
            height,
            width,
            values,
        }
    }

    pub fn classes(&self) -> usize {
        self.classes
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

    pub fn get(&self, class: usize, pixel: usize) -> f64 {
        self.values[class * self.pixels() + pixel]
    }

    pub fn channel(&self, class: usize) -> &[f64] {
        let n = self.pixels();
        &self.values[class * n..(class + 1) * n]
    }

    /// Binary prediction for `class`: argmax (first index on ties) in
    /// single-label mode, `p > 0.5` in multi-label mode.
    pub fn predicted_mask(&self, class: usize, mode: LabelMode) -> Vec<bool> {
        match mode {
            LabelMode::MultiLabel => self.channel(class).iter().map(|&p| p > 0.5).collect(),
            LabelMode::SingleLabel => (0..self.pixels())
                .map(|i| {
                    let mut best = 0;
                    for c in 1..self.classes {
                        if self.get(c, i) > self.get(best, i) {
                            best = c;
                        }
                    }
                    best == class
                })
                .collect(),
        }
    }
}

/// What the active-learning loop needs from a segmentation model.
pub trait Learner {
    fn predict_proba(&self, features: &FeatureGrid) -> Result<ProbabilityMap, LearnerError>;

    /// Max-pooled inner-layer activations of one slice.
    fn embed_slice(&self, features: &FeatureGrid) -> Result<Vec<f64>, LearnerError>;

    /// Continues training from the current state.
    fn train_epochs(&mut self, samples: &[TrainingSample<'_>])
        -> Result<TrainReport, LearnerError>;

    fn save_checkpoint(&self, _path: &std::path::Path) -> Result<(), LearnerError> {
        Err(LearnerError::Argument(
            "this learner does not support checkpoints".into(),
        ))
    }
}

/// The per-pixel MLP with its training configuration.
#[derive(Clone, Debug)]
pub struct ReferenceLearner {
    pub state: ModelState,
    pub config: LearnerConfig,
}

impl ReferenceLearner {
    pub fn new(
        config: LearnerConfig,
        classes: usize,
        mode: LabelMode,
    ) -> Result<Self, LearnerError> {
        config.validate()?;
        let state = ModelState::new(
            FEATURE_COUNT,
            config.hidden_width,
            classes,
            mode,
            config.seed,
        );
        Ok(ReferenceLearner { state, config })
    }
}

impl Learner for ReferenceLearner {
    fn predict_proba(&self, features: &FeatureGrid) -> Result<ProbabilityMap, LearnerError> {
        self.state.predict_proba(features)
    }

    fn embed_slice(&self, features: &FeatureGrid) -> Result<Vec<f64>, LearnerError> {
        self.state.embed_slice(features)
    }

    fn train_epochs(
        &mut self,
        samples: &[TrainingSample<'_>],
    ) -> Result<TrainReport, LearnerError> {
        self.state.train_epochs(samples, &self.config)
    }

    fn save_checkpoint(&self, path: &std::path::Path) -> Result<(), LearnerError> {
        self.state.save_checkpoint(path)
    }
}

//! Query strategies: random, stratified, uncertainty, representativeness and strided.

mod embedding;
mod representative;
mod sampling;
mod strided;
mod uncertainty;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use embedding::{reduce_embeddings, Reduction, MAX_COMPONENTS};
pub use representative::{
    cluster_quotas, distance_scores, mean_shift, select_cluster_representative,
    select_distance_representative, ClusterAssignment, DEFAULT_BANDWIDTH,
};
pub use sampling::{select_random, select_stratified, stratified_quotas};
pub use strided::{
    select_strided_blocks, BlockMode, BlockScoring, StridedPhase, StridedPick, StridedSelection,
};
pub use uncertainty::{
    score_entropy, score_least_confidence, select_top_uncertain, uncertainty_alpha, SliceScore,
};

use crate::interpolation::InterpolationMethod;

#[derive(Debug, Error, PartialEq)]
pub enum StrategyError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("distance sampling needs at least one labeled slice")]
    NoLabeledSlices,
}

pub const DEFAULT_BLOCK_SIZE: usize = 5;

/// A query strategy as named in run configs.
///
/// Serialized as its name (`"entropy"`) or, for strided sampling, as an object
/// `{"name": "strided", "block_size": 5, "block_mode": "random", "interpolation": "signed_distance"}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawStrategy", into = "RawStrategy")]
pub enum StrategySpec {
    Random,
    Stratified,
    LeastConfidence,
    Entropy,
    DistRepr,
    ClusterRepr,
    Strided {
        block_size: usize,
        block_mode: BlockMode,
        /// `None` leaves the interior slices of a block unlabeled.
        interpolation: Option<InterpolationMethod>,
    },
}

impl StrategySpec {
    pub fn strided(block_size: usize, interpolation: Option<InterpolationMethod>) -> Self {
        StrategySpec::Strided {
            block_size,
            block_mode: BlockMode::Random,
            interpolation,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            StrategySpec::Random => "random",
            StrategySpec::Stratified => "stratified",
            StrategySpec::LeastConfidence => "least_confidence",
            StrategySpec::Entropy => "entropy",
            StrategySpec::DistRepr => "dist_repr",
            StrategySpec::ClusterRepr => "cluster_repr",
            StrategySpec::Strided { .. } => "strided",
        }
    }

    /// File-name friendly identifier, unique per parameterization.
    pub fn label(&self) -> String {
        match self {
            StrategySpec::Strided {
                block_size,
                block_mode,
                interpolation,
            } => format!(
                "strided_l{block_size}_{}_{}",
                match block_mode {
                    BlockMode::Random => "random",
                    BlockMode::Uncertainty => "uncertainty",
                },
                InterpolationChoice::from(*interpolation).as_str()
            ),
            other => other.name().to_string(),
        }
    }

    pub fn all_names() -> &'static [&'static str] {
        &[
            "random",
            "stratified",
            "least_confidence",
            "entropy",
            "dist_repr",
            "cluster_repr",
            "strided",
        ]
    }
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum InterpolationChoice {
    SignedDistance,
    Morphological,
    None,
}

impl InterpolationChoice {
    fn as_str(self) -> &'static str {
        match self {
            InterpolationChoice::SignedDistance => "signed_distance",
            InterpolationChoice::Morphological => "morphological",
            InterpolationChoice::None => "none",
        }
    }
}

impl From<Option<InterpolationMethod>> for InterpolationChoice {
    fn from(m: Option<InterpolationMethod>) -> Self {
        match m {
            Some(InterpolationMethod::SignedDistance) => InterpolationChoice::SignedDistance,
            Some(InterpolationMethod::Morphological) => InterpolationChoice::Morphological,
            None => InterpolationChoice::None,
        }
    }
}

impl From<InterpolationChoice> for Option<InterpolationMethod> {
    fn from(c: InterpolationChoice) -> Self {
        match c {
            InterpolationChoice::SignedDistance => Some(InterpolationMethod::SignedDistance),
            InterpolationChoice::Morphological => Some(InterpolationMethod::Morphological),
            InterpolationChoice::None => None,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawStrategy {
    Name(String),
    Full(StrategyObject),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StrategyObject {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    block_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    block_mode: Option<BlockMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    interpolation: Option<InterpolationChoice>,
}

impl TryFrom<RawStrategy> for StrategySpec {
    type Error = String;

    fn try_from(raw: RawStrategy) -> Result<Self, String> {
        let obj = match raw {
            RawStrategy::Name(name) => StrategyObject {
                name,
                block_size: None,
                block_mode: None,
                interpolation: None,
            },
            RawStrategy::Full(obj) => obj,
        };
        let simple = match obj.name.as_str() {
            "random" => Some(StrategySpec::Random),
            "stratified" => Some(StrategySpec::Stratified),
            "least_confidence" => Some(StrategySpec::LeastConfidence),
            "entropy" => Some(StrategySpec::Entropy),
            "dist_repr" => Some(StrategySpec::DistRepr),
            "cluster_repr" => Some(StrategySpec::ClusterRepr),
            "strided" => None,
            other => {
                return Err(format!(
                    "unknown strategy `{other}`, expected one of {}",
                    StrategySpec::all_names().join(", ")
                ))
            }
        };
        if let Some(spec) = simple {
            if obj.block_size.is_some() || obj.block_mode.is_some() || obj.interpolation.is_some() {
                return Err(format!("strategy `{}` takes no parameters", obj.name));
            }
            return Ok(spec);
        }
        let block_size = obj.block_size.unwrap_or(DEFAULT_BLOCK_SIZE);
        if block_size < 2 {
            return Err(format!("strided block_size must be >= 2, got {block_size}"));
        }
        Ok(StrategySpec::Strided {
            block_size,
            block_mode: obj.block_mode.unwrap_or(BlockMode::Random),
            interpolation: obj
                .interpolation
                .unwrap_or(InterpolationChoice::SignedDistance)
                .into(),
        })
    }
}

impl From<StrategySpec> for RawStrategy {
    fn from(spec: StrategySpec) -> Self {
        match spec {
            StrategySpec::Strided {
                block_size,
                block_mode,
                interpolation,
            } => RawStrategy::Full(StrategyObject {
                name: "strided".into(),
                block_size: Some(block_size),
                block_mode: Some(block_mode),
                interpolation: Some(interpolation.into()),
            }),
            other => RawStrategy::Name(other.name().into()),
        }
    }
}

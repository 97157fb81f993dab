use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use alseg_core::learner::LearnerConfig;
use alseg_core::simulation::ALConfig;
use alseg_core::strategies::StrategySpec;
use alseg_core::synthetic::SyntheticSpec;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    /// A directory of volume directories, as written by `gen-data`.
    Path(PathBuf),
    Synthetic(SyntheticSource),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSource {
    #[serde(default = "SyntheticSpec::standard")]
    pub spec: SyntheticSpec,
    #[serde(default = "default_data_seed")]
    pub seed: u64,
}

fn default_data_seed() -> u64 {
    42
}

/// The `simulate` config file. Every protocol field is optional; a resolved
/// config (as stored in `run_meta.json`) has all of them filled in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub dataset: DatasetSource,
    pub strategies: Vec<StrategySpec>,
    pub output: PathBuf,
    #[serde(default = "defaults::initial_slices")]
    pub initial_slices: usize,
    #[serde(default = "defaults::slices_per_iteration")]
    pub slices_per_iteration: usize,
    #[serde(default = "defaults::iterations")]
    pub iterations: usize,
    #[serde(default = "defaults::epochs_per_iteration")]
    pub epochs_per_iteration: usize,
    #[serde(default)]
    pub learner: LearnerConfig,
    #[serde(default = "defaults::validation_fraction")]
    pub validation_fraction: f64,
    #[serde(default = "defaults::seeds")]
    pub seeds: Vec<u64>,
}

mod defaults {
    use super::*;

    fn protocol() -> ALConfig {
        ALConfig::new(StrategySpec::Random)
    }
    pub fn initial_slices() -> usize {
        protocol().initial_slices
    }
    pub fn slices_per_iteration() -> usize {
        protocol().slices_per_iteration
    }
    pub fn iterations() -> usize {
        protocol().iterations
    }
    pub fn epochs_per_iteration() -> usize {
        protocol().epochs_per_iteration
    }
    pub fn validation_fraction() -> f64 {
        protocol().validation_fraction
    }
    pub fn seeds() -> Vec<u64> {
        protocol().seeds
    }
}

impl RunConfigFile {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: RunConfigFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let at = if path == "." { String::new() } else { format!(" at `{path}`") };
            CliError::Usage(format!("{}{at}: {inner}", origin.display()))
        })?;
        config.validate().map_err(|m| CliError::Usage(format!("{}: {m}", origin.display())))?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, path)
    }

    fn validate(&self) -> Result<(), String> {
        if self.strategies.is_empty() {
            return Err("`strategies` must name at least one strategy".into());
        }
        let mut labels = BTreeSet::new();
        for s in &self.strategies {
            if !labels.insert(s.label()) {
                return Err(format!("strategy `{}` is listed twice", s.label()));
            }
        }
        let mut seeds = BTreeSet::new();
        for s in &self.seeds {
            if !seeds.insert(s) {
                return Err(format!("seed {s} is listed twice"));
            }
        }
        for cfg in self.resolve() {
            cfg.validate().map_err(|e| e.to_string())?;
        }
        Ok(())
    }

    /// One protocol config per strategy, in file order, seeds ascending.
    pub fn resolve(&self) -> Vec<ALConfig> {
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        self.strategies
            .iter()
            .map(|s| ALConfig {
                initial_slices: self.initial_slices,
                slices_per_iteration: self.slices_per_iteration,
                iterations: self.iterations,
                epochs_per_iteration: self.epochs_per_iteration,
                strategy: s.clone(),
                learner: self.learner.clone(),
                validation_fraction: self.validation_fraction,
                seeds: seeds.clone(),
            })
            .collect()
    }
}

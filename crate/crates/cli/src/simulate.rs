use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use alseg_core::simulation::{
    aggregate_runs, curve_csv, run_active_learning, summary_csv, ALConfig, LearningCurve, PreparedDataset,
    RunOptions,
};
use alseg_core::synthetic::make_synthetic_dataset;
use alseg_core::volume::LabelMode;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{DatasetSource, RunConfigFile};
use crate::data::load_dataset;
use crate::error::CliError;
use crate::files::{create_dir, guard_output, write_atomic};

pub struct SimulateArgs {
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub strategies: Option<Vec<String>>,
    pub seeds: Option<Vec<u64>>,
    pub force: bool,
    pub checkpoint_dir: Option<PathBuf>,
}

pub fn is_result_file(name: &str) -> bool {
    name == "run_meta.json"
        || (name.ends_with(".csv") && (name.starts_with("curve_") || name.starts_with("summary_")))
}

pub fn curve_file(label: &str, seed: u64) -> String {
    format!("curve_{label}_{seed}.csv")
}

pub fn summary_file(label: &str) -> String {
    format!("summary_{label}.csv")
}

#[derive(Serialize)]
struct RunMeta<'a> {
    version: &'static str,
    config: &'a RunConfigFile,
    filters: Filters<'a>,
    /// How `mean_dice_std` in the summaries is computed.
    std: &'static str,
    dataset: DatasetMeta,
    runs: Vec<RunEntry>,
    summaries: Vec<SummaryEntry>,
}

#[derive(Serialize)]
struct Filters<'a> {
    strategies: Option<&'a [String]>,
    seeds: Option<&'a [u64]>,
}

#[derive(Serialize)]
struct DatasetMeta {
    scans: usize,
    slices: usize,
    num_classes: usize,
    label_mode: LabelMode,
}

#[derive(Serialize)]
struct RunEntry {
    strategy: String,
    seed: u64,
    file: Option<String>,
    records: usize,
    truncated: bool,
    /// Iterations where distance sampling fell back to random selection.
    fallback_iterations: Vec<usize>,
    train_scans: Vec<String>,
    validation_scans: Vec<String>,
    error: Option<String>,
}

#[derive(Serialize)]
struct SummaryEntry {
    strategy: String,
    file: String,
    seeds: Vec<u64>,
    single_seed: bool,
}

fn select_strategies(configs: Vec<ALConfig>, filter: Option<&[String]>) -> Result<Vec<ALConfig>, CliError> {
    let Some(filter) = filter else {
        return Ok(configs);
    };
    for f in filter {
        if !configs.iter().any(|c| c.strategy.label() == *f || c.strategy.name() == f) {
            let known: Vec<String> = configs.iter().map(|c| c.strategy.label()).collect();
            return Err(CliError::Usage(format!(
                "--strategies: `{f}` is not in the config (have: {})",
                known.join(", ")
            )));
        }
    }
    Ok(configs
        .into_iter()
        .filter(|c| filter.iter().any(|f| c.strategy.label() == *f || c.strategy.name() == f))
        .collect())
}

fn select_seeds(configured: &[u64], filter: Option<&[u64]>) -> Result<Vec<u64>, CliError> {
    let mut seeds = match filter {
        None => configured.to_vec(),
        Some(f) => {
            if let Some(s) = f.iter().find(|s| !configured.contains(s)) {
                return Err(CliError::Usage(format!("--seeds: seed {s} is not in the config {configured:?}")));
            }
            f.to_vec()
        }
    };
    seeds.sort_unstable();
    seeds.dedup();
    Ok(seeds)
}

fn prepare(source: &DatasetSource) -> Result<PreparedDataset, CliError> {
    let pairs = match source {
        DatasetSource::Path(p) => load_dataset(p)?,
        DatasetSource::Synthetic(s) => make_synthetic_dataset(&s.spec, s.seed).map_err(|e| CliError::Usage(e.to_string()))?,
    };
    PreparedDataset::new(pairs).map_err(|e| CliError::Usage(format!("dataset: {e}")))
}

fn remove_stale(dir: &Path) -> Result<(), CliError> {
    let Ok(entries) = std::fs::read_dir(dir) else {
        return Ok(());
    };
    for e in entries.flatten() {
        if is_result_file(&e.file_name().to_string_lossy()) {
            std::fs::remove_file(e.path())
                .map_err(|err| CliError::Runtime(format!("cannot remove {}: {err}", e.path().display())))?;
        }
    }
    Ok(())
}

struct Cell<'a> {
    config: &'a ALConfig,
    seed: u64,
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let mut file = RunConfigFile::load(&args.config)?;
    if let Some(out) = &args.out {
        file.output = out.clone();
    }
    let configs = select_strategies(file.resolve(), args.strategies.as_deref())?;
    let seeds = select_seeds(&file.seeds, args.seeds.as_deref())?;
    let out = file.output.clone();
    guard_output(&out, args.force, is_result_file)?;
    let dataset = prepare(&file.dataset)?;
    create_dir(&out)?;
    remove_stale(&out)?;
    if let Some(dir) = &args.checkpoint_dir {
        create_dir(dir)?;
    }

    let foreground = dataset.num_classes() - 1;
    let cells: Vec<Cell> = configs
        .iter()
        .flat_map(|config| seeds.iter().map(move |&seed| Cell { config, seed }))
        .collect();
    log::info!(
        "{} runs ({} strategies x {} seeds) on {} scans",
        cells.len(),
        configs.len(),
        seeds.len(),
        dataset.scans().len()
    );
    let done = AtomicUsize::new(0);
    let results: Vec<Result<(LearningCurve, RunEntry), (RunEntry, String)>> = cells
        .par_iter()
        .map(|cell| {
            let label = cell.config.strategy.label();
            let options = RunOptions {
                checkpoint_dir: args.checkpoint_dir.clone(),
                label: format!("{label}_{}", cell.seed),
            };
            let outcome = run_active_learning(cell.config, &dataset, cell.seed, &options);
            let finished = done.fetch_add(1, Ordering::Relaxed) + 1;
            match outcome {
                Ok(o) => {
                    let name = curve_file(&label, cell.seed);
                    write_atomic(&out.join(&name), curve_csv(&o.curve, foreground).as_bytes())
                        .map_err(|e| (failed_entry(&label, cell.seed, e.to_string()), e.to_string()))?;
                    let last = o.curve.records.last().map_or(f64::NAN, |r| r.mean_dice);
                    log::info!(
                        "[{finished}/{}] {label} seed {}: {} records, final mean dice {last:.4}{}",
                        cells.len(),
                        cell.seed,
                        o.curve.records.len(),
                        if o.truncated { " (pool exhausted)" } else { "" }
                    );
                    let entry = RunEntry {
                        strategy: label,
                        seed: cell.seed,
                        file: Some(name),
                        records: o.curve.records.len(),
                        truncated: o.truncated,
                        fallback_iterations: o.fallbacks,
                        train_scans: o.split.train_scans,
                        validation_scans: o.split.validation_scans,
                        error: None,
                    };
                    Ok((o.curve, entry))
                }
                Err(e) => {
                    let msg = format!("strategy {label}, seed {}, iteration {}: {}", e.seed, e.iteration, e.source);
                    log::error!("{msg}");
                    let mut entry = failed_entry(&label, cell.seed, e.source.to_string());
                    entry.records = e.partial.records.len();
                    Err((entry, msg))
                }
            }
        })
        .collect();

    let mut runs = Vec::with_capacity(results.len());
    let mut curves: Vec<Option<LearningCurve>> = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok((curve, entry)) => {
                runs.push(entry);
                curves.push(Some(curve));
            }
            Err((entry, msg)) => {
                runs.push(entry);
                curves.push(None);
                failures.push(msg);
            }
        }
    }

    let mut summaries = Vec::new();
    for (i, config) in configs.iter().enumerate() {
        let label = config.strategy.label();
        let group: Option<Vec<LearningCurve>> = curves[i * seeds.len()..(i + 1) * seeds.len()].iter().cloned().collect();
        let Some(group) = group else {
            log::warn!("no summary for {label}: a run failed");
            continue;
        };
        match aggregate_runs(&group) {
            Ok(agg) => {
                let name = summary_file(&label);
                write_atomic(&out.join(&name), summary_csv(&agg).as_bytes())?;
                summaries.push(SummaryEntry {
                    strategy: label,
                    file: name,
                    seeds: seeds.clone(),
                    single_seed: agg.single_seed,
                });
            }
            Err(e) => failures.push(format!("strategy {label}: {e}")),
        }
    }

    let meta = RunMeta {
        version: env!("CARGO_PKG_VERSION"),
        config: &file,
        filters: Filters {
            strategies: args.strategies.as_deref(),
            seeds: args.seeds.as_deref(),
        },
        std: "population",
        dataset: DatasetMeta {
            scans: dataset.scans().len(),
            slices: dataset.total_slices(),
            num_classes: dataset.num_classes(),
            label_mode: dataset.label_mode(),
        },
        runs,
        summaries,
    };
    let mut json = serde_json::to_string_pretty(&meta).expect("run metadata serializes");
    json.push('\n');
    write_atomic(&out.join("run_meta.json"), json.as_bytes())?;

    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Runtime(failures.join("\n")))
    }
}

fn failed_entry(label: &str, seed: u64, error: String) -> RunEntry {
    RunEntry {
        strategy: label.to_string(),
        seed,
        file: None,
        records: 0,
        truncated: false,
        fallback_iterations: vec![],
        train_scans: vec![],
        validation_scans: vec![],
        error: Some(error),
    }
}

mod config;
mod data;
mod error;
mod files;
mod interpolate;
mod report;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use alseg_core::interpolation::InterpolationMethod;
use alseg_core::synthetic::SyntheticSpec;
use alseg_core::volume::{LabelMode, Shape3};
use clap::{Parser, Subcommand, ValueEnum};

use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "alseg", version, about = "Active learning simulation for slice-wise segmentation")]
struct Cli {
    /// Seed for data generation; for `simulate`, runs only this seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: Option<u16>,
    /// Overwrite existing outputs.
    #[arg(long, global = true)]
    force: bool,
    /// Save a learner checkpoint after every training step.
    #[arg(long, global = true, value_name = "DIR")]
    checkpoint_dir: Option<PathBuf>,
    /// Only log warnings and errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic dataset, one volume directory per scan.
    GenData {
        #[arg(long, default_value_t = 20)]
        scans: usize,
        /// Volume shape as D,H,W.
        #[arg(long, default_value = "24,64,64", value_parser = data::parse_shape)]
        shape: Shape3,
        /// Foreground classes.
        #[arg(long, default_value_t = 1)]
        classes: usize,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long)]
        multi_label: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every (strategy, seed) pair of a config file.
    Simulate {
        config: PathBuf,
        /// Output directory (overrides the config's `output`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated strategy names or labels to run.
        #[arg(long, value_delimiter = ',')]
        strategies: Option<Vec<String>>,
        /// Comma-separated subset of the config's seeds.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
    /// Pseudo-label the slices between two label masks (grayscale PNG, value = class id).
    Interpolate {
        #[arg(long)]
        top: PathBuf,
        #[arg(long)]
        bottom: PathBuf,
        /// Number of intermediate slices.
        #[arg(short, long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Method::SignedDistance)]
        method: Method,
        /// Class count including background (default: largest id + 1).
        #[arg(long)]
        classes: Option<usize>,
        #[arg(long)]
        multi_label: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Plot the summaries of a simulate output directory as SVG.
    Report {
        dir: PathBuf,
        /// Where to write the plots (default: DIR).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Method {
    SignedDistance,
    Morphological,
}

fn mode(multi: bool) -> LabelMode {
    if multi {
        LabelMode::MultiLabel
    } else {
        LabelMode::SingleLabel
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs as usize)
            .build_global()
            .map_err(CliError::runtime)?;
    }
    match cli.command {
        Command::GenData {
            scans,
            shape,
            classes,
            noise,
            multi_label,
            out,
        } => {
            let spec = SyntheticSpec {
                num_scans: scans,
                shape,
                num_classes: classes,
                noise,
                label_mode: mode(multi_label),
            };
            let seed = cli.seed.unwrap_or(42);
            for (id, dir) in data::generate(&spec, seed, &out, cli.force)? {
                println!("{id}\t{}", dir.display());
            }
        }
        Command::Simulate {
            config,
            out,
            strategies,
            seeds,
        } => {
            let seeds = match (seeds, cli.seed) {
                (Some(_), Some(_)) => return Err(CliError::Usage("use either --seed or --seeds, not both".into())),
                (s, single) => s.or(single.map(|s| vec![s])),
            };
            simulate::simulate(&simulate::SimulateArgs {
                config,
                out,
                strategies,
                seeds,
                force: cli.force,
                checkpoint_dir: cli.checkpoint_dir,
            })?;
        }
        Command::Interpolate {
            top,
            bottom,
            n,
            method,
            classes,
            multi_label,
            out,
        } => {
            let method = match method {
                Method::SignedDistance => InterpolationMethod::SignedDistance,
                Method::Morphological => InterpolationMethod::Morphological,
            };
            let written = interpolate::interpolate(&interpolate::InterpolateArgs {
                top,
                bottom,
                intermediate: n,
                method,
                classes,
                mode: mode(multi_label),
                out,
                force: cli.force,
            })?;
            for p in written {
                println!("{}", p.display());
            }
        }
        Command::Report { dir, out } => {
            for p in report::report(&dir, out.as_deref())? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let level = if cli.quiet { log::LevelFilter::Warn } else { log::LevelFilter::Info };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

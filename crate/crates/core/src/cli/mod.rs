//! Command line front end: suite generation, calibration, evaluation and
//! epsilon sweeps over a run directory.

mod commands;
mod report;
mod svg;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{
    cmd_calibrate, cmd_evaluate, cmd_gen_envs, cmd_print_default_config, cmd_sweep_epsilon, load_run, Manifest,
    ManifestEntry, RunOptions, SuiteKind, CALIBRATION_FILE, CONFIG_FILE, MANIFEST_FILE,
};
pub use report::{
    aggregate_csv, episodes_csv, fmt_epsilon, fmt_margin, miss_csv, read_json, write_atomic, write_json, AGGREGATE_COLUMNS,
    EPISODE_COLUMNS, MISS_COLUMNS,
};
pub use svg::{rate_plot, trajectory_plot, Series};

use crate::error::Result;
use crate::sim::ExperimentConfig;

#[derive(Debug, Parser)]
#[command(name = "calnav", version, about = "Calibrated perception for safe navigation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create a run directory with the configuration and both environment suites.
    GenEnvs(GenEnvsArgs),
    /// Score the calibration suite and write calibration.json.
    Calibrate(RunArgs),
    /// Run closed-loop episodes on the test suite and write metrics and plots.
    Evaluate(EvaluateArgs),
    /// Recalibrate over an epsilon grid and report open-loop miss rates.
    SweepEpsilon(SweepArgs),
    /// Print the full default configuration as JSON.
    PrintDefaultConfig,
}

#[derive(Debug, Args)]
pub struct GenEnvsArgs {
    /// Configuration file (JSON); defaults apply to missing fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub run_id: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n_calibration: Option<usize>,
    #[arg(long)]
    pub n_test: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Run directory created by gen-envs.
    #[arg(long)]
    pub run: PathBuf,
    /// Worker threads (0 = one per core).
    #[arg(long)]
    pub workers: Option<usize>,
    /// JSON-lines detections for the calibration suite.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Comma-separated epsilon grid overriding the configuration.
    #[arg(long, value_delimiter = ',')]
    pub epsilons: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Skip the SVG figures.
    #[arg(long)]
    pub no_plots: bool,
    /// Render this many test episodes per method and epsilon.
    #[arg(long)]
    pub trajectory_plots: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub epsilons: Option<Vec<f64>>,
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long)]
    pub no_plots: bool,
}

fn load_config(path: Option<&PathBuf>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => read_json(p),
        None => Ok(ExperimentConfig::default()),
    }
}

/// Execute one parsed command, printing a short summary to stdout.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenEnvs(a) => {
            let mut config = load_config(a.config.as_ref())?;
            if let Some(o) = a.out {
                config.output_dir = o;
            }
            if let Some(r) = a.run_id {
                config.run_id = r;
            }
            if let Some(s) = a.seed {
                config.master_seed = s;
            }
            if let Some(n) = a.n_calibration {
                config.n_calibration = n;
            }
            if let Some(n) = a.n_test {
                config.n_test = n;
            }
            let dir = cmd_gen_envs(&config)?;
            println!(
                "wrote {} calibration and {} test environments to {}",
                config.n_calibration,
                config.n_test,
                dir.display()
            );
        }
        Command::Calibrate(a) => {
            let opts = RunOptions {
                workers: a.workers,
                predictions: a.predictions,
                epsilons: a.epsilons,
                ..Default::default()
            };
            let report = cmd_calibrate(&a.run, &opts)?;
            for e in &report.entries {
                println!("{}\t{}\tq_hat={}", e.method, fmt_epsilon(e.epsilon), fmt_margin(e.q_hat));
            }
        }
        Command::Evaluate(a) => {
            let opts = RunOptions {
                workers: a.workers,
                plots: a.no_plots.then_some(false),
                trajectory_plots: a.trajectory_plots,
                ..Default::default()
            };
            let rows = cmd_evaluate(&a.run, &opts)?;
            print!("{}", String::from_utf8_lossy(&aggregate_csv(&rows)?));
        }
        Command::SweepEpsilon(a) => {
            let opts = RunOptions {
                workers: a.workers,
                predictions: a.predictions,
                epsilons: a.epsilons,
                plots: a.no_plots.then_some(false),
                ..Default::default()
            };
            let rows = cmd_sweep_epsilon(&a.run, &opts)?;
            print!("{}", String::from_utf8_lossy(&miss_csv(&rows)?));
        }
        Command::PrintDefaultConfig => print!("{}", cmd_print_default_config()?),
    }
    Ok(())
}

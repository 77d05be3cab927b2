//! Subcommand implementations. Every command works inside one run
//! directory, `<output_dir>/<run_id>`, created by [`cmd_gen_envs`]:
//!
//! ```text
//! config.json            full experiment configuration
//! manifest.json          environment ids, seeds and files
//! envs/calibration/*.json
//! envs/test/*.json
//! calibration.json       written by calibrate
//! episodes.csv aggregate.csv static_miss.csv miss_rate.svg trajectories/
//!                        written by evaluate
//! sweep.csv sweep.svg    written by sweep-epsilon
//! ```

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::report::{aggregate_csv, episodes_csv, fmt_epsilon, miss_csv, read_json, write_atomic, write_json};
use super::svg::{rate_plot, trajectory_plot, Series};
use crate::error::{Error, Result};
use crate::perception::ingest_predictions;
use crate::planner::Roadmap;
use crate::sim::{
    aggregate, calibrate_suite, evaluate_suite, generate_suite, method_grid, record_episode, static_miss_rates, AggregateRow,
    CalibrationReport, Environment, ExperimentConfig, Method, StaticMissRow, Suite,
};

pub const CONFIG_FILE: &str = "config.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CALIBRATION_FILE: &str = "calibration.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteKind {
    Calibration,
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub env_id: u64,
    pub suite: SuiteKind,
    pub seed: u64,
    /// Path relative to the run directory.
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub master_seed: u64,
    pub environments: Vec<ManifestEntry>,
}

fn env_file(kind: SuiteKind, id: u64) -> String {
    match kind {
        SuiteKind::Calibration => format!("envs/calibration/env_{id:07}.json"),
        SuiteKind::Test => format!("envs/test/env_{id:07}.json"),
    }
}

/// Create a fresh run directory with the configuration, both environment
/// suites and a manifest. Fails if the directory already has content.
pub fn cmd_gen_envs(config: &ExperimentConfig) -> Result<PathBuf> {
    config.validate()?;
    let dir = config.run_dir();
    if let Ok(mut it) = std::fs::read_dir(&dir) {
        if it.next().is_some() {
            return Err(Error::Config(format!(
                "run directory {} already exists; choose a new run id",
                dir.display()
            )));
        }
    }
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let suite = generate_suite(config)?;
    let mut entries = Vec::new();
    for (kind, envs) in [(SuiteKind::Calibration, &suite.calibration), (SuiteKind::Test, &suite.test)] {
        for env in envs {
            let file = env_file(kind, env.env_id);
            write_json(&dir.join(&file), env)?;
            entries.push(ManifestEntry {
                env_id: env.env_id,
                suite: kind,
                seed: env.seed,
                file,
            });
        }
    }
    write_json(&dir.join(CONFIG_FILE), config)?;
    write_json(
        &dir.join(MANIFEST_FILE),
        &Manifest {
            master_seed: config.master_seed,
            environments: entries,
        },
    )?;
    Ok(dir)
}

fn require(path: &Path, what: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Config(format!("missing {what}: {}", path.display())))
    }
}

/// Configuration and environment suites of an existing run directory.
pub fn load_run(dir: &Path) -> Result<(ExperimentConfig, Suite)> {
    let cfg_path = dir.join(CONFIG_FILE);
    require(&cfg_path, "run configuration (run gen-envs first)")?;
    let config: ExperimentConfig = read_json(&cfg_path)?;
    config.validate()?;
    let man_path = dir.join(MANIFEST_FILE);
    require(&man_path, "environment manifest (run gen-envs first)")?;
    let manifest: Manifest = read_json(&man_path)?;
    if manifest.master_seed != config.master_seed {
        return Err(Error::Config(format!(
            "{} was generated with master seed {} but the configuration says {}",
            man_path.display(),
            manifest.master_seed,
            config.master_seed
        )));
    }
    let mut suite = Suite {
        calibration: Vec::new(),
        test: Vec::new(),
    };
    for entry in &manifest.environments {
        let path = dir.join(&entry.file);
        require(&path, "environment file")?;
        let env = Environment::read_json(&path)?;
        if env.env_id != entry.env_id {
            return Err(Error::Config(format!(
                "{} holds environment {} but the manifest says {}",
                path.display(),
                env.env_id,
                entry.env_id
            )));
        }
        match entry.suite {
            SuiteKind::Calibration => suite.calibration.push(env),
            SuiteKind::Test => suite.test.push(env),
        }
    }
    if suite.calibration.is_empty() || suite.test.is_empty() {
        return Err(Error::Config(format!("{} lists an empty suite", man_path.display())));
    }
    Ok((config, suite))
}

/// Options shared by the commands that read a run directory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub workers: Option<usize>,
    pub predictions: Option<PathBuf>,
    pub epsilons: Option<Vec<f64>>,
    pub plots: Option<bool>,
    pub trajectory_plots: Option<usize>,
}

impl RunOptions {
    fn apply(&self, config: &mut ExperimentConfig) -> Result<()> {
        if let Some(w) = self.workers {
            config.workers = w;
        }
        if let Some(p) = &self.predictions {
            config.predictions = Some(p.clone());
        }
        if let Some(e) = &self.epsilons {
            config.epsilons = e.clone();
        }
        if let Some(p) = self.plots {
            config.plots = p;
        }
        if let Some(t) = self.trajectory_plots {
            config.trajectory_plots = t;
        }
        config.validate()
    }
}

fn calibrate_run(config: &ExperimentConfig, suite: &Suite) -> Result<CalibrationReport> {
    let samples = config.samples()?;
    let predictions = match &config.predictions {
        Some(path) => {
            require(path, "predictions file")?;
            let known: BTreeSet<u64> = suite.calibration.iter().map(|e| e.env_id).collect();
            Some(ingest_predictions(path, &known)?)
        }
        None => None,
    };
    calibrate_suite(config, &suite.calibration, &samples, predictions.as_ref())
}

/// Score the calibration suite and write `calibration.json`.
pub fn cmd_calibrate(dir: &Path, opts: &RunOptions) -> Result<CalibrationReport> {
    let (mut config, suite) = load_run(dir)?;
    opts.apply(&mut config)?;
    let report = calibrate_run(&config, &suite)?;
    write_json(&dir.join(CALIBRATION_FILE), &report)?;
    Ok(report)
}

fn miss_series(rows: &[StaticMissRow], method: Method, label: &str, dashed: bool) -> Series {
    Series {
        label: label.to_string(),
        points: rows
            .iter()
            .filter(|r| r.method == method)
            .filter_map(|r| r.epsilon.map(|e| (e, r.miss_rate)))
            .collect(),
        dashed,
    }
}

/// Closed-loop evaluation on the test suite with the calibrated margins.
pub fn cmd_evaluate(dir: &Path, opts: &RunOptions) -> Result<Vec<AggregateRow>> {
    let (mut config, suite) = load_run(dir)?;
    opts.apply(&mut config)?;
    let cal_path = dir.join(CALIBRATION_FILE);
    require(&cal_path, "calibration (run calibrate first)")?;
    let calibration: CalibrationReport = read_json(&cal_path)?;
    if calibration.master_seed != config.master_seed {
        return Err(Error::Config(format!(
            "{} belongs to master seed {}, not {}",
            cal_path.display(),
            calibration.master_seed,
            config.master_seed
        )));
    }
    let samples = config.samples()?;
    let map = Roadmap::new(&samples, &config.planner);
    let records = evaluate_suite(&config, &suite.test, &map, &calibration)?;
    let rows = aggregate(&records);
    let miss = static_miss_rates(&config, &suite.test, &samples, &calibration)?;
    write_atomic(&dir.join("episodes.csv"), &episodes_csv(&records)?)?;
    write_atomic(&dir.join("aggregate.csv"), &aggregate_csv(&rows)?)?;
    write_atomic(&dir.join("static_miss.csv"), &miss_csv(&miss)?)?;

    if config.plots {
        let mut series = Vec::new();
        for &m in config.methods.iter().filter(|m| m.is_calibrated()) {
            series.push(Series {
                label: format!("{m} closed loop"),
                points: rows
                    .iter()
                    .filter(|r| r.method == m)
                    .filter_map(|r| r.epsilon.map(|e| (e, r.misdetection_rate)))
                    .collect(),
                dashed: false,
            });
            series.push(miss_series(&miss, m, &format!("{m} all states"), true));
        }
        if !series.is_empty() {
            let svg = rate_plot("Misdetection rate", "epsilon", "misdetection rate", &series);
            write_atomic(&dir.join("miss_rate.svg"), svg.as_bytes())?;
        }
    }
    if config.trajectory_plots > 0 {
        for (method, epsilon) in method_grid(&config) {
            let q = calibration.q_hat(method, epsilon).unwrap_or(0.0);
            for env in suite.test.iter().take(config.trajectory_plots) {
                let (m, log) = record_episode(&config, env, &map, method, q)?;
                let eps = epsilon.map(|e| format!("_eps{}", fmt_epsilon(Some(e)))).unwrap_or_default();
                let title = format!(
                    "{method}{eps} env {} goal={} collision={} misdetection={}",
                    env.env_id, m.goal_reached, m.collision, m.misdetection
                );
                let svg = trajectory_plot(env, &log.trajectory, log.final_belief.as_ref(), &title);
                let name = format!("trajectories/{method}{eps}_env_{:07}.svg", env.env_id);
                write_atomic(&dir.join(name), svg.as_bytes())?;
            }
        }
    }
    Ok(rows)
}

/// Recalibrate over an epsilon grid and measure open-loop miss rates on the
/// test suite (no episodes).
pub fn cmd_sweep_epsilon(dir: &Path, opts: &RunOptions) -> Result<Vec<StaticMissRow>> {
    let (mut config, suite) = load_run(dir)?;
    opts.apply(&mut config)?;
    config.methods.retain(|m| *m != Method::Exact);
    if config.methods.is_empty() {
        return Err(Error::Config("sweep needs at least one of pwc, cp_avg, raw".into()));
    }
    let calibration = calibrate_run(&config, &suite)?;
    let samples = config.samples()?;
    let rows = static_miss_rates(&config, &suite.test, &samples, &calibration)?;
    write_atomic(&dir.join("sweep.csv"), &miss_csv(&rows)?)?;
    if config.plots {
        let series: Vec<Series> = config
            .methods
            .iter()
            .filter(|m| m.is_calibrated())
            .map(|&m| miss_series(&rows, m, m.name(), false))
            .collect();
        if !series.is_empty() {
            let svg = rate_plot("Miss rate over all sample states", "epsilon", "miss rate", &series);
            write_atomic(&dir.join("sweep.svg"), svg.as_bytes())?;
        }
    }
    Ok(rows)
}

pub fn cmd_print_default_config() -> Result<String> {
    serde_json::to_string_pretty(&ExperimentConfig::default())
        .map(|s| s + "\n")
        .map_err(|e| Error::Config(e.to_string()))
}

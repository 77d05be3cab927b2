use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::env::{generate_environment, EnvConfig, Environment};
use super::episode::{run_episode, EpisodeConfig, EpisodeLog, EpisodeMetrics, PerceptionMode};
use super::dynamics::DynamicsModel;
use crate::conformal::{calibrate, CalibrationConfig, CalibrationMode, CalibrationResult, ScoreSample};
use crate::error::{Error, Result};
use crate::perception::{
    environment_misdetected, score_environment, state_scores, NoiseConfig, PredictionSet, PredictionSource,
    ScoringOptions, SensorConfig, SyntheticDetector,
};
use crate::planner::{sample_configurations, PlannerConfig, Roadmap, SampleSet};
use crate::seeds::derive_seed;

/// Test environment ids start here; calibration ids start at 0.
pub const TEST_ID_OFFSET: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Worst case over sample states, calibrated per environment.
    Pwc,
    /// Per-state scores pooled over all environments.
    CpAvg,
    /// Uncalibrated detections.
    Raw,
    /// Ground-truth perception.
    Exact,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Pwc => "pwc",
            Method::CpAvg => "cp_avg",
            Method::Raw => "raw",
            Method::Exact => "exact",
        }
    }

    pub fn is_calibrated(self) -> bool {
        matches!(self, Method::Pwc | Method::CpAvg)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pwc" => Ok(Method::Pwc),
            "cp_avg" => Ok(Method::CpAvg),
            "raw" => Ok(Method::Raw),
            "exact" => Ok(Method::Exact),
            _ => Err(Error::Config(format!("unknown method {s:?} (expected pwc, cp_avg, raw or exact)"))),
        }
    }
}

/// Full parameter vector of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub env: EnvConfig,
    pub sensor: SensorConfig,
    /// Detector noise. The `seed` field is ignored; the detector stream is
    /// derived from `master_seed`.
    pub noise: NoiseConfig,
    pub planner: PlannerConfig,
    pub dynamics: DynamicsModel,
    pub grid_cell: f64,
    pub timeout_s: f64,
    pub sample_count: usize,
    pub n_calibration: usize,
    pub n_test: usize,
    pub epsilons: Vec<f64>,
    pub delta: f64,
    pub mode: CalibrationMode,
    pub methods: Vec<Method>,
    /// Worker threads; 0 uses one per core.
    pub workers: usize,
    pub output_dir: PathBuf,
    pub run_id: String,
    pub plots: bool,
    /// Trajectory renders per (method, epsilon), taken from the first test
    /// environments.
    pub trajectory_plots: usize,
    /// JSON-lines detections for the calibration suite; synthetic when absent.
    pub predictions: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            master_seed: 2024,
            env: EnvConfig::default(),
            sensor: SensorConfig::default(),
            noise: NoiseConfig::default(),
            planner: PlannerConfig::default(),
            dynamics: DynamicsModel::default(),
            grid_cell: 0.05,
            timeout_s: 140.0,
            sample_count: 2000,
            n_calibration: 400,
            n_test: 100,
            epsilons: vec![0.05, 0.1, 0.15, 0.2, 0.3],
            delta: 0.01,
            mode: CalibrationMode::DatasetConditional,
            methods: vec![Method::Pwc, Method::CpAvg, Method::Raw, Method::Exact],
            workers: 0,
            output_dir: PathBuf::from("runs"),
            run_id: "default".into(),
            plots: true,
            trajectory_plots: 0,
            predictions: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.episode_config(Method::Pwc).validate()?;
        if self.n_calibration == 0 || self.n_test == 0 || self.sample_count == 0 {
            return Err(Error::Config("suite sizes and sample count must be at least 1".into()));
        }
        if self.n_calibration as u64 >= TEST_ID_OFFSET || self.n_test as u64 >= TEST_ID_OFFSET {
            return Err(Error::Config(format!("suite sizes must stay below {TEST_ID_OFFSET}")));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods selected".into()));
        }
        if self.methods.iter().any(|m| m.is_calibrated()) && self.epsilons.is_empty() {
            return Err(Error::Config("calibrated methods need at least one epsilon".into()));
        }
        for &e in &self.epsilons {
            CalibrationConfig::dataset_conditional(e, self.delta).validate()?;
        }
        if self.run_id.is_empty() || self.run_id.contains(['/', '\\']) || self.run_id == "." || self.run_id == ".." {
            return Err(Error::Config(format!("run id {:?} is not a plain directory name", self.run_id)));
        }
        Ok(())
    }

    pub fn run_dir(&self) -> PathBuf {
        self.output_dir.join(&self.run_id)
    }

    /// Detector noise with the stream derived from the master seed.
    pub fn detector_noise(&self) -> NoiseConfig {
        NoiseConfig {
            seed: derive_seed(self.master_seed, "detector", 0),
            ..self.noise.clone()
        }
    }

    pub fn episode_config(&self, method: Method) -> EpisodeConfig {
        EpisodeConfig {
            sensor: self.sensor,
            planner: self.planner.clone(),
            dynamics: self.dynamics.clone(),
            grid_cell: self.grid_cell,
            timeout_s: self.timeout_s,
            perception: match method {
                Method::Exact => PerceptionMode::Exact,
                _ => PerceptionMode::Synthetic(self.detector_noise()),
            },
            record_trajectory: false,
        }
    }

    pub fn samples(&self) -> Result<SampleSet> {
        sample_configurations(&self.env.room(), self.sample_count, derive_seed(self.master_seed, "samples", 0))
    }

    pub fn calibration_config(&self, epsilon: f64) -> CalibrationConfig {
        CalibrationConfig {
            epsilon,
            delta: self.delta,
            mode: self.mode,
        }
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))
    }
}

/// Calibration and test environments of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Suite {
    pub calibration: Vec<Environment>,
    pub test: Vec<Environment>,
}

/// Environments `0..n_calibration` and `TEST_ID_OFFSET..TEST_ID_OFFSET + n_test`,
/// all drawn from the master seed.
pub fn generate_suite(config: &ExperimentConfig) -> Result<Suite> {
    let make = |ids: std::ops::Range<u64>| -> Result<Vec<Environment>> {
        ids.map(|id| generate_environment(id, config.master_seed, &config.env)).collect()
    };
    Ok(Suite {
        calibration: make(0..config.n_calibration as u64)?,
        test: make(TEST_ID_OFFSET..TEST_ID_OFFSET + config.n_test as u64)?,
    })
}

/// Calibrated inflation for one (method, epsilon); uncalibrated methods have
/// no epsilon and a zero margin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodCalibration {
    pub method: Method,
    pub epsilon: Option<f64>,
    #[serde(with = "crate::serde_inf")]
    pub q_hat: f64,
    pub result: Option<CalibrationResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub master_seed: u64,
    pub n_calibration: usize,
    /// Worst-case score of every calibration environment.
    pub environment_scores: Vec<ScoreSample>,
    /// Number of pooled per-state scores behind the `cp_avg` entries.
    pub state_score_count: usize,
    pub entries: Vec<MethodCalibration>,
}

impl CalibrationReport {
    pub fn q_hat(&self, method: Method, epsilon: Option<f64>) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.method == method && e.epsilon == epsilon)
            .map(|e| e.q_hat)
    }
}

/// (method, epsilon) pairs in report order.
pub fn method_grid(config: &ExperimentConfig) -> Vec<(Method, Option<f64>)> {
    let mut out = Vec::new();
    for &m in &config.methods {
        if m.is_calibrated() {
            out.extend(config.epsilons.iter().map(|&e| (m, Some(e))));
        } else {
            out.push((m, None));
        }
    }
    out
}

fn with_source<T>(
    env: &Environment,
    config: &ExperimentConfig,
    predictions: Option<&BTreeMap<u64, PredictionSet>>,
    f: impl FnOnce(&mut dyn PredictionSource) -> Result<T>,
) -> Result<T> {
    match predictions {
        Some(p) => {
            let mut set = p.get(&env.env_id).ok_or(Error::UnknownEnvironment(env.env_id))?;
            f(&mut set)
        }
        None => f(&mut SyntheticDetector::new(env, config.sensor, config.detector_noise())),
    }
}

/// Score the calibration suite and calibrate every (method, epsilon).
pub fn calibrate_suite(
    config: &ExperimentConfig,
    envs: &[Environment],
    samples: &SampleSet,
    predictions: Option<&BTreeMap<u64, PredictionSet>>,
) -> Result<CalibrationReport> {
    config.validate()?;
    if envs.is_empty() {
        return Err(Error::EmptyScores);
    }
    let opts = ScoringOptions::for_room(&config.env.room());
    let pooled = config.methods.contains(&Method::CpAvg);
    let per_env: Vec<(ScoreSample, Vec<ScoreSample>)> = config.pool()?.install(|| {
        envs.par_iter()
            .map(|env| {
                let states = samples.poses_outside(&env.obstacles);
                let worst = with_source(env, config, predictions, |src| {
                    score_environment(env, src, &config.sensor, &states, &opts)
                })?;
                let per_state = if pooled {
                    with_source(env, config, predictions, |src| {
                        state_scores(env, src, &config.sensor, &states, &opts)
                    })?
                    .into_iter()
                    .map(|(_, s)| ScoreSample {
                        env_id: env.env_id,
                        score: s,
                    })
                    .collect()
                } else {
                    Vec::new()
                };
                Ok((worst, per_state))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let environment_scores: Vec<ScoreSample> = per_env.iter().map(|p| p.0).collect();
    let state_pool: Vec<ScoreSample> = per_env.into_iter().flat_map(|p| p.1).collect();

    let mut entries = Vec::new();
    for (method, epsilon) in method_grid(config) {
        let result = match (method, epsilon) {
            (Method::Pwc, Some(e)) => Some(calibrate(&environment_scores, &config.calibration_config(e))?),
            (Method::CpAvg, Some(e)) => {
                if state_pool.is_empty() {
                    None
                } else {
                    Some(calibrate(&state_pool, &CalibrationConfig::marginal(e))?)
                }
            }
            _ => None,
        };
        entries.push(MethodCalibration {
            method,
            epsilon,
            q_hat: result.map_or(0.0, |r| r.q_hat),
            result,
        });
    }
    Ok(CalibrationReport {
        master_seed: config.master_seed,
        n_calibration: envs.len(),
        environment_scores,
        state_score_count: state_pool.len(),
        entries,
    })
}

/// One closed-loop episode of the evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub method: Method,
    pub epsilon: Option<f64>,
    #[serde(with = "crate::serde_inf")]
    pub q_hat: f64,
    pub env_id: u64,
    pub metrics: EpisodeMetrics,
}

fn episode_jobs(config: &ExperimentConfig, calibration: &CalibrationReport, n_env: usize) -> Result<Vec<(Method, Option<f64>, f64, usize)>> {
    let mut jobs = Vec::new();
    for (method, epsilon) in method_grid(config) {
        let q = calibration.q_hat(method, epsilon).ok_or_else(|| {
            Error::Config(format!(
                "calibration has no entry for {method}{}",
                epsilon.map(|e| format!(" at epsilon {e}")).unwrap_or_default()
            ))
        })?;
        jobs.extend((0..n_env).map(|i| (method, epsilon, q, i)));
    }
    Ok(jobs)
}

/// Run every (method, epsilon) on every test environment.
pub fn evaluate_suite(
    config: &ExperimentConfig,
    envs: &[Environment],
    map: &Roadmap,
    calibration: &CalibrationReport,
) -> Result<Vec<EpisodeRecord>> {
    config.validate()?;
    let jobs = episode_jobs(config, calibration, envs.len())?;
    config.pool()?.install(|| {
        jobs.par_iter()
            .map(|&(method, epsilon, q_hat, i)| {
                let (metrics, _) = run_episode(&envs[i], q_hat, &config.episode_config(method), map)?;
                Ok(EpisodeRecord {
                    method,
                    epsilon,
                    q_hat,
                    env_id: envs[i].env_id,
                    metrics,
                })
            })
            .collect()
    })
}

/// Re-run one episode with the trajectory and final belief recorded.
pub fn record_episode(config: &ExperimentConfig, env: &Environment, map: &Roadmap, method: Method, q_hat: f64) -> Result<(EpisodeMetrics, EpisodeLog)> {
    let ec = EpisodeConfig {
        record_trajectory: true,
        ..config.episode_config(method)
    };
    run_episode(env, q_hat, &ec, map)
}

/// Table-style summary of one (method, epsilon).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub method: Method,
    pub epsilon: Option<f64>,
    pub episodes: usize,
    pub collision_rate: f64,
    pub misdetection_rate: f64,
    pub goal_rate: f64,
    /// Mean over goal-reaching episodes; `None` when there are none.
    pub mean_path_length_m: Option<f64>,
}

/// Group records by (method, epsilon) in first-seen order.
pub fn aggregate(records: &[EpisodeRecord]) -> Vec<AggregateRow> {
    let mut keys: Vec<(Method, Option<f64>)> = Vec::new();
    for r in records {
        if !keys.contains(&(r.method, r.epsilon)) {
            keys.push((r.method, r.epsilon));
        }
    }
    keys.into_iter()
        .map(|(method, epsilon)| {
            let rows: Vec<&EpisodeMetrics> = records
                .iter()
                .filter(|r| r.method == method && r.epsilon == epsilon)
                .map(|r| &r.metrics)
                .collect();
            let n = rows.len() as f64;
            let rate = |f: fn(&EpisodeMetrics) -> bool| rows.iter().filter(|m| f(m)).count() as f64 / n;
            let reached: Vec<f64> = rows.iter().filter(|m| m.goal_reached).map(|m| m.path_length).collect();
            AggregateRow {
                method,
                epsilon,
                episodes: rows.len(),
                collision_rate: rate(|m| m.collision),
                misdetection_rate: rate(|m| m.misdetection),
                goal_rate: rate(|m| m.goal_reached),
                mean_path_length_m: (!reached.is_empty()).then(|| reached.iter().sum::<f64>() / reached.len() as f64),
            }
        })
        .collect()
}

/// Fraction of test environments in which some sample state sees a
/// ground-truth box escape the inflated detections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaticMissRow {
    pub method: Method,
    pub epsilon: Option<f64>,
    #[serde(with = "crate::serde_inf")]
    pub q_hat: f64,
    pub environments: usize,
    pub miss_rate: f64,
}

/// Open-loop miss rates over the full sample-state set for every synthetic
/// (method, epsilon) in `calibration`.
pub fn static_miss_rates(
    config: &ExperimentConfig,
    envs: &[Environment],
    samples: &SampleSet,
    calibration: &CalibrationReport,
) -> Result<Vec<StaticMissRow>> {
    let entries: Vec<&MethodCalibration> = calibration.entries.iter().filter(|e| e.method != Method::Exact).collect();
    let margins: Vec<f64> = entries.iter().map(|e| e.q_hat).collect();
    let missed: Vec<Vec<bool>> = config.pool()?.install(|| {
        envs.par_iter()
            .map(|env| {
                let states = samples.poses_outside(&env.obstacles);
                let mut det = SyntheticDetector::new(env, config.sensor, config.detector_noise());
                environment_misdetected(env, &mut det, &config.sensor, &states, &margins)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(entries
        .iter()
        .enumerate()
        .map(|(k, e)| StaticMissRow {
            method: e.method,
            epsilon: e.epsilon,
            q_hat: e.q_hat,
            environments: envs.len(),
            miss_rate: missed.iter().filter(|m| m[k]).count() as f64 / envs.len().max(1) as f64,
        })
        .collect())
}

/// Everything an experiment produces.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub calibration: CalibrationReport,
    pub static_miss: Vec<StaticMissRow>,
    pub episodes: Vec<EpisodeRecord>,
    pub aggregate: Vec<AggregateRow>,
}

/// Generate the suites, calibrate, and evaluate open and closed loop.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let suite = generate_suite(config)?;
    let samples = config.samples()?;
    let predictions = match &config.predictions {
        Some(path) => Some(crate::perception::ingest_predictions(
            path,
            &suite.calibration.iter().map(|e| e.env_id).collect(),
        )?),
        None => None,
    };
    let calibration = calibrate_suite(config, &suite.calibration, &samples, predictions.as_ref())?;
    let static_miss = static_miss_rates(config, &suite.test, &samples, &calibration)?;
    let map = Roadmap::new(&samples, &config.planner);
    let episodes = evaluate_suite(config, &suite.test, &map, &calibration)?;
    let aggregate = aggregate(&episodes);
    Ok(ExperimentReport {
        calibration,
        static_miss,
        episodes,
        aggregate,
    })
}

//! Environments, robot dynamics, episodes and experiments.

mod dynamics;
mod env;
mod episode;
mod experiment;

pub use dynamics::{step_dynamics, DynamicsModel, DynamicsParams, RobotState, IDENTIFIED_A22, IDENTIFIED_B2};
pub use env::{generate_environment, EnvConfig, Environment, Layout};
pub use episode::{run_episode, EpisodeConfig, EpisodeLog, EpisodeMetrics, PerceptionMode, TrajectoryPoint};
pub use experiment::{
    aggregate, calibrate_suite, evaluate_suite, generate_suite, method_grid, record_episode, run_experiment, static_miss_rates,
    AggregateRow, CalibrationReport, EpisodeRecord, ExperimentConfig, ExperimentReport, Method, MethodCalibration, StaticMissRow,
    Suite, TEST_ID_OFFSET,
};

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library and the command line front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty score list")]
    EmptyScores,

    #[error("no prediction for environment {env_id} at sample state {state_index}")]
    MissingPrediction { env_id: u64, state_index: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("unknown environment id {0}")]
    UnknownEnvironment(u64),

    #[error("environment generation failed after {attempts} attempts (seed {seed})")]
    GenerationFailed { seed: u64, attempts: usize },

    #[error("start state ({x:.3}, {y:.3}) is not inside free space")]
    StartNotFree { x: f64, y: f64 },

    #[error("no matching visible ground truth for {0} prediction(s)")]
    NoVisibleGroundTruth(usize),

    #[error("belief soundness violated: {0}")]
    Soundness(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

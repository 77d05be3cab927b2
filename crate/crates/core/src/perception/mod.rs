//! Sensor model, detections, calibration application and scoring.

mod detector;
mod scoring;
mod visibility;

pub use detector::{apply_calibration, synthetic_detect, DetectionFrame, NoiseConfig, SyntheticDetector};
pub use scoring::{
    environment_misdetected, ingest_predictions, misdetection_cost, score_environment, state_scores,
    visible_ground_truth, write_predictions, PredictionSet, PredictionSource, ScoringOptions,
};
pub use visibility::{visible_boxes, wrap_angle, Pose, SensorConfig};

//! Nonconformity scores and misdetection checks over sample states.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::detector::{DetectionFrame, SyntheticDetector};
use super::visibility::{visible_boxes, Pose, SensorConfig};
use crate::conformal::ScoreSample;
use crate::error::{Error, Result};
use crate::geometry::{contains, default_bracket, minimal_inflation, Aabb2, BoxUnion2, DEFAULT_INFLATION_TOL};
use crate::sim::Environment;

/// Anything that yields detections for a sample state of one environment.
pub trait PredictionSource {
    fn frame(&mut self, state_index: usize, pose: &Pose) -> Result<DetectionFrame>;
}

impl PredictionSource for SyntheticDetector<'_> {
    fn frame(&mut self, _state_index: usize, pose: &Pose) -> Result<DetectionFrame> {
        Ok(self.detect(pose))
    }
}

/// Externally supplied detections for the sample states of one environment.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PredictionSet {
    pub env_id: u64,
    pub frames: BTreeMap<usize, BoxUnion2>,
}

impl PredictionSource for &PredictionSet {
    fn frame(&mut self, state_index: usize, pose: &Pose) -> Result<DetectionFrame> {
        let boxes = self.frames.get(&state_index).ok_or(Error::MissingPrediction {
            env_id: self.env_id,
            state_index,
        })?;
        Ok(DetectionFrame {
            pose: *pose,
            boxes: boxes.clone(),
        })
    }
}

impl PredictionSet {
    /// Record a source's detections at every given state.
    pub fn capture<P: PredictionSource + ?Sized>(env_id: u64, source: &mut P, states: &[(usize, Pose)]) -> Result<Self> {
        let mut frames = BTreeMap::new();
        for (i, pose) in states {
            frames.insert(*i, source.frame(*i, pose)?.boxes);
        }
        Ok(Self { env_id, frames })
    }
}

/// Bisection settings for minimal inflations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoringOptions {
    pub bracket: (f64, f64),
    pub tol: f64,
}

impl ScoringOptions {
    pub fn for_room(room: &Aabb2) -> Self {
        let e = room.extent();
        Self {
            bracket: default_bracket((e[0] * e[0] + e[1] * e[1]).sqrt()),
            tol: DEFAULT_INFLATION_TOL,
        }
    }
}

/// Union of the ground-truth boxes visible from `pose`.
pub fn visible_ground_truth(env: &Environment, pose: &Pose, sensor: &SensorConfig) -> BoxUnion2 {
    visible_boxes(&env.obstacles.boxes, pose, sensor)
        .into_iter()
        .map(|i| env.obstacles.boxes[i])
        .collect()
}

/// Worst-case score of one environment: the largest minimal inflation over
/// the sample states that see at least one obstacle. Environments where no
/// state sees anything score the bracket floor.
///
/// States whose minimal inflation cannot exceed the running maximum are
/// dismissed with a single containment test.
pub fn score_environment<P: PredictionSource + ?Sized>(
    env: &Environment,
    source: &mut P,
    sensor: &SensorConfig,
    states: &[(usize, Pose)],
    opts: &ScoringOptions,
) -> Result<ScoreSample> {
    let (lo, hi) = opts.bracket;
    let mut current = lo;
    let mut seen = false;
    for (i, pose) in states {
        let gt = visible_ground_truth(env, pose, sensor);
        if gt.is_empty() {
            continue;
        }
        let frame = source.frame(*i, pose)?;
        if seen && contains(&gt, &frame.boxes.inflate(current)) {
            continue;
        }
        let from = if seen { current } else { lo };
        let q = minimal_inflation(&gt, &frame.boxes, (from, hi), opts.tol)?;
        current = current.max(q);
        seen = true;
        if current.is_infinite() {
            break;
        }
    }
    Ok(ScoreSample {
        env_id: env.env_id,
        score: current,
    })
}

/// Minimal inflation at every state that sees at least one obstacle.
pub fn state_scores<P: PredictionSource + ?Sized>(
    env: &Environment,
    source: &mut P,
    sensor: &SensorConfig,
    states: &[(usize, Pose)],
    opts: &ScoringOptions,
) -> Result<Vec<(usize, f64)>> {
    let mut out = Vec::new();
    for (i, pose) in states {
        let gt = visible_ground_truth(env, pose, sensor);
        if gt.is_empty() {
            continue;
        }
        let frame = source.frame(*i, pose)?;
        out.push((*i, minimal_inflation(&gt, &frame.boxes, opts.bracket, opts.tol)?));
    }
    Ok(out)
}

/// 1 when some visible ground truth escapes the calibrated set, else 0.
pub fn misdetection_cost(env: &Environment, pose: &Pose, sensor: &SensorConfig, calibrated: &BoxUnion2) -> u8 {
    let gt = visible_ground_truth(env, pose, sensor);
    u8::from(!contains(&gt, calibrated))
}

/// For each margin in `margins`, whether some state misdetects after
/// inflating the raw detections by that margin (negative margins clamp to
/// zero, infinite margins cover the room).
pub fn environment_misdetected<P: PredictionSource + ?Sized>(
    env: &Environment,
    source: &mut P,
    sensor: &SensorConfig,
    states: &[(usize, Pose)],
    margins: &[f64],
) -> Result<Vec<bool>> {
    let eff: Vec<f64> = margins.iter().map(|q| q.max(0.0)).collect();
    let mut order: Vec<usize> = (0..eff.len()).collect();
    order.sort_by(|&a, &b| eff[b].total_cmp(&eff[a]));
    let mut missed = vec![false; eff.len()];
    for (i, pose) in states {
        if missed.iter().all(|&m| m) {
            break;
        }
        let gt = visible_ground_truth(env, pose, sensor);
        if gt.is_empty() {
            continue;
        }
        let frame = source.frame(*i, pose)?;
        // a miss at some margin implies a miss at every smaller one
        for (rank, &k) in order.iter().enumerate() {
            if missed[k] || eff[k].is_infinite() {
                continue;
            }
            if !contains(&gt, &frame.boxes.inflate(eff[k])) {
                for &j in &order[rank..] {
                    missed[j] = true;
                }
                break;
            }
        }
    }
    Ok(missed)
}

#[derive(Debug, Serialize, Deserialize)]
struct PredictionRecord {
    env_id: u64,
    state_index: usize,
    boxes: BoxUnion2,
}

/// Read detections from a JSON-lines file with one
/// `{"env_id", "state_index", "boxes": [[min_x, min_y, max_x, max_y], ...]}`
/// object per line. Every `env_id` must be in `known`.
pub fn ingest_predictions(path: &Path, known: &BTreeSet<u64>) -> Result<BTreeMap<u64, PredictionSet>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut sets: BTreeMap<u64, PredictionSet> = BTreeMap::new();
    for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: n + 1,
            message,
        };
        let rec: PredictionRecord = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        if !known.contains(&rec.env_id) {
            return Err(Error::UnknownEnvironment(rec.env_id));
        }
        let set = sets.entry(rec.env_id).or_insert_with(|| PredictionSet {
            env_id: rec.env_id,
            frames: BTreeMap::new(),
        });
        if set.frames.insert(rec.state_index, rec.boxes).is_some() {
            return Err(parse_err(format!(
                "duplicate prediction for env {} state {}",
                rec.env_id, rec.state_index
            )));
        }
    }
    Ok(sets)
}

/// Write prediction sets in the format read by [`ingest_predictions`].
pub fn write_predictions<'a, I: IntoIterator<Item = &'a PredictionSet>>(path: &Path, sets: I) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for set in sets {
        for (&state_index, boxes) in &set.frames {
            let rec = PredictionRecord {
                env_id: set.env_id,
                state_index,
                boxes: boxes.clone(),
            };
            let line = serde_json::to_string(&rec).map_err(|e| Error::Json {
                path: path.to_path_buf(),
                source: e,
            })?;
            writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

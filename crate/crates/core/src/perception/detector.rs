//! Synthetic stand-in for a learned box detector.
//!
//! Each visible ground-truth box is perturbed by a center jitter and a
//! per-axis shrink, and may be missed with a probability that grows with
//! distance. Perturbations are drawn from a seeded stream keyed by the
//! environment, the box and a coarse cell of the sensor position, so nearby
//! poses see correlated errors and repeated queries are reproducible.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::visibility::{visible_boxes, Pose, SensorConfig};
use crate::geometry::{Aabb2, BoxUnion2};
use crate::seeds::hash_words;
use crate::sim::Environment;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub seed: u64,
    /// Miss probability for a box at maximum range; scales linearly with distance.
    pub miss_prob_at_max_range: f64,
    /// Standard deviation of the center jitter, meters.
    pub center_jitter_sigma: f64,
    /// Per-axis shrink fraction drawn uniformly from this range.
    pub shrink_frac_range: [f64; 2],
    /// Side of the position cell within which errors are shared, meters.
    pub state_correlation_length: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            seed: 0x5eed,
            miss_prob_at_max_range: 0.0002,
            center_jitter_sigma: 0.08,
            shrink_frac_range: [0.0, 0.4],
            state_correlation_length: 0.5,
        }
    }
}

impl NoiseConfig {
    /// Noise-free detector that reports every visible box exactly.
    pub fn exact() -> Self {
        Self {
            seed: 0,
            miss_prob_at_max_range: 0.0,
            center_jitter_sigma: 0.0,
            shrink_frac_range: [0.0, 0.0],
            state_correlation_length: 0.5,
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        let ok = (0.0..=1.0).contains(&self.miss_prob_at_max_range)
            && self.center_jitter_sigma >= 0.0
            && 0.0 <= self.shrink_frac_range[0]
            && self.shrink_frac_range[0] <= self.shrink_frac_range[1]
            && self.shrink_frac_range[1] < 1.0
            && self.state_correlation_length > 0.0;
        if ok {
            Ok(())
        } else {
            Err(crate::Error::Config(format!("invalid noise config {self:?}")))
        }
    }

    fn is_exact(&self) -> bool {
        self.miss_prob_at_max_range == 0.0
            && self.center_jitter_sigma == 0.0
            && self.shrink_frac_range == [0.0, 0.0]
    }
}

/// Detected boxes at one sensor pose.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionFrame {
    pub pose: Pose,
    pub boxes: BoxUnion2,
}

#[derive(Debug, Clone, Copy)]
struct Perturbation {
    miss_draw: f64,
    jitter: [f64; 2],
    shrink: [f64; 2],
}

/// Detector bound to one environment, caching perturbation draws.
#[derive(Debug)]
pub struct SyntheticDetector<'a> {
    env: &'a Environment,
    sensor: SensorConfig,
    noise: NoiseConfig,
    cache: HashMap<(usize, i64, i64), Perturbation>,
}

impl<'a> SyntheticDetector<'a> {
    pub fn new(env: &'a Environment, sensor: SensorConfig, noise: NoiseConfig) -> Self {
        Self {
            env,
            sensor,
            noise,
            cache: HashMap::new(),
        }
    }

    pub fn env(&self) -> &Environment {
        self.env
    }

    pub fn sensor(&self) -> &SensorConfig {
        &self.sensor
    }

    fn perturbation(&mut self, box_id: usize, pose: &Pose) -> Perturbation {
        let l = self.noise.state_correlation_length;
        let key = (
            box_id,
            (pose.position[0] / l).floor() as i64,
            (pose.position[1] / l).floor() as i64,
        );
        let noise = &self.noise;
        let env_id = self.env.env_id;
        *self.cache.entry(key).or_insert_with(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(hash_words(&[
                noise.seed,
                env_id,
                box_id as u64,
                key.1 as u64,
                key.2 as u64,
            ]));
            let miss_draw: f64 = rng.random();
            let n0: f64 = StandardNormal.sample(&mut rng);
            let n1: f64 = StandardNormal.sample(&mut rng);
            let [s0, s1] = noise.shrink_frac_range;
            let mut shrink = [0.0; 2];
            for s in &mut shrink {
                *s = if s1 > s0 { rng.random_range(s0..s1) } else { s0 };
            }
            Perturbation {
                miss_draw,
                jitter: [n0 * noise.center_jitter_sigma, n1 * noise.center_jitter_sigma],
                shrink,
            }
        })
    }

    /// Detections at `pose`: perturbed copies of the visible boxes.
    pub fn detect(&mut self, pose: &Pose) -> DetectionFrame {
        let visible = visible_boxes(&self.env.obstacles.boxes, pose, &self.sensor);
        let exact = self.noise.is_exact();
        let mut out = Vec::with_capacity(visible.len());
        for i in visible {
            let gt = self.env.obstacles.boxes[i];
            if exact {
                out.push(gt);
                continue;
            }
            let pert = self.perturbation(i, pose);
            let d = gt.center();
            let d = ((d[0] - pose.position[0]).powi(2) + (d[1] - pose.position[1]).powi(2)).sqrt();
            let p_miss = self.noise.miss_prob_at_max_range * (d / self.sensor.range_max).clamp(0.0, 1.0);
            if pert.miss_draw < p_miss {
                continue;
            }
            let c = gt.center();
            let e = gt.extent();
            let center = [c[0] + pert.jitter[0], c[1] + pert.jitter[1]];
            let ext = [e[0] * (1.0 - pert.shrink[0]), e[1] * (1.0 - pert.shrink[1])];
            let b = Aabb2 {
                min: [center[0] - 0.5 * ext[0], center[1] - 0.5 * ext[1]],
                max: [center[0] + 0.5 * ext[0], center[1] + 0.5 * ext[1]],
            };
            if let Some(b) = b.clip(&self.env.room) {
                out.push(b);
            }
        }
        DetectionFrame {
            pose: *pose,
            boxes: BoxUnion2::new(out),
        }
    }
}

/// One-shot detection; see [`SyntheticDetector`].
pub fn synthetic_detect(env: &Environment, pose: &Pose, sensor: &SensorConfig, noise: &NoiseConfig) -> DetectionFrame {
    SyntheticDetector::new(env, *sensor, noise.clone()).detect(pose)
}

/// Inflate a frame by the calibrated margin. A negative margin is clamped to
/// zero; an infinite one yields the whole room.
pub fn apply_calibration(frame: &DetectionFrame, q_hat: f64, room: &Aabb2) -> BoxUnion2 {
    if q_hat.is_infinite() || q_hat.is_nan() {
        return BoxUnion2::new(vec![*room]);
    }
    frame.boxes.inflate(q_hat.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{generate_environment, EnvConfig};

    #[test]
    fn deterministic_and_inside_room() {
        let env = generate_environment(4, 9, &EnvConfig::default()).unwrap();
        let pose = Pose::new(env.start[0], env.start[1], env.start_heading);
        let s = SensorConfig::default();
        let n = NoiseConfig::default();
        let a = synthetic_detect(&env, &pose, &s, &n);
        let b = synthetic_detect(&env, &pose, &s, &n);
        assert_eq!(a, b);
        for bx in &a.boxes.boxes {
            assert!(env.room.contains_box(bx));
        }
    }

    #[test]
    fn exact_detector_returns_visible_ground_truth() {
        let env = generate_environment(1, 2, &EnvConfig::default()).unwrap();
        let s = SensorConfig {
            fov_deg: 360.0,
            range_min: 0.0,
            range_max: 20.0,
        };
        let pose = Pose::new(env.start[0], env.start[1], 0.0);
        let f = synthetic_detect(&env, &pose, &s, &NoiseConfig::exact());
        let vis = visible_boxes(&env.obstacles.boxes, &pose, &s);
        assert_eq!(f.boxes.len(), vis.len());
    }

    #[test]
    fn calibration_application() {
        let room = Aabb2::new([0.0, 0.0], [8.0, 8.0]).unwrap();
        let frame = DetectionFrame {
            pose: Pose::new(0.0, 0.0, 0.0),
            boxes: BoxUnion2::new(vec![Aabb2::new([1.0, 1.0], [2.0, 2.0]).unwrap()]),
        };
        assert_eq!(apply_calibration(&frame, -0.3, &room), frame.boxes);
        assert_eq!(apply_calibration(&frame, f64::INFINITY, &room).boxes, vec![room]);
        let inflated = apply_calibration(&frame, 0.5, &room);
        assert_eq!(inflated.boxes[0], Aabb2::new([0.5, 0.5], [2.5, 2.5]).unwrap());
    }
}

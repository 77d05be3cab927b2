//! Randomized room environments.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb2, BoxUnion2};
use crate::seeds::rng_for;

/// Obstacle placement strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// Boxes scattered uniformly over the room.
    Scatter,
    /// A random far goal with the first box placed across the straight path.
    Blocking,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub room_size: [f64; 2],
    pub layout: Layout,
    pub min_obstacles: usize,
    pub max_obstacles: usize,
    /// Range of the full side length of each obstacle, per axis.
    pub extent_range: [f64; 2],
    pub start: [f64; 2],
    pub start_jitter: f64,
    pub goal: [f64; 2],
    pub goal_jitter: f64,
    pub goal_radius: f64,
    /// Obstacle-free radius kept around the start and the goal.
    pub clearance: f64,
    /// Minimum start-goal distance for the blocking layout.
    pub blocking_min_goal_distance: f64,
    pub max_attempts: usize,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            room_size: [8.0, 8.0],
            layout: Layout::Scatter,
            min_obstacles: 1,
            max_obstacles: 5,
            extent_range: [0.4, 1.0],
            start: [1.0, 1.0],
            start_jitter: 0.25,
            goal: [6.0, 6.0],
            goal_jitter: 0.25,
            goal_radius: 1.0,
            clearance: 1.0,
            blocking_min_goal_distance: 5.0,
            max_attempts: 1000,
        }
    }
}

impl EnvConfig {
    pub fn room(&self) -> Aabb2 {
        Aabb2 {
            min: [0.0, 0.0],
            max: self.room_size,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.room_size[0] > 0.0 && self.room_size[1] > 0.0) {
            return bad("room size must be positive");
        }
        if self.min_obstacles > self.max_obstacles {
            return bad("min_obstacles exceeds max_obstacles");
        }
        if !(self.extent_range[0] > 0.0 && self.extent_range[0] <= self.extent_range[1]) {
            return bad("extent_range must be a positive interval");
        }
        if !(self.clearance >= 0.0 && self.goal_radius > 0.0) {
            return bad("clearance and goal radius must be non-negative and positive");
        }
        if self.max_attempts == 0 {
            return bad("max_attempts must be positive");
        }
        Ok(())
    }
}

/// One navigation problem: room, obstacles, start and goal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub env_id: u64,
    pub seed: u64,
    pub room: Aabb2,
    pub obstacles: BoxUnion2,
    pub start: [f64; 2],
    pub start_heading: f64,
    pub goal: [f64; 2],
    pub goal_radius: f64,
    /// Radius around the start known to be free of obstacles.
    pub clearance: f64,
}

impl Environment {
    pub fn diagonal(&self) -> f64 {
        let e = self.room.extent();
        (e[0] * e[0] + e[1] * e[1]).sqrt()
    }

    pub fn in_obstacle(&self, p: &[f64; 2]) -> bool {
        self.obstacles.contains_point(p)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Sample an environment by rejection. Deterministic in `seed`.
pub fn generate_environment(env_id: u64, seed: u64, config: &EnvConfig) -> Result<Environment> {
    config.validate()?;
    let room = config.room();
    let mut rng = rng_for(seed, "environment", env_id);
    let jitter = |rng: &mut rand_chacha::ChaCha8Rng, c: [f64; 2], j: f64| -> [f64; 2] {
        if j > 0.0 {
            [c[0] + rng.random_range(-j..=j), c[1] + rng.random_range(-j..=j)]
        } else {
            c
        }
    };
    let inset = room.inflate(-config.goal_radius.min(1.0)).unwrap_or(room);

    for _ in 0..config.max_attempts {
        let start = jitter(&mut rng, config.start, config.start_jitter);
        if !room.contains_point(&start) {
            continue;
        }
        let goal = match config.layout {
            Layout::Scatter => jitter(&mut rng, config.goal, config.goal_jitter),
            Layout::Blocking => [
                rng.random_range(inset.min[0]..=inset.max[0]),
                rng.random_range(inset.min[1]..=inset.max[1]),
            ],
        };
        if !room.contains_point(&goal) {
            continue;
        }
        if config.layout == Layout::Blocking && dist(start, goal) < config.blocking_min_goal_distance {
            continue;
        }
        let count = rng.random_range(config.min_obstacles..=config.max_obstacles);
        let mut boxes: Vec<Aabb2> = Vec::with_capacity(count);
        let mut ok = true;
        for k in 0..count {
            let ext = [
                rng.random_range(config.extent_range[0]..=config.extent_range[1]),
                rng.random_range(config.extent_range[0]..=config.extent_range[1]),
            ];
            let center = if config.layout == Layout::Blocking && k == 0 {
                let f = rng.random_range(0.35..=0.65);
                [start[0] + f * (goal[0] - start[0]), start[1] + f * (goal[1] - start[1])]
            } else {
                [
                    rng.random_range(room.min[0] + 0.5 * ext[0]..=room.max[0] - 0.5 * ext[0]),
                    rng.random_range(room.min[1] + 0.5 * ext[1]..=room.max[1] - 0.5 * ext[1]),
                ]
            };
            let b = Aabb2::from_center(center, ext)?;
            if !room.contains_box(&b)
                || b.distance_to_point(&start) < config.clearance
                || b.distance_to_point(&goal) < config.clearance
            {
                ok = false;
                break;
            }
            boxes.push(b);
        }
        if !ok {
            continue;
        }
        let start_heading = (goal[1] - start[1]).atan2(goal[0] - start[0]);
        return Ok(Environment {
            env_id,
            seed,
            room,
            obstacles: BoxUnion2::new(boxes),
            start,
            start_heading,
            goal,
            goal_radius: config.goal_radius,
            clearance: config.clearance,
        });
    }
    Err(Error::GenerationFailed {
        seed,
        attempts: config.max_attempts,
    })
}

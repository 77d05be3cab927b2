use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb2, BoxUnion2};
use crate::perception::Pose;
use crate::seeds::rng_for;

/// Fixed configuration samples shared by calibration and planning. Each
/// sample also carries a heading used when it serves as a sensor pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub seed: u64,
    pub room: Aabb2,
    pub points: Vec<[f64; 2]>,
    pub headings: Vec<f64>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn pose(&self, i: usize) -> Pose {
        Pose {
            position: self.points[i],
            heading: self.headings[i],
        }
    }

    /// Indexed poses of the samples outside every obstacle.
    pub fn poses_outside(&self, obstacles: &BoxUnion2) -> Vec<(usize, Pose)> {
        (0..self.len())
            .filter(|&i| !obstacles.contains_point(&self.points[i]))
            .map(|i| (i, self.pose(i)))
            .collect()
    }
}

/// Seeded uniform samples in `room` with uniform headings.
pub fn sample_configurations(room: &Aabb2, count: usize, seed: u64) -> Result<SampleSet> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    let mut rng = rng_for(seed, "samples", 0);
    let mut points = Vec::with_capacity(count);
    let mut headings = Vec::with_capacity(count);
    let pi = std::f64::consts::PI;
    for _ in 0..count {
        let x = room.min[0] + rng.random::<f64>() * (room.max[0] - room.min[0]);
        let y = room.min[1] + rng.random::<f64>() * (room.max[1] - room.min[1]);
        points.push([x, y]);
        headings.push(rng.random_range(-pi..pi));
    }
    Ok(SampleSet {
        seed,
        room: *room,
        points,
        headings,
    })
}

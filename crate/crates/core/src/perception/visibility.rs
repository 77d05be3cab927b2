//! Exact visibility of boxes from a sensor pose.
//!
//! A box is visible when some point of it lies in the closed field-of-view
//! wedge and range annulus, and the segment from the sensor to that point
//! meets no other box before reaching it. Along a ray every relevant quantity
//! (entry and exit distances of each box, the two range radii) is piecewise
//! smooth in the ray angle, and comparisons between them can only change
//! where the ray passes a box corner, an intersection of two box edge lines,
//! or an intersection of an edge line with a range circle. Testing every such
//! critical angle plus the midpoints between consecutive ones decides
//! visibility exactly.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::Aabb2;

/// Field of view and range limits of the forward-facing sensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorConfig {
    pub fov_deg: f64,
    pub range_min: f64,
    pub range_max: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            fov_deg: 70.0,
            range_min: 1.0,
            range_max: 5.0,
        }
    }
}

impl SensorConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.fov_deg > 0.0 && self.fov_deg <= 360.0) {
            return Err(crate::Error::Config(format!("fov {} outside (0, 360]", self.fov_deg)));
        }
        if !(self.range_min >= 0.0 && self.range_min < self.range_max) {
            return Err(crate::Error::Config(format!(
                "range [{}, {}] is not a valid interval",
                self.range_min, self.range_max
            )));
        }
        Ok(())
    }

    pub fn half_fov(&self) -> f64 {
        0.5 * self.fov_deg.to_radians()
    }

    pub fn is_full_circle(&self) -> bool {
        self.fov_deg >= 360.0
    }

    /// Whether `point` is inside the closed wedge and annulus.
    pub fn covers_point(&self, pose: &Pose, point: [f64; 2]) -> bool {
        let dx = point[0] - pose.position[0];
        let dy = point[1] - pose.position[1];
        let r = (dx * dx + dy * dy).sqrt();
        if r < self.range_min || r > self.range_max {
            return false;
        }
        self.is_full_circle() || wrap_angle(dy.atan2(dx) - pose.heading).abs() <= self.half_fov()
    }
}

/// Sensor position and viewing direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: [f64; 2],
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            position: [x, y],
            heading,
        }
    }
}

/// Wrap an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Indices of `boxes` visible from `pose`.
pub fn visible_boxes(boxes: &[Aabb2], pose: &Pose, sensor: &SensorConfig) -> Vec<usize> {
    let p = pose.position;
    let (rmin, rmax) = (sensor.range_min, sensor.range_max);
    let full = sensor.is_full_circle();
    let half = sensor.half_fov();

    // anything farther than range_max can neither be seen nor occlude
    let near: Vec<usize> = (0..boxes.len())
        .filter(|&i| boxes[i].distance_to_point(&p) <= rmax)
        .collect();
    let candidates: Vec<usize> = near
        .iter()
        .copied()
        .filter(|&i| boxes[i].max_distance_to_point(&p) >= rmin)
        .filter(|&i| full || angular_overlap(&boxes[i], pose, half))
        .collect();
    if candidates.is_empty() {
        return Vec::new();
    }

    let rel = |x: f64, y: f64| wrap_angle((y - p[1]).atan2(x - p[0]) - pose.heading);
    let in_wedge = |a: f64| full || a.abs() <= half;

    let mut angles: Vec<f64> = Vec::new();
    if full {
        angles.push(-PI);
        angles.push(PI);
    } else {
        angles.push(-half);
        angles.push(half);
    }
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for &i in &near {
        xs.extend([boxes[i].min[0], boxes[i].max[0]]);
        ys.extend([boxes[i].min[1], boxes[i].max[1]]);
    }
    let lim2 = (rmax + 1e-9) * (rmax + 1e-9);
    for &x in &xs {
        for &y in &ys {
            let d2 = (x - p[0]).powi(2) + (y - p[1]).powi(2);
            if d2 <= lim2 && d2 > 0.0 {
                angles.push(rel(x, y));
            }
        }
    }
    for r in [rmin, rmax] {
        if r <= 0.0 {
            continue;
        }
        for &x in &xs {
            let dx = x - p[0];
            if dx.abs() <= r {
                let h = (r * r - dx * dx).sqrt();
                angles.push(rel(x, p[1] + h));
                angles.push(rel(x, p[1] - h));
            }
        }
        for &y in &ys {
            let dy = y - p[1];
            if dy.abs() <= r {
                let h = (r * r - dy * dy).sqrt();
                angles.push(rel(p[0] + h, y));
                angles.push(rel(p[0] - h, y));
            }
        }
    }
    angles.retain(|&a| in_wedge(a));
    angles.sort_by(f64::total_cmp);
    angles.dedup();

    let mut probes = Vec::with_capacity(2 * angles.len() + 1);
    for w in angles.windows(2) {
        probes.push(w[0]);
        probes.push(0.5 * (w[0] + w[1]));
    }
    if let Some(&last) = angles.last() {
        probes.push(last);
    }

    let mut visible = vec![false; boxes.len()];
    let mut remaining = candidates.len();
    let mut hits: Vec<(usize, f64, f64)> = Vec::with_capacity(near.len());
    for a in probes {
        let th = pose.heading + a;
        let dir = [th.cos(), th.sin()];
        hits.clear();
        for &i in &near {
            if let Some((t0, t1)) = boxes[i].ray_interval(p, dir) {
                hits.push((i, t0, t1));
            }
        }
        if hits.is_empty() {
            continue;
        }
        // first and second smallest entry distances
        let (mut first, mut second) = ((usize::MAX, f64::INFINITY), f64::INFINITY);
        for &(i, t0, _) in &hits {
            if t0 < first.1 {
                second = first.1;
                first = (i, t0);
            } else if t0 < second {
                second = t0;
            }
        }
        for &(i, t0, t1) in &hits {
            if visible[i] || !candidates.contains(&i) {
                continue;
            }
            let lo = t0.max(rmin);
            let hi = t1.min(rmax);
            if lo > hi {
                continue;
            }
            let blocker = if first.0 == i { second } else { first.1 };
            if blocker >= lo - 1e-12 {
                visible[i] = true;
                remaining -= 1;
            }
        }
        if remaining == 0 {
            break;
        }
    }
    candidates.into_iter().filter(|&i| visible[i]).collect()
}

/// Cheap test whether the box's angular span can meet the wedge.
fn angular_overlap(b: &Aabb2, pose: &Pose, half: f64) -> bool {
    let p = pose.position;
    if b.contains_point(&p) {
        return true;
    }
    let c = b.center();
    let ca = (c[1] - p[1]).atan2(c[0] - p[0]);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for k in b.corners() {
        let d = wrap_angle((k[1] - p[1]).atan2(k[0] - p[0]) - ca);
        lo = lo.min(d);
        hi = hi.max(d);
    }
    let center_rel = wrap_angle(ca - pose.heading);
    // interval [center_rel + lo, center_rel + hi] against [-half, half]
    let a0 = center_rel + lo;
    let a1 = center_rel + hi;
    let hits = |off: f64| a1 + off >= -half && a0 + off <= half;
    hits(0.0) || hits(2.0 * PI) || hits(-2.0 * PI)
}

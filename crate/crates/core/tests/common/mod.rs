//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use calnav::geometry::{Aabb2, BoxUnion2};
use calnav::perception::{wrap_angle, Pose, SensorConfig};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Oracle grid spacing, meters.
pub const MM: f64 = 1e-3;

/// Lattice coordinate `k` centimeters, computed as `k / 100` so that equal
/// lattice points are bit-identical.
fn cm(k: i64) -> f64 {
    k as f64 / 100.0
}

fn cm_index(x: f64) -> i64 {
    (x * 100.0).round() as i64
}

fn lattice_interval(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> (f64, f64) {
    let a = rng.random_range(lo..hi);
    let b = rng.random_range(a + 1..=hi);
    (cm(a), cm(b))
}

/// Box with corners on a 1 cm lattice inside `[lo, hi]^2`, so that the 1 mm
/// oracle grid resolves every difference between two unions.
pub fn lattice_box(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Aabb2 {
    let (x0, x1) = lattice_interval(rng, cm_index(lo), cm_index(hi));
    let (y0, y1) = lattice_interval(rng, cm_index(lo), cm_index(hi));
    Aabb2::new([x0, y0], [x1, y1]).unwrap()
}

/// A lattice box inside the lattice box `outer`.
pub fn lattice_sub_box(rng: &mut ChaCha8Rng, outer: &Aabb2) -> Aabb2 {
    let (x0, x1) = lattice_interval(rng, cm_index(outer.min[0]), cm_index(outer.max[0]));
    let (y0, y1) = lattice_interval(rng, cm_index(outer.min[1]), cm_index(outer.max[1]));
    Aabb2::new([x0, y0], [x1, y1]).unwrap()
}

/// Random `(a, b)` pair; about half the time `a` is built from pieces of
/// `b` so that containment holds often enough to matter.
pub fn lattice_instance(rng: &mut ChaCha8Rng) -> (BoxUnion2, BoxUnion2) {
    let nb = rng.random_range(1..=3);
    let b: Vec<Aabb2> = (0..nb).map(|_| lattice_box(rng, 0.0, 0.4)).collect();
    let na = rng.random_range(1..=3);
    let a: Vec<Aabb2> = if rng.random_bool(0.5) {
        (0..na)
            .map(|_| {
                let k = rng.random_range(0..nb);
                lattice_sub_box(rng, &b[k])
            })
            .collect()
    } else {
        (0..na).map(|_| lattice_box(rng, 0.0, 0.4)).collect()
    };
    (BoxUnion2::new(a), BoxUnion2::new(b))
}

/// Inflation needed to cover point `p` with `b`: the smallest `q` such that
/// some member of `b.inflate(q)` contains `p`.
fn needed(p: [f64; 2], b: &BoxUnion2) -> f64 {
    b.boxes
        .iter()
        .map(|bx| {
            (0..2)
                .map(|k| (bx.min[k] - p[k]).max(p[k] - bx.max[k]))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Max over the cell centers of a grid of at most 1 mm spacing laid over
/// each member of `a` of the inflation each one needs. Every point of `a` is
/// within half a millimeter (per axis) of a center, so this is within half a
/// millimeter below the true minimal inflation.
pub fn grid_min_inflation(a: &BoxUnion2, b: &BoxUnion2) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for ab in &a.boxes {
        let e = ab.extent();
        // the 1e-9 keeps float noise in lattice extents from adding a cell
        let nx = ((e[0] / MM - 1e-9).ceil() as usize).max(1);
        let ny = ((e[1] / MM - 1e-9).ceil() as usize).max(1);
        let (hx, hy) = (e[0] / nx as f64, e[1] / ny as f64);
        for ix in 0..nx {
            let x = ab.min[0] + (ix as f64 + 0.5) * hx;
            for iy in 0..ny {
                let y = ab.min[1] + (iy as f64 + 0.5) * hy;
                worst = worst.max(needed([x, y], b));
            }
        }
    }
    worst
}

/// Containment by the 1 mm grid: every cell center of `a` lies in `b`.
pub fn grid_contains(a: &BoxUnion2, b: &BoxUnion2) -> bool {
    a.is_empty() || grid_min_inflation(a, b) <= 0.0
}

/// Entry and exit distance of the ray from `o` along `d` through `b`.
fn ray_hit(b: &Aabb2, o: [f64; 2], d: [f64; 2]) -> Option<(f64, f64)> {
    let (mut t0, mut t1) = (0.0f64, f64::INFINITY);
    for k in 0..2 {
        if d[k].abs() < 1e-15 {
            if o[k] < b.min[k] || o[k] > b.max[k] {
                return None;
            }
        } else {
            let a = (b.min[k] - o[k]) / d[k];
            let c = (b.max[k] - o[k]) / d[k];
            t0 = t0.max(a.min(c));
            t1 = t1.min(a.max(c));
        }
    }
    (t0 <= t1).then_some((t0, t1))
}

/// Visibility by dense ray casting. Along a ray, box `i` is seen at the first
/// distance `t` inside both the box and the annulus, unless another box is
/// entered before `t`. With `slack > 0` every comparison must hold with that
/// margin (strict oracle); with `slack < 0` it may fail by that much
/// (lenient oracle).
pub fn ray_visible(boxes: &[Aabb2], pose: &Pose, sensor: &SensorConfig, rays: usize, slack: f64) -> Vec<bool> {
    let half = if sensor.is_full_circle() {
        std::f64::consts::PI
    } else {
        sensor.half_fov()
    };
    let mut vis = vec![false; boxes.len()];
    let mut hits = Vec::with_capacity(boxes.len());
    for k in 0..=rays {
        let rel = -half + 2.0 * half * k as f64 / rays as f64;
        let th = wrap_angle(pose.heading + rel);
        let d = [th.cos(), th.sin()];
        hits.clear();
        hits.extend(boxes.iter().map(|b| ray_hit(b, pose.position, d)));
        for (i, h) in hits.iter().enumerate() {
            let Some((t_in, t_out)) = *h else { continue };
            let t = t_in.max(sensor.range_min + slack);
            if t + slack > t_out.min(sensor.range_max) {
                continue;
            }
            let blocked = hits
                .iter()
                .enumerate()
                .any(|(j, hj)| j != i && hj.is_some_and(|(tj, _)| tj < t + slack));
            if !blocked {
                vis[i] = true;
            }
        }
    }
    vis
}

/// Monte Carlo estimate of `|region|` inside `frame` with `n` samples.
pub fn mc_area(rng: &mut ChaCha8Rng, frame: &Aabb2, n: usize, inside: impl Fn([f64; 2]) -> bool) -> f64 {
    let mut hits = 0usize;
    for _ in 0..n {
        let p = [
            rng.random_range(frame.min[0]..frame.max[0]),
            rng.random_range(frame.min[1]..frame.max[1]),
        ];
        hits += usize::from(inside(p));
    }
    frame.volume() * hits as f64 / n as f64
}

use super::*;
use crate::geometry::{Aabb2, BoxUnion2};
use crate::perception::{wrap_angle, Pose, SensorConfig};

fn room_grid(size: f64, cell: f64) -> GridSpec {
    GridSpec::for_room(&Aabb2::new([0.0, 0.0], [size, size]).unwrap(), cell).unwrap()
}

fn count(m: &[bool]) -> usize {
    m.iter().filter(|&&b| b).count()
}

fn inside_view(grid: &GridSpec, i: usize, pose: &Pose, s: &SensorConfig) -> bool {
    let (ix, iy) = grid.coords(i);
    let r = grid.cell_rect(ix, iy);
    let p = pose.position;
    r.corners().iter().all(|k| {
        let a = wrap_angle((k[1] - p[1]).atan2(k[0] - p[0]) - pose.heading);
        a.abs() <= s.half_fov()
    }) && r.max_distance_to_point(&p) <= s.range_max
        && r.distance_to_point(&p) >= s.range_min
}

#[test]
fn empty_scene_frees_whole_view() {
    let g = room_grid(8.0, 0.1);
    let s = SensorConfig::default();
    let pose = Pose::new(1.03, 3.97, 0.21);
    let free = compute_free(&g, &pose, &s, &vec![false; g.len()], None);
    for i in 0..g.len() {
        assert_eq!(free[i], inside_view(&g, i, &pose, &s), "cell {:?}", g.coords(i));
    }
    assert!(count(&free) > 500);
}

#[test]
fn wall_casts_shadow_and_blind_radius_stays_unfree() {
    let g = room_grid(8.0, 0.05);
    let s = SensorConfig::default();
    let pose = Pose::new(0.5, 4.0, 0.0);
    let wall = BoxUnion2::new(vec![Aabb2::new([3.0, 0.0], [3.1, 8.0]).unwrap()]);
    let occ = rasterize_conservative(&wall, &g, RasterMode::Outer);
    let free = compute_free(&g, &pose, &s, &occ, None);
    assert!(count(&free) > 0);
    for i in 0..g.len() {
        if free[i] {
            let (ix, iy) = g.coords(i);
            let r = g.cell_rect(ix, iy);
            assert!(r.max[0] <= 3.0 + 1e-12, "free cell behind the wall at {:?}", g.coords(i));
            assert!(r.distance_to_point(&pose.position) >= 1.0);
        }
    }
}

/// Marching a ray from the sensor to points of every free cell never
/// crosses an occupied cell.
#[test]
fn free_cells_pass_ray_march_oracle() {
    let g = room_grid(6.0, 0.1);
    let s = SensorConfig::default();
    let pose = Pose::new(0.7, 0.9, 0.7);
    let boxes = BoxUnion2::new(vec![
        Aabb2::new([2.0, 1.8], [2.3, 2.6]).unwrap(),
        Aabb2::new([1.3, 2.9], [2.2, 3.2]).unwrap(),
        Aabb2::new([3.05, 0.4], [3.5, 1.2]).unwrap(),
    ]);
    let occ = rasterize_conservative(&boxes, &g, RasterMode::Outer);
    let free = compute_free(&g, &pose, &s, &occ, None);
    let p = pose.position;
    for i in (0..g.len()).filter(|&i| free[i]) {
        let (ix, iy) = g.coords(i);
        let r = g.cell_rect(ix, iy);
        for a in 0..=4 {
            for b in 0..=4 {
                // interior points: boundaries are shared with occupied cells
                let q = [
                    r.min[0] + (0.02 + a as f64 * 0.24) * g.cell,
                    r.min[1] + (0.02 + b as f64 * 0.24) * g.cell,
                ];
                for k in 0..=400 {
                    let t = k as f64 / 400.0;
                    let x = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
                    assert!(!boxes.contains_point(&x), "ray to {q:?} crosses obstacle at {x:?}");
                }
            }
        }
    }
}

#[test]
fn occupied_update_examples() {
    let g = room_grid(8.0, 0.1);
    let s = SensorConfig::default();
    let pose = Pose::new(1.0, 1.0, 0.8);
    let sensed = sensed_region(&g, &pose, &s, &vec![false; g.len()], None);
    assert!(count(&sensed) > 0);

    let mut b = Belief::new(g);
    b.update_occupied(&vec![true; g.len()], &sensed);
    assert_eq!(b.count(CellState::Occupied), g.len());

    let mut b = Belief::new(g);
    let cleared = b.update_occupied(&vec![false; g.len()], &sensed);
    assert_eq!(cleared, count(&sensed));
    assert_eq!(b.count(CellState::Unknown), count(&sensed));
}

#[test]
fn two_step_intersection_is_associative() {
    let g = room_grid(1.0, 0.1);
    let sensed = vec![true; g.len()];
    let p1: Vec<bool> = (0..g.len()).map(|i| i % 3 != 0).collect();
    let p2: Vec<bool> = (0..g.len()).map(|i| i % 5 != 1).collect();
    let both: Vec<bool> = p1.iter().zip(&p2).map(|(a, b)| *a && *b).collect();
    let mut seq = Belief::new(g);
    seq.update_occupied(&p1, &sensed);
    seq.update_occupied(&p2, &sensed);
    let mut once = Belief::new(g);
    once.update_occupied(&both, &sensed);
    assert_eq!(seq.mask(CellState::Occupied), once.mask(CellState::Occupied));
    assert_eq!(seq.mask(CellState::Occupied), both);
}

#[test]
fn free_update_is_idempotent_and_checked() {
    let g = room_grid(1.0, 0.1);
    let mut b = Belief::new(g);
    b.update_occupied(&vec![false; g.len()], &vec![true; g.len()]);
    let before = b.clone();
    b.update_free(&vec![false; g.len()]).unwrap();
    assert_eq!(b.states(), before.states());
    let some: Vec<bool> = (0..g.len()).map(|i| i < 30).collect();
    b.update_free(&some).unwrap();
    let once = b.states().to_vec();
    b.update_free(&some).unwrap();
    assert_eq!(b.states(), &once[..]);

    let mut fresh = Belief::new(g);
    assert!(matches!(fresh.update_free(&some), Err(crate::Error::Soundness(_))));
}

#[test]
fn known_free_disc_initialization() {
    let g = room_grid(8.0, 0.05);
    let b = Belief::with_known_free(g, Disc { center: [1.0, 1.0], radius: 1.0 });
    let free = b.count(CellState::Free);
    // cells fully inside a unit disc: a bit less than pi / cell^2
    assert!(free > 1100 && free < 1257, "{free}");
    assert_eq!(free + b.count(CellState::Occupied), g.len());
}

/// Sweeping a full-circle sensor over a small room with exact perception
/// frees everything except the obstacle cells and a one-cell rim.
#[test]
fn exact_sweep_converges() {
    let g = room_grid(3.0, 0.1);
    let s = SensorConfig {
        fov_deg: 360.0,
        range_min: 0.0,
        range_max: 5.0,
    };
    let gt = BoxUnion2::new(vec![
        Aabb2::new([1.2, 1.2], [1.8, 1.6]).unwrap(),
        Aabb2::new([0.3, 2.2], [0.6, 2.7]).unwrap(),
    ]);
    let outer = rasterize_conservative(&gt, &g, RasterMode::Outer);
    let mut dilated = outer.clone();
    for i in (0..g.len()).filter(|&i| outer[i]) {
        let (ix, iy) = g.coords(i);
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                let (x, y) = (ix as i64 + dx, iy as i64 + dy);
                if x >= 0 && y >= 0 && (x as usize) < g.nx && (y as usize) < g.ny {
                    dilated[g.index(x as usize, y as usize)] = true;
                }
            }
        }
    }
    let mut b = Belief::new(g);
    for k in 0..12 {
        for j in 0..12 {
            let p = [0.125 + 0.25 * k as f64, 0.125 + 0.25 * j as f64];
            if gt.contains_point(&p) {
                continue;
            }
            b.observe(&Pose::new(p[0], p[1], 0.0), &s, &gt).unwrap();
        }
    }
    for i in 0..g.len() {
        if outer[i] {
            assert_ne!(b.state(i), CellState::Free);
        } else if !dilated[i] {
            assert_eq!(b.state(i), CellState::Free, "cell {:?}", g.coords(i));
        }
    }
    assert!(!b.free_overlaps(&gt));
}


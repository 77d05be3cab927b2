use serde::{Deserialize, Serialize};

use super::grid::{rasterize_conservative, GridSpec, RasterMode};
use crate::error::{Error, Result};
use crate::geometry::BoxUnion2;
use crate::perception::{wrap_angle, Pose, SensorConfig};

/// Angular resolution of the occlusion buffer, radians.
const BIN_WIDTH: f64 = 0.25 * std::f64::consts::PI / 180.0;
const ANGLE_PAD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[repr(u8)]
pub enum CellState {
    Unknown = 0,
    Free = 1,
    Occupied = 2,
}

/// Open disc known in advance to contain no obstacle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disc {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Disc {
    fn dist(&self, p: [f64; 2]) -> f64 {
        ((p[0] - self.center[0]).powi(2) + (p[1] - self.center[1]).powi(2)).sqrt()
    }
}

/// Per-cell geometry relative to one sensor pose.
#[derive(Debug, Clone, Copy)]
struct CellView {
    index: usize,
    dmin: f64,
    dmax: f64,
    /// Angular interval relative to the heading; `None` when the cell
    /// contains the sensor.
    span: Option<(f64, f64)>,
}

/// Cells near one pose together with the sensing geometry.
#[derive(Debug)]
pub struct ViewGeometry {
    pose: Pose,
    sensor: SensorConfig,
    cells: Vec<CellView>,
}

impl ViewGeometry {
    /// Geometry of every cell that could be sensed or occlude from `pose`.
    pub fn new(grid: &GridSpec, pose: &Pose, sensor: &SensorConfig) -> Self {
        let p = pose.position;
        let r = sensor.range_max;
        let half = sensor.half_fov();
        let full = sensor.is_full_circle();
        let diag = grid.cell * std::f64::consts::SQRT_2;
        let mut cells = Vec::new();
        if let (Some((x0, x1)), Some((y0, y1))) = (
            grid.touching_range(0, p[0] - r, p[0] + r),
            grid.touching_range(1, p[1] - r, p[1] + r),
        ) {
            for iy in y0..=y1 {
                for ix in x0..=x1 {
                    let rect = grid.cell_rect(ix, iy);
                    let dmin = rect.distance_to_point(&p);
                    if dmin > r {
                        continue;
                    }
                    let index = grid.index(ix, iy);
                    let dmax = rect.max_distance_to_point(&p);
                    if rect.contains_point(&p) {
                        cells.push(CellView {
                            index,
                            dmin,
                            dmax,
                            span: None,
                        });
                        continue;
                    }
                    let c = rect.center();
                    let ca = (c[1] - p[1]).atan2(c[0] - p[0]);
                    let rel = wrap_angle(ca - pose.heading);
                    let dc = ((c[0] - p[0]).powi(2) + (c[1] - p[1]).powi(2)).sqrt();
                    if !full && dc > diag && rel.abs() > half + diag / dc {
                        continue;
                    }
                    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                    for k in rect.corners() {
                        let d = wrap_angle((k[1] - p[1]).atan2(k[0] - p[0]) - ca);
                        lo = lo.min(d);
                        hi = hi.max(d);
                    }
                    cells.push(CellView {
                        index,
                        dmin,
                        dmax,
                        span: Some((rel + lo - ANGLE_PAD, rel + hi + ANGLE_PAD)),
                    });
                }
            }
        }
        Self {
            pose: *pose,
            sensor: *sensor,
            cells,
        }
    }

    fn in_wedge(&self, v: &CellView) -> bool {
        if self.sensor.is_full_circle() {
            return v.span.is_some();
        }
        let h = self.sensor.half_fov();
        matches!(v.span, Some((lo, hi)) if lo >= -h && hi <= h)
    }

    /// Cells lying entirely in the wedge within range whose part inside the
    /// blind radius (if any) is known to be obstacle-free.
    fn eligible(&self, v: &CellView, grid: &GridSpec, known_free: Option<&Disc>) -> bool {
        if v.dmax > self.sensor.range_max || !self.in_wedge(v) {
            return false;
        }
        v.dmin >= self.sensor.range_min || self.blind_part_known_free(v, grid, known_free)
    }

    fn blind_part_known_free(&self, v: &CellView, grid: &GridSpec, known_free: Option<&Disc>) -> bool {
        let Some(d) = known_free else {
            return false;
        };
        if d.dist(self.pose.position) + self.sensor.range_min <= d.radius {
            return true;
        }
        let (ix, iy) = grid.coords(v.index);
        grid.cell_rect(ix, iy).max_distance_to_point(&d.center) < d.radius
    }

    /// Cells that may hold an obstacle inside the blind radius, where the
    /// prediction says nothing.
    fn blind_relevant(&self, v: &CellView, grid: &GridSpec, known_free: Option<&Disc>) -> bool {
        v.dmin < self.sensor.range_min && !self.blind_part_known_free(v, grid, known_free)
    }

    /// Eligible cells not hidden behind any occluder cell.
    fn sensed(&self, grid: &GridSpec, occluders: &[bool], known_free: Option<&Disc>) -> Vec<bool> {
        self.sensed_and_seen(grid, occluders, known_free).0
    }

    /// Sensed cells, plus the eligible cells whose near side is exposed
    /// (no occluder strictly in front), which includes the visible face of
    /// predicted obstacles.
    fn sensed_and_seen(&self, grid: &GridSpec, occluders: &[bool], known_free: Option<&Disc>) -> (Vec<bool>, Vec<bool>) {
        let mut buf = DepthBuffer::new(&self.sensor);
        for v in &self.cells {
            if occluders[v.index] {
                buf.insert(v.span, v.dmin);
            }
        }
        let mut sensed = vec![false; grid.len()];
        let mut seen = vec![false; grid.len()];
        for v in &self.cells {
            if self.eligible(v, grid, known_free) {
                sensed[v.index] = !buf.occludes(v.span, v.dmax);
                seen[v.index] = sensed[v.index] || !buf.in_front(v.span, v.dmin);
            }
        }
        (sensed, seen)
    }
}

/// Nearest occluder distance per angular bin.
struct DepthBuffer {
    start: f64,
    wrap: bool,
    depth: Vec<f64>,
}

impl DepthBuffer {
    fn new(sensor: &SensorConfig) -> Self {
        let (start, span) = if sensor.is_full_circle() {
            (-std::f64::consts::PI, 2.0 * std::f64::consts::PI)
        } else {
            (-sensor.half_fov(), 2.0 * sensor.half_fov())
        };
        let n = ((span / BIN_WIDTH).ceil() as usize).max(1);
        Self {
            start,
            wrap: sensor.is_full_circle(),
            depth: vec![f64::INFINITY; n],
        }
    }

    /// Visit the bins meeting the closed interval `span` (all bins for `None`).
    fn for_bins(&self, span: Option<(f64, f64)>, mut f: impl FnMut(usize) -> bool) -> bool {
        let n = self.depth.len() as i64;
        let Some((lo, hi)) = span else {
            return (0..n as usize).any(f);
        };
        let a = ((lo - self.start) / BIN_WIDTH).floor() as i64;
        let b = ((hi - self.start) / BIN_WIDTH).floor() as i64;
        if self.wrap {
            let b = b.min(a + n - 1);
            (a..=b).any(|k| f(k.rem_euclid(n) as usize))
        } else {
            let (a, b) = (a.max(0), b.min(n - 1));
            a <= b && (a..=b).any(|k| f(k as usize))
        }
    }

    fn insert(&mut self, span: Option<(f64, f64)>, dmin: f64) {
        let mut touched = Vec::new();
        self.for_bins(span, |k| {
            touched.push(k);
            false
        });
        for k in touched {
            self.depth[k] = self.depth[k].min(dmin);
        }
    }

    fn occludes(&self, span: Option<(f64, f64)>, dmax: f64) -> bool {
        self.for_bins(span, |k| self.depth[k] <= dmax)
    }

    fn in_front(&self, span: Option<(f64, f64)>, dmin: f64) -> bool {
        self.for_bins(span, |k| self.depth[k] < dmin)
    }
}

/// Cells sensed from `pose`: fully inside the wedge and range annulus, and
/// not behind any cell of `occluders`.
pub fn sensed_region(
    grid: &GridSpec,
    pose: &Pose,
    sensor: &SensorConfig,
    occluders: &[bool],
    known_free: Option<&Disc>,
) -> Vec<bool> {
    ViewGeometry::new(grid, pose, sensor).sensed(grid, occluders, known_free)
}

/// Cells that become free given the occupied set: sensed cells not shadowed
/// by any occupied cell, minus the occupied cells themselves.
pub fn compute_free(
    grid: &GridSpec,
    pose: &Pose,
    sensor: &SensorConfig,
    occupied: &[bool],
    known_free: Option<&Disc>,
) -> Vec<bool> {
    let mut free = sensed_region(grid, pose, sensor, occupied, known_free);
    for (f, &o) in free.iter_mut().zip(occupied) {
        *f &= !o;
    }
    free
}

/// Counts from one observation step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationSummary {
    pub sensed: usize,
    pub cleared: usize,
    pub newly_free: usize,
}

/// Set-valued occupancy belief: occupied only shrinks, free only grows.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief {
    grid: GridSpec,
    state: Vec<CellState>,
    observed: Vec<bool>,
    known_free: Option<Disc>,
    t: usize,
}

impl Belief {
    /// Everything occupied, nothing free.
    pub fn new(grid: GridSpec) -> Self {
        Self {
            grid,
            state: vec![CellState::Occupied; grid.len()],
            observed: vec![false; grid.len()],
            known_free: None,
            t: 0,
        }
    }

    /// Like [`Belief::new`] but with the cells inside an obstacle-free disc
    /// around the start marked free.
    pub fn with_known_free(grid: GridSpec, disc: Disc) -> Self {
        let mut b = Self::new(grid);
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                if grid.cell_rect(ix, iy).max_distance_to_point(&disc.center) < disc.radius {
                    b.state[grid.index(ix, iy)] = CellState::Free;
                }
            }
        }
        b.known_free = Some(disc);
        b
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn states(&self) -> &[CellState] {
        &self.state
    }

    pub fn state(&self, i: usize) -> CellState {
        self.state[i]
    }

    pub fn is_free(&self, i: usize) -> bool {
        self.state[i] == CellState::Free
    }

    /// Whether the cell was ever sensed or seen as the face of a predicted
    /// obstacle.
    pub fn observed(&self, i: usize) -> bool {
        self.observed[i]
    }

    pub fn known_free(&self) -> Option<&Disc> {
        self.known_free.as_ref()
    }

    pub fn mask(&self, s: CellState) -> Vec<bool> {
        self.state.iter().map(|&c| c == s).collect()
    }

    pub fn count(&self, s: CellState) -> usize {
        self.state.iter().filter(|&&c| c == s).count()
    }

    /// Intersect occupied space with the prediction inside the sensed
    /// region; cleared cells become unknown.
    pub fn update_occupied(&mut self, predicted: &[bool], sensed: &[bool]) -> usize {
        let mut cleared = 0;
        for i in 0..self.state.len() {
            if sensed[i] {
                self.observed[i] = true;
                if !predicted[i] && self.state[i] == CellState::Occupied {
                    self.state[i] = CellState::Unknown;
                    cleared += 1;
                }
            }
        }
        cleared
    }

    /// Add new free cells. Fails if any of them is occupied.
    pub fn update_free(&mut self, new_free: &[bool]) -> Result<usize> {
        if let Some(i) = (0..self.state.len()).find(|&i| new_free[i] && self.state[i] == CellState::Occupied) {
            let (ix, iy) = self.grid.coords(i);
            return Err(Error::Soundness(format!("cell ({ix}, {iy}) would be both free and occupied")));
        }
        let mut added = 0;
        for i in 0..self.state.len() {
            if new_free[i] && self.state[i] != CellState::Free {
                self.state[i] = CellState::Free;
                added += 1;
            }
        }
        self.t += 1;
        Ok(added)
    }

    /// One filter step from calibrated predictions seen at `pose`.
    pub fn observe(&mut self, pose: &Pose, sensor: &SensorConfig, calibrated: &BoxUnion2) -> Result<ObservationSummary> {
        let view = ViewGeometry::new(&self.grid, pose, sensor);
        let kf = self.known_free;
        let predicted = rasterize_conservative(calibrated, &self.grid, RasterMode::Outer);
        let mut occluders = predicted.clone();
        for v in &view.cells {
            if self.state[v.index] == CellState::Occupied && view.blind_relevant(v, &self.grid, kf.as_ref()) {
                occluders[v.index] = true;
            }
        }
        let (sensed, seen) = view.sensed_and_seen(&self.grid, &occluders, kf.as_ref());
        for (o, &s) in self.observed.iter_mut().zip(&seen) {
            *o |= s;
        }
        let cleared = self.update_occupied(&predicted, &sensed);
        // sensed cells left unoccupied were either just cleared or cleared
        // by an earlier observation; both are obstacle-free
        let new_free: Vec<bool> = sensed
            .iter()
            .zip(&self.state)
            .map(|(&s, &c)| s && c != CellState::Occupied)
            .collect();
        let newly_free = self.update_free(&new_free)?;
        Ok(ObservationSummary {
            sensed: sensed.iter().filter(|&&b| b).count(),
            cleared,
            newly_free,
        })
    }

    /// Whether some free cell overlaps the interior of a box in `boxes`.
    pub fn free_overlaps(&self, boxes: &BoxUnion2) -> bool {
        const EPS: f64 = 1e-9;
        boxes.boxes.iter().any(|b| {
            let (Some((x0, x1)), Some((y0, y1))) = (
                self.grid.touching_range(0, b.min[0], b.max[0]),
                self.grid.touching_range(1, b.min[1], b.max[1]),
            ) else {
                return false;
            };
            (y0..=y1).any(|iy| {
                (x0..=x1).any(|ix| {
                    if !self.is_free(self.grid.index(ix, iy)) {
                        return false;
                    }
                    let r = self.grid.cell_rect(ix, iy);
                    (0..2).all(|k| r.max[k].min(b.max[k]) - r.min[k].max(b.min[k]) > EPS)
                })
            })
        })
    }
}

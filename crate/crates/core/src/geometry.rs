//! Axis-aligned box geometry.
//!
//! Boxes are closed sets `[min, max]` in `D` dimensions. A [`BoxUnion`] is a
//! finite union of such boxes; the empty union is the empty region.
//! Containment between unions is decided exactly by coordinate compression
//! ([`RectRegion`]): the coordinates of every box boundary split space into
//! elementary pieces, each of which is either fully inside or fully outside
//! every box, so comparing piece occupancy decides containment without any
//! sampling.

use crate::conformal::minimal_parameter;
use crate::error::{Error, Result};

/// Closed axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb<const D: usize> {
    pub min: [f64; D],
    pub max: [f64; D],
}

pub type Aabb2 = Aabb<2>;

impl<const D: usize> Aabb<D> {
    /// Validated constructor: finite coordinates with `min <= max` per axis.
    pub fn new(min: [f64; D], max: [f64; D]) -> Result<Self> {
        for k in 0..D {
            if !min[k].is_finite() || !max[k].is_finite() {
                return Err(Error::InvalidBox(format!("non-finite coordinate on axis {k}")));
            }
            if min[k] > max[k] {
                return Err(Error::InvalidBox(format!(
                    "min {} > max {} on axis {k}",
                    min[k], max[k]
                )));
            }
        }
        Ok(Self { min, max })
    }

    /// Box with the given center and full extents.
    pub fn from_center(center: [f64; D], extent: [f64; D]) -> Result<Self> {
        let mut min = [0.0; D];
        let mut max = [0.0; D];
        for k in 0..D {
            min[k] = center[k] - 0.5 * extent[k];
            max[k] = center[k] + 0.5 * extent[k];
        }
        Self::new(min, max)
    }

    /// Subtract `q` from every min and add it to every max. A negative `q`
    /// deflates; `None` when some axis collapses past zero width.
    pub fn inflate(&self, q: f64) -> Option<Self> {
        let mut out = *self;
        for k in 0..D {
            out.min[k] -= q;
            out.max[k] += q;
            if out.min[k] > out.max[k] {
                return None;
            }
        }
        Some(out)
    }

    pub fn center(&self) -> [f64; D] {
        std::array::from_fn(|k| 0.5 * (self.min[k] + self.max[k]))
    }

    pub fn extent(&self) -> [f64; D] {
        std::array::from_fn(|k| self.max[k] - self.min[k])
    }

    /// Lebesgue measure (area for `D = 2`).
    pub fn volume(&self) -> f64 {
        (0..D).map(|k| self.max[k] - self.min[k]).product()
    }

    pub fn intersection(&self, other: &Self) -> Option<Self> {
        let mut out = *self;
        for k in 0..D {
            out.min[k] = self.min[k].max(other.min[k]);
            out.max[k] = self.max[k].min(other.max[k]);
            if out.min[k] > out.max[k] {
                return None;
            }
        }
        Some(out)
    }

    /// Smallest box enclosing both.
    pub fn hull(&self, other: &Self) -> Self {
        let mut out = *self;
        for k in 0..D {
            out.min[k] = self.min[k].min(other.min[k]);
            out.max[k] = self.max[k].max(other.max[k]);
        }
        out
    }

    pub fn contains_point(&self, p: &[f64; D]) -> bool {
        (0..D).all(|k| self.min[k] <= p[k] && p[k] <= self.max[k])
    }

    pub fn contains_box(&self, other: &Self) -> bool {
        (0..D).all(|k| self.min[k] <= other.min[k] && other.max[k] <= self.max[k])
    }

    /// Interiors overlap (positive-measure intersection).
    pub fn overlaps_interior(&self, other: &Self) -> bool {
        (0..D).all(|k| self.min[k].max(other.min[k]) < self.max[k].min(other.max[k]))
    }

    /// Clamp into `bounds`; `None` if nothing is left.
    pub fn clip(&self, bounds: &Self) -> Option<Self> {
        self.intersection(bounds)
    }

    /// Apply `x -> scale * x + offset` on every axis (`scale > 0`).
    pub fn similarity(&self, scale: f64, offset: [f64; D]) -> Self {
        Self {
            min: std::array::from_fn(|k| scale * self.min[k] + offset[k]),
            max: std::array::from_fn(|k| scale * self.max[k] + offset[k]),
        }
    }

    /// Euclidean distance from a point to the box (0 inside).
    pub fn distance_to_point(&self, p: &[f64; D]) -> f64 {
        (0..D)
            .map(|k| {
                let d = (self.min[k] - p[k]).max(p[k] - self.max[k]).max(0.0);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Distance from a point to the farthest point of the box.
    pub fn max_distance_to_point(&self, p: &[f64; D]) -> f64 {
        (0..D)
            .map(|k| {
                let d = (p[k] - self.min[k]).abs().max((self.max[k] - p[k]).abs());
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }
}

impl Aabb2 {
    pub fn corners(&self) -> [[f64; 2]; 4] {
        [
            [self.min[0], self.min[1]],
            [self.max[0], self.min[1]],
            [self.max[0], self.max[1]],
            [self.min[0], self.max[1]],
        ]
    }

    /// Parameter interval `[t_in, t_out]` (with `t >= 0`) where the ray
    /// `origin + t * dir` is inside the box, if any.
    pub fn ray_interval(&self, origin: [f64; 2], dir: [f64; 2]) -> Option<(f64, f64)> {
        let mut t0 = 0.0_f64;
        let mut t1 = f64::INFINITY;
        for k in 0..2 {
            if dir[k].abs() < 1e-300 {
                if origin[k] < self.min[k] || origin[k] > self.max[k] {
                    return None;
                }
            } else {
                let inv = 1.0 / dir[k];
                let mut a = (self.min[k] - origin[k]) * inv;
                let mut b = (self.max[k] - origin[k]) * inv;
                if a > b {
                    std::mem::swap(&mut a, &mut b);
                }
                t0 = t0.max(a);
                t1 = t1.min(b);
                if t0 > t1 {
                    return None;
                }
            }
        }
        Some((t0, t1))
    }

    /// Minimum distance between the segment `p -> q` and the box.
    pub fn segment_distance(&self, p: [f64; 2], q: [f64; 2]) -> f64 {
        let d = [q[0] - p[0], q[1] - p[1]];
        if let Some((t0, _)) = self.ray_interval(p, d) {
            if t0 <= 1.0 {
                return 0.0;
            }
        }
        // disjoint: the minimum is attained at a segment endpoint or at a box corner
        let mut best = self.distance_to_point(&p).min(self.distance_to_point(&q));
        let len2 = d[0] * d[0] + d[1] * d[1];
        for c in self.corners() {
            let t = if len2 > 0.0 {
                (((c[0] - p[0]) * d[0] + (c[1] - p[1]) * d[1]) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let x = [p[0] + t * d[0] - c[0], p[1] + t * d[1] - c[1]];
            best = best.min((x[0] * x[0] + x[1] * x[1]).sqrt());
        }
        best
    }
}

impl serde::Serialize for Aabb2 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.min[0], self.min[1], self.max[0], self.max[1]].serialize(s)
    }
}

/// Deserialized from `[min_x, min_y, max_x, max_y]`, validated.
impl<'de> serde::Deserialize<'de> for Aabb2 {
    fn deserialize<De: serde::Deserializer<'de>>(d: De) -> std::result::Result<Self, De::Error> {
        let v = <[f64; 4]>::deserialize(d)?;
        Aabb2::new([v[0], v[1]], [v[2], v[3]]).map_err(serde::de::Error::custom)
    }
}

/// Finite union of closed boxes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoxUnion<const D: usize> {
    pub boxes: Vec<Aabb<D>>,
}

pub type BoxUnion2 = BoxUnion<2>;

impl<const D: usize> BoxUnion<D> {
    pub fn new(boxes: Vec<Aabb<D>>) -> Self {
        Self { boxes }
    }

    pub fn empty() -> Self {
        Self { boxes: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    /// Inflate every member by `q`; collapsed members drop out.
    pub fn inflate(&self, q: f64) -> Self {
        Self {
            boxes: self.boxes.iter().filter_map(|b| b.inflate(q)).collect(),
        }
    }

    pub fn contains_point(&self, p: &[f64; D]) -> bool {
        self.boxes.iter().any(|b| b.contains_point(p))
    }

    pub fn bounding_box(&self) -> Option<Aabb<D>> {
        let mut it = self.boxes.iter();
        let first = *it.next()?;
        Some(it.fold(first, |acc, b| acc.hull(b)))
    }
}

impl serde::Serialize for BoxUnion2 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.boxes.serialize(s)
    }
}

impl<'de> serde::Deserialize<'de> for BoxUnion2 {
    fn deserialize<De: serde::Deserializer<'de>>(d: De) -> std::result::Result<Self, De::Error> {
        Ok(Self::new(Vec::<Aabb2>::deserialize(d)?))
    }
}

impl<const D: usize> FromIterator<Aabb<D>> for BoxUnion<D> {
    fn from_iter<I: IntoIterator<Item = Aabb<D>>>(iter: I) -> Self {
        Self {
            boxes: iter.into_iter().collect(),
        }
    }
}

/// One elementary piece along an axis: a single coordinate, or the open
/// interval between two consecutive coordinates.
#[derive(Debug, Clone, Copy)]
enum Piece {
    Point(usize),
    Open(usize),
}

/// Coordinate-compressed representation of a union of boxes.
///
/// Each axis is split at the sorted, deduplicated box coordinates. The pieces
/// of the induced grid are open intervals between consecutive coordinates and,
/// when `with_points` is set for the axis, the coordinates themselves. The
/// bitmask marks pieces inside the union.
#[derive(Debug, Clone)]
pub struct RectRegion<const D: usize> {
    axes: [Vec<f64>; D],
    pieces: [Vec<Piece>; D],
    occupancy: Vec<bool>,
}

impl<const D: usize> RectRegion<D> {
    /// Axes of the compressed grid (strictly increasing).
    pub fn axes(&self) -> &[Vec<f64>; D] {
        &self.axes
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupancy
    }

    fn with_axes(axes: [Vec<f64>; D], with_points: [bool; D]) -> Self {
        let pieces: [Vec<Piece>; D] = std::array::from_fn(|k| {
            let n = axes[k].len();
            let mut p = Vec::with_capacity(2 * n);
            for i in 0..n {
                if with_points[k] {
                    p.push(Piece::Point(i));
                }
                if i + 1 < n {
                    p.push(Piece::Open(i));
                }
            }
            p
        });
        let size = pieces.iter().map(Vec::len).product();
        Self {
            axes,
            pieces,
            occupancy: vec![false; size],
        }
    }

    /// Compressed region of `union` on its own coordinate grid.
    pub fn from_union(union: &BoxUnion<D>) -> Self {
        let axes = compressed_axes(&[union]);
        let degenerate = degenerate_axes(union);
        let mut r = Self::with_axes(axes, degenerate);
        r.fill(union);
        r
    }

    fn piece_range(&self, k: usize, lo: f64, hi: f64) -> (usize, usize) {
        // pieces on axis k covered by the closed interval [lo, hi]
        let ax = &self.axes[k];
        let i_lo = ax.partition_point(|&c| c < lo);
        let i_hi = ax.partition_point(|&c| c <= hi);
        // pieces whose extent lies within [ax[i_lo], ax[i_hi - 1]]
        let ps = &self.pieces[k];
        let first = ps.partition_point(|p| match *p {
            Piece::Point(i) => i < i_lo,
            Piece::Open(i) => i < i_lo,
        });
        let last = ps.partition_point(|p| match *p {
            Piece::Point(i) => i < i_hi,
            Piece::Open(i) => i + 1 < i_hi,
        });
        (first, last)
    }

    fn fill(&mut self, union: &BoxUnion<D>) {
        let strides = self.strides();
        for b in &union.boxes {
            let mut ranges = [(0usize, 0usize); D];
            let mut empty = false;
            for (k, r) in ranges.iter_mut().enumerate() {
                *r = self.piece_range(k, b.min[k], b.max[k]);
                if r.0 >= r.1 {
                    empty = true;
                }
            }
            if empty {
                continue;
            }
            let mut idx = ranges.map(|r| r.0);
            loop {
                let flat: usize = (0..D).map(|k| idx[k] * strides[k]).sum();
                self.occupancy[flat] = true;
                let mut k = 0;
                loop {
                    idx[k] += 1;
                    if idx[k] < ranges[k].1 {
                        break;
                    }
                    idx[k] = ranges[k].0;
                    k += 1;
                    if k == D {
                        break;
                    }
                }
                if k == D {
                    break;
                }
            }
        }
    }

    fn strides(&self) -> [usize; D] {
        let mut s = [1usize; D];
        for k in (0..D.saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.pieces[k + 1].len();
        }
        s
    }
}

fn compressed_axes<const D: usize>(unions: &[&BoxUnion<D>]) -> [Vec<f64>; D] {
    std::array::from_fn(|k| {
        let mut v: Vec<f64> = unions
            .iter()
            .flat_map(|u| u.boxes.iter().flat_map(move |b| [b.min[k], b.max[k]]))
            .collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    })
}

fn degenerate_axes<const D: usize>(union: &BoxUnion<D>) -> [bool; D] {
    std::array::from_fn(|k| union.boxes.iter().any(|b| b.min[k] == b.max[k]))
}

/// `true` iff every point of `a` lies in the union `b`.
///
/// Decided exactly on the joint compressed grid. Single coordinates are only
/// examined on axes where some member of `a` has zero width; otherwise the
/// closedness of `b` makes the open pieces sufficient.
pub fn contains<const D: usize>(a: &BoxUnion<D>, b: &BoxUnion<D>) -> bool {
    if a.is_empty() {
        return true;
    }
    if b.is_empty() {
        return false;
    }
    // fast path: some member of b covers each member of a on its own
    if a.boxes.iter().all(|ab| b.boxes.iter().any(|bb| bb.contains_box(ab))) {
        return true;
    }
    let axes = compressed_axes(&[a, b]);
    let pts = degenerate_axes(a);
    let mut ra = RectRegion::with_axes(axes.clone(), pts);
    ra.fill(a);
    let mut rb = RectRegion::with_axes(axes, pts);
    rb.fill(b);
    ra.occupancy
        .iter()
        .zip(&rb.occupancy)
        .all(|(&ia, &ib)| !ia || ib)
}

/// Default bisection tolerance for [`minimal_inflation`], meters.
pub const DEFAULT_INFLATION_TOL: f64 = 1e-4;

/// Default search bracket `[-D/2, D]` for a room with diagonal `D`.
pub fn default_bracket(room_diagonal: f64) -> (f64, f64) {
    (-0.5 * room_diagonal, room_diagonal)
}

/// Smallest uniform inflation `q` in `bracket` (to `tol`) with
/// `contains(a, b.inflate(q))`.
///
/// Returns `bracket.0` when even the deflation floor suffices and `+inf` when
/// `bracket.1` does not. The sign is exact: the result is `<= 0` iff
/// `contains(a, b)`.
pub fn minimal_inflation<const D: usize>(
    a: &BoxUnion<D>,
    b: &BoxUnion<D>,
    bracket: (f64, f64),
    tol: f64,
) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let (lo, hi) = bracket;
    if !(lo < hi) {
        return Err(Error::InvalidArgument(format!("empty bracket [{lo}, {hi}]")));
    }
    let covered = |q: f64| contains(a, &b.inflate(q));
    if lo < 0.0 && 0.0 < hi {
        if covered(0.0) {
            minimal_parameter(covered, (lo, 0.0), tol)
        } else {
            // covered(0) is false, so the bisection result is strictly positive
            minimal_parameter(covered, (0.0, hi), tol)
        }
    } else {
        minimal_parameter(covered, (lo, hi), tol)
    }
}

/// Exact measures of the set operations between two boxes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaOps {
    /// `|a \ b|`
    pub a_minus_b: f64,
    /// `|b \ a|`
    pub b_minus_a: f64,
    pub union: f64,
    pub intersection: f64,
    /// Measure of the joint bounding box.
    pub hull: f64,
}

pub fn area_ops<const D: usize>(a: &Aabb<D>, b: &Aabb<D>) -> AreaOps {
    let va = a.volume();
    let vb = b.volume();
    let inter = a.intersection(b).map_or(0.0, |i| i.volume());
    AreaOps {
        a_minus_b: va - inter,
        b_minus_a: vb - inter,
        union: va + vb - inter,
        intersection: inter,
        hull: a.hull(b).volume(),
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb2, BoxUnion2};

/// Uniform square grid covering a room, padded outward to whole cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: [f64; 2],
    pub cell: f64,
    pub nx: usize,
    pub ny: usize,
}

const SNAP: f64 = 1e-9;

fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < SNAP {
        r
    } else {
        v
    }
}

impl GridSpec {
    pub fn for_room(room: &Aabb2, cell: f64) -> Result<Self> {
        if !(cell > 0.0 && cell.is_finite()) {
            return Err(Error::Config(format!("cell size must be positive, got {cell}")));
        }
        let e = room.extent();
        let n = |len: f64| (snap(len / cell).ceil() as usize).max(1);
        Ok(Self {
            origin: room.min,
            cell,
            nx: n(e[0]),
            ny: n(e[1]),
        })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    pub fn coords(&self, i: usize) -> (usize, usize) {
        (i % self.nx, i / self.nx)
    }

    pub fn cell_rect(&self, ix: usize, iy: usize) -> Aabb2 {
        let x0 = self.origin[0] + ix as f64 * self.cell;
        let y0 = self.origin[1] + iy as f64 * self.cell;
        Aabb2 {
            min: [x0, y0],
            max: [x0 + self.cell, y0 + self.cell],
        }
    }

    pub fn cell_center(&self, i: usize) -> [f64; 2] {
        let (ix, iy) = self.coords(i);
        [
            self.origin[0] + (ix as f64 + 0.5) * self.cell,
            self.origin[1] + (iy as f64 + 0.5) * self.cell,
        ]
    }

    pub fn bounds(&self) -> Aabb2 {
        Aabb2 {
            min: self.origin,
            max: [
                self.origin[0] + self.nx as f64 * self.cell,
                self.origin[1] + self.ny as f64 * self.cell,
            ],
        }
    }

    /// Cell containing `p`, if inside the grid.
    pub fn locate(&self, p: [f64; 2]) -> Option<(usize, usize)> {
        let fx = (p[0] - self.origin[0]) / self.cell;
        let fy = (p[1] - self.origin[1]) / self.cell;
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let (ix, iy) = (fx.floor() as usize, fy.floor() as usize);
        (ix < self.nx && iy < self.ny).then_some((ix, iy))
    }

    /// Inclusive index range of cells along `axis` whose closed extent meets
    /// `[lo, hi]`, clamped to the grid; `None` when disjoint.
    pub(crate) fn touching_range(&self, axis: usize, lo: f64, hi: f64) -> Option<(usize, usize)> {
        let n = if axis == 0 { self.nx } else { self.ny } as i64;
        let a = snap((lo - self.origin[axis]) / self.cell).floor() as i64 - 1;
        let b = snap((hi - self.origin[axis]) / self.cell).floor() as i64;
        let (a, b) = (a.max(0), b.min(n - 1));
        (a <= b).then_some((a as usize, b as usize))
    }

    fn axis_range(&self, axis: usize, lo: f64, hi: f64, mode: RasterMode) -> Option<(usize, usize)> {
        let n = if axis == 0 { self.nx } else { self.ny } as i64;
        let a = snap((lo - self.origin[axis]) / self.cell);
        let b = snap((hi - self.origin[axis]) / self.cell);
        let (i0, i1) = match mode {
            RasterMode::Outer => {
                if a == b {
                    // zero width: every cell touching the coordinate
                    if a == a.round() {
                        (a as i64 - 1, a as i64)
                    } else {
                        (a.floor() as i64, a.floor() as i64)
                    }
                } else {
                    (a.floor() as i64, b.ceil() as i64 - 1)
                }
            }
            RasterMode::Inner => (a.ceil() as i64, b.floor() as i64 - 1),
        };
        let (i0, i1) = (i0.max(0), i1.min(n - 1));
        (i0 <= i1).then_some((i0 as usize, i1 as usize))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RasterMode {
    /// Every cell sharing positive area with the region (degenerate boxes
    /// take the cells they touch): a superset of the region.
    Outer,
    /// Cells fully inside a single box: a subset of the region.
    Inner,
}

/// Cell mask of a box union under the given discipline.
pub fn rasterize_conservative(boxes: &BoxUnion2, grid: &GridSpec, mode: RasterMode) -> Vec<bool> {
    let mut mask = vec![false; grid.len()];
    for b in &boxes.boxes {
        let (Some((x0, x1)), Some((y0, y1))) = (
            grid.axis_range(0, b.min[0], b.max[0], mode),
            grid.axis_range(1, b.min[1], b.max[1], mode),
        ) else {
            continue;
        };
        for iy in y0..=y1 {
            for ix in x0..=x1 {
                mask[grid.index(ix, iy)] = true;
            }
        }
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::for_room(&Aabb2::new([0.0, 0.0], [1.0, 1.0]).unwrap(), 0.1).unwrap()
    }

    fn count(m: &[bool]) -> usize {
        m.iter().filter(|&&b| b).count()
    }

    #[test]
    fn padding_and_size() {
        let g = GridSpec::for_room(&Aabb2::new([0.0, 0.0], [8.0, 8.0]).unwrap(), 0.05).unwrap();
        assert_eq!((g.nx, g.ny), (160, 160));
        let g = GridSpec::for_room(&Aabb2::new([0.0, 0.0], [1.0, 0.33]).unwrap(), 0.1).unwrap();
        assert_eq!((g.nx, g.ny), (10, 4));
        assert!(g.bounds().max[1] >= 0.33);
    }

    #[test]
    fn aligned_box_rasterizes_exactly() {
        let g = grid();
        let b = BoxUnion2::new(vec![Aabb2::new([0.2, 0.3], [0.5, 0.4]).unwrap()]);
        let outer = rasterize_conservative(&b, &g, RasterMode::Outer);
        let inner = rasterize_conservative(&b, &g, RasterMode::Inner);
        assert_eq!(outer, inner);
        assert_eq!(count(&outer), 3);
    }

    #[test]
    fn half_cell_box() {
        let g = grid();
        let b = BoxUnion2::new(vec![Aabb2::new([0.2, 0.2], [0.25, 0.3]).unwrap()]);
        assert_eq!(count(&rasterize_conservative(&b, &g, RasterMode::Outer)), 1);
        assert_eq!(count(&rasterize_conservative(&b, &g, RasterMode::Inner)), 0);
    }

    #[test]
    fn degenerate_box_on_grid_line_touches_both_sides() {
        let g = grid();
        let b = BoxUnion2::new(vec![Aabb2::new([0.3, 0.35], [0.3, 0.35]).unwrap()]);
        assert_eq!(count(&rasterize_conservative(&b, &g, RasterMode::Outer)), 2);
    }
}

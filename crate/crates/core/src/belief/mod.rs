//! Set-valued occupancy filter on a conservative grid.
//!
//! Occupied space starts as everything outside a known-free start disc and
//! is intersected with each new prediction, but only over the cells the
//! sensor actually saw. Free space grows by the sensed cells left
//! unoccupied. Occupied cells are rasterized outward and free cells inward,
//! and occlusion is tracked with an angular depth buffer that errs towards
//! hiding cells, so every approximation is conservative.

mod filter;
mod grid;

pub use filter::{compute_free, sensed_region, Belief, CellState, Disc, ObservationSummary, ViewGeometry};
pub use grid::{rasterize_conservative, GridSpec, RasterMode};

#[cfg(test)]
mod tests;

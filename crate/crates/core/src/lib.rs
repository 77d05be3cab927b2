//! Conformally calibrated perception for safe navigation in unknown rooms.
//!
//! A box detector's outputs are inflated by a margin calibrated over a suite
//! of random environments so that, with a chosen probability, the inflated
//! boxes cover every visible obstacle from every sampled state. A set-valued
//! occupancy filter and a braking-safe planner then navigate on the
//! resulting free space.

pub mod belief;
pub mod cli;
pub mod conformal;
mod error;
pub mod geometry;
pub mod loss;
pub mod perception;
pub mod planner;
pub mod seeds;
pub mod serde_inf;
pub mod sim;

pub use error::{Error, Result};

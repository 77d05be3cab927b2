//! Roadmap planning on the believed free space with a braking safety filter.
//!
//! Plans are shortest paths over a fixed sample roadmap whose nodes and
//! edges must lie in free space; when the goal is not yet reachable the
//! robot heads for the frontier sample minimizing cost-to-come plus
//! distance-to-goal. Every command is checked against the inevitable
//! collision set by requiring the straight braking envelope of the next
//! state to be free, with maximal braking as the fallback.

mod config;
mod navigator;
mod roadmap;
mod safety;
mod samples;

pub use config::PlannerConfig;
pub use navigator::{Navigator, PolicyOutput};
pub use roadmap::{edge_valid, plan, select_intermediate_goal, Plan, Roadmap, SearchCache, SearchTree, Searcher, TargetKind};
pub use safety::{braking_endpoint, ics_safe, stopping_distance};
pub use samples::{sample_configurations, SampleSet};

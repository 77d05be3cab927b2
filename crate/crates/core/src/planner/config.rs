use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub max_speed: f64,
    pub max_decel: f64,
    pub robot_radius: f64,
    /// Roadmap connection radius; `None` selects `2 sqrt(area / count)`.
    pub neighbor_radius: Option<f64>,
    pub replan_period: f64,
    /// Extra length added to the braking envelope, meters.
    pub braking_margin: f64,
    /// Extra radius of the braking envelope, meters.
    pub lateral_margin: f64,
    /// Extra clearance for roadmap nodes and edges, so that tracking errors
    /// do not push the braking envelope out of free space.
    pub plan_margin: f64,
    /// Pure-pursuit lookahead distance, meters.
    pub lookahead: f64,
    /// Samples within `robot_radius + frontier_margin` of an unobserved cell
    /// are frontier candidates.
    pub frontier_margin: f64,
    /// Frontier candidates closer than this (by path cost) are skipped so
    /// that the robot keeps moving and its view keeps changing.
    pub min_frontier_progress: f64,
    /// Samples within this fraction of the goal radius count as goal nodes.
    pub goal_fraction: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            max_speed: 0.8,
            max_decel: 1.5,
            robot_radius: 0.35,
            neighbor_radius: None,
            replan_period: 0.5,
            braking_margin: 0.05,
            lateral_margin: 0.01,
            plan_margin: 0.03,
            lookahead: 0.25,
            frontier_margin: 0.15,
            min_frontier_progress: 0.2,
            goal_fraction: 0.8,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            self.max_speed,
            self.max_decel,
            self.robot_radius,
            self.replan_period,
            self.lookahead,
        ];
        if pos.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Config("planner speeds, radii and periods must be positive".into()));
        }
        if let Some(r) = self.neighbor_radius {
            if !(r > 0.0) {
                return Err(Error::Config("neighbor radius must be positive".into()));
            }
        }
        let nonneg = [
            self.braking_margin,
            self.lateral_margin,
            self.plan_margin,
            self.frontier_margin,
            self.min_frontier_progress,
        ];
        if nonneg.iter().any(|v| !(*v >= 0.0)) || !(self.goal_fraction > 0.0 && self.goal_fraction <= 1.0) {
            return Err(Error::Config("planner margins must be non-negative".into()));
        }
        Ok(())
    }

    /// Clearance radius used for roadmap nodes and edges.
    pub fn plan_radius(&self) -> f64 {
        self.robot_radius + self.plan_margin.max(self.lateral_margin)
    }

    /// Clearance radius of the braking envelope.
    pub fn envelope_radius(&self) -> f64 {
        self.robot_radius + self.lateral_margin
    }

    pub fn connection_radius(&self, area: f64, count: usize) -> f64 {
        self.neighbor_radius
            .unwrap_or_else(|| 2.0 * (area / count.max(1) as f64).sqrt())
    }
}

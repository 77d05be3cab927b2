use serde::{Deserialize, Serialize};

use super::config::PlannerConfig;
use super::roadmap::{edge_valid, Plan, Roadmap, Searcher, TargetKind};
use super::safety::ics_safe;
use crate::belief::Belief;
use crate::error::Result;
use crate::sim::{step_dynamics, DynamicsModel, RobotState};

/// Distance from the end of a plan at which it counts as completed, meters.
const PLAN_DONE_TOL: f64 = 0.05;

/// Command chosen for one control step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyOutput {
    pub command: [f64; 2],
    /// The tracking command failed the safety check and was replaced by braking.
    pub braking: bool,
    /// The robot is at the end of its current plan (or has none).
    pub plan_done: bool,
}

fn scale_to(v: [f64; 2], max: f64) -> [f64; 2] {
    let n = v[0].hypot(v[1]);
    if n > max {
        [v[0] * max / n, v[1] * max / n]
    } else {
        v
    }
}

/// Receding-horizon controller: replans on the roadmap, tracks the plan
/// with a pure-pursuit velocity reference and filters every command
/// through the braking-envelope check.
pub struct Navigator<'a> {
    searcher: Searcher<'a>,
    config: &'a PlannerConfig,
    model: &'a DynamicsModel,
    goal: [f64; 2],
    goal_radius: f64,
    plan: Option<Plan>,
    cumulative: Vec<f64>,
    segment: usize,
    braking_clipped: usize,
    /// Frontier samples already reached; not chosen again.
    visited: Vec<bool>,
}

impl<'a> Navigator<'a> {
    pub fn new(map: &'a Roadmap, config: &'a PlannerConfig, model: &'a DynamicsModel, goal: [f64; 2], goal_radius: f64) -> Self {
        Self {
            searcher: Searcher::new(map, config),
            config,
            model,
            goal,
            goal_radius,
            plan: None,
            cumulative: Vec::new(),
            segment: 0,
            braking_clipped: 0,
            visited: vec![false; map.len()],
        }
    }

    pub fn plan(&self) -> Option<&Plan> {
        self.plan.as_ref()
    }

    /// Number of braking commands that had to be scaled down to the speed
    /// limit (expected to stay zero).
    pub fn braking_clipped(&self) -> usize {
        self.braking_clipped
    }

    pub fn replan(&mut self, state: &RobotState, belief: &Belief) -> Result<&Plan> {
        let keep = self
            .plan
            .as_ref()
            .filter(|p| p.kind == TargetKind::Intermediate)
            .and_then(|p| p.target_node)
            .filter(|&n| !self.visited[n]);
        let plan = self
            .searcher
            .plan(belief, state.position(), self.goal, self.goal_radius, keep, &self.visited)?;
        self.cumulative = std::iter::once(0.0)
            .chain(plan.waypoints.windows(2).scan(0.0, |acc, w| {
                *acc += (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
                Some(*acc)
            }))
            .collect();
        self.segment = 0;
        Ok(self.plan.insert(plan))
    }

    /// Maximal braking along the current velocity.
    pub fn brake(&mut self, state: &RobotState) -> [f64; 2] {
        let u = self.model.braking_command(state, self.config.max_decel);
        let n = u[0].hypot(u[1]);
        if n > self.config.max_speed {
            self.braking_clipped += 1;
            return scale_to(u, self.config.max_speed);
        }
        u
    }

    /// Arc length of the closest point on the plan near the current segment.
    fn progress(&mut self, plan: &Plan, p: [f64; 2]) -> f64 {
        let w = &plan.waypoints;
        let last = w.len() - 1;
        let mut best = (f64::INFINITY, self.segment, 0.0);
        for k in self.segment..(self.segment + 4).min(last) {
            let (a, b) = (w[k], w[k + 1]);
            let d = [b[0] - a[0], b[1] - a[1]];
            let len2 = d[0] * d[0] + d[1] * d[1];
            let t = if len2 > 0.0 {
                (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let q = [a[0] + t * d[0], a[1] + t * d[1]];
            let dist = (p[0] - q[0]).hypot(p[1] - q[1]);
            if dist < best.0 - 1e-12 {
                best = (dist, k, self.cumulative[k] + t * len2.sqrt());
            }
        }
        if best.0.is_finite() {
            self.segment = best.1;
            best.2
        } else {
            *self.cumulative.last().unwrap_or(&0.0)
        }
    }

    fn point_at(&self, plan: &Plan, s: f64) -> [f64; 2] {
        let w = &plan.waypoints;
        let k = self.cumulative.partition_point(|&c| c <= s).clamp(1, w.len() - 1) - 1;
        let len = self.cumulative[k + 1] - self.cumulative[k];
        let t = if len > 0.0 { ((s - self.cumulative[k]) / len).clamp(0.0, 1.0) } else { 1.0 };
        [w[k][0] + t * (w[k + 1][0] - w[k][0]), w[k][1] + t * (w[k + 1][1] - w[k][1])]
    }

    /// Tracking command before the safety filter.
    fn tracking_command(&mut self, state: &RobotState) -> Option<[f64; 2]> {
        let plan = self.plan.clone().filter(|p| p.feasible && p.waypoints.len() >= 2)?;
        let p = state.position();
        let s = self.progress(&plan, p);
        let total = *self.cumulative.last()?;
        let remaining = total - s;
        if remaining < PLAN_DONE_TOL {
            return None;
        }
        let target = self.point_at(&plan, (s + self.config.lookahead).min(total));
        let d = [target[0] - p[0], target[1] - p[1]];
        let dn = d[0].hypot(d[1]);
        if dn < 1e-9 {
            return None;
        }
        // decelerate into the end of the plan at half the braking authority
        let speed = self
            .config
            .max_speed
            .min((self.config.max_decel * (remaining - 0.5 * PLAN_DONE_TOL).max(0.0)).sqrt());
        let want = [speed * d[0] / dn, speed * d[1] / dn];
        let dv = scale_to([want[0] - state.vx, want[1] - state.vy], self.config.max_decel * self.model.dt());
        let u = self.model.command_for_velocity(state, [state.vx + dv[0], state.vy + dv[1]]);
        Some(scale_to(u, self.config.max_speed))
    }

    /// Safe command for the current step.
    pub fn step_policy(&mut self, state: &RobotState, belief: &Belief) -> PolicyOutput {
        let Some(u) = self.tracking_command(state) else {
            if let Some(Plan {
                kind: TargetKind::Intermediate,
                target_node: Some(n),
                ..
            }) = self.plan
            {
                self.visited[n] = true;
            }
            return PolicyOutput {
                command: self.brake(state),
                braking: false,
                plan_done: true,
            };
        };
        let next = step_dynamics(state, u, self.model, None);
        let safe = edge_valid(state.position(), next.position(), belief, self.config.robot_radius)
            && ics_safe(&next, belief, self.config);
        if safe {
            PolicyOutput {
                command: u,
                braking: false,
                plan_done: false,
            }
        } else {
            PolicyOutput {
                command: self.brake(state),
                braking: true,
                plan_done: false,
            }
        }
    }

    pub fn target_kind(&self) -> Option<TargetKind> {
        self.plan.as_ref().map(|p| p.kind)
    }
}

use super::config::PlannerConfig;
use super::roadmap::edge_valid;
use crate::belief::Belief;
use crate::sim::RobotState;

/// Distance covered while braking at constant deceleration from `speed`.
pub fn stopping_distance(speed: f64, max_decel: f64) -> f64 {
    speed * speed / (2.0 * max_decel)
}

/// End point of the straight braking envelope from `state`.
pub fn braking_endpoint(state: &RobotState, config: &PlannerConfig) -> [f64; 2] {
    let s = state.speed();
    let p = state.position();
    if s == 0.0 {
        return p;
    }
    let d = stopping_distance(s, config.max_decel) + config.braking_margin;
    [p[0] + d * state.vx / s, p[1] + d * state.vy / s]
}

/// `true` iff the robot disc swept along the braking envelope stays in free
/// space, so stopping remains possible from `state`.
pub fn ics_safe(state: &RobotState, belief: &Belief, config: &PlannerConfig) -> bool {
    edge_valid(
        state.position(),
        braking_endpoint(state, config),
        belief,
        config.robot_radius + config.lateral_margin,
    )
}

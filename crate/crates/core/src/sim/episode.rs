//! Closed-loop navigation episodes.

use serde::{Deserialize, Serialize};

use super::dynamics::{step_dynamics, DynamicsModel, RobotState};
use super::env::Environment;
use crate::belief::{Belief, Disc, GridSpec};
use crate::error::{Error, Result};
use crate::perception::{apply_calibration, misdetection_cost, NoiseConfig, Pose, SensorConfig, SyntheticDetector};
use crate::planner::{Navigator, PlannerConfig, Roadmap};

/// Source of detections during an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerceptionMode {
    Synthetic(NoiseConfig),
    /// Visible ground truth reported exactly.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub sensor: SensorConfig,
    pub planner: PlannerConfig,
    pub dynamics: DynamicsModel,
    pub grid_cell: f64,
    pub timeout_s: f64,
    pub perception: PerceptionMode,
    pub record_trajectory: bool,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            sensor: SensorConfig::default(),
            planner: PlannerConfig::default(),
            dynamics: DynamicsModel::default(),
            grid_cell: 0.05,
            timeout_s: 140.0,
            perception: PerceptionMode::Synthetic(NoiseConfig::default()),
            record_trajectory: false,
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<()> {
        self.sensor.validate()?;
        self.planner.validate()?;
        if let PerceptionMode::Synthetic(n) = &self.perception {
            n.validate()?;
        }
        if !(self.timeout_s > 0.0 && self.grid_cell > 0.0) {
            return Err(Error::Config("timeout and grid cell must be positive".into()));
        }
        let period = self.planner.replan_period / self.dynamics.dt();
        if period < 1.0 - 1e-9 {
            return Err(Error::Config("replan period shorter than the dynamics step".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub collision: bool,
    /// Believed free space overlapped a ground-truth box at some step.
    pub misdetection: bool,
    pub goal_reached: bool,
    pub timed_out: bool,
    /// Ended early because the robot stood still with nothing left to learn.
    pub stalled: bool,
    /// The planner could not start from the robot's position.
    pub aborted: bool,
    pub path_length: f64,
    pub wall_time_steps: usize,
    /// Sensing steps whose calibrated detections missed visible ground truth.
    pub misdetection_cost_steps: usize,
    pub sensing_steps: usize,
    pub braking_steps: usize,
    pub braking_clipped: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub state: RobotState,
    pub heading: f64,
}

#[derive(Debug, Clone, Default)]
pub struct EpisodeLog {
    pub trajectory: Vec<TrajectoryPoint>,
    pub final_belief: Option<Belief>,
    pub last_plan: Vec<[f64; 2]>,
}

/// Consecutive motionless sensing steps without belief change before the
/// episode is declared stalled.
const STALL_LIMIT: usize = 3;

/// Run one episode with detections inflated by `q_hat`.
pub fn run_episode(env: &Environment, q_hat: f64, config: &EpisodeConfig, map: &Roadmap) -> Result<(EpisodeMetrics, EpisodeLog)> {
    config.validate()?;
    let dt = config.dynamics.dt();
    let planner = &config.planner;
    let replan_every = ((planner.replan_period / dt) + 1e-9).floor() as usize;
    let max_steps = (config.timeout_s / dt).round() as usize;
    let grid = GridSpec::for_room(&env.room, config.grid_cell)?;
    let mut belief = Belief::with_known_free(
        grid,
        Disc {
            center: env.start,
            radius: env.clearance,
        },
    );
    let noise = match &config.perception {
        PerceptionMode::Synthetic(n) => n.clone(),
        PerceptionMode::Exact => NoiseConfig::exact(),
    };
    let mut detector = SyntheticDetector::new(env, config.sensor, noise);
    let mut nav = Navigator::new(map, planner, &config.dynamics, env.goal, env.goal_radius);
    let bounds = env.room;

    let mut m = EpisodeMetrics::default();
    let mut log = EpisodeLog::default();
    let mut state = RobotState::at_rest(env.start);
    let mut heading = env.start_heading;
    let mut since_sense = replan_every;
    let mut plan_done = false;
    let mut idle = 0;
    let record = |log: &mut EpisodeLog, t: f64, s: &RobotState, h: f64| {
        if config.record_trajectory {
            log.trajectory.push(TrajectoryPoint { t, state: *s, heading: h });
        }
    };
    record(&mut log, 0.0, &state, heading);

    for step in 0..max_steps {
        let p = state.position();
        if (p[0] - env.goal[0]).hypot(p[1] - env.goal[1]) <= env.goal_radius {
            m.goal_reached = true;
            break;
        }
        if since_sense >= replan_every || (plan_done && since_sense >= 1) {
            let pose = Pose { position: p, heading };
            let frame = detector.detect(&pose);
            let calibrated = apply_calibration(&frame, q_hat, &env.room);
            m.sensing_steps += 1;
            m.misdetection_cost_steps += usize::from(misdetection_cost(env, &pose, &config.sensor, &calibrated));
            let summary = belief.observe(&pose, &config.sensor, &calibrated)?;
            if !m.misdetection && belief.free_overlaps(&env.obstacles) {
                m.misdetection = true;
            }
            let plan = match nav.replan(&state, &belief) {
                Ok(plan) => plan,
                Err(Error::StartNotFree { .. }) => {
                    m.aborted = true;
                    break;
                }
                Err(e) => return Err(e),
            };
            let learned = summary.cleared + summary.newly_free > 0;
            if state.speed() < 1e-3 && !learned && (!plan.feasible || plan_done) {
                idle += 1;
            } else {
                idle = 0;
            }
            if idle >= STALL_LIMIT {
                m.stalled = true;
                break;
            }
            since_sense = 0;
        }
        let out = nav.step_policy(&state, &belief);
        plan_done = out.plan_done;
        m.braking_steps += usize::from(out.braking);
        let next = step_dynamics(&state, out.command, &config.dynamics, Some(&bounds));
        let q = next.position();
        if env.obstacles.boxes.iter().any(|b| b.segment_distance(p, q) < planner.robot_radius) {
            m.collision = true;
        }
        m.path_length += (q[0] - p[0]).hypot(q[1] - p[1]);
        if next.speed() > 0.1 {
            heading = next.vy.atan2(next.vx);
        }
        state = next;
        since_sense += 1;
        m.wall_time_steps = step + 1;
        record(&mut log, (step + 1) as f64 * dt, &state, heading);
        if m.collision {
            break;
        }
    }
    if !m.goal_reached && !m.collision {
        let p = state.position();
        m.goal_reached = (p[0] - env.goal[0]).hypot(p[1] - env.goal[1]) <= env.goal_radius;
    }
    m.timed_out = !m.goal_reached && !m.collision && !m.aborted && !m.stalled;
    m.braking_clipped = nav.braking_clipped();
    if config.record_trajectory {
        log.final_belief = Some(belief);
        log.last_plan = nav.plan().map(|p| p.waypoints.clone()).unwrap_or_default();
    }
    Ok((m, log))
}

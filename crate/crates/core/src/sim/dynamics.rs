//! Linear double-integrator-like plant identified for the robot, discretized
//! by zero-order hold.

use nalgebra::{Matrix2, Matrix4, Matrix4x2, SMatrix, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Aabb2;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RobotState {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
}

impl RobotState {
    pub fn at_rest(p: [f64; 2]) -> Self {
        Self {
            x: p[0],
            y: p[1],
            vx: 0.0,
            vy: 0.0,
        }
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn velocity(&self) -> [f64; 2] {
        [self.vx, self.vy]
    }

    pub fn speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }

    fn vector(&self) -> Vector4<f64> {
        Vector4::new(self.x, self.y, self.vx, self.vy)
    }

    fn from_vector(v: &Vector4<f64>) -> Self {
        Self {
            x: v[0],
            y: v[1],
            vx: v[2],
            vy: v[3],
        }
    }
}

/// Continuous-time parameters as stored in config files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicsParams {
    pub a: [[f64; 4]; 4],
    pub b: [[f64; 2]; 4],
    pub dt: f64,
}

/// `ẋ = A x + B u` with its exact zero-order-hold discretization over `dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DynamicsParams", into = "DynamicsParams")]
pub struct DynamicsModel {
    params: DynamicsParams,
    ad: Matrix4<f64>,
    bd: Matrix4x2<f64>,
    /// Inverse of the velocity rows of `bd`, for exact velocity targeting.
    bd_vel_inv: Matrix2<f64>,
}

/// Velocity block of the identified plant.
pub const IDENTIFIED_A22: [[f64; 2]; 2] = [[-2.5170, 0.1353], [-0.5197, -3.9680]];
/// Input gains of the identified plant.
pub const IDENTIFIED_B2: [[f64; 2]; 2] = [[2.3350, 0.0], [0.0, 4.6510]];

impl Default for DynamicsModel {
    fn default() -> Self {
        Self::identified(0.05).expect("identified plant discretizes")
    }
}

impl TryFrom<DynamicsParams> for DynamicsModel {
    type Error = Error;

    fn try_from(p: DynamicsParams) -> Result<Self> {
        Self::new(p.a, p.b, p.dt)
    }
}

impl From<DynamicsModel> for DynamicsParams {
    fn from(m: DynamicsModel) -> Self {
        m.params
    }
}

impl DynamicsModel {
    pub fn identified(dt: f64) -> Result<Self> {
        let mut a = [[0.0; 4]; 4];
        a[0][2] = 1.0;
        a[1][3] = 1.0;
        let mut b = [[0.0; 2]; 4];
        for i in 0..2 {
            for j in 0..2 {
                a[2 + i][2 + j] = IDENTIFIED_A22[i][j];
                b[2 + i][j] = IDENTIFIED_B2[i][j];
            }
        }
        Self::new(a, b, dt)
    }

    pub fn new(a: [[f64; 4]; 4], b: [[f64; 2]; 4], dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {dt}")));
        }
        if a.iter().flatten().chain(b.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::Config("dynamics matrices must be finite".into()));
        }
        // exp([[A, B], [0, 0]] dt) = [[Ad, Bd], [0, I]]
        let mut m = SMatrix::<f64, 6, 6>::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m[(i, j)] = a[i][j] * dt;
            }
            for j in 0..2 {
                m[(i, 4 + j)] = b[i][j] * dt;
            }
        }
        let e = m.exp();
        let ad = e.fixed_view::<4, 4>(0, 0).into_owned();
        let bd = e.fixed_view::<4, 2>(0, 4).into_owned();
        let bd_vel = bd.fixed_view::<2, 2>(2, 0).into_owned();
        let bd_vel_inv = bd_vel
            .try_inverse()
            .ok_or_else(|| Error::Config("input does not act on both velocity components".into()))?;
        Ok(Self {
            params: DynamicsParams { a, b, dt },
            ad,
            bd,
            bd_vel_inv,
        })
    }

    pub fn dt(&self) -> f64 {
        self.params.dt
    }

    pub fn params(&self) -> &DynamicsParams {
        &self.params
    }

    pub fn discrete(&self) -> (&Matrix4<f64>, &Matrix4x2<f64>) {
        (&self.ad, &self.bd)
    }

    /// Velocity reached under a constant command: `-A22⁻¹ B2 u`.
    pub fn steady_state_velocity(&self, u: [f64; 2]) -> Option<[f64; 2]> {
        let p = &self.params;
        let a22 = Matrix2::new(p.a[2][2], p.a[2][3], p.a[3][2], p.a[3][3]);
        let b2 = Matrix2::new(p.b[2][0], p.b[2][1], p.b[3][0], p.b[3][1]);
        let v = -a22.try_inverse()? * b2 * Vector2::new(u[0], u[1]);
        Some([v[0], v[1]])
    }

    /// Command that makes the next velocity exactly `target`.
    pub fn command_for_velocity(&self, state: &RobotState, target: [f64; 2]) -> [f64; 2] {
        let next_free = self.ad * state.vector();
        let need = Vector2::new(target[0] - next_free[2], target[1] - next_free[3]);
        let u = self.bd_vel_inv * need;
        [u[0], u[1]]
    }

    /// Command reducing the speed by `decel * dt` along the current velocity
    /// direction (to zero if slower than that).
    pub fn braking_command(&self, state: &RobotState, decel: f64) -> [f64; 2] {
        let s = state.speed();
        if s == 0.0 {
            return self.command_for_velocity(state, [0.0, 0.0]);
        }
        let k = (1.0 - decel * self.dt() / s).max(0.0);
        self.command_for_velocity(state, [state.vx * k, state.vy * k])
    }
}

/// Advance one step under a constant command. With `bounds`, the position is
/// clipped to them and the velocity component into the wall is zeroed.
pub fn step_dynamics(state: &RobotState, command: [f64; 2], model: &DynamicsModel, bounds: Option<&Aabb2>) -> RobotState {
    let next = model.ad * state.vector() + model.bd * Vector2::new(command[0], command[1]);
    let mut s = RobotState::from_vector(&next);
    if let Some(b) = bounds {
        if s.x < b.min[0] || s.x > b.max[0] {
            s.x = s.x.clamp(b.min[0], b.max[0]);
            s.vx = 0.0;
        }
        if s.y < b.min[1] || s.y > b.max[1] {
            s.y = s.y.clamp(b.min[1], b.max[1]);
            s.vy = 0.0;
        }
    }
    s
}

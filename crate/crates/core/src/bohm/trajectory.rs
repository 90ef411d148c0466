use serde::{Deserialize, Serialize};

use super::velocity::{NodeProximity, VelocityField};
use super::BohmError;
use crate::ode::{point, rk4_step, step_times, Point};

/// Consecutive step halvings tried before a trajectory is halted at a node.
pub const MAX_HALVINGS: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stepper {
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub dt: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub stepper: Stepper,
}

impl TrajectoryConfig {
    pub fn new(dt: f64, t_start: f64, t_end: f64) -> Self {
        Self { dt, t_start, t_end, stepper: Stepper::Rk4 }
    }

    pub fn validate(&self) -> Result<(), BohmError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(BohmError::Config("dt must be positive"));
        }
        if !(self.t_end >= self.t_start) || !self.t_start.is_finite() || !self.t_end.is_finite() {
            return Err(BohmError::Config("t_end must not precede t_start"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TrajectoryStatus {
    Completed,
    HaltedAtNode { t: f64 },
}

/// Positions at the nominal step times. Positions are not wrapped back into
/// the box; the velocity lookup handles periodicity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub positions: Vec<Point>,
    pub dim: usize,
    pub status: TrajectoryStatus,
}

impl Trajectory {
    pub fn halted(&self) -> bool {
        matches!(self.status, TrajectoryStatus::HaltedAtNode { .. })
    }

    pub fn last(&self) -> &Point {
        self.positions.last().unwrap()
    }

    /// Position at step `k`, or `None` if the trajectory halted earlier.
    pub fn at_step(&self, k: usize) -> Option<&Point> {
        self.positions.get(k)
    }
}

fn advance(field: &VelocityField, t: f64, x: &Point, h: f64) -> Result<Point, NodeProximity> {
    let f = |s: f64, y: &Point| field.at(y, s);
    let mut last = None;
    for level in 0..=MAX_HALVINGS {
        let sub = 1u32 << level;
        let hs = h / sub as f64;
        let attempt = (0..sub).try_fold(*x, |y, j| rk4_step(&f, t + j as f64 * hs, &y, hs));
        match attempt {
            Ok(y) => return Ok(y),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap())
}

/// Integrates dQ/dt = v(Q, t) with RK4. When a stage lands in a node
/// neighbourhood the step is retried at h/2 and h/4 before halting.
pub fn integrate_trajectory(
    field: &VelocityField,
    x0: &[f64],
    cfg: &TrajectoryConfig,
) -> Result<Trajectory, BohmError> {
    cfg.validate()?;
    let dim = field.grid().dim();
    if x0.len() != dim {
        return Err(BohmError::Dimension { expected: dim, got: x0.len() });
    }
    if !field.grid().contains(x0) {
        return Err(BohmError::OutsideDomain);
    }
    if !field.covers(cfg.t_start, cfg.t_end) {
        return Err(BohmError::TimeRange { t_start: cfg.t_start, t_end: cfg.t_end });
    }
    let grid_times = step_times(cfg.t_start, cfg.t_end, cfg.dt);
    let mut x = point(x0);
    let mut times = Vec::with_capacity(grid_times.len());
    let mut positions = Vec::with_capacity(grid_times.len());
    times.push(cfg.t_start);
    positions.push(x);
    if field.at(&x, cfg.t_start).is_err() {
        return Ok(Trajectory { times, positions, dim, status: TrajectoryStatus::HaltedAtNode { t: cfg.t_start } });
    }
    for w in grid_times.windows(2) {
        match advance(field, w[0], &x, w[1] - w[0]) {
            Ok(y) => {
                x = y;
                times.push(w[1]);
                positions.push(x);
            }
            Err(_) => {
                return Ok(Trajectory { times, positions, dim, status: TrajectoryStatus::HaltedAtNode { t: w[0] } });
            }
        }
    }
    Ok(Trajectory { times, positions, dim, status: TrajectoryStatus::Completed })
}

//! Bohmian versus classical motion from a shared (R, S) as ħ shrinks.

use serde::{Deserialize, Serialize};

use super::action::ActionField;
use super::trajectory::newton_trajectory;
use super::ClassicalError;
use crate::bohm::{integrate_trajectory, TrajectoryConfig, VelocityField};
use crate::field::{Physics, WaveField, C64};
use crate::grid::SpatialGrid;
use crate::polar::DEFAULT_NODE_EPS;
use crate::schrodinger::{propagate, Potential, PropagatorConfig};

/// Shared preparation. R and S stay fixed across ħ; only the dynamics change.
#[derive(Debug, Clone)]
pub struct SemiclassicalSetup {
    pub grid: SpatialGrid,
    pub potential: Potential,
    pub mass: f64,
    /// R sampled on the grid (normalized together with the phase).
    pub amplitude: Vec<f64>,
    /// Initial action, evaluated at t = 0.
    pub action: ActionField,
    pub q0: Vec<f64>,
    pub t_end: f64,
    pub dt: f64,
    pub stride: usize,
    pub traj_dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemiclassicalPoint {
    pub hbar: f64,
    /// max over time of |Q_Bohm − Q_classical|.
    pub max_error: f64,
    pub halted: bool,
    pub propagation_warnings: usize,
}

pub fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

pub fn semiclassical_compare(
    setup: &SemiclassicalSetup,
    hbars: &[f64],
) -> Result<Vec<SemiclassicalPoint>, ClassicalError> {
    let m = setup.mass;
    let p0 = setup.action.gradient(&setup.q0, 0.0)?;
    let dim = setup.grid.dim();
    let classical = newton_trajectory(&setup.q0, &p0[..dim], &setup.potential, m, 0.0, setup.t_end, setup.traj_dt)?;
    let s: Vec<f64> = setup.grid.points().map(|q| setup.action.evaluate(&q[..dim], 0.0)).collect::<Result<_, _>>()?;
    hbars
        .iter()
        .map(|&hbar| {
            let phys = Physics::new(hbar, m);
            let values = setup.amplitude.iter().zip(&s).map(|(r, s)| C64::from_polar(*r, s / hbar)).collect();
            let psi = WaveField::new(setup.grid.clone(), values, 0.0)?.normalized()?;
            let steps = (setup.t_end / setup.dt).round() as usize;
            let cfg = PropagatorConfig::new(setup.dt, steps, phys).with_stride(setup.stride);
            let run = propagate(&psi, &setup.potential, &cfg)?;
            let field = VelocityField::from_snapshots(&run.snapshots, phys, DEFAULT_NODE_EPS)?;
            let traj =
                integrate_trajectory(&field, &setup.q0, &TrajectoryConfig::new(setup.traj_dt, 0.0, setup.t_end))?;
            let max_error = traj
                .positions
                .iter()
                .zip(&classical.positions)
                .map(|(a, b)| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt())
                .fold(0.0, f64::max);
            Ok(SemiclassicalPoint { hbar, max_error, halted: traj.halted(), propagation_warnings: run.warnings.len() })
        })
        .collect()
}

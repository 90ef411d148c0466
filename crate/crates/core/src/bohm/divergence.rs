//! Two guiding fields with equal ∇S at the same starting point.

use serde::{Deserialize, Serialize};

use super::trajectory::{integrate_trajectory, Trajectory, TrajectoryConfig};
use super::velocity::VelocityField;
use super::BohmError;

/// Largest allowed |∇S_A − ∇S_B| at the common start.
pub const PREPARATION_TOLERANCE: f64 = 1e-8;

/// A separation counts as real when it beats the integration tolerance by
/// this factor.
pub const SEPARATION_FACTOR: f64 = 100.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub times: Vec<f64>,
    pub separation: Vec<f64>,
    pub gradient_mismatch: f64,
    /// max |Q(dt) − Q(dt/2)| over both members and all recorded times.
    pub integration_tolerance: f64,
    pub final_separation: f64,
    pub a: Trajectory,
    pub b: Trajectory,
}

impl DivergenceReport {
    pub fn diverged(&self) -> bool {
        self.final_separation > SEPARATION_FACTOR * self.integration_tolerance.max(f64::EPSILON)
    }
}

fn dist(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn doubling_error(
    field: &VelocityField,
    q0: &[f64],
    cfg: &TrajectoryConfig,
    coarse: &Trajectory,
) -> Result<f64, BohmError> {
    let fine_cfg = TrajectoryConfig { dt: 0.5 * cfg.dt, ..*cfg };
    let fine = integrate_trajectory(field, q0, &fine_cfg)?;
    // every coarse step time is a fine step time except possibly a shortened last step
    let mut err: f64 = 0.0;
    for (k, (t, p)) in coarse.times.iter().zip(&coarse.positions).enumerate() {
        let j = if k + 1 == coarse.times.len() { fine.times.len() - 1 } else { 2 * k };
        if let (Some(ft), Some(fp)) = (fine.times.get(j), fine.positions.get(j)) {
            if (ft - t).abs() < 1e-9 * cfg.dt.max(1.0) {
                err = err.max(dist(p, fp));
            }
        }
    }
    Ok(err)
}

/// Integrates the same start point under both fields and reports their
/// separation over time.
pub fn divergence_experiment(
    a: &VelocityField,
    b: &VelocityField,
    q0: &[f64],
    cfg: &TrajectoryConfig,
) -> Result<DivergenceReport, BohmError> {
    let m = a.phys().mass;
    let va = a.at(q0, cfg.t_start)?;
    let vb = b.at(q0, cfg.t_start)?;
    let gradient_mismatch = m * dist(&va, &vb);
    if !(gradient_mismatch < PREPARATION_TOLERANCE) {
        return Err(BohmError::PreparationMismatch { mismatch: gradient_mismatch });
    }
    let ta = integrate_trajectory(a, q0, cfg)?;
    let tb = integrate_trajectory(b, q0, cfg)?;
    let tol = doubling_error(a, q0, cfg, &ta)?.max(doubling_error(b, q0, cfg, &tb)?);
    let n = ta.positions.len().min(tb.positions.len());
    let separation: Vec<f64> = (0..n).map(|k| dist(&ta.positions[k], &tb.positions[k])).collect();
    Ok(DivergenceReport {
        times: ta.times[..n].to_vec(),
        final_separation: *separation.last().unwrap(),
        separation,
        gradient_mismatch,
        integration_tolerance: tol,
        a: ta,
        b: tb,
    })
}

//! Recovering (S, R) along a realized trajectory from trajectory data alone.
//!
//! Along a Bohmian path C the action and amplitude obey
//!
//! ```text
//! dS/dt       = m v²/2 − V − U
//! d(ln R)/dt  = −½ ∇·v
//! ```
//!
//! with U = −(ħ²/2m) ∇²R/R. The transverse derivatives ∇·v and ∇²R cannot be
//! read off a single curve; here they come from a bundle of neighbouring
//! trajectories. Everything is one-dimensional.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bohm::{integrate_trajectory, BohmError, Trajectory, TrajectoryConfig, VelocityField};
use crate::field::{Physics, WaveField};
use crate::interp::Stencil;
use crate::polar::{to_polar, PolarError};
use crate::schrodinger::Potential;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReconstructionError {
    #[error("bundle half-width k = {k} is below 2; transverse second derivatives need neighbours on both sides")]
    InsufficientBundle { k: usize },
    #[error("bundle members {lower} and {upper} crossed at t = {t}")]
    BundleCrossing { t: f64, lower: usize, upper: usize },
    #[error("bundle member halted at a node")]
    MemberHalted,
    #[error("need at least five evenly spaced trajectory samples")]
    TooShort,
    #[error("boundary data has {got} amplitudes for {expected} members")]
    BoundaryData { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    Config(&'static str),
    #[error(transparent)]
    Bohm(#[from] BohmError),
    #[error(transparent)]
    Polar(#[from] PolarError),
}

/// A center trajectory plus `k` neighbours on each side, started at
/// offsets ±δ, ±2δ, … from the center.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Bundle {
    /// Ordered by starting offset; the center sits at index `k`.
    pub members: Vec<Trajectory>,
    pub delta: f64,
    pub k: usize,
}

impl Bundle {
    pub fn center(&self) -> &Trajectory {
        &self.members[self.k]
    }

    pub fn start_points(&self) -> Vec<f64> {
        self.members.iter().map(|m| m.positions[0][0]).collect()
    }
}

pub fn build_bundle(
    field: &VelocityField,
    center: f64,
    delta: f64,
    k: usize,
    cfg: &TrajectoryConfig,
) -> Result<Bundle, ReconstructionError> {
    if field.grid().dim() != 1 {
        return Err(ReconstructionError::Config("bundles are one-dimensional"));
    }
    if k > 0 && !(delta > 0.0) {
        return Err(ReconstructionError::Config("bundle spacing must be positive"));
    }
    let kk = k as isize;
    let members = (-kk..=kk)
        .into_par_iter()
        .map(|j| integrate_trajectory(field, &[center + j as f64 * delta], cfg))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Bundle { members, delta, k })
}

/// Time derivative of uniformly sampled data, fourth order throughout.
fn time_derivative(x: &[f64], h: f64) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let c = |o: [f64; 5], s: usize| (0..5).map(|j| o[j] * x[s + j]).sum::<f64>() / (12.0 * h);
            match i {
                0 => c([-25.0, 48.0, -36.0, 16.0, -3.0], 0),
                1 => c([-3.0, -10.0, 18.0, -6.0, 1.0], 0),
                _ if i + 2 >= n => {
                    let s = n - 5;
                    if i == n - 1 {
                        c([3.0, -16.0, 36.0, -48.0, 25.0], s)
                    } else {
                        c([-1.0, 6.0, -18.0, 10.0, 3.0], s)
                    }
                }
                _ => c([1.0, -8.0, 0.0, 8.0, -1.0], i - 2),
            }
        })
        .collect()
}

/// First and second derivative weights at `y` of the quadratic through
/// three nodes.
fn quadratic_weights(x: [f64; 3], y: f64) -> ([f64; 3], [f64; 3]) {
    let mut d1 = [0.0; 3];
    let mut d2 = [0.0; 3];
    for k in 0..3 {
        let (a, b) = ((k + 1) % 3, (k + 2) % 3);
        let denom = (x[k] - x[a]) * (x[k] - x[b]);
        d1[k] = ((y - x[a]) + (y - x[b])) / denom;
        d2[k] = 2.0 / denom;
    }
    (d1, d2)
}

/// Three-member stencil around `j` (shifted inward at the bundle edges).
fn stencil_start(j: usize, len: usize) -> usize {
    j.saturating_sub(1).min(len - 3)
}

/// ∫ f dt on uniform samples: trapezoid with the endpoint-derivative
/// correction, fourth order.
fn cumulative_integral(f: &[f64], h: f64) -> Vec<f64> {
    let df = time_derivative(f, h);
    let mut out = vec![0.0; f.len()];
    for i in 1..f.len() {
        out[i] = out[i - 1] + 0.5 * h * (f[i - 1] + f[i]) - h * h / 12.0 * (df[i] - df[i - 1]);
    }
    out
}

fn uniform_step(t: &[f64]) -> Result<f64, ReconstructionError> {
    if t.len() < 5 {
        return Err(ReconstructionError::TooShort);
    }
    let h = t[1] - t[0];
    if t.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h) {
        return Err(ReconstructionError::TooShort);
    }
    Ok(h)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub times: Vec<f64>,
    pub s: Vec<f64>,
    pub r: Vec<f64>,
    pub quantum_potential: Vec<f64>,
    pub divergence: Vec<f64>,
}

/// Integrates the along-C relations using only bundle positions and the
/// boundary data: S at the center start and R at every member start.
pub fn reconstruct_along_c(
    bundle: &Bundle,
    potential: &Potential,
    phys: Physics,
    s0: f64,
    r0: &[f64],
) -> Result<Reconstruction, ReconstructionError> {
    if bundle.k < 2 {
        return Err(ReconstructionError::InsufficientBundle { k: bundle.k });
    }
    let len = bundle.members.len();
    if r0.len() != len {
        return Err(ReconstructionError::BoundaryData { expected: len, got: r0.len() });
    }
    if bundle.members.iter().any(|m| m.halted()) {
        return Err(ReconstructionError::MemberHalted);
    }
    let times = bundle.center().times.clone();
    let h = uniform_step(&times)?;
    let nt = times.len();
    let pos: Vec<Vec<f64>> = bundle.members.iter().map(|m| m.positions.iter().map(|p| p[0]).collect()).collect();
    for (i, &t) in times.iter().enumerate() {
        if let Some(j) = (0..len - 1).find(|&j| !(pos[j + 1][i] > pos[j][i])) {
            return Err(ReconstructionError::BundleCrossing { t, lower: j, upper: j + 1 });
        }
    }
    let vel: Vec<Vec<f64>> = pos.iter().map(|x| time_derivative(x, h)).collect();

    // ∇·v at every member and time, then ln R per member
    let div: Vec<Vec<f64>> = (0..len)
        .map(|j| {
            let s = stencil_start(j, len);
            (0..nt)
                .map(|i| {
                    let (d1, _) = quadratic_weights([pos[s][i], pos[s + 1][i], pos[s + 2][i]], pos[j][i]);
                    (0..3).map(|a| d1[a] * vel[s + a][i]).sum()
                })
                .collect()
        })
        .collect();
    let log_r: Vec<Vec<f64>> = (0..len)
        .map(|j| {
            let half: Vec<f64> = div[j].iter().map(|d| -0.5 * d).collect();
            cumulative_integral(&half, h).into_iter().map(|v| v + r0[j].ln()).collect()
        })
        .collect();

    let c = bundle.k;
    let m = phys.mass;
    let u: Vec<f64> = (0..nt)
        .map(|i| {
            let x = [pos[c - 1][i], pos[c][i], pos[c + 1][i]];
            let (_, d2) = quadratic_weights(x, x[1]);
            let r = [log_r[c - 1][i].exp(), log_r[c][i].exp(), log_r[c + 1][i].exp()];
            let rpp: f64 = (0..3).map(|a| d2[a] * r[a]).sum();
            -phys.hbar * phys.hbar / (2.0 * m) * rpp / r[1]
        })
        .collect();
    let lagrangian: Vec<f64> =
        (0..nt).map(|i| 0.5 * m * vel[c][i] * vel[c][i] - potential.value_at(&[pos[c][i]], m) - u[i]).collect();
    let s = cumulative_integral(&lagrangian, h).into_iter().map(|v| v + s0).collect();
    Ok(Reconstruction {
        times,
        s,
        r: log_r[c].iter().map(|l| l.exp()).collect(),
        quantum_potential: u,
        divergence: div[c].clone(),
    })
}

/// S(t) = S(0) + ∫ (m v²/2 − V) dt along a single trajectory.
pub fn classical_reconstruct_along_c(
    traj: &Trajectory,
    potential: &Potential,
    mass: f64,
    s0: f64,
) -> Result<Vec<f64>, ReconstructionError> {
    let h = uniform_step(&traj.times)?;
    let dim = traj.dim;
    let v: Vec<Vec<f64>> =
        (0..dim).map(|d| time_derivative(&traj.positions.iter().map(|p| p[d]).collect::<Vec<_>>(), h)).collect();
    let l: Vec<f64> = traj
        .positions
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let v2: f64 = v.iter().map(|c| c[i] * c[i]).sum();
            0.5 * mass * v2 - potential.value_at(&p[..dim], mass)
        })
        .collect();
    Ok(cumulative_integral(&l, h).into_iter().map(|x| x + s0).collect())
}

/// Solver values of (S, R) along a trajectory at the snapshot times it
/// visits. S is unwrapped in space by the polar decomposition and in time
/// by removing jumps of 2πħ between consecutive samples.
pub fn solver_along(
    snapshots: &[WaveField],
    traj: &Trajectory,
    hbar: f64,
    node_eps: f64,
) -> Result<Vec<(f64, f64, f64)>, ReconstructionError> {
    let mut out: Vec<(f64, f64, f64)> = Vec::new();
    let cycle = 2.0 * std::f64::consts::PI * hbar;
    for (t, p) in traj.times.iter().zip(&traj.positions) {
        let Some(snap) = snapshots.iter().find(|s| (s.time() - t).abs() < 1e-9) else {
            continue;
        };
        let polar = to_polar(snap, node_eps, hbar)?;
        let st = Stencil::cubic(polar.grid(), &p[..1]);
        let mut s = st.apply(polar.phase());
        let r = st.apply(polar.amplitude());
        if let Some(prev) = out.last() {
            s -= cycle * ((s - prev.1) / cycle).round();
        }
        out.push((*t, s, r));
    }
    Ok(out)
}

/// ‖a − b‖₂ / √n divided by the range of `b` (or max |b| if flat).
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(1) as f64;
    let rms = (a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / n).sqrt();
    let (lo, hi) = b.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let scale = if hi - lo > 1e-12 * hi.abs().max(lo.abs()) { hi - lo } else { hi.abs().max(lo.abs()).max(1e-300) };
    rms / scale
}

/// rms of the pointwise relative deviation (a − b)/b.
pub fn pointwise_relative_error(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(1) as f64;
    (a.iter().zip(b).map(|(x, y)| ((x - y) / y).powi(2)).sum::<f64>() / n).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub delta: f64,
    pub k: usize,
    /// S error normalized by the oracle's range.
    pub err_s: f64,
    /// R error relative to the oracle pointwise.
    pub err_r: f64,
    /// Least-squares slope of log errS against log δ over the whole table.
    pub slope: f64,
}

/// Reconstruction error against the solver along the center trajectory for
/// each bundle spacing.
#[allow(clippy::too_many_arguments)]
pub fn bundle_convergence(
    snapshots: &[WaveField],
    potential: &Potential,
    phys: Physics,
    center: f64,
    k: usize,
    deltas: &[f64],
    cfg: &TrajectoryConfig,
    node_eps: f64,
) -> Result<Vec<ConvergenceRow>, ReconstructionError> {
    if deltas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(ReconstructionError::Config("deltas must be strictly decreasing"));
    }
    let first = snapshots.first().ok_or(BohmError::NoSnapshots)?;
    let dx = first.grid().axis(0).dx();
    if deltas.iter().any(|&d| d < 2.0 * dx) {
        return Err(ReconstructionError::Config("bundle spacing below two grid cells"));
    }
    let field = VelocityField::from_snapshots(snapshots, phys, node_eps)?;
    let polar0 = to_polar(first, node_eps, phys.hbar)?;
    let mut rows = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let bundle = build_bundle(&field, center, delta, k, cfg)?;
        let r0: Vec<f64> = bundle
            .start_points()
            .iter()
            .map(|&x| Stencil::cubic(polar0.grid(), &[x]).apply(polar0.amplitude()))
            .collect();
        let oracle = solver_along(snapshots, bundle.center(), phys.hbar, node_eps)?;
        let s0 = oracle.first().map(|o| o.1).ok_or(ReconstructionError::TooShort)?;
        let rec = reconstruct_along_c(&bundle, potential, phys, s0, &r0)?;
        let mut rs = Vec::new();
        let mut rr = Vec::new();
        let mut os = Vec::new();
        let mut or = Vec::new();
        for &(t, s, r) in &oracle {
            if let Some(i) = rec.times.iter().position(|x| (x - t).abs() < 1e-9) {
                rs.push(rec.s[i]);
                rr.push(rec.r[i]);
                os.push(s);
                or.push(r);
            }
        }
        rows.push(ConvergenceRow {
            delta,
            k,
            err_s: relative_error(&rs, &os),
            err_r: pointwise_relative_error(&rr, &or),
            slope: f64::NAN,
        });
    }
    let slope = log_slope(&rows);
    rows.iter_mut().for_each(|r| r.slope = slope);
    Ok(rows)
}

fn log_slope(rows: &[ConvergenceRow]) -> f64 {
    let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.err_s > 0.0).map(|r| (r.delta.ln(), r.err_s.ln())).collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpatialGrid;
    use crate::schrodinger::{propagate, PropagatorConfig};
    use crate::DEFAULT_NODE_EPS;

    fn free_snapshots() -> Vec<WaveField> {
        let grid = SpatialGrid::line(1024, -10.0, 10.0).unwrap();
        let psi = WaveField::gaussian(&grid, &[0.0], 1.0, &[0.0], 1.0).unwrap();
        let cfg = PropagatorConfig::new(2e-3, 500, Physics::default()).with_stride(5);
        propagate(&psi, &Potential::Free, &cfg).unwrap().snapshots
    }

    #[test]
    fn derivative_and_integral_are_fourth_order() {
        let h = 0.01;
        let x: Vec<f64> = (0..101).map(|i| (i as f64 * h).sin()).collect();
        let d = time_derivative(&x, h);
        assert!(d.iter().enumerate().all(|(i, v)| (v - (i as f64 * h).cos()).abs() < 1e-8));
        let c: Vec<f64> = (0..101).map(|i| (i as f64 * h).cos()).collect();
        let s = cumulative_integral(&c, h);
        assert!((s[100] - 1f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn single_trajectory_is_insufficient() {
        let snaps = free_snapshots();
        let field = VelocityField::from_snapshots(&snaps, Physics::default(), DEFAULT_NODE_EPS).unwrap();
        let cfg = TrajectoryConfig::new(0.01, 0.0, 1.0);
        for k in [0, 1] {
            let b = build_bundle(&field, 0.5, 0.1, k, &cfg).unwrap();
            let r0 = vec![1.0; b.members.len()];
            assert_eq!(
                reconstruct_along_c(&b, &Potential::Free, Physics::default(), 0.0, &r0).unwrap_err(),
                ReconstructionError::InsufficientBundle { k }
            );
        }
    }

    #[test]
    fn free_gaussian_reconstruction_converges() {
        let snaps = free_snapshots();
        let cfg = TrajectoryConfig::new(0.01, 0.0, 1.0);
        let rows = bundle_convergence(
            &snaps,
            &Potential::Free,
            Physics::default(),
            0.5,
            4,
            &[0.2, 0.1, 0.05],
            &cfg,
            DEFAULT_NODE_EPS,
        )
        .unwrap();
        let errs: Vec<f64> = rows.iter().map(|r| r.err_s).collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{rows:?}");
        assert!(errs[2] < 1e-2, "{rows:?}");
        assert!(rows[2].err_r < 0.05, "{rows:?}");
    }

    #[test]
    fn plane_wave_reconstruction_is_exact() {
        let grid = SpatialGrid::line(256, 0.0, 8.0 * std::f64::consts::PI).unwrap();
        let psi = WaveField::plane_wave(&grid, &[1.0], 1.0).unwrap();
        let cfg = PropagatorConfig::new(0.01, 100, Physics::default()).with_stride(1);
        let snaps = propagate(&psi, &Potential::Free, &cfg).unwrap().snapshots;
        let tc = TrajectoryConfig::new(0.01, 0.0, 1.0);
        let rows = bundle_convergence(
            &snaps,
            &Potential::Free,
            Physics::default(),
            3.0,
            2,
            &[0.8, 0.4, 0.2],
            &tc,
            DEFAULT_NODE_EPS,
        )
        .unwrap();
        assert!(rows.iter().all(|r| r.err_s < 1e-8 && r.err_r < 1e-8), "{rows:?}");
    }

    #[test]
    fn classical_action_along_free_line() {
        let traj = Trajectory {
            times: (0..=100).map(|i| i as f64 * 0.01).collect(),
            positions: (0..=100).map(|i| [2.0 * i as f64 * 0.01, 0.0]).collect(),
            dim: 1,
            status: crate::bohm::TrajectoryStatus::Completed,
        };
        let s = classical_reconstruct_along_c(&traj, &Potential::Free, 1.0, 0.0).unwrap();
        assert!((s[100] - 2.0).abs() < 1e-8);
        let rest = Trajectory { positions: vec![[0.3, 0.0]; 101], ..traj };
        assert!(classical_reconstruct_along_c(&rest, &Potential::Free, 1.0, 0.7)
            .unwrap()
            .iter()
            .all(|v| (*v - 0.7).abs() < 1e-14));
    }

    #[test]
    fn crossing_bundles_are_rejected() {
        let mk = |x: f64, v: f64| Trajectory {
            times: (0..=10).map(|i| i as f64 * 0.1).collect(),
            positions: (0..=10).map(|i| [x + v * i as f64 * 0.1, 0.0]).collect(),
            dim: 1,
            status: crate::bohm::TrajectoryStatus::Completed,
        };
        let b = Bundle {
            members: vec![mk(-0.2, 1.0), mk(-0.1, 0.0), mk(0.0, 0.0), mk(0.1, 0.0), mk(0.2, 0.0)],
            delta: 0.1,
            k: 2,
        };
        assert!(matches!(
            reconstruct_along_c(&b, &Potential::Free, Physics::default(), 0.0, &[1.0; 5]),
            Err(ReconstructionError::BundleCrossing { lower: 0, upper: 1, .. })
        ));
    }

    #[test]
    fn coherent_state_reconstruction_converges() {
        let grid = SpatialGrid::line(1024, -10.0, 10.0).unwrap();
        let phys = Physics::default();
        let psi = crate::schrodinger::harmonic_coherent_state(&grid, 1.0, phys, &[0.0], &[1.5]).unwrap();
        let pot = Potential::harmonic(1.0);
        let snaps = propagate(&psi, &pot, &PropagatorConfig::new(2e-3, 500, phys).with_stride(5)).unwrap().snapshots;
        let cfg = TrajectoryConfig::new(0.01, 0.0, 1.0);
        let rows = bundle_convergence(&snaps, &pot, phys, 2.0, 4, &[0.2, 0.1, 0.05], &cfg, DEFAULT_NODE_EPS).unwrap();
        assert!(rows.windows(2).all(|w| w[1].err_s < w[0].err_s), "{rows:?}");
        assert!(rows.iter().all(|r| r.err_r < 1e-3), "{rows:?}");
    }
}

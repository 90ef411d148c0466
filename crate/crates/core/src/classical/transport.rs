//! Classical density and action carried along characteristics (1-D).
//!
//! Every grid node launches a characteristic with p = ∂S/∂q. Alongside
//! (q, p) we integrate the variational pair J = ∂q/∂q₀, K = ∂p/∂q₀ so the
//! density follows from ρ = ρ₀/J, and S picks up the Lagrangian.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::action::ActionField;
use super::ClassicalError;
use crate::grid::SpatialGrid;
use crate::schrodinger::Potential;
use crate::spectral::fd4_derivative;

/// Transport stops once any characteristic Jacobian drops below this.
pub const CAUSTIC_THRESHOLD: f64 = 1e-8;

/// Characteristics launched where ρ₀ is below this fraction of its maximum
/// carry no mass and are not watched for folds (grid actions are not smooth
/// across the periodic seam).
pub const MASSLESS_FRACTION: f64 = 1e-12;

/// R_c² on a grid at time `time`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalDensity {
    pub grid: SpatialGrid,
    pub values: Vec<f64>,
    pub time: f64,
}

impl ClassicalDensity {
    pub fn from_fn(grid: &SpatialGrid, time: f64, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.axis(0).coords().into_iter().map(f).collect();
        Self { grid: grid.clone(), values, time }
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicSnapshot {
    pub time: f64,
    pub origins: Vec<f64>,
    pub positions: Vec<f64>,
    pub momenta: Vec<f64>,
    pub jacobian: Vec<f64>,
    pub density: Vec<f64>,
    pub action: Vec<f64>,
}

/// Fields resampled from the characteristics onto a grid. Nodes not covered
/// by the characteristic image carry zero and `covered = false`.
#[derive(Debug, Clone, PartialEq)]
pub struct Resampled {
    pub density: Vec<f64>,
    pub action: Vec<f64>,
    pub velocity: Vec<f64>,
    pub covered: Vec<bool>,
}

impl CharacteristicSnapshot {
    /// ∫ρ dq over the characteristic image, ρ₀ dq₀ weighted.
    pub fn mass(&self, dx0: f64) -> f64 {
        self.density.iter().zip(&self.jacobian).map(|(r, j)| r * j).sum::<f64>() * dx0
    }

    /// Cubic Lagrange resampling on the (monotone) characteristic positions.
    /// Grid nodes are matched periodically.
    pub fn resample(&self, grid: &SpatialGrid, mass: f64) -> Resampled {
        let a = grid.axis(0);
        let l = a.length();
        let xs = &self.positions;
        let n = xs.len();
        let (lo, hi) = (xs[0], xs[n - 1]);
        let vel: Vec<f64> = self.momenta.iter().map(|p| p / mass).collect();
        let mut out = Resampled {
            density: vec![0.0; a.n],
            action: vec![0.0; a.n],
            velocity: vec![0.0; a.n],
            covered: vec![false; a.n],
        };
        for (i, y0) in a.coords().into_iter().enumerate() {
            let Some(y) = [y0, y0 - l, y0 + l].into_iter().find(|y| *y >= lo && *y <= hi) else {
                continue;
            };
            let j = xs.partition_point(|&x| x <= y).clamp(2, n - 2) - 2;
            let nodes = [xs[j], xs[j + 1], xs[j + 2], xs[j + 3]];
            let w = lagrange4(&nodes, y);
            let at = |f: &[f64]| (0..4).map(|k| w[k] * f[j + k]).sum::<f64>();
            out.density[i] = at(&self.density);
            out.action[i] = at(&self.action);
            out.velocity[i] = at(&vel);
            out.covered[i] = true;
        }
        out
    }
}

fn lagrange4(x: &[f64; 4], y: f64) -> [f64; 4] {
    let mut w = [1.0; 4];
    for k in 0..4 {
        for m in 0..4 {
            if m != k {
                w[k] *= (y - x[m]) / (x[k] - x[m]);
            }
        }
    }
    w
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TransportStatus {
    Completed,
    /// The characteristic from `origin` folded at time `t`; snapshots stop
    /// at the last time before the fold.
    CausticDetected {
        t: f64,
        origin: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalTransport {
    pub snapshots: Vec<CharacteristicSnapshot>,
    pub status: TransportStatus,
    pub dx0: f64,
}

type State = [f64; 5];

fn rhs(s: &State, potential: &Potential, m: f64) -> State {
    let [x, p, j, k, _] = *s;
    let v = potential.value_at(&[x], m);
    let dv = potential.gradient_at(&[x], m)[0];
    let d2v = potential.curvature_at(x, m);
    [p / m, -dv, k / m, -d2v * j, p * p / (2.0 * m) - v]
}

fn rk4(s: &State, h: f64, potential: &Potential, m: f64) -> State {
    let add = |a: &State, c: f64, b: &State| std::array::from_fn::<f64, 5, _>(|i| a[i] + c * b[i]);
    let k1 = rhs(s, potential, m);
    let k2 = rhs(&add(s, 0.5 * h, &k1), potential, m);
    let k3 = rhs(&add(s, 0.5 * h, &k2), potential, m);
    let k4 = rhs(&add(s, h, &k3), potential, m);
    std::array::from_fn(|i| s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// Carries (ρ, S) from `density0.time` to `t_end`. A snapshot is kept every
/// `stride` steps and at the end.
pub fn transport_classical(
    density0: &ClassicalDensity,
    action: &ActionField,
    potential: &Potential,
    t_end: f64,
    dt: f64,
    stride: usize,
) -> Result<ClassicalTransport, ClassicalError> {
    let grid = &density0.grid;
    if grid.dim() != 1 || action.dim() != 1 {
        return Err(ClassicalError::Dimension { expected: 1, got: grid.dim().max(action.dim()) });
    }
    if !(dt > 0.0) || !(t_end >= density0.time) || stride == 0 {
        return Err(ClassicalError::Config("need dt > 0, stride > 0 and t_end >= t0"));
    }
    let m = action.mass;
    let t0 = density0.time;
    let origins = grid.axis(0).coords();
    let mut states = origins
        .iter()
        .map(|&x| Ok([x, action.gradient(&[x], t0)?[0], 1.0, action.curvature(x, t0)?, action.evaluate(&[x], t0)?]))
        .collect::<Result<Vec<State>, ClassicalError>>()?;
    let snap = |t: f64, st: &[State]| CharacteristicSnapshot {
        time: t,
        origins: origins.clone(),
        positions: st.iter().map(|s| s[0]).collect(),
        momenta: st.iter().map(|s| s[1]).collect(),
        jacobian: st.iter().map(|s| s[2]).collect(),
        density: st.iter().zip(&density0.values).map(|(s, r)| r / s[2]).collect(),
        action: st.iter().map(|s| s[4]).collect(),
    };
    let top = density0.values.iter().copied().fold(0.0, f64::max);
    let watched: Vec<bool> = density0.values.iter().map(|&r| r > MASSLESS_FRACTION * top).collect();
    let mut snapshots = vec![snap(t0, &states)];
    let times = crate::ode::step_times(t0, t_end, dt);
    let last = times.len() - 1;
    for (step, w) in times.windows(2).enumerate() {
        let h = w[1] - w[0];
        states.par_iter_mut().for_each(|s| *s = rk4(s, h, potential, m));
        if let Some(i) = states.iter().zip(&watched).position(|(s, &w)| w && !(s[2] > CAUSTIC_THRESHOLD)) {
            return Ok(ClassicalTransport {
                snapshots,
                status: TransportStatus::CausticDetected { t: w[1], origin: origins[i] },
                dx0: grid.cell_volume(),
            });
        }
        if (step + 1) % stride == 0 || step + 1 == last {
            snapshots.push(snap(w[1], &states));
        }
    }
    Ok(ClassicalTransport { snapshots, status: TransportStatus::Completed, dx0: grid.cell_volume() })
}

/// max |∂ρ/∂t + ∂(ρv)/∂q| on `grid` at every interior snapshot, from the
/// resampled fields. Nodes within two cells of the uncovered region are
/// skipped.
pub fn classical_continuity_residual(
    transport: &ClassicalTransport,
    grid: &SpatialGrid,
    mass: f64,
) -> Result<Vec<f64>, ClassicalError> {
    let snaps = &transport.snapshots;
    if snaps.len() < 3 {
        return Err(ClassicalError::Config("need at least three snapshots"));
    }
    let h0 = snaps[1].time - snaps[0].time;
    if snaps.windows(2).any(|w| ((w[1].time - w[0].time) - h0).abs() > 1e-9 * h0.max(1.0)) {
        return Err(ClassicalError::Config("snapshots must be evenly spaced"));
    }
    let res: Vec<Resampled> = snaps.iter().map(|s| s.resample(grid, mass)).collect();
    let n = grid.len();
    Ok(res
        .windows(3)
        .zip(snaps.windows(3))
        .map(|(r, s)| {
            let h = s[2].time - s[0].time;
            let flux: Vec<f64> = r[1].density.iter().zip(&r[1].velocity).map(|(a, b)| a * b).collect();
            let div = fd4_derivative(grid, &flux, 0);
            let ok = |i: usize| {
                (-2..=2).all(|o: isize| r.iter().all(|x| x.covered[(i as isize + o).rem_euclid(n as isize) as usize]))
            };
            (0..n)
                .filter(|&i| ok(i))
                .map(|i| ((r[2].density[i] - r[0].density[i]) / h + div[i]).abs())
                .fold(0.0, f64::max)
        })
        .collect())
}

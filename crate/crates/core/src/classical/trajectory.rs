use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::action::ActionField;
use super::ClassicalError;
use crate::bohm::{Trajectory, TrajectoryStatus};
use crate::ode::{point, rk4_step, step_times, Point};
use crate::schrodinger::Potential;

/// Largest allowed |∇S(Q0, t0) − P0| when both are supplied.
pub const MOMENTUM_TOLERANCE: f64 = 1e-10;

/// Initial data for a classical particle guided by an action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalState {
    pub q0: Vec<f64>,
    pub p0: Option<Vec<f64>>,
    pub action: ActionField,
    pub t0: f64,
}

fn dist(a: &Point, b: &Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// RK4 on dQ/dt = ∇S(Q, t)/m (free particle).
///
/// If ∇S is undefined at the start (the circular action at t = 0) an explicit
/// P0 is required; the first step is then taken ballistically.
pub fn classical_trajectory(state: &ClassicalState, t_end: f64, dt: f64) -> Result<Trajectory, ClassicalError> {
    if !(dt > 0.0) || !(t_end >= state.t0) {
        return Err(ClassicalError::Config("need dt > 0 and t_end >= t0"));
    }
    let dim = state.action.dim();
    if state.q0.len() != dim || state.p0.as_ref().is_some_and(|p| p.len() != dim) {
        return Err(ClassicalError::Dimension { expected: dim, got: state.q0.len() });
    }
    let m = state.action.mass;
    let p0 = state.p0.as_deref().map(point);
    let grid_times = step_times(state.t0, t_end, dt);
    let mut x = point(&state.q0);
    let mut times = vec![state.t0];
    let mut positions = vec![x];
    let mut first = 1;
    match (state.action.gradient(&state.q0, state.t0), p0) {
        (Ok(g), Some(p)) => {
            let mismatch = dist(&g, &p);
            if !(mismatch < MOMENTUM_TOLERANCE) {
                return Err(ClassicalError::InconsistentMomentum { mismatch });
            }
        }
        (Ok(_), None) => {}
        (Err(ClassicalError::UndefinedGradient { .. }), Some(p)) if grid_times.len() > 1 => {
            let h = grid_times[1] - grid_times[0];
            x = [x[0] + h * p[0] / m, x[1] + h * p[1] / m];
            times.push(grid_times[1]);
            positions.push(x);
            first = 2;
        }
        (Err(ClassicalError::UndefinedGradient { .. }), Some(_)) => {}
        (Err(e), _) => return Err(e),
    }
    let f = |t: f64, y: &Point| -> Result<Point, ClassicalError> {
        let g = state.action.gradient(&y[..dim], t)?;
        Ok([g[0] / m, g[1] / m])
    };
    for w in grid_times.windows(2).skip(first - 1) {
        x = rk4_step(&f, w[0], &x, w[1] - w[0])?;
        times.push(w[1]);
        positions.push(x);
    }
    Ok(Trajectory { times, positions, dim, status: TrajectoryStatus::Completed })
}

/// Newtonian motion m q'' = −∇V from (q0, p0) on a line or plane.
pub fn newton_trajectory(
    q0: &[f64],
    p0: &[f64],
    potential: &Potential,
    mass: f64,
    t0: f64,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory, ClassicalError> {
    if !(dt > 0.0) || !(t_end >= t0) {
        return Err(ClassicalError::Config("need dt > 0 and t_end >= t0"));
    }
    if q0.len() != p0.len() || q0.is_empty() || q0.len() > 2 {
        return Err(ClassicalError::Dimension { expected: q0.len(), got: p0.len() });
    }
    let dim = q0.len();
    let mut q = point(q0);
    let mut p = point(p0);
    let mut times = vec![t0];
    let mut positions = vec![q];
    for w in step_times(t0, t_end, dt).windows(2) {
        let h = w[1] - w[0];
        let acc = |x: &Point| {
            let g = potential.gradient_at(&x[..dim], mass);
            let mut a = [0.0; 2];
            for d in 0..dim {
                a[d] = -g[d];
            }
            a
        };
        let add = |a: &Point, s: f64, b: &Point| [a[0] + s * b[0], a[1] + s * b[1]];
        let k1q = [p[0] / mass, p[1] / mass];
        let k1p = acc(&q);
        let q2 = add(&q, 0.5 * h, &k1q);
        let p2 = add(&p, 0.5 * h, &k1p);
        let k2q = [p2[0] / mass, p2[1] / mass];
        let k2p = acc(&q2);
        let q3 = add(&q, 0.5 * h, &k2q);
        let p3 = add(&p, 0.5 * h, &k2p);
        let k3q = [p3[0] / mass, p3[1] / mass];
        let k3p = acc(&q3);
        let q4 = add(&q, h, &k3q);
        let p4 = add(&p, h, &k3p);
        let k4q = [p4[0] / mass, p4[1] / mass];
        let k4p = acc(&q4);
        for d in 0..2 {
            q[d] += h / 6.0 * (k1q[d] + 2.0 * k2q[d] + 2.0 * k3q[d] + k4q[d]);
            p[d] += h / 6.0 * (k1p[d] + 2.0 * k2p[d] + 2.0 * k3p[d] + k4p[d]);
        }
        times.push(w[1]);
        positions.push(q);
    }
    Ok(Trajectory { times, positions, dim, status: TrajectoryStatus::Completed })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HollandReport {
    pub plane_wave: Trajectory,
    pub circular: Trajectory,
    pub max_deviation: f64,
}

/// Integrates the same initial condition under the plane-wave action and the
/// circular action emanating from Q0 at t = 0. Both start at
/// (Q0 + P t0/m, t0), where the circular gradient is defined and equals P.
pub fn holland_nonuniqueness(
    p: f64,
    q0: f64,
    mass: f64,
    t0: f64,
    t_end: f64,
    dt: f64,
) -> Result<HollandReport, ClassicalError> {
    if !(t0 > 0.0 && t_end > t0) {
        return Err(ClassicalError::Config("need t_end > t0 > 0"));
    }
    let start = q0 + p * t0 / mass;
    let a = ClassicalState { q0: vec![start], p0: None, action: ActionField::plane_wave(&[p], 0.0, mass), t0 };
    let b = ClassicalState { q0: vec![start], p0: Some(vec![p]), action: ActionField::circular(&[q0], mass), t0 };
    let ta = classical_trajectory(&a, t_end, dt)?;
    let tb = classical_trajectory(&b, t_end, dt)?;
    let max_deviation = ta.positions.iter().zip(&tb.positions).map(|(x, y)| dist(x, y)).fold(0.0, f64::max);
    Ok(HollandReport { plane_wave: ta, circular: tb, max_deviation })
}

/// max |HJ residual| of `action` (with V = 0) at `n` random points drawn
/// uniformly from `[q_lo, q_hi]^d × [t_lo, t_hi]`.
pub fn sampled_hj_residual(
    action: &ActionField,
    n: usize,
    seed: u64,
    q_range: (f64, f64),
    t_range: (f64, f64),
) -> Result<f64, ClassicalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let q: Vec<f64> = (0..action.dim()).map(|_| rng.random_range(q_range.0..q_range.1)).collect();
        let t = rng.random_range(t_range.0..t_range.1);
        worst = worst.max(action.hj_residual(&q, t, 0.0)?.abs());
    }
    Ok(worst)
}

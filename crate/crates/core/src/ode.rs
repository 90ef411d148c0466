//! Fixed-step RK4 for first-order systems in at most two dimensions.

/// Point in configuration space; entries past the grid dimension are zero.
pub type Point = [f64; 2];

pub fn point(x: &[f64]) -> Point {
    let mut p = [0.0; 2];
    p[..x.len()].copy_from_slice(x);
    p
}

fn axpy(x: &Point, h: f64, k: &Point) -> Point {
    [x[0] + h * k[0], x[1] + h * k[1]]
}

/// One classical RK4 step of `dx/dt = f(t, x)`. The first error returned by
/// `f` aborts the step.
pub fn rk4_step<E>(f: &impl Fn(f64, &Point) -> Result<Point, E>, t: f64, x: &Point, h: f64) -> Result<Point, E> {
    let k1 = f(t, x)?;
    let k2 = f(t + 0.5 * h, &axpy(x, 0.5 * h, &k1))?;
    let k3 = f(t + 0.5 * h, &axpy(x, 0.5 * h, &k2))?;
    let k4 = f(t + h, &axpy(x, h, &k3))?;
    Ok([
        x[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        x[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ])
}

/// Step boundaries `t_start, t_start + dt, …, t_end` (last step shortened).
pub fn step_times(t_start: f64, t_end: f64, dt: f64) -> Vec<f64> {
    let span = t_end - t_start;
    let n = ((span / dt) - 1e-9).ceil().max(0.0) as usize;
    let mut out: Vec<f64> = (0..n).map(|i| t_start + i as f64 * dt).collect();
    out.push(t_end);
    out
}

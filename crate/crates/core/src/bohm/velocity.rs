//! Guiding-law velocity fields, v = (ħ/m) Im(∇ψ/ψ) = ∇S/m.

use rayon::prelude::*;

use super::BohmError;
use crate::field::{Physics, WaveField};
use crate::interp::{hermite, Stencil};
use crate::ode::Point;
use crate::polar::PolarField;
use crate::spectral::SpectralOps;

/// The interpolated |ψ| fell below the node threshold, or the interpolation
/// stencil touched a masked node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeProximity {
    pub amplitude: f64,
    pub threshold: f64,
}

/// Velocity field of a single snapshot on its grid.
#[derive(Debug, Clone)]
pub struct GridVelocity {
    grid: crate::grid::SpatialGrid,
    time: f64,
    components: [Vec<f64>; 2],
    amplitude: Vec<f64>,
    mask: Vec<bool>,
    threshold: f64,
}

impl GridVelocity {
    fn assemble(
        grid: &crate::grid::SpatialGrid,
        time: f64,
        mut comps: Vec<Vec<f64>>,
        amplitude: Vec<f64>,
        node_eps: f64,
    ) -> Self {
        let max = amplitude.iter().copied().fold(0.0, f64::max);
        let threshold = node_eps * max;
        let mask: Vec<bool> = amplitude.iter().map(|&a| !(a >= threshold) || a == 0.0).collect();
        for c in comps.iter_mut() {
            for (v, &m) in c.iter_mut().zip(&mask) {
                if m || !v.is_finite() {
                    *v = 0.0;
                }
            }
        }
        let second = if comps.len() > 1 { comps.pop().unwrap() } else { Vec::new() };
        let first = comps.pop().unwrap();
        Self { grid: grid.clone(), time, components: [first, second], amplitude, mask, threshold }
    }

    /// Spectral evaluation of (ħ/m) Im(ψ*∇ψ)/|ψ|².
    pub fn from_wave(psi: &WaveField, phys: Physics, node_eps: f64, ops: &SpectralOps) -> Self {
        let grid = psi.grid();
        let scale = phys.hbar / phys.mass;
        let comps = (0..grid.dim())
            .map(|axis| {
                ops.derivative_complex(psi.values(), axis)
                    .iter()
                    .zip(psi.values())
                    .map(|(d, z)| scale * (z.conj() * d).im / z.norm_sqr())
                    .collect()
            })
            .collect();
        let amplitude = psi.values().iter().map(|z| z.norm()).collect();
        Self::assemble(grid, psi.time(), comps, amplitude, node_eps)
    }

    /// ∇S/m from an unwrapped phase.
    pub fn from_polar(polar: &PolarField, phys: Physics, node_eps: f64) -> Self {
        let comps =
            polar.phase_gradient(None).into_iter().map(|c| c.into_iter().map(|g| g / phys.mass).collect()).collect();
        Self::assemble(polar.grid(), polar.time(), comps, polar.amplitude().to_vec(), node_eps)
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn grid(&self) -> &crate::grid::SpatialGrid {
        &self.grid
    }

    /// Grid values of component `axis`.
    pub fn component(&self, axis: usize) -> &[f64] {
        &self.components[axis]
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    fn check(&self, st: &Stencil) -> Result<(), NodeProximity> {
        let amp = st.apply(&self.amplitude);
        if st.touches(&self.mask) || amp < self.threshold {
            return Err(NodeProximity { amplitude: amp, threshold: self.threshold });
        }
        Ok(())
    }

    fn eval(&self, st: &Stencil) -> Point {
        let mut v = [0.0; 2];
        for (d, c) in self.components.iter().enumerate().take(self.grid.dim()) {
            v[d] = st.apply(c);
        }
        v
    }

    /// Cubic interpolation of v at `x`.
    pub fn at(&self, x: &[f64]) -> Result<Point, NodeProximity> {
        let st = Stencil::cubic(&self.grid, x);
        self.check(&st)?;
        Ok(self.eval(&st))
    }
}

/// Velocity at `x` for a single snapshot (builds the grid field once).
pub fn velocity_at(psi: &WaveField, x: &[f64], phys: Physics, node_eps: f64) -> Result<Point, BohmError> {
    if !psi.grid().contains(x) {
        return Err(BohmError::OutsideDomain);
    }
    let ops = SpectralOps::new(psi.grid());
    Ok(GridVelocity::from_wave(psi, phys, node_eps, &ops).at(x)?)
}

/// Time-dependent velocity field built from a sequence of snapshots: cubic
/// in space, cubic Hermite in time with centred-difference slopes.
#[derive(Debug, Clone)]
pub struct VelocityField {
    frames: Vec<GridVelocity>,
    phys: Physics,
}

impl VelocityField {
    pub fn from_snapshots(snapshots: &[WaveField], phys: Physics, node_eps: f64) -> Result<Self, BohmError> {
        let first = snapshots.first().ok_or(BohmError::NoSnapshots)?;
        if snapshots.iter().any(|s| s.grid() != first.grid()) {
            return Err(BohmError::GridMismatch);
        }
        if snapshots.windows(2).any(|w| !(w[1].time() > w[0].time())) {
            return Err(BohmError::TimesNotIncreasing);
        }
        let ops = SpectralOps::new(first.grid());
        let frames = snapshots.par_iter().map(|s| GridVelocity::from_wave(s, phys, node_eps, &ops)).collect();
        Ok(Self { frames, phys })
    }

    /// A time-independent field (single frame).
    pub fn stationary(frame: GridVelocity, phys: Physics) -> Self {
        Self { frames: vec![frame], phys }
    }

    pub fn phys(&self) -> Physics {
        self.phys
    }

    pub fn grid(&self) -> &crate::grid::SpatialGrid {
        self.frames[0].grid()
    }

    pub fn frames(&self) -> &[GridVelocity] {
        &self.frames
    }

    pub fn t_start(&self) -> f64 {
        self.frames[0].time
    }

    pub fn t_end(&self) -> f64 {
        self.frames.last().unwrap().time
    }

    pub fn covers(&self, t0: f64, t1: f64) -> bool {
        self.frames.len() == 1 || (t0 >= self.t_start() - 1e-12 && t1 <= self.t_end() + 1e-12)
    }

    /// v(x, t).
    pub fn at(&self, x: &[f64], t: f64) -> Result<Point, NodeProximity> {
        let st = Stencil::cubic(self.grid(), x);
        let n = self.frames.len();
        if n == 1 {
            self.frames[0].check(&st)?;
            return Ok(self.frames[0].eval(&st));
        }
        let k = match self.frames.partition_point(|f| f.time <= t) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let (f0, f1) = (&self.frames[k], &self.frames[k + 1]);
        f0.check(&st)?;
        f1.check(&st)?;
        let v0 = f0.eval(&st);
        let v1 = f1.eval(&st);
        if n == 2 {
            let s = (t - f0.time) / (f1.time - f0.time);
            return Ok([v0[0] + s * (v1[0] - v0[0]), v0[1] + s * (v1[1] - v0[1])]);
        }
        let slope = |a: usize, b: usize, va: Point, vb: Point| {
            let h = self.frames[b].time - self.frames[a].time;
            [(vb[0] - va[0]) / h, (vb[1] - va[1]) / h]
        };
        let m0 = if k == 0 {
            slope(0, 1, v0, v1)
        } else {
            let fp = &self.frames[k - 1];
            fp.check(&st)?;
            slope(k - 1, k + 1, fp.eval(&st), v1)
        };
        let m1 = if k + 2 >= n {
            slope(k, k + 1, v0, v1)
        } else {
            let fnx = &self.frames[k + 2];
            fnx.check(&st)?;
            slope(k, k + 2, v0, fnx.eval(&st))
        };
        let mut v = [0.0; 2];
        for d in 0..2 {
            v[d] = hermite(f0.time, f1.time, v0[d], v1[d], m0[d], m1[d], t);
        }
        Ok(v)
    }
}

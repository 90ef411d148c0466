//! Complex and real fields sampled on a [`SpatialGrid`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::SpatialGrid;

pub type C64 = Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("expected {expected} values for the grid, got {got}")]
    Length { expected: usize, got: usize },
    #[error("non-finite value at node {0}")]
    NonFinite(usize),
    #[error("field has zero norm")]
    ZeroNorm,
    #[error("grids differ")]
    GridMismatch,
}

/// Physical constants of a run. Natural units (`hbar = mass = 1`) by default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Physics {
    pub hbar: f64,
    pub mass: f64,
}

impl Default for Physics {
    fn default() -> Self {
        Self { hbar: 1.0, mass: 1.0 }
    }
}

impl Physics {
    pub fn new(hbar: f64, mass: f64) -> Self {
        Self { hbar, mass }
    }
}

/// Wave function ψ(q, t) at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    grid: SpatialGrid,
    values: Vec<C64>,
    time: f64,
}

impl WaveField {
    pub fn new(grid: SpatialGrid, values: Vec<C64>, time: f64) -> Result<Self, FieldError> {
        if values.len() != grid.len() {
            return Err(FieldError::Length { expected: grid.len(), got: values.len() });
        }
        if let Some(i) = values.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(FieldError::NonFinite(i));
        }
        Ok(Self { grid, values, time })
    }

    /// Samples `f` at every node and normalizes the result.
    pub fn from_fn(grid: &SpatialGrid, time: f64, f: impl Fn(&[f64]) -> C64) -> Result<Self, FieldError> {
        let dim = grid.dim();
        let values = grid.points().map(|p| f(&p[..dim])).collect();
        Self::new(grid.clone(), values, time)?.normalized()
    }

    /// Gaussian packet with |ψ|² of standard deviation `sigma` along every
    /// axis, centred at `center` and carrying mean momentum `momentum`.
    pub fn gaussian(
        grid: &SpatialGrid,
        center: &[f64],
        sigma: f64,
        momentum: &[f64],
        hbar: f64,
    ) -> Result<Self, FieldError> {
        Self::from_fn(grid, 0.0, |q| {
            let mut arg = C64::new(0.0, 0.0);
            for d in 0..q.len() {
                let x = q[d] - center[d];
                arg += C64::new(-x * x / (4.0 * sigma * sigma), momentum[d] * x / hbar);
            }
            arg.exp()
        })
    }

    /// Plane wave e^{i p·q/ħ}. Periodicity requires p/ħ to be a multiple of
    /// 2π/L on each axis; the caller is responsible for that.
    pub fn plane_wave(grid: &SpatialGrid, momentum: &[f64], hbar: f64) -> Result<Self, FieldError> {
        Self::from_fn(grid, 0.0, |q| {
            let phase: f64 = q.iter().zip(momentum).map(|(x, p)| x * p).sum::<f64>() / hbar;
            C64::from_polar(1.0, phase)
        })
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    /// ∫|ψ|² dq.
    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn normalized(mut self) -> Result<Self, FieldError> {
        let n = self.norm_sq();
        if !(n > 0.0) || !n.is_finite() {
            return Err(FieldError::ZeroNorm);
        }
        let s = 1.0 / n.sqrt();
        self.values.iter_mut().for_each(|z| *z *= s);
        Ok(self)
    }

    pub fn with_global_phase(&self, alpha: f64) -> Self {
        let r = C64::from_polar(1.0, alpha);
        Self { grid: self.grid.clone(), values: self.values.iter().map(|z| z * r).collect(), time: self.time }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `(ψ_a − ψ_b)` in the L2 norm.
    pub fn l2_distance(&self, other: &WaveField) -> Result<f64, FieldError> {
        if self.grid != other.grid {
            return Err(FieldError::GridMismatch);
        }
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm_sqr()).sum();
        Ok((s * self.grid.cell_volume()).sqrt())
    }

    /// ⟨q_axis⟩ and its standard deviation under |ψ|².
    pub fn position_moments(&self, axis: usize) -> (f64, f64) {
        let w = self.grid.cell_volume();
        let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for (i, z) in self.values.iter().enumerate() {
            let rho = z.norm_sqr() * w;
            let q = self.grid.point(i)[axis];
            m0 += rho;
            m1 += rho * q;
            m2 += rho * q * q;
        }
        let mean = m1 / m0;
        (mean, (m2 / m0 - mean * mean).max(0.0).sqrt())
    }
}

/// What a [`RealField`] holds; carried so dumps and checks can tell
/// densities from potentials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    Energy,
    Density,
    Action,
    Momentum,
    Velocity,
    Dimensionless,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: SpatialGrid,
    values: Vec<f64>,
    quantity: Quantity,
}

impl RealField {
    pub fn new(grid: SpatialGrid, values: Vec<f64>, quantity: Quantity) -> Result<Self, FieldError> {
        if values.len() != grid.len() {
            return Err(FieldError::Length { expected: grid.len(), got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FieldError::NonFinite(i));
        }
        Ok(Self { grid, values, quantity })
    }

    pub fn from_fn(grid: &SpatialGrid, quantity: Quantity, f: impl Fn(&[f64]) -> f64) -> Result<Self, FieldError> {
        let dim = grid.dim();
        Self::new(grid.clone(), grid.points().map(|p| f(&p[..dim])).collect(), quantity)
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn quantity(&self) -> Quantity {
        self.quantity
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }
}

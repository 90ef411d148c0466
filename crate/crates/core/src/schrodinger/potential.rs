use serde::{Deserialize, Serialize};

use crate::field::{FieldError, Quantity, RealField};
use crate::grid::SpatialGrid;
use crate::interp::Stencil;

/// Time-independent external potential V(q).
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Free,
    /// V = ½ m ω² |q − center|².
    Harmonic {
        omega: f64,
        center: Vec<f64>,
    },
    /// Arbitrary values on a grid; evaluated off-grid by cubic interpolation.
    Grid(RealField),
}

/// Serializable tag used by configs and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialKind {
    Free,
    Harmonic,
    CustomGrid,
}

impl Potential {
    pub fn harmonic(omega: f64) -> Self {
        Potential::Harmonic { omega, center: vec![0.0; 2] }
    }

    pub fn kind(&self) -> PotentialKind {
        match self {
            Potential::Free => PotentialKind::Free,
            Potential::Harmonic { .. } => PotentialKind::Harmonic,
            Potential::Grid(_) => PotentialKind::CustomGrid,
        }
    }

    pub fn is_free(&self) -> bool {
        matches!(self, Potential::Free)
    }

    pub fn value_at(&self, x: &[f64], mass: f64) -> f64 {
        match self {
            Potential::Free => 0.0,
            Potential::Harmonic { omega, center } => {
                let r2: f64 = x.iter().zip(center).map(|(q, c)| (q - c) * (q - c)).sum();
                0.5 * mass * omega * omega * r2
            }
            Potential::Grid(f) => Stencil::cubic(f.grid(), x).apply(f.values()),
        }
    }

    /// ∇V at `x`.
    pub fn gradient_at(&self, x: &[f64], mass: f64) -> Vec<f64> {
        match self {
            Potential::Free => vec![0.0; x.len()],
            Potential::Harmonic { omega, center } => {
                x.iter().zip(center).map(|(q, c)| mass * omega * omega * (q - c)).collect()
            }
            Potential::Grid(f) => {
                (0..x.len()).map(|d| Stencil::cubic_derivative(f.grid(), x, d).apply(f.values())).collect()
            }
        }
    }

    /// ∂²V/∂q² at `x` on a line.
    pub fn curvature_at(&self, x: f64, mass: f64) -> f64 {
        match self {
            Potential::Free => 0.0,
            Potential::Harmonic { omega, .. } => mass * omega * omega,
            Potential::Grid(f) => {
                let h = 1e-3 * f.grid().axis(0).dx();
                (self.gradient_at(&[x + h], mass)[0] - self.gradient_at(&[x - h], mass)[0]) / (2.0 * h)
            }
        }
    }

    /// V sampled on `grid` (energy units).
    pub fn as_field(&self, grid: &SpatialGrid, mass: f64) -> Result<RealField, FieldError> {
        match self {
            Potential::Grid(f) if f.grid() == grid => Ok(f.clone()),
            _ => RealField::from_fn(grid, Quantity::Energy, |q| self.value_at(q, mass)),
        }
    }
}

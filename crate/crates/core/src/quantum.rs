//! Density, probability current and the quantum potential.

use crate::field::{Physics, Quantity, RealField, WaveField};
use crate::polar::PolarField;
use crate::spectral::SpectralOps;

/// ρ = |ψ|².
pub fn density(psi: &WaveField) -> RealField {
    RealField::new(psi.grid().clone(), psi.values().iter().map(|z| z.norm_sqr()).collect(), Quantity::Density)
        .expect("|ψ|² of a finite field")
}

/// j = (ħ/m) Im(ψ* ∇ψ), one component per axis.
pub fn probability_current(psi: &WaveField, phys: Physics, ops: &SpectralOps) -> Vec<Vec<f64>> {
    let scale = phys.hbar / phys.mass;
    (0..psi.grid().dim())
        .map(|axis| {
            ops.derivative_complex(psi.values(), axis)
                .iter()
                .zip(psi.values())
                .map(|(d, z)| scale * (z.conj() * d).im)
                .collect()
        })
        .collect()
}

/// Quantum potential on the grid, with the nodes it could not be evaluated at.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumPotential {
    pub values: RealField,
    /// Node neighbourhoods; the value there is [`QuantumPotential::SENTINEL`].
    pub mask: Vec<bool>,
}

impl QuantumPotential {
    pub const SENTINEL: f64 = 0.0;

    pub fn get(&self, i: usize) -> Option<f64> {
        (!self.mask[i]).then(|| self.values.values()[i])
    }
}

/// U = −(ħ²/2m) Σ ∇²R / R, evaluated off the node mask.
///
/// ∇²R/R is assembled from ρ = R² as ∇²ρ/(2ρ) − |∇ρ|²/(4ρ²). ρ stays smooth
/// through a node where R has a kink, so the spectral derivatives do not ring.
/// The result depends on R alone. The mask is the polar node mask dilated by
/// one cell along each axis.
pub fn quantum_potential(polar: &PolarField, phys: Physics) -> QuantumPotential {
    let grid = polar.grid();
    let ops = SpectralOps::new(grid);
    let rho: Vec<f64> = polar.amplitude().iter().map(|r| r * r).collect();
    let mut ratio = vec![0.0; grid.len()];
    for axis in 0..grid.dim() {
        let d1 = ops.derivative_real(&rho, axis);
        let d2 = ops.second_derivative_real(&rho, axis);
        for i in 0..grid.len() {
            let p = rho[i];
            ratio[i] += d2[i] / (2.0 * p) - d1[i] * d1[i] / (4.0 * p * p);
        }
    }
    let nodes = polar.node_mask();
    let mask: Vec<bool> = (0..grid.len())
        .map(|i| nodes[i] || (0..grid.dim()).any(|a| nodes[grid.neighbor(i, a, -1)] || nodes[grid.neighbor(i, a, 1)]))
        .collect();
    let coeff = -(phys.hbar * phys.hbar) / (2.0 * phys.mass);
    let values = ratio
        .iter()
        .zip(&mask)
        .map(|(&r, &m)| if m || !r.is_finite() { QuantumPotential::SENTINEL } else { coeff * r })
        .collect();
    let mask = mask.iter().zip(&ratio).map(|(&m, r)| m || !r.is_finite()).collect();
    QuantumPotential {
        values: RealField::new(grid.clone(), values, Quantity::Energy).expect("masked values are finite"),
        mask,
    }
}

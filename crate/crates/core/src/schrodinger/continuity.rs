use thiserror::Error;

use crate::field::{Physics, WaveField};
use crate::quantum::probability_current;
use crate::spectral::SpectralOps;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContinuityError {
    #[error("need at least three snapshots, got {0}")]
    TooFewSnapshots(usize),
    #[error("snapshots are not evenly spaced in time")]
    UnevenSpacing,
    #[error("snapshots live on different grids")]
    GridMismatch,
}

/// max |∂ρ/∂t + ∇·j| at every interior snapshot.
///
/// ∂ρ/∂t is the central difference between the neighbouring snapshots, ∇·j
/// the spectral divergence of j = (ħ/m) Im(ψ*∇ψ) at the middle one.
pub fn continuity_residual(snapshots: &[WaveField], phys: Physics) -> Result<Vec<f64>, ContinuityError> {
    if snapshots.len() < 3 {
        return Err(ContinuityError::TooFewSnapshots(snapshots.len()));
    }
    let grid = snapshots[0].grid();
    if snapshots.iter().any(|s| s.grid() != grid) {
        return Err(ContinuityError::GridMismatch);
    }
    let dt = snapshots[1].time() - snapshots[0].time();
    let uneven = snapshots
        .windows(2)
        .any(|w| ((w[1].time() - w[0].time()) - dt).abs() > 1e-9 * dt.abs().max(1.0) || w[1].time() == w[0].time());
    if uneven {
        return Err(ContinuityError::UnevenSpacing);
    }
    let ops = SpectralOps::new(grid);
    Ok(snapshots
        .windows(3)
        .map(|w| {
            let h = w[2].time() - w[0].time();
            let j = probability_current(&w[1], phys, &ops);
            let mut div = vec![0.0; grid.len()];
            for (axis, comp) in j.iter().enumerate() {
                for (d, v) in div.iter_mut().zip(ops.derivative_real(comp, axis)) {
                    *d += v;
                }
            }
            w[2].values()
                .iter()
                .zip(w[0].values())
                .zip(&div)
                .map(|((a, b), d)| ((a.norm_sqr() - b.norm_sqr()) / h + d).abs())
                .fold(0.0, f64::max)
        })
        .collect())
}

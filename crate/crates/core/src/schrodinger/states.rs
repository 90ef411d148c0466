//! Initial wave functions used by the scenarios.

use thiserror::Error;

use crate::field::{FieldError, Physics, WaveField, C64};
use crate::grid::SpatialGrid;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("slit width {width} is below two grid cells ({min})")]
    GridTooCoarse { width: f64, min: f64 },
    #[error("invalid slit geometry: {0}")]
    Geometry(&'static str),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Two-packet model of the state just behind a double slit.
///
/// The transverse profile is `G(y − d/2) + G(y + d/2)` where `G` is a
/// Gaussian whose |G|² has standard deviation `width`. On a 1-D grid the
/// single axis is the transverse one. On a 2-D grid axis 1 is transverse and
/// axis 0 carries the forward momentum under a broad envelope of standard
/// deviation `separation` centred on the box.
///
/// `separation = 0` degenerates to a single packet.
pub fn make_double_slit_state(
    grid: &SpatialGrid,
    separation: f64,
    width: f64,
    forward_momentum: f64,
    hbar: f64,
) -> Result<WaveField, StateError> {
    let t_axis = grid.dim() - 1;
    let dx = grid.axis(t_axis).dx();
    if !(width > 0.0 && separation >= 0.0 && separation.is_finite()) {
        return Err(StateError::Geometry("width must be positive and separation non-negative"));
    }
    if width < 2.0 * dx {
        return Err(StateError::GridTooCoarse { width, min: 2.0 * dx });
    }
    if separation > 0.0 && separation <= width {
        return Err(StateError::Geometry("separation must exceed the slit width"));
    }
    let transverse = |y: f64| {
        let g = |c: f64| (-(y - c) * (y - c) / (4.0 * width * width)).exp();
        if separation == 0.0 {
            g(0.0)
        } else {
            g(0.5 * separation) + g(-0.5 * separation)
        }
    };
    if grid.dim() == 1 {
        return Ok(WaveField::from_fn(grid, 0.0, |q| C64::new(transverse(q[0]), 0.0))?);
    }
    let a0 = grid.axis(0);
    let x0 = 0.5 * (a0.qmin + a0.qmax);
    let lw = separation.max(width);
    Ok(WaveField::from_fn(grid, 0.0, |q| {
        let x = q[0] - x0;
        C64::from_polar((-x * x / (4.0 * lw * lw)).exp() * transverse(q[1]), forward_momentum * x / hbar)
    })?)
}

/// Ground state of V = ½ m ω² (q − center)², displaced by `displacement`
/// (a coherent state when `displacement ≠ 0`).
pub fn harmonic_coherent_state(
    grid: &SpatialGrid,
    omega: f64,
    phys: Physics,
    center: &[f64],
    displacement: &[f64],
) -> Result<WaveField, FieldError> {
    let sigma = (phys.hbar / (2.0 * phys.mass * omega)).sqrt();
    let c: Vec<f64> = center.iter().zip(displacement).map(|(a, b)| a + b).collect();
    WaveField::gaussian(grid, &c, sigma, &vec![0.0; grid.dim()], phys.hbar)
}

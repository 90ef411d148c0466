//! Strang split-step propagation: half kinetic step in Fourier space, full
//! potential phase in position space, half kinetic step.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::potential::Potential;
use crate::field::{FieldError, Physics, WaveField, C64};
use crate::spectral::SpectralOps;

/// Amplitude that must not be exceeded within 10 % of any box edge.
pub const EDGE_AMPLITUDE_LIMIT: f64 = 1e-10;
/// Fraction of spectral weight tolerated in the top 10 % of |k|.
pub const SPECTRAL_TAIL_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Splitting {
    #[default]
    Strang,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagatorConfig {
    pub dt: f64,
    pub steps: usize,
    pub phys: Physics,
    #[serde(default)]
    pub splitting: Splitting,
    /// Emit a snapshot every this many steps (the final state is always kept).
    pub snapshot_stride: usize,
}

impl PropagatorConfig {
    pub fn new(dt: f64, steps: usize, phys: Physics) -> Self {
        Self { dt, steps, phys, splitting: Splitting::Strang, snapshot_stride: 1 }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }

    /// dt above which the fastest representable kinetic phase per step
    /// exceeds π: dx²·m/(π·ħ) for the finest axis.
    pub fn aliasing_bound(&self, psi: &WaveField) -> f64 {
        let dx = psi.grid().axes().iter().map(|a| a.dx()).fold(f64::INFINITY, f64::min);
        dx * dx * self.phys.mass / (std::f64::consts::PI * self.phys.hbar)
    }

    fn validate(&self) -> Result<(), PropagationError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(PropagationError::Config("dt must be positive and finite"));
        }
        if !(self.phys.hbar > 0.0 && self.phys.mass > 0.0) {
            return Err(PropagationError::Config("hbar and mass must be positive"));
        }
        if self.snapshot_stride == 0 {
            return Err(PropagationError::Config("snapshot stride must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PropagationError {
    #[error("invalid propagator config: {0}")]
    Config(&'static str),
    #[error("initial state is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("potential grid differs from the wave-function grid")]
    GridMismatch,
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PropagationWarning {
    /// dt exceeds dx²·m/(π·ħ).
    DtAboveAliasingBound { dt: f64, bound: f64 },
    /// Momentum content is approaching the Nyquist wavenumber.
    Aliasing { time: f64, tail_fraction: f64 },
    /// The packet has reached the outer 10 % of the periodic box.
    EdgeLeak { time: f64, edge_amplitude: f64 },
}

#[derive(Debug, Clone)]
pub struct Propagation {
    pub snapshots: Vec<WaveField>,
    pub warnings: Vec<PropagationWarning>,
}

impl Propagation {
    pub fn last(&self) -> &WaveField {
        self.snapshots.last().expect("at least the initial snapshot")
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time()).collect()
    }
}

/// Precomputed split-step factors for one grid, potential and dt.
pub struct Propagator {
    ops: SpectralOps,
    half_kinetic: Vec<C64>,
    potential_phase: Vec<C64>,
    dt: f64,
}

impl Propagator {
    /// `dt` may be negative to run backwards in time.
    pub fn new(psi: &WaveField, potential: &Potential, dt: f64, phys: Physics) -> Result<Self, PropagationError> {
        let grid = psi.grid();
        if let Potential::Grid(f) = potential {
            if f.grid() != grid {
                return Err(PropagationError::GridMismatch);
            }
        }
        let ops = SpectralOps::new(grid);
        let v = potential.as_field(grid, phys.mass)?;
        let half_kinetic = (0..grid.len())
            .map(|i| {
                let m = grid.unravel(i);
                let k2: f64 = (0..grid.dim()).map(|d| ops.wavenumbers(d)[m[d]].powi(2)).sum();
                C64::from_polar(1.0, -phys.hbar * k2 * dt / (4.0 * phys.mass))
            })
            .collect();
        let potential_phase = v.values().iter().map(|&v| C64::from_polar(1.0, -v * dt / phys.hbar)).collect();
        Ok(Self { ops, half_kinetic, potential_phase, dt })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn kinetic(&self, psi: &mut [C64]) {
        self.ops.forward(psi);
        psi.iter_mut().zip(&self.half_kinetic).for_each(|(z, k)| *z *= k);
        self.ops.inverse(psi);
    }

    /// One Strang step in place.
    pub fn step(&self, psi: &mut [C64]) {
        self.kinetic(psi);
        psi.iter_mut().zip(&self.potential_phase).for_each(|(z, p)| *z *= p);
        self.kinetic(psi);
    }

    /// Fraction of spectral weight with |k| above 90 % of the Nyquist wavenumber.
    pub fn spectral_tail(&self, psi: &[C64]) -> f64 {
        let grid = self.ops.grid();
        let mut work = psi.to_vec();
        self.ops.forward(&mut work);
        let (mut tail, mut total) = (0.0, 0.0);
        for (i, z) in work.iter().enumerate() {
            let m = grid.unravel(i);
            let w = z.norm_sqr();
            total += w;
            let high = (0..grid.dim()).any(|d| {
                let a = grid.axis(d);
                self.ops.wavenumbers(d)[m[d]].abs() > 0.9 * std::f64::consts::PI / a.dx()
            });
            if high {
                tail += w;
            }
        }
        if total > 0.0 {
            tail / total
        } else {
            0.0
        }
    }
}

/// Largest |ψ| within 10 % of any box edge.
pub fn edge_amplitude(psi: &WaveField) -> f64 {
    let grid = psi.grid();
    psi.values()
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let m = grid.unravel(*i);
            grid.axes().iter().enumerate().any(|(d, a)| {
                let band = (a.n as f64 * 0.1).ceil() as usize;
                m[d] < band || m[d] >= a.n - band
            })
        })
        .map(|(_, z)| z.norm())
        .fold(0.0, f64::max)
}

fn run(
    psi0: &WaveField,
    potential: &Potential,
    cfg: &PropagatorConfig,
    sign: f64,
) -> Result<Propagation, PropagationError> {
    cfg.validate()?;
    let norm = psi0.norm_sq();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(PropagationError::NotNormalized(norm));
    }
    let dt = sign * cfg.dt;
    let prop = Propagator::new(psi0, potential, dt, cfg.phys)?;
    let mut warnings = Vec::new();
    let bound = cfg.aliasing_bound(psi0);
    if cfg.dt > bound {
        warnings.push(PropagationWarning::DtAboveAliasingBound { dt: cfg.dt, bound });
    }
    let mut aliasing_seen = false;
    let mut edge_seen = false;
    let mut monitor = |psi: &WaveField, warnings: &mut Vec<PropagationWarning>| {
        if !aliasing_seen {
            let tail = prop.spectral_tail(psi.values());
            if tail > SPECTRAL_TAIL_LIMIT {
                aliasing_seen = true;
                warnings.push(PropagationWarning::Aliasing { time: psi.time(), tail_fraction: tail });
            }
        }
        if !edge_seen {
            let e = edge_amplitude(psi);
            if e >= EDGE_AMPLITUDE_LIMIT {
                edge_seen = true;
                warnings.push(PropagationWarning::EdgeLeak { time: psi.time(), edge_amplitude: e });
            }
        }
    };
    monitor(psi0, &mut warnings);
    let mut snapshots = vec![psi0.clone()];
    let grid = psi0.grid().clone();
    let t0 = psi0.time();
    let mut work = psi0.values().to_vec();
    for step in 1..=cfg.steps {
        prop.step(&mut work);
        if step % cfg.snapshot_stride == 0 || step == cfg.steps {
            let snap = WaveField::new(grid.clone(), work.clone(), t0 + step as f64 * dt)?;
            monitor(&snap, &mut warnings);
            snapshots.push(snap);
        }
    }
    Ok(Propagation { snapshots, warnings })
}

/// Propagates `psi0` forward by `cfg.steps` Strang steps of size `cfg.dt`.
///
/// Snapshot 0 is `psi0` itself; later snapshots follow every
/// `cfg.snapshot_stride` steps and the final state is always included.
pub fn propagate(
    psi0: &WaveField,
    potential: &Potential,
    cfg: &PropagatorConfig,
) -> Result<Propagation, PropagationError> {
    run(psi0, potential, cfg, 1.0)
}

/// Same as [`propagate`] but with time running backwards.
pub fn propagate_backward(
    psi0: &WaveField,
    potential: &Potential,
    cfg: &PropagatorConfig,
) -> Result<Propagation, PropagationError> {
    run(psi0, potential, cfg, -1.0)
}

/// ⟨H⟩ with the kinetic term evaluated spectrally.
pub fn energy(psi: &WaveField, potential: &Potential, phys: Physics) -> Result<f64, FieldError> {
    let grid = psi.grid();
    let ops = SpectralOps::new(grid);
    let lap = ops.laplacian_complex(psi.values());
    let v = potential.as_field(grid, phys.mass)?;
    let kin: f64 = psi.values().iter().zip(&lap).map(|(z, l)| (z.conj() * l).re).sum::<f64>()
        * (-phys.hbar * phys.hbar / (2.0 * phys.mass));
    let pot: f64 = psi.values().iter().zip(v.values()).map(|(z, v)| v * z.norm_sqr()).sum();
    Ok((kin + pot) * grid.cell_volume())
}

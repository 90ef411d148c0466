//! Scenario configuration files (TOML, strict schema).
//!
//! Physics parameters have no defaults in code: every value a run depends on
//! must appear in the file. Unknown keys are rejected.

use serde::{Deserialize, Serialize};

use super::ConfigError;
use crate::bohm::Sampler;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: String,
    pub grid: GridConfig,
    pub physics: PhysicsConfig,
    pub run: RunConfig,
    pub output: OutputConfig,
    pub state: Option<StateConfig>,
    pub ensemble: Option<EnsembleConfig>,
    pub classical: Option<ClassicalConfig>,
    pub divergence: Option<DivergenceConfig>,
    pub semiclassical: Option<SemiclassicalConfig>,
    pub reconstruction: Option<ReconstructionConfig>,
    pub double_slit: Option<DoubleSlitConfig>,
}

/// Square grid: every axis has `n` points on `[qmin, qmax)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub n: usize,
    pub qmin: f64,
    pub qmax: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialName {
    Free,
    Harmonic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    pub hbar: f64,
    pub mass: f64,
    pub potential: PotentialName,
    /// Required for the harmonic potential, forbidden otherwise.
    pub omega: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateConfig {
    /// |ψ|² has standard deviation `sigma`; phase e^{ip·q/ħ}.
    Gaussian {
        center: Vec<f64>,
        sigma: f64,
        momentum: Vec<f64>,
    },
    PlaneWave {
        momentum: Vec<f64>,
    },
    DoubleSlit {
        separation: f64,
        width: f64,
        forward_momentum: f64,
    },
    /// Displaced ground state of the harmonic potential.
    Coherent {
        displacement: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dt: f64,
    pub t_end: f64,
    pub snapshot_stride: usize,
    pub dt_traj: Option<f64>,
    /// Node threshold relative to max |ψ|.
    pub node_eps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub n: usize,
    pub sampler: Sampler,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Relative to the output root.
    pub directory: String,
    pub formats: Vec<Format>,
    /// How many trajectories go into the trajectory dump.
    pub max_trajectories: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalConfig {
    pub momentum: f64,
    pub q0: f64,
    /// Start time for the circular action (singular at t = 0).
    pub t0: f64,
    pub hj_samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DivergenceConfig {
    pub q0: f64,
    pub center: f64,
    pub sigma_a: f64,
    pub sigma_b: f64,
    pub momentum: f64,
    pub classical_t0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemiclassicalConfig {
    pub hbars: Vec<f64>,
    pub q0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructionConfig {
    pub center: f64,
    pub k: usize,
    pub deltas: Vec<f64>,
    /// Momentum of the single classical trajectory reconstructed alongside.
    pub classical_momentum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoubleSlitConfig {
    pub bins: usize,
    pub histogram_range: [f64; 2],
    pub min_peaks: usize,
    /// Expected peaks below this fraction of the tallest are ignored.
    pub peak_threshold: f64,
}

fn err(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { path: path.to_string(), message: message.into() }
}

fn positive(path: &str, x: f64) -> Result<(), ConfigError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(err(path, format!("must be positive and finite, got {x}")))
    }
}

fn finite(path: &str, x: f64) -> Result<(), ConfigError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(err(path, "must be finite"))
    }
}

fn vector(path: &str, v: &[f64], dim: usize) -> Result<(), ConfigError> {
    if v.len() != dim {
        return Err(err(path, format!("needs {dim} components, got {}", v.len())));
    }
    v.iter().try_for_each(|x| finite(path, *x))
}

fn inside(path: &str, x: f64, g: &GridConfig) -> Result<(), ConfigError> {
    if x >= g.qmin && x < g.qmax {
        Ok(())
    } else {
        Err(err(path, format!("{x} lies outside the grid [{}, {})", g.qmin, g.qmax)))
    }
}

pub(crate) fn require<'a, T>(section: &'a Option<T>, path: &str) -> Result<&'a T, ConfigError> {
    section.as_ref().ok_or_else(|| err(path, "section is required by this scenario"))
}

impl ScenarioConfig {
    pub fn dt_traj(&self) -> Result<f64, ConfigError> {
        self.run.dt_traj.ok_or_else(|| err("run.dt_traj", "required by this scenario"))
    }

    /// Range checks that do not depend on the scenario.
    pub fn validate_common(&self) -> Result<(), ConfigError> {
        let g = &self.grid;
        if !(g.dim == 1 || g.dim == 2) {
            return Err(err("grid.dim", format!("must be 1 or 2, got {}", g.dim)));
        }
        if g.n < crate::grid::MIN_POINTS || !g.n.is_power_of_two() {
            return Err(err("grid.n", format!("must be a power of two >= {}, got {}", crate::grid::MIN_POINTS, g.n)));
        }
        finite("grid.qmin", g.qmin)?;
        finite("grid.qmax", g.qmax)?;
        if !(g.qmax > g.qmin) {
            return Err(err("grid.qmax", "must exceed grid.qmin"));
        }
        positive("physics.hbar", self.physics.hbar)?;
        positive("physics.mass", self.physics.mass)?;
        match (self.physics.potential, self.physics.omega) {
            (PotentialName::Harmonic, Some(w)) => positive("physics.omega", w)?,
            (PotentialName::Harmonic, None) => return Err(err("physics.omega", "required for the harmonic potential")),
            (PotentialName::Free, Some(_)) => {
                return Err(err("physics.omega", "only allowed with the harmonic potential"))
            }
            (PotentialName::Free, None) => {}
        }
        positive("run.dt", self.run.dt)?;
        positive("run.t_end", self.run.t_end)?;
        if self.run.snapshot_stride == 0 {
            return Err(err("run.snapshot_stride", "must be at least 1"));
        }
        let steps = self.run.t_end / self.run.dt;
        if (steps - steps.round()).abs() > 1e-6 * steps.max(1.0) {
            return Err(err("run.t_end", "must be a whole number of run.dt steps"));
        }
        if let Some(h) = self.run.dt_traj {
            positive("run.dt_traj", h)?;
            let snap = self.run.dt * self.run.snapshot_stride as f64;
            if h > snap * (1.0 + 1e-9) {
                return Err(err("run.dt_traj", format!("must not exceed the snapshot interval {snap}")));
            }
        }
        if let Some(e) = self.run.node_eps {
            if !(e > 0.0 && e < 1.0) {
                return Err(err("run.node_eps", "must lie in (0, 1)"));
            }
        }
        if self.output.directory.is_empty() || std::path::Path::new(&self.output.directory).is_absolute() {
            return Err(err("output.directory", "must be a non-empty relative path"));
        }
        if self.output.formats.is_empty() {
            return Err(err("output.formats", "must list at least one format"));
        }
        if let Some(s) = &self.state {
            self.validate_state(s)?;
        }
        if let Some(e) = &self.ensemble {
            if e.n == 0 {
                return Err(err("ensemble.n", "must be at least 1"));
            }
            if e.sampler == Sampler::Explicit {
                return Err(err(
                    "ensemble.sampler",
                    "explicit ensembles cannot come from a config; use born or uniform",
                ));
            }
        }
        Ok(())
    }

    fn validate_state(&self, s: &StateConfig) -> Result<(), ConfigError> {
        let d = self.grid.dim;
        match s {
            StateConfig::Gaussian { center, sigma, momentum } => {
                vector("state.center", center, d)?;
                positive("state.sigma", *sigma)?;
                vector("state.momentum", momentum, d)?;
                center.iter().try_for_each(|c| inside("state.center", *c, &self.grid))
            }
            StateConfig::PlaneWave { momentum } => vector("state.momentum", momentum, d),
            StateConfig::DoubleSlit { separation, width, forward_momentum } => {
                positive("state.width", *width)?;
                finite("state.forward_momentum", *forward_momentum)?;
                if !(*separation >= 0.0) {
                    return Err(err("state.separation", "must be non-negative"));
                }
                if *separation > 0.0 && separation <= width {
                    return Err(err("state.separation", "must exceed state.width (or be 0 for a single slit)"));
                }
                Ok(())
            }
            StateConfig::Coherent { displacement } => {
                if self.physics.potential != PotentialName::Harmonic {
                    return Err(err("state.kind", "coherent states need the harmonic potential"));
                }
                vector("state.displacement", displacement, d)
            }
        }
    }

    pub(crate) fn validate_classical(&self) -> Result<&ClassicalConfig, ConfigError> {
        let c = require(&self.classical, "classical")?;
        finite("classical.momentum", c.momentum)?;
        finite("classical.q0", c.q0)?;
        positive("classical.t0", c.t0)?;
        if !(c.t0 < self.run.t_end) {
            return Err(err("classical.t0", "must precede run.t_end"));
        }
        if c.hj_samples == 0 {
            return Err(err("classical.hj_samples", "must be at least 1"));
        }
        Ok(c)
    }

    pub(crate) fn validate_divergence(&self) -> Result<&DivergenceConfig, ConfigError> {
        let c = require(&self.divergence, "divergence")?;
        inside("divergence.q0", c.q0, &self.grid)?;
        inside("divergence.center", c.center, &self.grid)?;
        positive("divergence.sigma_a", c.sigma_a)?;
        positive("divergence.sigma_b", c.sigma_b)?;
        finite("divergence.momentum", c.momentum)?;
        positive("divergence.classical_t0", c.classical_t0)?;
        Ok(c)
    }

    pub(crate) fn validate_semiclassical(&self) -> Result<&SemiclassicalConfig, ConfigError> {
        let c = require(&self.semiclassical, "semiclassical")?;
        if c.hbars.len() < 2 {
            return Err(err("semiclassical.hbars", "need at least two values"));
        }
        c.hbars.iter().try_for_each(|h| positive("semiclassical.hbars", *h))?;
        if c.hbars.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(err("semiclassical.hbars", "must be strictly decreasing"));
        }
        inside("semiclassical.q0", c.q0, &self.grid)?;
        Ok(c)
    }

    pub(crate) fn validate_reconstruction(&self) -> Result<&ReconstructionConfig, ConfigError> {
        let c = require(&self.reconstruction, "reconstruction")?;
        inside("reconstruction.center", c.center, &self.grid)?;
        if c.k < 2 {
            return Err(err("reconstruction.k", "must be at least 2"));
        }
        if c.deltas.is_empty() {
            return Err(err("reconstruction.deltas", "must not be empty"));
        }
        let dx = (self.grid.qmax - self.grid.qmin) / self.grid.n as f64;
        for d in &c.deltas {
            positive("reconstruction.deltas", *d)?;
            if *d < 2.0 * dx {
                return Err(err("reconstruction.deltas", format!("{d} is below two grid cells ({})", 2.0 * dx)));
            }
        }
        if c.deltas.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(err("reconstruction.deltas", "must be strictly decreasing"));
        }
        finite("reconstruction.classical_momentum", c.classical_momentum)?;
        Ok(c)
    }

    pub(crate) fn validate_double_slit(&self) -> Result<&DoubleSlitConfig, ConfigError> {
        let c = require(&self.double_slit, "double_slit")?;
        if c.bins < 4 {
            return Err(err("double_slit.bins", "need at least 4 bins"));
        }
        if !(c.histogram_range[1] > c.histogram_range[0]) {
            return Err(err("double_slit.histogram_range", "upper edge must exceed lower edge"));
        }
        if c.min_peaks == 0 {
            return Err(err("double_slit.min_peaks", "must be at least 1"));
        }
        if !(c.peak_threshold > 0.0 && c.peak_threshold < 1.0) {
            return Err(err("double_slit.peak_threshold", "must lie in (0, 1)"));
        }
        Ok(c)
    }
}

/// Parses a config, reporting the dotted path of the first offending key.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let de = toml::de::Deserializer::parse(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::Invalid {
            path: if path == "." { String::new() } else { path },
            message: e.into_inner().to_string(),
        }
    })
}

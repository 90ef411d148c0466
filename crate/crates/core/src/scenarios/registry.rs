use super::config::{require, PotentialName, ScenarioConfig, StateConfig};
use super::runners::{self, Context};
use super::{ConfigError, ScenarioError};

pub struct ScenarioInfo {
    pub name: &'static str,
    /// The topic of the source discussion this scenario operationalizes.
    pub anchor: &'static str,
    pub summary: &'static str,
    pub required: &'static [&'static str],
    pub(crate) validate: fn(&ScenarioConfig) -> Result<(), ConfigError>,
    pub(crate) run: fn(&mut Context) -> Result<(), ScenarioError>,
}

impl std::fmt::Debug for ScenarioInfo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScenarioInfo").field("name", &self.name).field("anchor", &self.anchor).finish()
    }
}

const BASE: [&str; 8] =
    ["scenario", "grid", "physics", "run.dt", "run.t_end", "run.snapshot_stride", "output", "state"];

/// Sorted by name.
static REGISTRY: [ScenarioInfo; 7] = [
    ScenarioInfo {
        name: "continuity-residual",
        anchor: "continuity equation",
        summary: "continuity residual of the split-step solution converges at second order in dt",
        required: &BASE,
        validate: validate_continuity,
        run: runners::continuity_residual,
    },
    ScenarioInfo {
        name: "double-slit-nocross",
        anchor: "two-slit interference",
        summary: "trajectories behind a double slit never cross the symmetry axis and fill the fringes",
        required: &["scenario", "grid", "physics", "run", "run.dt_traj", "output", "state", "ensemble", "double_slit"],
        validate: validate_double_slit,
        run: runners::double_slit,
    },
    ScenarioInfo {
        name: "equivariance-free-gaussian",
        anchor: "quantum equilibrium",
        summary: "a Born-distributed ensemble stays distributed as |psi_t|^2",
        required: &["scenario", "grid", "physics", "run", "run.dt_traj", "output", "state", "ensemble"],
        validate: validate_equivariance,
        run: runners::equivariance,
    },
    ScenarioInfo {
        name: "holland-nonuniqueness",
        anchor: "nonuniqueness of the classical action",
        summary: "plane-wave and circular actions generate the same free trajectory",
        required: &["scenario", "grid", "physics", "run", "run.dt_traj", "output", "classical"],
        validate: validate_holland,
        run: runners::holland,
    },
    ScenarioInfo {
        name: "p2-divergence",
        anchor: "future motion from identical initial data",
        summary: "equal position and momentum, different amplitude: quantum paths separate, classical ones do not",
        required: &["scenario", "grid", "physics", "run", "run.dt_traj", "output", "divergence"],
        validate: validate_divergence,
        run: runners::divergence,
    },
    ScenarioInfo {
        name: "reconstruction-bundle",
        anchor: "reconstruction along a trajectory",
        summary: "recovering S and R along a path needs a bundle of neighbours; error falls with spacing",
        required: &["scenario", "grid", "physics", "run", "run.dt_traj", "output", "state", "reconstruction"],
        validate: validate_reconstruction,
        run: runners::reconstruction,
    },
    ScenarioInfo {
        name: "semiclassical-sweep",
        anchor: "classical limit",
        summary: "Bohmian and classical paths from one preparation approach each other as hbar shrinks",
        required: &["scenario", "grid", "physics", "run", "run.dt_traj", "output", "state", "semiclassical"],
        validate: validate_semiclassical,
        run: runners::semiclassical,
    },
];

pub fn registry() -> &'static [ScenarioInfo] {
    &REGISTRY
}

pub fn find_scenario(name: &str) -> Option<&'static ScenarioInfo> {
    REGISTRY.iter().find(|s| s.name == name)
}

fn invalid(path: &str, message: &str) -> ConfigError {
    ConfigError::Invalid { path: path.into(), message: message.into() }
}

fn line_only(cfg: &ScenarioConfig) -> Result<(), ConfigError> {
    if cfg.grid.dim != 1 {
        return Err(invalid("grid.dim", "this scenario runs on a line (dim = 1)"));
    }
    Ok(())
}

fn free_only(cfg: &ScenarioConfig) -> Result<(), ConfigError> {
    if cfg.physics.potential != PotentialName::Free {
        return Err(invalid("physics.potential", "this scenario needs the free potential"));
    }
    Ok(())
}

fn validate_continuity(cfg: &ScenarioConfig) -> Result<(), ConfigError> {
    require(&cfg.state, "state")?;
    let steps = (cfg.run.t_end / cfg.run.dt).round() as usize;
    if steps < 4 {
        return Err(invalid("run.t_end", "need at least 4 steps of run.dt"));
    }
    Ok(())
}

fn validate_equivariance(cfg: &ScenarioConfig) -> Result<(), ConfigError> {
    line_only(cfg)?;
    require(&cfg.state, "state")?;
    require(&cfg.ensemble, "ensemble")?;
    cfg.dt_traj()?;
    Ok(())
}

fn validate_double_slit(cfg: &ScenarioConfig) -> Result<(), ConfigError> {
    line_only(cfg)?;
    free_only(cfg)?;
    match require(&cfg.state, "state")? {
        StateConfig::DoubleSlit { .. } => {}
        _ => return Err(invalid("state.kind", "must be double-slit")),
    }
    require(&cfg.ensemble, "ensemble")?;
    cfg.dt_traj()?;
    cfg.validate_double_slit()?;
    Ok(())
}

fn validate_holland(cfg: &ScenarioConfig) -> Result<(), ConfigError> {
    line_only(cfg)?;
    free_only(cfg)?;
    cfg.dt_traj()?;
    cfg.validate_classical()?;
    Ok(())
}

fn validate_divergence(cfg: &ScenarioConfig) -> Result<(), ConfigError> {
    line_only(cfg)?;
    free_only(cfg)?;
    cfg.dt_traj()?;
    let d = cfg.validate_divergence()?;
    if d.sigma_a == d.sigma_b {
        return Err(invalid("divergence.sigma_b", "must differ from divergence.sigma_a"));
    }
    if !(d.classical_t0 < cfg.run.t_end) {
        return Err(invalid("divergence.classical_t0", "must precede run.t_end"));
    }
    Ok(())
}

fn validate_reconstruction(cfg: &ScenarioConfig) -> Result<(), ConfigError> {
    line_only(cfg)?;
    match require(&cfg.state, "state")? {
        StateConfig::Gaussian { .. } | StateConfig::Coherent { .. } => {}
        _ => return Err(invalid("state.kind", "must be gaussian or coherent")),
    }
    cfg.dt_traj()?;
    cfg.validate_reconstruction()?;
    Ok(())
}

fn validate_semiclassical(cfg: &ScenarioConfig) -> Result<(), ConfigError> {
    line_only(cfg)?;
    match require(&cfg.state, "state")? {
        StateConfig::Gaussian { .. } => {}
        _ => return Err(invalid("state.kind", "must be gaussian")),
    }
    cfg.dt_traj()?;
    cfg.validate_semiclassical()?;
    Ok(())
}

//! Config-driven experiment runner.
//!
//! A run reads one TOML file, validates it completely, executes the named
//! scenario and writes `report.json` plus CSV artifacts into
//! `<output root>/<output.directory>`. The output root is `$BOHMLAB_OUTPUT_ROOT`
//! when set, `runs` otherwise.

mod config;
mod registry;
mod report;
mod runners;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{
    parse_config, ClassicalConfig, DivergenceConfig, DoubleSlitConfig, EnsembleConfig, Format, GridConfig,
    OutputConfig, PhysicsConfig, PotentialName, ReconstructionConfig, RunConfig, ScenarioConfig, SemiclassicalConfig,
    StateConfig,
};
pub use registry::{find_scenario, registry, ScenarioInfo};
pub use report::{Check, Comparison, Report};

pub const OUTPUT_ROOT_ENV: &str = "BOHMLAB_OUTPUT_ROOT";
pub const DEFAULT_OUTPUT_ROOT: &str = "runs";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Read(String),
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

impl ConfigError {
    /// Dotted path of the offending key, when there is one.
    pub fn path(&self) -> Option<&str> {
        match self {
            ConfigError::Invalid { path, .. } if !path.is_empty() => Some(path),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("writing output: {0}")]
    Io(#[from] std::io::Error),
    #[error("scenario aborted: {0}")]
    Runtime(String),
}

impl ScenarioError {
    pub(crate) fn runtime(e: impl std::fmt::Display) -> Self {
        ScenarioError::Runtime(e.to_string())
    }
}

/// Reads, parses and validates a config file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read(format!("{}: {e}", path.display())))?;
    let cfg = parse_config(&text)?;
    check_config(&cfg)?;
    Ok(cfg)
}

/// Full validation: common ranges plus whatever the named scenario needs.
pub fn check_config(cfg: &ScenarioConfig) -> Result<(), ConfigError> {
    let info = find_scenario(&cfg.scenario).ok_or_else(|| ConfigError::Invalid {
        path: "scenario".into(),
        message: format!("unknown scenario {:?}", cfg.scenario),
    })?;
    cfg.validate_common()?;
    (info.validate)(cfg)
}

/// `$BOHMLAB_OUTPUT_ROOT` or `runs`.
pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT))
}

/// Runs a validated config with outputs under `root`.
pub fn run_scenario_in(cfg: &ScenarioConfig, root: &Path) -> Result<Report, ScenarioError> {
    check_config(cfg)?;
    let info = find_scenario(&cfg.scenario).expect("checked above");
    let dir = root.join(&cfg.output.directory);
    std::fs::create_dir_all(&dir)?;
    let mut ctx = runners::Context::new(cfg, dir);
    (info.run)(&mut ctx)?;
    let report = ctx.finish(&cfg.scenario)?;
    Ok(report)
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Report, ScenarioError> {
    run_scenario_in(cfg, &output_root())
}

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampling::{InitialEnsemble, Sampler};
use super::trajectory::{integrate_trajectory, Trajectory, TrajectoryConfig};
use super::velocity::VelocityField;
use super::BohmError;
use crate::ode::Point;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Ensemble {
    pub trajectories: Vec<Trajectory>,
    pub sampler: Sampler,
    pub seed: Option<u64>,
}

impl Ensemble {
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    /// Fraction of members halted at a node by the end of the run.
    pub fn halted_fraction(&self) -> f64 {
        self.trajectories.iter().filter(|t| t.halted()).count() as f64 / self.len().max(1) as f64
    }

    /// Fraction of members that halted before reaching step `k`.
    pub fn halted_fraction_at(&self, k: usize) -> f64 {
        self.trajectories.iter().filter(|t| t.at_step(k).is_none()).count() as f64 / self.len().max(1) as f64
    }

    /// Positions of the members still alive at step `k`.
    pub fn positions_at(&self, k: usize) -> Vec<Point> {
        self.trajectories.iter().filter_map(|t| t.at_step(k).copied()).collect()
    }
}

/// Integrates every member in parallel. Output order matches input order.
pub fn propagate_ensemble(
    field: &VelocityField,
    initial: &InitialEnsemble,
    cfg: &TrajectoryConfig,
) -> Result<Ensemble, BohmError> {
    let trajectories = initial
        .positions
        .par_iter()
        .map(|p| integrate_trajectory(field, &p[..initial.dim], cfg))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Ensemble { trajectories, sampler: initial.sampler, seed: initial.seed })
}

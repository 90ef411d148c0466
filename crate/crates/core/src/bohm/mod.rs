//! Pilot-wave dynamics: guiding-law velocities, trajectories, ensembles.

mod divergence;
mod ensemble;
mod sampling;
mod stats;
mod trajectory;
mod velocity;

use thiserror::Error;

pub use divergence::{divergence_experiment, DivergenceReport, PREPARATION_TOLERANCE, SEPARATION_FACTOR};
pub use ensemble::{propagate_ensemble, Ensemble};
pub use sampling::{explicit, member_rng, sample_born, sample_uniform, InitialEnsemble, LineDensity, Sampler};
pub use stats::{chi_square_gof, ks_p_value, ks_statistic, ChiSquare};
pub use trajectory::{integrate_trajectory, Stepper, Trajectory, TrajectoryConfig, TrajectoryStatus, MAX_HALVINGS};
pub use velocity::{velocity_at, GridVelocity, NodeProximity, VelocityField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BohmError {
    #[error("point lies outside the grid")]
    OutsideDomain,
    #[error("expected a {expected}-dimensional point, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("near a node: |psi| = {}, threshold {}", .0.amplitude, .0.threshold)]
    NodeProximity(NodeProximity),
    #[error("no snapshots")]
    NoSnapshots,
    #[error("snapshots live on different grids")]
    GridMismatch,
    #[error("snapshot times must increase strictly")]
    TimesNotIncreasing,
    #[error("window [{t_start}, {t_end}] is not covered by the snapshots")]
    TimeRange { t_start: f64, t_end: f64 },
    #[error("invalid configuration: {0}")]
    Config(&'static str),
    #[error("preparations disagree on the phase gradient at the start point by {mismatch:e}")]
    PreparationMismatch { mismatch: f64 },
}

impl From<NodeProximity> for BohmError {
    fn from(n: NodeProximity) -> Self {
        BohmError::NodeProximity(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Physics, WaveField, C64};
    use crate::grid::SpatialGrid;
    use crate::polar::to_polar;
    use crate::schrodinger::{propagate, Potential, PropagatorConfig};

    const EPS: f64 = 1e-6;

    fn free_run(n: usize, l: f64, sigma: f64, dt: f64, steps: usize, stride: usize) -> Vec<WaveField> {
        let grid = SpatialGrid::line(n, -l, l).unwrap();
        let psi = WaveField::gaussian(&grid, &[0.0], sigma, &[0.0], 1.0).unwrap();
        let cfg = PropagatorConfig::new(dt, steps, Physics::default()).with_stride(stride);
        propagate(&psi, &Potential::Free, &cfg).unwrap().snapshots
    }

    #[test]
    fn plane_wave_velocity_and_motion() {
        let grid = SpatialGrid::line(64, 0.0, 2.0 * std::f64::consts::PI).unwrap();
        let psi = WaveField::plane_wave(&grid, &[2.0], 1.0).unwrap();
        for x in [0.1, 1.3, 5.9] {
            let v = velocity_at(&psi, &[x], Physics::default(), EPS).unwrap();
            assert!((v[0] - 2.0).abs() < 1e-9);
        }
        let field = VelocityField::stationary(
            GridVelocity::from_wave(&psi, Physics::default(), EPS, &crate::SpectralOps::new(&grid)),
            Physics::default(),
        );
        let tr = integrate_trajectory(&field, &[0.5], &TrajectoryConfig::new(0.01, 0.0, 1.0)).unwrap();
        assert_eq!(tr.status, TrajectoryStatus::Completed);
        assert!((tr.last()[0] - 2.5).abs() < 1e-8);
        assert_eq!(tr.times.len(), 101);
    }

    #[test]
    fn real_gaussian_has_zero_velocity() {
        let grid = SpatialGrid::line(256, -10.0, 10.0).unwrap();
        let psi = WaveField::gaussian(&grid, &[0.0], 1.0, &[0.0], 1.0).unwrap();
        for x in [-2.0, 0.3, 1.7] {
            assert!(velocity_at(&psi, &[x], Physics::default(), EPS).unwrap()[0].abs() < 1e-12);
        }
        assert_eq!(velocity_at(&psi, &[10.0], Physics::default(), EPS), Err(BohmError::OutsideDomain));
    }

    #[test]
    fn spreading_gaussian_velocity_matches_phase() {
        let snaps = free_run(1024, 20.0, 1.0, 2e-3, 500, 500);
        let psi = snaps.last().unwrap();
        let t = psi.time();
        for q in [-2.0, -0.7, 0.4, 1.9] {
            let v = velocity_at(psi, &[q], Physics::default(), EPS).unwrap()[0];
            let exact = q * t / (4.0 + t * t);
            assert!((v - exact).abs() < 1e-4 * exact.abs(), "q={q} v={v} exact={exact}");
        }
    }

    #[test]
    fn velocity_routes_agree_off_nodes() {
        let snaps = free_run(512, 20.0, 1.0, 5e-3, 200, 200);
        let psi = snaps.last().unwrap().with_global_phase(0.7);
        let ops = crate::SpectralOps::new(psi.grid());
        let a = GridVelocity::from_wave(&psi, Physics::default(), EPS, &ops);
        let b = GridVelocity::from_polar(&to_polar(&psi, EPS, 1.0).unwrap(), Physics::default(), EPS);
        let amp: Vec<f64> = psi.values().iter().map(|z| z.norm()).collect();
        let top = psi.max_abs();
        for (i, &r) in amp.iter().enumerate() {
            if r > 1e-3 * top {
                assert!((a.component(0)[i] - b.component(0)[i]).abs() < 1e-8, "i={i}");
            }
        }
    }

    #[test]
    fn trajectory_follows_packet_width() {
        let snaps = free_run(1024, 20.0, 1.0, 2e-3, 1000, 10);
        let field = VelocityField::from_snapshots(&snaps, Physics::default(), EPS).unwrap();
        let tr = integrate_trajectory(&field, &[1.0], &TrajectoryConfig::new(0.02, 0.0, 2.0)).unwrap();
        assert!((tr.last()[0] - 2f64.sqrt()).abs() < 1e-3, "{}", tr.last()[0]);
    }

    #[test]
    fn ground_state_trajectories_are_static() {
        let grid = SpatialGrid::line(256, -10.0, 10.0).unwrap();
        let psi = crate::schrodinger::harmonic_coherent_state(&grid, 1.0, Physics::default(), &[0.0], &[0.0]).unwrap();
        let cfg = PropagatorConfig::new(2.5e-4, 8000, Physics::default()).with_stride(400);
        let snaps = propagate(&psi, &Potential::harmonic(1.0), &cfg).unwrap().snapshots;
        let field = VelocityField::from_snapshots(&snaps, Physics::default(), EPS).unwrap();
        let tr = integrate_trajectory(&field, &[0.8], &TrajectoryConfig::new(0.05, 0.0, 2.0)).unwrap();
        let drift = tr.positions.iter().map(|p| (p[0] - 0.8).abs()).fold(0.0, f64::max);
        assert!(drift < 1e-8, "drift {drift}");
    }

    #[test]
    fn born_ensemble_is_equivariant() {
        let snaps = free_run(1024, 20.0, 1.0, 2e-3, 1000, 10);
        let field = VelocityField::from_snapshots(&snaps, Physics::default(), EPS).unwrap();
        let ens0 = sample_born(&snaps[0], 10_000, 42).unwrap();
        let d0 = LineDensity::from_wave(&snaps[0]);
        let xs0: Vec<f64> = ens0.positions.iter().map(|p| p[0]).collect();
        assert!(ks_statistic(&xs0, |x| d0.cdf(x)) < 0.02);
        let ens = propagate_ensemble(&field, &ens0, &TrajectoryConfig::new(0.02, 0.0, 2.0)).unwrap();
        assert_eq!(ens.halted_fraction(), 0.0);
        let d = LineDensity::from_wave(snaps.last().unwrap());
        let xs: Vec<f64> = ens.positions_at(100).iter().map(|p| p[0]).collect();
        let ks = ks_statistic(&xs, |x| d.cdf(x));
        assert!(ks < 0.02, "ks {ks}");
        assert!(chi_square_gof(&xs, &d, 20).p_value > 1e-4);
    }

    #[test]
    fn uniform_start_is_rejected_by_ks() {
        let grid = SpatialGrid::line(256, -10.0, 10.0).unwrap();
        let psi = WaveField::gaussian(&grid, &[0.0], 1.0, &[0.0], 1.0).unwrap();
        let ens = sample_uniform(&grid, 2000, 7).unwrap();
        let d = LineDensity::from_wave(&psi);
        let xs: Vec<f64> = ens.positions.iter().map(|p| p[0]).collect();
        let ks = ks_statistic(&xs, |x| d.cdf(x));
        assert!(ks > 0.2 && ks_p_value(ks, xs.len()) < 1e-6);
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let grid = SpatialGrid::line(128, -8.0, 8.0).unwrap();
        let psi = WaveField::gaussian(&grid, &[0.0], 1.0, &[0.0], 1.0).unwrap();
        let a = sample_born(&psi, 100, 3).unwrap();
        let b = sample_born(&psi, 100, 3).unwrap();
        let c = sample_born(&psi, 100, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        // prefix stability: member i does not depend on ensemble size
        assert_eq!(sample_born(&psi, 10, 3).unwrap().positions[..], a.positions[..10]);
    }

    #[test]
    fn two_dimensional_rejection_sampling() {
        let ax = crate::grid::Axis::new(64, -8.0, 8.0);
        let grid = SpatialGrid::plane(ax, ax).unwrap();
        let psi = WaveField::gaussian(&grid, &[1.0, -0.5], 1.0, &[0.0, 0.0], 1.0).unwrap();
        let ens = sample_born(&psi, 20_000, 1).unwrap();
        let n = ens.positions.len() as f64;
        let mx = ens.positions.iter().map(|p| p[0]).sum::<f64>() / n;
        let my = ens.positions.iter().map(|p| p[1]).sum::<f64>() / n;
        let vx = ens.positions.iter().map(|p| (p[0] - mx).powi(2)).sum::<f64>() / n;
        assert!((mx - 1.0).abs() < 0.03 && (my + 0.5).abs() < 0.03 && (vx - 1.0).abs() < 0.05);
    }

    #[test]
    fn trajectories_do_not_cross_in_one_dimension() {
        let snaps = free_run(1024, 20.0, 1.0, 2e-3, 1000, 10);
        let field = VelocityField::from_snapshots(&snaps, Physics::default(), EPS).unwrap();
        let ens0 = sample_born(&snaps[0], 100, 9).unwrap();
        let ens = propagate_ensemble(&field, &ens0, &TrajectoryConfig::new(0.02, 0.0, 2.0)).unwrap();
        let order = |k: usize| {
            let mut idx: Vec<usize> = (0..100).collect();
            let xs = ens.positions_at(k);
            idx.sort_by(|&a, &b| xs[a][0].total_cmp(&xs[b][0]));
            idx
        };
        let o0 = order(0);
        for k in 1..=100 {
            assert_eq!(order(k), o0);
        }
    }

    #[test]
    fn global_phase_leaves_trajectories_unchanged() {
        let snaps = free_run(512, 16.0, 1.0, 4e-3, 250, 5);
        let field = VelocityField::from_snapshots(&snaps, Physics::default(), EPS).unwrap();
        let cfg = TrajectoryConfig::new(0.02, 0.0, 1.0);
        let base = integrate_trajectory(&field, &[0.7], &cfg).unwrap();
        for alpha in [0.3, 1.9, 4.4] {
            let rotated: Vec<WaveField> = snaps.iter().map(|s| s.with_global_phase(alpha)).collect();
            let f2 = VelocityField::from_snapshots(&rotated, Physics::default(), EPS).unwrap();
            let tr = integrate_trajectory(&f2, &[0.7], &cfg).unwrap();
            for (a, b) in base.positions.iter().zip(&tr.positions) {
                assert!((a[0] - b[0]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn trajectories_halt_at_stationary_node() {
        // first excited oscillator state has a permanent node at 0
        let grid = SpatialGrid::line(256, -10.0, 10.0).unwrap();
        let psi = WaveField::from_fn(&grid, 0.0, |q| C64::new(q[0] * (-0.5 * q[0] * q[0]).exp(), 0.0)).unwrap();
        let ops = crate::SpectralOps::new(&grid);
        let field = VelocityField::stationary(
            GridVelocity::from_wave(&psi, Physics::default(), 0.05, &ops),
            Physics::default(),
        );
        let tr = integrate_trajectory(&field, &[0.01], &TrajectoryConfig::new(0.1, 0.0, 1.0)).unwrap();
        assert!(tr.halted());
        let ok = integrate_trajectory(&field, &[1.5], &TrajectoryConfig::new(0.1, 0.0, 1.0)).unwrap();
        assert!(!ok.halted());
    }

    #[test]
    fn divergence_of_different_widths() {
        let a = free_run(1024, 32.0, 1.0, 2e-3, 1000, 10);
        let b = free_run(1024, 32.0, 2.0, 2e-3, 1000, 10);
        let fa = VelocityField::from_snapshots(&a, Physics::default(), EPS).unwrap();
        let fb = VelocityField::from_snapshots(&b, Physics::default(), EPS).unwrap();
        let cfg = TrajectoryConfig::new(0.02, 0.0, 2.0);
        let rep = divergence_experiment(&fa, &fb, &[1.0], &cfg).unwrap();
        assert!(rep.final_separation > 0.1 && rep.diverged(), "{rep:?}");
        let same = divergence_experiment(&fa, &fa, &[1.0], &cfg).unwrap();
        assert_eq!(same.final_separation, 0.0);
    }

    #[test]
    fn divergence_rejects_mismatched_preparations() {
        let grid = SpatialGrid::line(256, -16.0, 16.0).unwrap();
        let a = WaveField::gaussian(&grid, &[0.0], 1.0, &[0.0], 1.0).unwrap();
        let b = WaveField::gaussian(&grid, &[0.0], 1.0, &[0.5], 1.0).unwrap();
        let ops = crate::SpectralOps::new(&grid);
        let fa =
            VelocityField::stationary(GridVelocity::from_wave(&a, Physics::default(), EPS, &ops), Physics::default());
        let fb =
            VelocityField::stationary(GridVelocity::from_wave(&b, Physics::default(), EPS, &ops), Physics::default());
        let err = divergence_experiment(&fa, &fb, &[1.0], &TrajectoryConfig::new(0.1, 0.0, 1.0)).unwrap_err();
        assert!(matches!(err, BohmError::PreparationMismatch { .. }));
    }

    #[test]
    fn config_errors() {
        let snaps = free_run(128, 10.0, 1.0, 1e-2, 10, 5);
        let field = VelocityField::from_snapshots(&snaps, Physics::default(), EPS).unwrap();
        assert!(matches!(
            integrate_trajectory(&field, &[0.0], &TrajectoryConfig::new(-0.1, 0.0, 0.1)),
            Err(BohmError::Config(_))
        ));
        assert!(matches!(
            integrate_trajectory(&field, &[0.0], &TrajectoryConfig::new(0.01, 0.0, 5.0)),
            Err(BohmError::TimeRange { .. })
        ));
        assert!(matches!(
            integrate_trajectory(&field, &[0.0, 1.0], &TrajectoryConfig::new(0.01, 0.0, 0.1)),
            Err(BohmError::Dimension { .. })
        ));
        assert!(VelocityField::from_snapshots(&[], Physics::default(), EPS).is_err());
        let empty = explicit(&[], 1).unwrap();
        let ens = propagate_ensemble(&field, &empty, &TrajectoryConfig::new(0.01, 0.0, 0.1)).unwrap();
        assert!(ens.is_empty() && ens.halted_fraction() == 0.0);
    }
}

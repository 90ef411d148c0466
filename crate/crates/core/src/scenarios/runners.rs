use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use serde_json::{Map, Value};

use super::config::{Format, PotentialName, ScenarioConfig, StateConfig};
use super::report::{Check, Comparison, Report};
use super::ScenarioError;
use crate::bohm::{
    divergence_experiment, ks_statistic, propagate_ensemble, sample_born, sample_uniform, Ensemble, InitialEnsemble,
    LineDensity, Sampler, Trajectory, TrajectoryConfig, VelocityField,
};
use crate::classical::{
    classical_trajectory, holland_nonuniqueness, sampled_hj_residual, semiclassical_compare, ActionField,
    ClassicalState, SemiclassicalSetup,
};
use crate::field::{Physics, WaveField};
use crate::grid::{Axis, SpatialGrid};
use crate::io as dump;
use crate::polar::DEFAULT_NODE_EPS;
use crate::reconstruction::{
    build_bundle, bundle_convergence, classical_reconstruct_along_c, reconstruct_along_c, ReconstructionError,
};
use crate::schrodinger::{
    continuity_residual as continuity, harmonic_coherent_state, make_double_slit_state, propagate, Potential,
    Propagation, PropagatorConfig,
};

const UNITARITY_TOLERANCE: f64 = 1e-10;
const KS_LIMIT: f64 = 0.02;
const HJ_LIMIT: f64 = 1e-10;
const COINCIDENCE_LIMIT: f64 = 1e-8;
const SEPARATION_LIMIT: f64 = 0.1;
const WIDTH_TOLERANCE: f64 = 1e-4;
const R_ERROR_LIMIT: f64 = 0.05;
/// Second-order convergence: the residual ratio must be 4 within 20 %.
const CONTINUITY_RATIO: (f64, f64) = (3.2, 4.8);

pub(crate) struct Context<'a> {
    pub cfg: &'a ScenarioConfig,
    dir: PathBuf,
    checks: Vec<Check>,
    artifacts: Vec<String>,
    warnings: Vec<String>,
}

impl<'a> Context<'a> {
    pub fn new(cfg: &'a ScenarioConfig, dir: PathBuf) -> Self {
        Self { cfg, dir, checks: Vec::new(), artifacts: Vec::new(), warnings: Vec::new() }
    }

    fn check(&mut self, name: &str, value: f64, cmp: Comparison, threshold: f64) {
        self.checks.push(Check::new(name, value, cmp, threshold));
    }

    fn flag(&mut self, name: &str, ok: bool) {
        self.checks.push(Check::flag(name, ok));
    }

    fn warn(&mut self, w: impl Into<String>) {
        self.warnings.push(w.into());
    }

    fn wants(&self, f: Format) -> bool {
        self.cfg.output.formats.contains(&f)
    }

    fn write(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> io::Result<()> {
        let mut out = BufWriter::new(File::create(self.dir.join(name))?);
        f(&mut out)?;
        out.flush()?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    /// Writes a numeric table as `<stem>.csv` and/or `<stem>.json`.
    fn table(&mut self, stem: &str, header: &[&str], rows: &[Vec<f64>]) -> io::Result<()> {
        if self.wants(Format::Csv) {
            self.write(&format!("{stem}.csv"), |o| dump::write_table_csv(o, header, rows))?;
        }
        if self.wants(Format::Json) {
            let records: Vec<Map<String, Value>> = rows
                .iter()
                .map(|r| header.iter().zip(r).map(|(h, v)| (h.to_string(), Value::from(*v))).collect())
                .collect();
            self.write(&format!("{stem}.json"), |o| {
                serde_json::to_writer_pretty(&mut *o, &records).map_err(io::Error::from)
            })?;
        }
        Ok(())
    }

    fn trajectories(&mut self, trajs: &[Trajectory], dim: usize) -> io::Result<()> {
        let n = self.cfg.output.max_trajectories.min(trajs.len());
        if n == 0 {
            return Ok(());
        }
        let keep = &trajs[..n];
        if self.wants(Format::Csv) {
            self.write("trajectories.csv", |o| dump::write_trajectories_csv(o, keep, dim))?;
        }
        if self.wants(Format::Json) {
            self.write("trajectories.json", |o| serde_json::to_writer(&mut *o, keep).map_err(io::Error::from))?;
        }
        Ok(())
    }

    fn ensemble_stats(&mut self, rows: &[(f64, f64, f64)]) -> io::Result<()> {
        if self.wants(Format::Csv) {
            self.write("ensemble_stats.csv", |o| dump::write_ensemble_stats_csv(o, rows))?;
        }
        if self.wants(Format::Json) {
            let v: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.0, r.1, r.2]).collect();
            let header = ["t", "ks_stat", "halted_frac"];
            let records: Vec<Map<String, Value>> = v
                .iter()
                .map(|r| header.iter().zip(r).map(|(h, x)| (h.to_string(), Value::from(*x))).collect())
                .collect();
            self.write("ensemble_stats.json", |o| {
                serde_json::to_writer_pretty(&mut *o, &records).map_err(io::Error::from)
            })?;
        }
        Ok(())
    }

    /// Writes `report.json` and returns the report. A run without checks
    /// does not pass.
    pub fn finish(self, scenario: &str) -> Result<Report, ScenarioError> {
        let report = Report {
            scenario: scenario.to_string(),
            passed: !self.checks.is_empty() && self.checks.iter().all(|c| c.passed),
            checks: self.checks,
            artifacts: self.artifacts,
            warnings: self.warnings,
        };
        let mut out = BufWriter::new(File::create(self.dir.join("report.json"))?);
        serde_json::to_writer_pretty(&mut out, &report).map_err(io::Error::from)?;
        writeln!(out)?;
        out.flush()?;
        Ok(report)
    }

    fn physics(&self) -> Physics {
        Physics::new(self.cfg.physics.hbar, self.cfg.physics.mass)
    }

    fn grid(&self) -> Result<SpatialGrid, ScenarioError> {
        let g = &self.cfg.grid;
        let axis = || Axis::new(g.n, g.qmin, g.qmax);
        let grid = if g.dim == 1 { SpatialGrid::new(vec![axis()]) } else { SpatialGrid::plane(axis(), axis()) };
        grid.map_err(ScenarioError::runtime)
    }

    fn potential(&self) -> Potential {
        match self.cfg.physics.potential {
            PotentialName::Free => Potential::Free,
            PotentialName::Harmonic => Potential::harmonic(self.cfg.physics.omega.expect("validated")),
        }
    }

    fn node_eps(&self) -> f64 {
        self.cfg.run.node_eps.unwrap_or(DEFAULT_NODE_EPS)
    }

    fn steps(&self) -> usize {
        (self.cfg.run.t_end / self.cfg.run.dt).round() as usize
    }

    fn initial_state(&self, grid: &SpatialGrid) -> Result<WaveField, ScenarioError> {
        let phys = self.physics();
        let state = self.cfg.state.as_ref().ok_or_else(|| ScenarioError::Runtime("no state section".into()))?;
        let psi = match state {
            StateConfig::Gaussian { center, sigma, momentum } => {
                WaveField::gaussian(grid, center, *sigma, momentum, phys.hbar).map_err(ScenarioError::runtime)?
            }
            StateConfig::PlaneWave { momentum } => {
                WaveField::plane_wave(grid, momentum, phys.hbar).map_err(ScenarioError::runtime)?
            }
            StateConfig::DoubleSlit { separation, width, forward_momentum } => {
                make_double_slit_state(grid, *separation, *width, *forward_momentum, phys.hbar)
                    .map_err(ScenarioError::runtime)?
            }
            StateConfig::Coherent { displacement } => {
                let omega = self.cfg.physics.omega.expect("validated");
                harmonic_coherent_state(grid, omega, phys, &vec![0.0; grid.dim()], displacement)
                    .map_err(ScenarioError::runtime)?
            }
        };
        Ok(psi)
    }

    /// Propagates with the configured dt and stride; solver warnings go into
    /// the report.
    fn propagate(
        &mut self,
        psi: &WaveField,
        dt: f64,
        steps: usize,
        stride: usize,
    ) -> Result<Propagation, ScenarioError> {
        let cfg = PropagatorConfig::new(dt, steps, self.physics()).with_stride(stride);
        let run = propagate(psi, &self.potential(), &cfg).map_err(ScenarioError::runtime)?;
        for w in &run.warnings {
            self.warn(serde_json::to_string(w).unwrap_or_else(|_| format!("{w:?}")));
        }
        Ok(run)
    }

    fn unitarity(&mut self, name: &str, run: &Propagation) {
        let drift = run.snapshots.iter().map(|s| (s.norm_sq() - 1.0).abs()).fold(0.0, f64::max);
        self.check(name, drift, Comparison::Below, UNITARITY_TOLERANCE);
    }

    /// One check per consecutive pair: `errs[i+1] / errs[i] < 1`.
    fn decreasing(&mut self, stem: &str, errs: &[f64]) {
        for (i, w) in errs.windows(2).enumerate() {
            self.check(&format!("{stem}_ratio_{}_{}", i + 1, i), w[1] / w[0], Comparison::Below, 1.0);
        }
    }

    fn trajectory_config(&self) -> TrajectoryConfig {
        TrajectoryConfig::new(self.cfg.run.dt_traj.expect("validated"), 0.0, self.cfg.run.t_end)
    }

    fn sample(&self, psi: &WaveField) -> Result<InitialEnsemble, ScenarioError> {
        let e = self.cfg.ensemble.as_ref().expect("validated");
        match e.sampler {
            Sampler::Born => sample_born(psi, e.n, e.seed),
            _ => sample_uniform(psi.grid(), e.n, e.seed),
        }
        .map_err(ScenarioError::runtime)
    }
}

/// Trajectory step index whose time matches `t`.
fn step_at(times: &[f64], t: f64) -> Option<usize> {
    times.iter().position(|s| (s - t).abs() < 1e-9 * t.abs().max(1.0))
}

/// KS statistic of the ensemble against |ψ|² at every snapshot the
/// trajectories visit. Rows are `(t, ks, halted_fraction)`.
fn ks_rows(ensemble: &Ensemble, snapshots: &[WaveField], axis: &Axis) -> Vec<(f64, f64, f64)> {
    let Some(first) = ensemble.trajectories.first() else {
        return Vec::new();
    };
    snapshots
        .iter()
        .filter_map(|s| {
            let k = step_at(&first.times, s.time())?;
            let xs: Vec<f64> = ensemble.positions_at(k).iter().map(|p| axis.wrap(p[0])).collect();
            let d = LineDensity::from_wave(s);
            Some((s.time(), ks_statistic(&xs, |x| d.cdf(x)), ensemble.halted_fraction_at(k)))
        })
        .collect()
}

fn record_ensemble(
    ctx: &mut Context,
    ensemble: &Ensemble,
    snapshots: &[WaveField],
    axis: &Axis,
) -> Result<f64, ScenarioError> {
    let rows = ks_rows(ensemble, snapshots, axis);
    if rows.len() < 2 {
        return Err(ScenarioError::Runtime(
            "trajectory steps never land on snapshot times; make the snapshot interval a multiple of run.dt_traj"
                .into(),
        ));
    }
    let worst = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    ctx.check("ks_stat_max", worst, Comparison::Below, KS_LIMIT);
    ctx.check("halted_fraction", ensemble.halted_fraction(), Comparison::Below, 1e-3);
    ctx.ensemble_stats(&rows)?;
    ctx.trajectories(&ensemble.trajectories, 1)?;
    Ok(worst)
}

pub(crate) fn equivariance(ctx: &mut Context) -> Result<(), ScenarioError> {
    let grid = ctx.grid()?;
    let psi = ctx.initial_state(&grid)?;
    let run = ctx.propagate(&psi, ctx.cfg.run.dt, ctx.steps(), ctx.cfg.run.snapshot_stride)?;
    ctx.unitarity("norm_drift", &run);
    let phys = ctx.physics();
    let mut rows = Vec::new();
    // free Gaussian spreading law, evaluated independently of the solver
    let analytic = match (&ctx.cfg.state, ctx.cfg.physics.potential) {
        (Some(StateConfig::Gaussian { sigma, .. }), PotentialName::Free) => {
            let s = *sigma;
            Some(move |t: f64| s * (1.0 + (phys.hbar * t / (2.0 * phys.mass * s * s)).powi(2)).sqrt())
        }
        _ => None,
    };
    let mut width_err: f64 = 0.0;
    for s in &run.snapshots {
        let (mean, width) = s.position_moments(0);
        let exact = analytic.map_or(f64::NAN, |f| f(s.time()));
        width_err = width_err.max((width - exact).abs() / exact);
        rows.push(vec![s.time(), s.norm_sq(), mean, width, exact]);
    }
    if analytic.is_some() {
        ctx.check("width_relative_error", width_err, Comparison::Below, WIDTH_TOLERANCE);
    } else {
        ctx.warn("width law only known for a free Gaussian; width check skipped");
    }
    ctx.table("moments", &["t", "norm", "mean", "width", "width_exact"], &rows)?;

    let field = VelocityField::from_snapshots(&run.snapshots, phys, ctx.node_eps()).map_err(ScenarioError::runtime)?;
    let initial = ctx.sample(&psi)?;
    let ensemble = propagate_ensemble(&field, &initial, &ctx.trajectory_config()).map_err(ScenarioError::runtime)?;
    record_ensemble(ctx, &ensemble, &run.snapshots, grid.axis(0))?;
    Ok(())
}

pub(crate) fn holland(ctx: &mut Context) -> Result<(), ScenarioError> {
    let c = ctx.cfg.classical.clone().expect("validated");
    let m = ctx.cfg.physics.mass;
    let dt = ctx.cfg.run.dt_traj.expect("validated");
    let t_end = ctx.cfg.run.t_end;
    let r = holland_nonuniqueness(c.momentum, c.q0, m, c.t0, t_end, dt).map_err(ScenarioError::runtime)?;
    ctx.check("max_deviation", r.max_deviation, Comparison::Below, COINCIDENCE_LIMIT);
    let q_range = (ctx.cfg.grid.qmin, ctx.cfg.grid.qmax);
    let plane = ActionField::plane_wave(&[c.momentum], 0.0, m);
    let circular = ActionField::circular(&[c.q0], m);
    let hj_plane =
        sampled_hj_residual(&plane, c.hj_samples, c.seed, q_range, (0.0, t_end)).map_err(ScenarioError::runtime)?;
    let hj_circ =
        sampled_hj_residual(&circular, c.hj_samples, c.seed, q_range, (c.t0, t_end)).map_err(ScenarioError::runtime)?;
    ctx.check("hj_residual_plane_wave", hj_plane, Comparison::Below, HJ_LIMIT);
    ctx.check("hj_residual_circular", hj_circ, Comparison::Below, HJ_LIMIT);
    let rows: Vec<Vec<f64>> = r
        .plane_wave
        .times
        .iter()
        .zip(&r.plane_wave.positions)
        .zip(&r.circular.positions)
        .map(|((t, a), b)| vec![*t, a[0], b[0], (a[0] - b[0]).abs()])
        .collect();
    ctx.table("holland", &["t", "q_plane_wave", "q_circular", "deviation"], &rows)?;
    Ok(())
}

pub(crate) fn divergence(ctx: &mut Context) -> Result<(), ScenarioError> {
    let d = ctx.cfg.divergence.clone().expect("validated");
    let grid = ctx.grid()?;
    let phys = ctx.physics();
    let (steps, stride) = (ctx.steps(), ctx.cfg.run.snapshot_stride);
    let mut fields = Vec::new();
    for sigma in [d.sigma_a, d.sigma_b] {
        let psi =
            WaveField::gaussian(&grid, &[d.center], sigma, &[d.momentum], phys.hbar).map_err(ScenarioError::runtime)?;
        let run = ctx.propagate(&psi, ctx.cfg.run.dt, steps, stride)?;
        ctx.unitarity(if fields.is_empty() { "norm_drift_a" } else { "norm_drift_b" }, &run);
        fields
            .push(VelocityField::from_snapshots(&run.snapshots, phys, ctx.node_eps()).map_err(ScenarioError::runtime)?);
    }
    let rep = divergence_experiment(&fields[0], &fields[1], &[d.q0], &ctx.trajectory_config())
        .map_err(ScenarioError::runtime)?;
    ctx.check("gradient_mismatch", rep.gradient_mismatch, Comparison::Below, crate::bohm::PREPARATION_TOLERANCE);
    ctx.check("quantum_separation", rep.final_separation, Comparison::Above, SEPARATION_LIMIT);
    ctx.check(
        "separation_over_tolerance",
        rep.final_separation / rep.integration_tolerance.max(f64::EPSILON),
        Comparison::Above,
        crate::bohm::SEPARATION_FACTOR,
    );

    // classical pair: the circular action emanates from the point that
    // reaches q0 at classical_t0 with the same momentum
    let m = phys.mass;
    let origin = d.q0 - d.momentum * d.classical_t0 / m;
    let dt = ctx.cfg.run.dt_traj.expect("validated");
    let cl = holland_nonuniqueness(d.momentum, origin, m, d.classical_t0, ctx.cfg.run.t_end, dt)
        .map_err(ScenarioError::runtime)?;
    ctx.check("classical_separation", cl.max_deviation, Comparison::Below, COINCIDENCE_LIMIT);
    let rows: Vec<Vec<f64>> = (0..rep.times.len())
        .map(|k| vec![rep.times[k], rep.a.positions[k][0], rep.b.positions[k][0], rep.separation[k]])
        .collect();
    ctx.table("divergence", &["t", "q_a", "q_b", "separation"], &rows)?;
    let rows: Vec<Vec<f64>> = cl
        .plane_wave
        .times
        .iter()
        .zip(&cl.plane_wave.positions)
        .zip(&cl.circular.positions)
        .map(|((t, a), b)| vec![*t, a[0], b[0], (a[0] - b[0]).abs()])
        .collect();
    ctx.table("classical_pair", &["t", "q_plane_wave", "q_circular", "deviation"], &rows)?;
    Ok(())
}

/// Local maxima of `expected` at or above `threshold · max`, each with the
/// basin between its neighbouring minima.
fn expected_peaks(expected: &[f64], threshold: f64) -> Vec<(usize, usize, usize)> {
    let n = expected.len();
    let top = expected.iter().copied().fold(0.0, f64::max);
    let mut peaks = Vec::new();
    for i in 1..n - 1 {
        if expected[i] > expected[i - 1] && expected[i] >= expected[i + 1] && expected[i] >= threshold * top {
            let mut lo = i;
            while lo > 0 && expected[lo - 1] < expected[lo] {
                lo -= 1;
            }
            let mut hi = i;
            while hi + 1 < n && expected[hi + 1] <= expected[hi] {
                hi += 1;
            }
            peaks.push((i, lo, hi));
        }
    }
    peaks
}

pub(crate) fn double_slit(ctx: &mut Context) -> Result<(), ScenarioError> {
    let ds = ctx.cfg.double_slit.clone().expect("validated");
    let grid = ctx.grid()?;
    let psi = ctx.initial_state(&grid)?;
    let run = ctx.propagate(&psi, ctx.cfg.run.dt, ctx.steps(), ctx.cfg.run.snapshot_stride)?;
    ctx.unitarity("norm_drift", &run);
    let field =
        VelocityField::from_snapshots(&run.snapshots, ctx.physics(), ctx.node_eps()).map_err(ScenarioError::runtime)?;
    let initial = ctx.sample(&psi)?;
    let ensemble = propagate_ensemble(&field, &initial, &ctx.trajectory_config()).map_err(ScenarioError::runtime)?;

    // the preparation is symmetric about q = 0
    let crossings = ensemble
        .trajectories
        .iter()
        .filter(|t| {
            let side = t.positions[0][0].signum();
            t.positions.iter().any(|p| p[0].signum() != side)
        })
        .count();
    ctx.check("axis_crossings", crossings as f64, Comparison::Equal, 0.0);
    record_ensemble(ctx, &ensemble, &run.snapshots, grid.axis(0))?;

    let [lo, hi] = ds.histogram_range;
    let width = (hi - lo) / ds.bins as f64;
    let last = run.last();
    let density = LineDensity::from_wave(last);
    let n = ensemble.len() as f64;
    let expected: Vec<f64> =
        (0..ds.bins).map(|b| density.cdf(lo + (b + 1) as f64 * width) - density.cdf(lo + b as f64 * width)).collect();
    let mut counts = vec![0.0; ds.bins];
    for t in &ensemble.trajectories {
        let x = grid.axis(0).wrap(t.last()[0]);
        if x >= lo && x < hi {
            counts[(((x - lo) / width) as usize).min(ds.bins - 1)] += 1.0 / n;
        }
    }
    let peaks = expected_peaks(&expected, ds.peak_threshold);
    let matched = peaks
        .iter()
        .filter(|&&(p, a, b)| {
            let arg = (a..=b).max_by(|&i, &j| counts[i].total_cmp(&counts[j]).then(j.cmp(&i))).unwrap_or(p);
            arg.abs_diff(p) <= 1
        })
        .count();
    ctx.check("matched_maxima", matched as f64, Comparison::AtLeast, ds.min_peaks as f64);
    if matched < peaks.len() {
        ctx.warn(format!("{} of {} expected maxima matched", matched, peaks.len()));
    }
    let rows: Vec<Vec<f64>> = (0..ds.bins)
        .map(|b| {
            let is_peak = peaks.iter().any(|p| p.0 == b);
            vec![lo + (b as f64 + 0.5) * width, counts[b], expected[b], f64::from(u8::from(is_peak))]
        })
        .collect();
    ctx.table("histogram", &["q", "empirical", "expected", "expected_peak"], &rows)?;
    Ok(())
}

pub(crate) fn semiclassical(ctx: &mut Context) -> Result<(), ScenarioError> {
    let sc = ctx.cfg.semiclassical.clone().expect("validated");
    let Some(StateConfig::Gaussian { center, sigma, momentum }) = ctx.cfg.state.clone() else {
        unreachable!("validated")
    };
    let grid = ctx.grid()?;
    let m = ctx.cfg.physics.mass;
    let amplitude =
        grid.axis(0).coords().into_iter().map(|q| (-(q - center[0]).powi(2) / (4.0 * sigma * sigma)).exp()).collect();
    let setup = SemiclassicalSetup {
        grid,
        potential: ctx.potential(),
        mass: m,
        amplitude,
        action: ActionField::plane_wave(&momentum, 0.0, m),
        q0: vec![sc.q0],
        t_end: ctx.cfg.run.t_end,
        dt: ctx.cfg.run.dt,
        stride: ctx.cfg.run.snapshot_stride,
        traj_dt: ctx.cfg.run.dt_traj.expect("validated"),
    };
    let pts = semiclassical_compare(&setup, &sc.hbars).map_err(ScenarioError::runtime)?;
    let errs: Vec<f64> = pts.iter().map(|p| p.max_error).collect();
    ctx.decreasing("max_error", &errs);
    for p in &pts {
        if p.halted {
            ctx.warn(format!("trajectory halted at a node for hbar = {}", p.hbar));
        }
        if p.propagation_warnings > 0 {
            ctx.warn(format!("{} solver warnings for hbar = {}", p.propagation_warnings, p.hbar));
        }
    }
    let rows: Vec<Vec<f64>> = pts.iter().map(|p| vec![p.hbar, p.max_error, f64::from(u8::from(p.halted))]).collect();
    ctx.table("sweep", &["hbar", "max_error", "halted"], &rows)?;
    Ok(())
}

pub(crate) fn reconstruction(ctx: &mut Context) -> Result<(), ScenarioError> {
    let rc = ctx.cfg.reconstruction.clone().expect("validated");
    let grid = ctx.grid()?;
    let psi = ctx.initial_state(&grid)?;
    let phys = ctx.physics();
    let run = ctx.propagate(&psi, ctx.cfg.run.dt, ctx.steps(), ctx.cfg.run.snapshot_stride)?;
    ctx.unitarity("norm_drift", &run);
    let pot = ctx.potential();
    let tcfg = ctx.trajectory_config();

    // a lone trajectory carries no transverse information
    let field = VelocityField::from_snapshots(&run.snapshots, phys, ctx.node_eps()).map_err(ScenarioError::runtime)?;
    let lone = build_bundle(&field, rc.center, rc.deltas[0], 0, &tcfg).map_err(ScenarioError::runtime)?;
    let refused = reconstruct_along_c(&lone, &pot, phys, 0.0, &[1.0]);
    ctx.flag("k0_insufficient_bundle", matches!(refused, Err(ReconstructionError::InsufficientBundle { k: 0 })));

    let rows = bundle_convergence(&run.snapshots, &pot, phys, rc.center, rc.k, &rc.deltas, &tcfg, ctx.node_eps())
        .map_err(ScenarioError::runtime)?;
    let errs: Vec<f64> = rows.iter().map(|r| r.err_s).collect();
    ctx.decreasing("err_s", &errs);
    let worst_r = rows.iter().map(|r| r.err_r).fold(0.0, f64::max);
    ctx.check("err_r_max", worst_r, Comparison::Below, R_ERROR_LIMIT);
    if ctx.wants(Format::Csv) {
        ctx.write("convergence.csv", |o| dump::write_convergence_csv(o, &rows))?;
    }
    if ctx.wants(Format::Json) {
        ctx.write("convergence.json", |o| serde_json::to_writer_pretty(&mut *o, &rows).map_err(std::io::Error::from))?;
    }

    // classical: the plane-wave action along its own straight line
    if pot.is_free() {
        let m = phys.mass;
        let p = rc.classical_momentum;
        let action = ActionField::plane_wave(&[p], 0.0, m);
        let st = ClassicalState { q0: vec![rc.center], p0: None, action: action.clone(), t0: 0.0 };
        let traj = classical_trajectory(&st, ctx.cfg.run.t_end, tcfg.dt).map_err(ScenarioError::runtime)?;
        let s0 = action.evaluate(&[rc.center], 0.0).map_err(ScenarioError::runtime)?;
        let s = classical_reconstruct_along_c(&traj, &pot, m, s0).map_err(ScenarioError::runtime)?;
        let mut dev: f64 = 0.0;
        let mut table = Vec::with_capacity(s.len());
        for ((t, q), s) in traj.times.iter().zip(&traj.positions).zip(&s) {
            let exact = action.evaluate(&q[..1], *t).map_err(ScenarioError::runtime)?;
            dev = dev.max((s - exact).abs());
            table.push(vec![*t, q[0], *s, exact]);
        }
        ctx.check("classical_action_deviation", dev, Comparison::Below, COINCIDENCE_LIMIT);
        ctx.table("classical_action", &["t", "q", "s_reconstructed", "s_exact"], &table)?;
    } else {
        ctx.warn("classical action comparison needs the free potential; skipped");
    }
    Ok(())
}

pub(crate) fn continuity_residual(ctx: &mut Context) -> Result<(), ScenarioError> {
    let grid = ctx.grid()?;
    let psi = ctx.initial_state(&grid)?;
    let phys = ctx.physics();
    let (dt, steps) = (ctx.cfg.run.dt, ctx.steps());
    let coarse = ctx.propagate(&psi, dt, steps, 1)?;
    let fine = ctx.propagate(&psi, 0.5 * dt, 2 * steps, 1)?;
    ctx.unitarity("norm_drift", &coarse);
    let rc = continuity(&coarse.snapshots, phys).map_err(ScenarioError::runtime)?;
    let rf = continuity(&fine.snapshots, phys).map_err(ScenarioError::runtime)?;
    // coarse residual i sits at step i + 1, i.e. fine snapshot 2i + 2 and fine residual 2i + 1
    let rows: Vec<Vec<f64>> =
        rc.iter().enumerate().map(|(i, r)| vec![coarse.snapshots[i + 1].time(), *r, rf[2 * i + 1]]).collect();
    let worst_c = rows.iter().map(|r| r[1]).fold(0.0, f64::max);
    let worst_f = rows.iter().map(|r| r[2]).fold(0.0, f64::max);
    let ratio = worst_c / worst_f;
    ctx.check("residual_ratio_min", ratio, Comparison::Above, CONTINUITY_RATIO.0);
    ctx.check("residual_ratio_max", ratio, Comparison::Below, CONTINUITY_RATIO.1);
    ctx.table("continuity", &["t", "residual_dt", "residual_half_dt"], &rows)?;
    Ok(())
}

//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Expected values come from closed forms computed here, not from the
//! solver: free Gaussian spreading, the exact free evolution of a two-packet
//! state, straight classical lines, and the symbolic quantum potential.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::Instant;

use bohmlab::bohm::{
    ks_statistic, propagate_ensemble, sample_born, velocity_at, Ensemble, TrajectoryConfig, VelocityField,
};
use bohmlab::classical::{
    classical_trajectory, holland_nonuniqueness, semiclassical_compare, ActionField, ClassicalState, SemiclassicalSetup,
};
use bohmlab::reconstruction::{
    build_bundle, bundle_convergence, classical_reconstruct_along_c, reconstruct_along_c, ReconstructionError,
};
use bohmlab::scenarios::{load_config, run_scenario_in};
use bohmlab::schrodinger::{continuity_residual, make_double_slit_state, propagate, Potential, PropagatorConfig};
use bohmlab::{quantum_potential, to_polar, Physics, SpatialGrid, WaveField, C64, DEFAULT_NODE_EPS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// σ(t) of |ψ|² for a free Gaussian.
fn free_width(sigma: f64, t: f64, hbar: f64, m: f64) -> f64 {
    sigma * (1.0 + (hbar * t / (2.0 * m * sigma * sigma)).powi(2)).sqrt()
}

fn criterion_1_unitarity() -> Outcome {
    let grid = SpatialGrid::line(1024, -32.0, 32.0).unwrap();
    let psi = WaveField::gaussian(&grid, &[0.0], 0.7, &[0.5], 1.0).unwrap();
    let run = propagate(&psi, &Potential::Free, &PropagatorConfig::new(2e-3, 1000, Physics::default())).unwrap();
    let drift = run.snapshots.iter().map(|s| (s.norm_sq() - 1.0).abs()).fold(0.0, f64::max);
    ensure(drift < 1e-10, format!("max |norm - 1| = {drift:.2e} over 1000 steps (< 1e-10)"))
}

fn criterion_2_width() -> Outcome {
    let (sigma, p, t) = (0.7, 0.5, 2.0);
    let grid = SpatialGrid::line(1024, -32.0, 32.0).unwrap();
    let psi = WaveField::gaussian(&grid, &[0.0], sigma, &[p], 1.0).unwrap();
    let run = propagate(&psi, &Potential::Free, &PropagatorConfig::new(2e-3, 1000, Physics::default())).unwrap();
    let (mean, width) = run.last().position_moments(0);
    let exact = free_width(sigma, t, 1.0, 1.0);
    let rel = (width - exact).abs() / exact;
    let drift = (mean - p * t).abs();
    ensure(rel < 1e-4 && drift < 1e-6, format!("sigma(2) relative error {rel:.2e} (< 1e-4), centre drift {drift:.1e}"))
}

/// Exact free evolution of `Σ exp(−(x − c)²/(4w²))` (unnormalized).
fn two_packet(x: f64, t: f64, centers: &[f64], w: f64) -> C64 {
    let a = C64::new(1.0, t / (2.0 * w * w));
    centers.iter().map(|c| (-(x - c) * (x - c) / (4.0 * w * w * a)).exp() / a.sqrt()).sum()
}

/// Cumulative distribution of the exact double-slit density on a fine mesh.
struct TableCdf {
    lo: f64,
    h: f64,
    cum: Vec<f64>,
}

impl TableCdf {
    fn new(lo: f64, hi: f64, n: usize, density: impl Fn(f64) -> f64) -> Self {
        let h = (hi - lo) / n as f64;
        let mut cum = vec![0.0; n + 1];
        let mut prev = density(lo);
        for i in 1..=n {
            let cur = density(lo + i as f64 * h);
            cum[i] = cum[i - 1] + 0.5 * h * (prev + cur);
            prev = cur;
        }
        let total = cum[n];
        cum.iter_mut().for_each(|c| *c /= total);
        Self { lo, h, cum }
    }

    fn cdf(&self, x: f64) -> f64 {
        let u = (x - self.lo) / self.h;
        if u <= 0.0 {
            return 0.0;
        }
        let i = u.floor() as usize;
        if i + 1 >= self.cum.len() {
            return 1.0;
        }
        self.cum[i] + (u - i as f64) * (self.cum[i + 1] - self.cum[i])
    }
}

struct SlitRun {
    ensemble: Ensemble,
    initial_sides: Vec<f64>,
    oracle: TableCdf,
}

const SLIT_SEPARATION: f64 = 8.0;
const SLIT_WIDTH: f64 = 0.5;
const SLIT_T: f64 = 8.0;

fn slit_run() -> &'static SlitRun {
    static RUN: OnceLock<SlitRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let grid = SpatialGrid::line(2048, -128.0, 128.0).unwrap();
        let psi = make_double_slit_state(&grid, SLIT_SEPARATION, SLIT_WIDTH, 0.0, 1.0).unwrap();
        let cfg = PropagatorConfig::new(0.004, 2000, Physics::default()).with_stride(10);
        let run = propagate(&psi, &Potential::Free, &cfg).unwrap();
        let field = VelocityField::from_snapshots(&run.snapshots, Physics::default(), DEFAULT_NODE_EPS).unwrap();
        let initial = sample_born(&psi, 10_000, 42).unwrap();
        let ensemble = propagate_ensemble(&field, &initial, &TrajectoryConfig::new(0.02, 0.0, SLIT_T)).unwrap();
        let c = [0.5 * SLIT_SEPARATION, -0.5 * SLIT_SEPARATION];
        let oracle = TableCdf::new(-128.0, 128.0, 256_000, |x| two_packet(x, SLIT_T, &c, SLIT_WIDTH).norm_sqr());
        SlitRun { initial_sides: initial.positions.iter().map(|p| p[0].signum()).collect(), ensemble, oracle }
    })
}

fn criterion_3_equivariance() -> Outcome {
    let (sigma, t_end) = (1.0, 2.0);
    let grid = SpatialGrid::line(1024, -32.0, 32.0).unwrap();
    let psi = WaveField::gaussian(&grid, &[0.0], sigma, &[0.0], 1.0).unwrap();
    let run = propagate(&psi, &Potential::Free, &PropagatorConfig::new(1e-3, 2000, Physics::default()).with_stride(20))
        .unwrap();
    let field = VelocityField::from_snapshots(&run.snapshots, Physics::default(), DEFAULT_NODE_EPS).unwrap();
    let ens =
        propagate_ensemble(&field, &sample_born(&psi, 10_000, 42).unwrap(), &TrajectoryConfig::new(0.01, 0.0, t_end))
            .unwrap();
    let times = &ens.trajectories[0].times;
    let mut worst: f64 = 0.0;
    for k in (0..times.len()).step_by(20) {
        let normal = Normal::new(0.0, free_width(sigma, times[k], 1.0, 1.0)).unwrap();
        let xs: Vec<f64> = ens.positions_at(k).iter().map(|p| p[0]).collect();
        worst = worst.max(ks_statistic(&xs, |x| normal.cdf(x)));
    }
    let slit = slit_run();
    let xs: Vec<f64> = slit.ensemble.trajectories.iter().map(|t| t.last()[0]).collect();
    let ks_slit = ks_statistic(&xs, |x| slit.oracle.cdf(x));
    ensure(
        worst < 0.02 && ks_slit < 0.02,
        format!("free Gaussian max KS {worst:.4} over 11 times, double slit KS {ks_slit:.4} at T = 8 (< 0.02)"),
    )
}

fn criterion_4_holland() -> Outcome {
    let (p, m, t0) = (2.0, 1.0, 0.1);
    let r = holland_nonuniqueness(p, 0.0, m, t0, 2.0, 1e-3).map_err(|e| e.to_string())?;
    let line = r
        .plane_wave
        .times
        .iter()
        .zip(&r.plane_wave.positions)
        .map(|(t, q)| (q[0] - p * t / m).abs())
        .fold(0.0, f64::max);
    let plane = ActionField::plane_wave(&[p], 0.0, m);
    let circ = ActionField::circular(&[0.0], m);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_hj: f64 = 0.0;
    let mut worst_form: f64 = 0.0;
    for _ in 0..1000 {
        let q: f64 = rng.random_range(-10.0..10.0);
        let t: f64 = rng.random_range(t0..5.0);
        // closed forms: S1 = Pq − P²t/2m, S2 = m q²/2t
        let s1 = p * q - p * p * t / (2.0 * m);
        let s2 = m * q * q / (2.0 * t);
        worst_form = worst_form
            .max((plane.evaluate(&[q], t).unwrap() - s1).abs())
            .max((circ.evaluate(&[q], t).unwrap() - s2).abs() / s2.abs().max(1.0));
        for a in [&plane, &circ] {
            let g = a.gradient(&[q], t).unwrap()[0];
            let res = a.time_derivative(&[q], t).unwrap() + g * g / (2.0 * m);
            worst_hj = worst_hj.max(res.abs());
        }
        let g2 = circ.gradient(&[q], t).unwrap()[0];
        worst_form = worst_form.max((g2 - m * q / t).abs());
    }
    ensure(
        r.max_deviation < 1e-8 && line < 1e-8 && worst_hj < 1e-10 && worst_form < 1e-12,
        format!(
            "path gap {:.1e}, gap to q = Pt/m {line:.1e} (< 1e-8); HJ residual {worst_hj:.1e} at 1000 points (< 1e-10)",
            r.max_deviation
        ),
    )
}

fn criterion_5_divergence() -> Outcome {
    let grid = SpatialGrid::line(1024, -32.0, 32.0).unwrap();
    let phys = Physics::default();
    let (q0, p, t_end) = (1.0, 0.5, 2.0);
    let mut fields = Vec::new();
    let mut momenta = Vec::new();
    for sigma in [1.0, 2.0] {
        let psi = WaveField::gaussian(&grid, &[0.0], sigma, &[p], 1.0).unwrap();
        momenta.push(velocity_at(&psi, &[q0], phys, DEFAULT_NODE_EPS).unwrap()[0] * phys.mass);
        let run = propagate(&psi, &Potential::Free, &PropagatorConfig::new(1e-3, 2000, phys).with_stride(10)).unwrap();
        fields.push(VelocityField::from_snapshots(&run.snapshots, phys, DEFAULT_NODE_EPS).unwrap());
    }
    let prep = momenta.iter().map(|m| (m - p).abs()).fold(0.0, f64::max);
    let rep =
        bohmlab::bohm::divergence_experiment(&fields[0], &fields[1], &[q0], &TrajectoryConfig::new(0.01, 0.0, t_end))
            .map_err(|e| e.to_string())?;
    // free Gaussian guidance: x(t) = pt/m + x0 σ(t)/σ0
    let analytic = |s: f64| p * t_end + q0 * free_width(s, t_end, 1.0, 1.0) / s;
    let expected = (analytic(1.0) - analytic(2.0)).abs();
    let classical = holland_nonuniqueness(p, q0 - p * 0.1, 1.0, 0.1, t_end, 1e-3).map_err(|e| e.to_string())?;
    ensure(
        prep < 1e-8 && rep.final_separation > 0.1 && (rep.final_separation - expected).abs() < 1e-4 && classical.max_deviation < 1e-8,
        format!(
            "|grad S(Q0) - P| {prep:.1e}; quantum separation {:.4} (analytic {expected:.4}, > 0.1); classical separation {:.1e} (< 1e-8)",
            rep.final_separation, classical.max_deviation
        ),
    )
}

fn criterion_6_quantum_potential() -> Outcome {
    let phys = Physics::default();
    let (c, sigma) = (0.3, 1.2);
    let grid = SpatialGrid::line(512, -20.0, 20.0).unwrap();
    let psi = WaveField::gaussian(&grid, &[c], sigma, &[0.7], 1.0).unwrap();
    let polar = to_polar(&psi, DEFAULT_NODE_EPS, 1.0).unwrap();
    let u = quantum_potential(&polar, phys);
    // R = exp(−(q−c)²/4σ²) gives U = (ħ²/2m)(1/2σ² − (q−c)²/4σ⁴)
    let oracle = |q: f64| 0.5 * (1.0 / (2.0 * sigma * sigma) - (q - c).powi(2) / (4.0 * sigma.powi(4)));
    let coords = grid.axis(0).coords();
    let interior: Vec<usize> = (0..coords.len()).filter(|&i| (coords[i] - c).abs() < 4.0 * sigma).collect();
    let scale = interior.iter().map(|&i| oracle(coords[i]).abs()).fold(0.0, f64::max);
    let gauss_err =
        interior.iter().map(|&i| (u.values.values()[i] - oracle(coords[i])).abs()).fold(0.0, f64::max) / scale;

    let pw_grid = SpatialGrid::line(256, 0.0, 8.0 * std::f64::consts::PI).unwrap();
    let pw = WaveField::plane_wave(&pw_grid, &[1.0], 1.0).unwrap();
    let pw_u = quantum_potential(&to_polar(&pw, DEFAULT_NODE_EPS, 1.0).unwrap(), phys);
    let pw_max = pw_u.values.values().iter().map(|v| v.abs()).fold(0.0, f64::max);

    let half = quantum_potential(&polar.with_hbar(0.5), Physics::new(0.5, phys.mass));
    let scaling = u
        .values
        .values()
        .iter()
        .zip(half.values.values())
        .filter(|(a, _)| a.abs() > 1e-300)
        .map(|(a, b)| (b / a - 0.25).abs() / 0.25)
        .fold(0.0, f64::max);
    ensure(
        gauss_err < 1e-6 && pw_max < 1e-12 && scaling < 1e-12,
        format!("Gaussian interior error {gauss_err:.1e} (< 1e-6); plane wave max |U| {pw_max:.1e}; hbar^2 scaling error {scaling:.1e} (< 1e-12)"),
    )
}

fn criterion_7_semiclassical() -> Outcome {
    let grid = SpatialGrid::line(2048, -128.0, 128.0).unwrap();
    let amplitude = grid.axis(0).coords().iter().map(|q| (-(q + 20.0) * (q + 20.0) / (4.0 * 64.0)).exp()).collect();
    let setup = SemiclassicalSetup {
        grid,
        potential: Potential::Free,
        mass: 1.0,
        amplitude,
        action: ActionField::plane_wave(&[1.0], 0.0, 1.0),
        q0: vec![-12.0],
        t_end: 10.0,
        dt: 0.01,
        stride: 10,
        traj_dt: 0.05,
    };
    let pts = semiclassical_compare(&setup, &[1.0, 0.5, 0.25]).map_err(|e| e.to_string())?;
    let errs: Vec<f64> = pts.iter().map(|p| p.max_error).collect();
    // oracle for the Bohmian path of a free Gaussian: q0 σ(t)/σ0 about the moving centre
    let bohm_exact = |hbar: f64| {
        let (c, s, t) = (-20.0, 8.0, 10.0);
        ((-12.0 - c) * free_width(s, t, hbar, 1.0) / s + c + t) - (-12.0 + t)
    };
    let agree = pts.iter().all(|p| (p.max_error - bohm_exact(p.hbar).abs()).abs() < 1e-3 * bohm_exact(p.hbar).abs());
    ensure(
        errs.windows(2).all(|w| w[1] < w[0]) && agree,
        format!(
            "max |Q_Bohm - Q_classical| = {:.3e}, {:.3e}, {:.3e} for hbar = 1, 0.5, 0.25",
            errs[0], errs[1], errs[2]
        ),
    )
}

/// Local maxima of `expected` above `threshold · max` with their basins.
fn peaks(expected: &[f64], threshold: f64) -> Vec<(usize, usize, usize)> {
    let top = expected.iter().copied().fold(0.0, f64::max);
    (1..expected.len() - 1)
        .filter(|&i| expected[i] > expected[i - 1] && expected[i] >= expected[i + 1] && expected[i] >= threshold * top)
        .map(|i| {
            let (mut lo, mut hi) = (i, i);
            while lo > 0 && expected[lo - 1] < expected[lo] {
                lo -= 1;
            }
            while hi + 1 < expected.len() && expected[hi + 1] <= expected[hi] {
                hi += 1;
            }
            (i, lo, hi)
        })
        .collect()
}

fn criterion_8_double_slit() -> Outcome {
    let slit = slit_run();
    let crossings = slit
        .ensemble
        .trajectories
        .iter()
        .zip(&slit.initial_sides)
        .filter(|(t, side)| t.positions.iter().any(|p| p[0].signum() != **side))
        .count();
    let (lo, hi, bins) = (-24.0, 24.0, 48);
    let w = (hi - lo) / bins as f64;
    let expected: Vec<f64> =
        (0..bins).map(|b| slit.oracle.cdf(lo + (b + 1) as f64 * w) - slit.oracle.cdf(lo + b as f64 * w)).collect();
    let mut counts = vec![0usize; bins];
    for t in &slit.ensemble.trajectories {
        let x = t.last()[0];
        if x >= lo && x < hi {
            counts[((x - lo) / w) as usize] += 1;
        }
    }
    let found = peaks(&expected, 0.05);
    let matched = found
        .iter()
        .filter(|&&(p, a, b)| {
            let arg = (a..=b).max_by(|&i, &j| counts[i].cmp(&counts[j]).then(j.cmp(&i))).unwrap();
            arg.abs_diff(p) <= 1
        })
        .count();
    ensure(
        crossings == 0 && matched >= 3,
        format!(
            "{crossings} of 10000 trajectories cross q = 0; {matched} of {} exact maxima matched within one bin (>= 3)",
            found.len()
        ),
    )
}

fn criterion_9_reconstruction() -> Outcome {
    let (p, m) = (2.0, 1.0);
    let action = ActionField::plane_wave(&[p], 0.0, m);
    let st = ClassicalState { q0: vec![0.5], p0: None, action, t0: 0.0 };
    let traj = classical_trajectory(&st, 1.0, 0.01).map_err(|e| e.to_string())?;
    let s = classical_reconstruct_along_c(&traj, &Potential::Free, m, p * 0.5).map_err(|e| e.to_string())?;
    let s1 = traj
        .times
        .iter()
        .zip(&traj.positions)
        .zip(&s)
        .map(|((t, q), s)| (s - (p * q[0] - p * p * t / (2.0 * m))).abs())
        .fold(0.0, f64::max);

    let grid = SpatialGrid::line(1024, -10.0, 10.0).unwrap();
    let psi = WaveField::gaussian(&grid, &[0.0], 1.0, &[0.0], 1.0).unwrap();
    let snaps = propagate(&psi, &Potential::Free, &PropagatorConfig::new(2e-3, 500, Physics::default()).with_stride(5))
        .unwrap()
        .snapshots;
    let cfg = TrajectoryConfig::new(0.01, 0.0, 1.0);
    let field = VelocityField::from_snapshots(&snaps, Physics::default(), DEFAULT_NODE_EPS).unwrap();
    let lone = build_bundle(&field, 0.5, 0.1, 0, &cfg).map_err(|e| e.to_string())?;
    let refused = matches!(
        reconstruct_along_c(&lone, &Potential::Free, Physics::default(), 0.0, &[1.0]),
        Err(ReconstructionError::InsufficientBundle { k: 0 })
    );
    let rows = bundle_convergence(
        &snaps,
        &Potential::Free,
        Physics::default(),
        0.5,
        4,
        &[0.2, 0.1, 0.05],
        &cfg,
        DEFAULT_NODE_EPS,
    )
    .map_err(|e| e.to_string())?;
    let errs: Vec<f64> = rows.iter().map(|r| r.err_s).collect();
    ensure(
        s1 < 1e-8 && refused && errs.windows(2).all(|w| w[1] < w[0]),
        format!(
            "classical S vs S1 {s1:.1e} (< 1e-8); k = 0 refused: {refused}; k = 4 errS {:.2e}, {:.2e}, {:.2e} for delta = 0.2, 0.1, 0.05",
            errs[0], errs[1], errs[2]
        ),
    )
}

fn criterion_10_continuity() -> Outcome {
    let grid = SpatialGrid::line(256, -16.0, 16.0).unwrap();
    let psi = WaveField::gaussian(&grid, &[0.0], 1.0, &[1.0], 1.0).unwrap();
    let res = |dt: f64, steps: usize| {
        let run = propagate(&psi, &Potential::Free, &PropagatorConfig::new(dt, steps, Physics::default())).unwrap();
        continuity_residual(&run.snapshots, Physics::default()).unwrap()
    };
    let coarse = res(0.01, 100);
    let fine = res(0.005, 200);
    let a = coarse.iter().copied().fold(0.0, f64::max);
    let b = (0..coarse.len()).map(|i| fine[2 * i + 1]).fold(0.0, f64::max);
    let ratio = a / b;
    ensure(
        (ratio - 4.0).abs() <= 0.8,
        format!("residual {a:.3e} -> {b:.3e} on halving dt, ratio {ratio:.3} (4 +- 0.8)"),
    )
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn criterion_11_determinism() -> Outcome {
    let roots = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut files = 0;
    let mut entries: Vec<PathBuf> = std::fs::read_dir(configs_dir()).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for path in &entries {
        let cfg = load_config(path).map_err(|e| e.to_string())?;
        for root in &roots {
            run_scenario_in(&cfg, root.path()).map_err(|e| e.to_string())?;
        }
        let dir = |r: &tempfile::TempDir| r.path().join(&cfg.output.directory);
        let mut names: Vec<_> = std::fs::read_dir(dir(&roots[0])).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        for n in names {
            let (a, b) =
                (std::fs::read(dir(&roots[0]).join(&n)).unwrap(), std::fs::read(dir(&roots[1]).join(&n)).unwrap());
            if a != b {
                return Err(format!("{} differs between runs of {}", n.to_string_lossy(), cfg.scenario));
            }
            files += 1;
        }
    }
    Ok(format!("{} scenarios rerun, {files} output files bit-identical", entries.len()))
}

fn main() {
    // honour `cargo test -- --list` style probes without running the suite
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let criteria: [Criterion; 11] = [
        ("1 unitarity", criterion_1_unitarity),
        ("2 analytic width", criterion_2_width),
        ("3 equivariance", criterion_3_equivariance),
        ("4 action nonuniqueness", criterion_4_holland),
        ("5 divergence from identical data", criterion_5_divergence),
        ("6 quantum potential", criterion_6_quantum_potential),
        ("7 semiclassical sweep", criterion_7_semiclassical),
        ("8 double-slit no-crossing", criterion_8_double_slit),
        ("9 reconstruction asymmetry", criterion_9_reconstruction),
        ("10 continuity convergence", criterion_10_continuity),
        ("11 determinism", criterion_11_determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS criterion {name}: {d} [{secs:.1}s]"),
            Err(d) => {
                failed += 1;
                println!("FAIL criterion {name}: {d} [{secs:.1}s]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

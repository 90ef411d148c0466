use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bohmlab"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run_in(root: &Path, args: &[&str]) -> Output {
    bin().args(args).env("BOHMLAB_OUTPUT_ROOT", root).output().unwrap()
}

#[test]
fn list_is_sorted_and_complete() {
    let out = bin().args(["list", "--json"]).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let names: Vec<&str> = v.as_array().unwrap().iter().map(|e| e["name"].as_str().unwrap()).collect();
    let mut sorted = names.clone();
    sorted.sort_unstable();
    assert_eq!(names, sorted);
    for want in [
        "equivariance-free-gaussian",
        "holland-nonuniqueness",
        "p2-divergence",
        "double-slit-nocross",
        "semiclassical-sweep",
        "reconstruction-bundle",
        "continuity-residual",
    ] {
        assert!(names.contains(&want), "{want}");
    }
    assert!(v.as_array().unwrap().iter().all(|e| !e["anchor"].as_str().unwrap().is_empty()));
    let again = bin().args(["list", "--json"]).output().unwrap();
    assert_eq!(out.stdout, again.stdout);
}

#[test]
fn every_shipped_config_checks() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let p = entry.unwrap().path();
        let out = bin().arg("check").arg(&p).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "{}: {}", p.display(), String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn negative_dt_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("holland-nonuniqueness.toml")).unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, text.replace("dt = 0.001\nt_end", "dt = -0.001\nt_end")).unwrap();
    for cmd in ["check", "run"] {
        let out = run_in(dir.path(), &[cmd, bad.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2));
        assert!(String::from_utf8_lossy(&out.stderr).contains("run.dt"));
    }
    assert!(!dir.path().join("holland-nonuniqueness").exists());
}

#[test]
fn missing_file_and_unknown_key_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["check", "/nonexistent/x.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let bad = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(configs().join("p2-divergence.toml")).unwrap();
    std::fs::write(&bad, text.replace("[divergence]", "[divergence]\nsigma_c = 3.0")).unwrap();
    let out = bin().arg("check").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("divergence.sigma_c"));
}

#[test]
fn passing_run_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("holland-nonuniqueness.toml");
    let out = run_in(dir.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("holland-nonuniqueness/report.json")).unwrap())
            .unwrap();
    assert_eq!(report["passed"], true);
    let dev = report["checks"].as_array().unwrap().iter().find(|c| c["name"] == "max_deviation").unwrap();
    assert!(dev["value"].as_f64().unwrap() < 1e-8);
    assert!(dir.path().join("holland-nonuniqueness/holland.csv").exists());
}

#[test]
fn failed_check_exits_one() {
    // a uniform start is not in equilibrium, so the KS check must fail
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("uniform.toml");
    std::fs::write(
        &cfg,
        r#"
scenario = "equivariance-free-gaussian"
[grid]
dim = 1
n = 256
qmin = -16.0
qmax = 16.0
[physics]
hbar = 1.0
mass = 1.0
potential = "free"
[state]
kind = "gaussian"
center = [0.0]
sigma = 1.0
momentum = [0.0]
[run]
dt = 0.005
t_end = 0.5
snapshot_stride = 10
dt_traj = 0.05
[ensemble]
n = 2000
sampler = "uniform"
seed = 3
[output]
directory = "uniform"
formats = ["csv", "json"]
max_trajectories = 5
"#,
    )
    .unwrap();
    let out = run_in(dir.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ks_stat_max"));
    for f in ["report.json", "ensemble_stats.csv", "ensemble_stats.json", "trajectories.csv", "trajectories.json"] {
        assert!(dir.path().join("uniform").join(f).exists(), "{f}");
    }
}

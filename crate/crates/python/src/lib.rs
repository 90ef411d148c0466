//! Python module `pybohmlab`: grids, wave fields, propagation, trajectories
//! and the scenario runner.

use std::path::PathBuf;

use bohmlab::bohm::{self, LineDensity, TrajectoryConfig, VelocityField};
use bohmlab::scenarios;
use bohmlab::schrodinger::{self, Potential, PropagatorConfig};
use bohmlab::{Physics, SpatialGrid, WaveField, C64};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn potential(name: &str, omega: Option<f64>) -> PyResult<Potential> {
    match (name, omega) {
        ("free", None) => Ok(Potential::Free),
        ("harmonic", Some(w)) if w > 0.0 => Ok(Potential::harmonic(w)),
        _ => Err(PyValueError::new_err("potential must be 'free' or 'harmonic' with omega > 0")),
    }
}

/// Periodic grid on `[qmin, qmax)` with `n` points per axis.
#[pyclass(name = "Grid", frozen, from_py_object)]
#[derive(Clone)]
struct PyGrid {
    inner: SpatialGrid,
}

#[pymethods]
impl PyGrid {
    #[new]
    #[pyo3(signature = (n, qmin, qmax, dim = 1))]
    fn new(n: usize, qmin: f64, qmax: f64, dim: usize) -> PyResult<Self> {
        let axis = bohmlab::Axis::new(n, qmin, qmax);
        let inner = match dim {
            1 => SpatialGrid::new(vec![axis]),
            2 => SpatialGrid::plane(axis, axis),
            _ => return Err(PyValueError::new_err("dim must be 1 or 2")),
        }
        .map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Node coordinates along `axis`.
    #[pyo3(signature = (axis = 0))]
    fn coords(&self, axis: usize) -> PyResult<Vec<f64>> {
        if axis >= self.inner.dim() {
            return Err(PyValueError::new_err("axis out of range"));
        }
        Ok(self.inner.axis(axis).coords())
    }

    fn __repr__(&self) -> String {
        let a = self.inner.axis(0);
        format!("Grid(n={}, qmin={}, qmax={}, dim={})", a.n, a.qmin, a.qmax, self.inner.dim())
    }
}

#[pyclass(name = "WaveField", frozen, from_py_object)]
#[derive(Clone)]
struct PyWaveField {
    inner: WaveField,
}

#[pymethods]
impl PyWaveField {
    /// Normalized Gaussian packet; |ψ|² has standard deviation `sigma`.
    #[staticmethod]
    #[pyo3(signature = (grid, center, sigma, momentum, hbar = 1.0))]
    fn gaussian(grid: &PyGrid, center: Vec<f64>, sigma: f64, momentum: Vec<f64>, hbar: f64) -> PyResult<Self> {
        let d = grid.inner.dim();
        if center.len() != d || momentum.len() != d || sigma.is_nan() || sigma <= 0.0 {
            return Err(PyValueError::new_err("center and momentum need one entry per axis; sigma must be positive"));
        }
        WaveField::gaussian(&grid.inner, &center, sigma, &momentum, hbar).map(|inner| Self { inner }).map_err(value_err)
    }

    #[staticmethod]
    #[pyo3(signature = (grid, separation, width, forward_momentum = 0.0, hbar = 1.0))]
    fn double_slit(grid: &PyGrid, separation: f64, width: f64, forward_momentum: f64, hbar: f64) -> PyResult<Self> {
        schrodinger::make_double_slit_state(&grid.inner, separation, width, forward_momentum, hbar)
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    /// Builds a field from complex samples (normalized on construction).
    #[staticmethod]
    #[pyo3(signature = (grid, values, time = 0.0))]
    fn from_values(grid: &PyGrid, values: Vec<(f64, f64)>, time: f64) -> PyResult<Self> {
        let v = values.into_iter().map(|(re, im)| C64::new(re, im)).collect();
        let psi = WaveField::new(grid.inner.clone(), v, time).and_then(WaveField::normalized).map_err(value_err)?;
        Ok(Self { inner: psi })
    }

    #[getter]
    fn time(&self) -> f64 {
        self.inner.time()
    }

    fn grid(&self) -> PyGrid {
        PyGrid { inner: self.inner.grid().clone() }
    }

    fn norm(&self) -> f64 {
        self.inner.norm_sq()
    }

    /// (re, im) pairs in row-major node order.
    fn values(&self) -> Vec<(f64, f64)> {
        self.inner.values().iter().map(|z| (z.re, z.im)).collect()
    }

    fn density(&self) -> Vec<f64> {
        self.inner.values().iter().map(|z| z.norm_sqr()).collect()
    }

    /// Mean and standard deviation of q along `axis` under |ψ|².
    #[pyo3(signature = (axis = 0))]
    fn moments(&self, axis: usize) -> PyResult<(f64, f64)> {
        if axis >= self.inner.grid().dim() {
            return Err(PyValueError::new_err("axis out of range"));
        }
        Ok(self.inner.position_moments(axis))
    }

    /// U = −(ħ²/2m) ∇²R/R on the grid; node neighbourhoods read None.
    #[pyo3(signature = (hbar = 1.0, mass = 1.0, node_eps = bohmlab::DEFAULT_NODE_EPS))]
    fn quantum_potential(&self, hbar: f64, mass: f64, node_eps: f64) -> PyResult<Vec<Option<f64>>> {
        let polar = bohmlab::to_polar(&self.inner, node_eps, hbar).map_err(value_err)?;
        let u = bohmlab::quantum_potential(&polar, Physics::new(hbar, mass));
        Ok((0..self.inner.grid().len()).map(|i| u.get(i)).collect())
    }

    fn __repr__(&self) -> String {
        format!("WaveField(points={}, t={})", self.inner.grid().len(), self.inner.time())
    }
}

/// Split-step propagation; returns the snapshots (initial state first).
#[pyfunction]
#[pyo3(signature = (psi, dt, steps, stride = 1, hbar = 1.0, mass = 1.0, potential = "free", omega = None))]
#[allow(clippy::too_many_arguments)]
fn propagate(
    psi: &PyWaveField,
    dt: f64,
    steps: usize,
    stride: usize,
    hbar: f64,
    mass: f64,
    potential: &str,
    omega: Option<f64>,
) -> PyResult<Vec<PyWaveField>> {
    let pot = self::potential(potential, omega)?;
    let cfg = PropagatorConfig::new(dt, steps, Physics::new(hbar, mass)).with_stride(stride);
    let run = schrodinger::propagate(&psi.inner, &pot, &cfg).map_err(value_err)?;
    Ok(run.snapshots.into_iter().map(|inner| PyWaveField { inner }).collect())
}

/// Born-rule positions drawn from |ψ|² (one list per member).
#[pyfunction]
fn sample_born(psi: &PyWaveField, n: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    let e = bohm::sample_born(&psi.inner, n, seed).map_err(value_err)?;
    Ok(e.positions.iter().map(|p| p[..e.dim].to_vec()).collect())
}

/// Guided trajectories through a snapshot sequence. Returns, per start,
/// `(times, positions, halted)`.
#[pyfunction]
#[pyo3(signature = (snapshots, starts, dt, t_end, hbar = 1.0, mass = 1.0, node_eps = bohmlab::DEFAULT_NODE_EPS))]
#[allow(clippy::type_complexity, clippy::too_many_arguments)]
fn trajectories(
    py: Python<'_>,
    snapshots: Vec<PyWaveField>,
    starts: Vec<Vec<f64>>,
    dt: f64,
    t_end: f64,
    hbar: f64,
    mass: f64,
    node_eps: f64,
) -> PyResult<Vec<(Vec<f64>, Vec<Vec<f64>>, bool)>> {
    let snaps: Vec<WaveField> = snapshots.into_iter().map(|s| s.inner).collect();
    let Some(first) = snaps.first() else {
        return Err(PyValueError::new_err("need at least one snapshot"));
    };
    let (dim, t0) = (first.grid().dim(), first.time());
    py.detach(|| {
        let field = VelocityField::from_snapshots(&snaps, Physics::new(hbar, mass), node_eps).map_err(value_err)?;
        let initial = bohm::explicit(&starts, dim).map_err(value_err)?;
        let ens =
            bohm::propagate_ensemble(&field, &initial, &TrajectoryConfig::new(dt, t0, t_end)).map_err(value_err)?;
        Ok(ens
            .trajectories
            .into_iter()
            .map(|t| {
                let halted = t.halted();
                (t.times, t.positions.iter().map(|p| p[..dim].to_vec()).collect(), halted)
            })
            .collect())
    })
}

/// KS distance between 1-D samples and |ψ|².
#[pyfunction]
fn ks_statistic(samples: Vec<f64>, psi: &PyWaveField) -> PyResult<f64> {
    if psi.inner.grid().dim() != 1 {
        return Err(PyValueError::new_err("KS statistic is defined for 1-D fields"));
    }
    let a = psi.inner.grid().axis(0);
    let xs: Vec<f64> = samples.iter().map(|x| a.wrap(*x)).collect();
    let d = LineDensity::from_wave(&psi.inner);
    Ok(bohm::ks_statistic(&xs, |x| d.cdf(x)))
}

/// Maximum gap between the plane-wave and circular-action paths.
#[pyfunction]
#[pyo3(signature = (momentum, q0, mass, t0, t_end, dt))]
fn holland_deviation(momentum: f64, q0: f64, mass: f64, t0: f64, t_end: f64, dt: f64) -> PyResult<f64> {
    bohmlab::classical::holland_nonuniqueness(momentum, q0, mass, t0, t_end, dt)
        .map(|r| r.max_deviation)
        .map_err(value_err)
}

/// (name, anchor, summary) for every registered scenario, sorted by name.
#[pyfunction]
fn list_scenarios() -> Vec<(String, String, String)> {
    scenarios::registry().iter().map(|s| (s.name.into(), s.anchor.into(), s.summary.into())).collect()
}

/// Validates a config file; returns the scenario name.
#[pyfunction]
fn check_config(path: PathBuf) -> PyResult<String> {
    scenarios::load_config(&path).map(|c| c.scenario).map_err(value_err)
}

/// Runs a config and returns the report as a JSON string.
#[pyfunction]
#[pyo3(signature = (path, output_root = None))]
fn run_scenario(py: Python<'_>, path: PathBuf, output_root: Option<PathBuf>) -> PyResult<String> {
    let cfg = scenarios::load_config(&path).map_err(value_err)?;
    let root = output_root.unwrap_or_else(scenarios::output_root);
    let report = py.detach(|| scenarios::run_scenario_in(&cfg, &root)).map_err(|e| match e {
        scenarios::ScenarioError::Config(c) => value_err(c),
        other => runtime_err(other),
    })?;
    serde_json::to_string(&report).map_err(runtime_err)
}

#[pymodule]
fn pybohmlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyWaveField>()?;
    m.add_function(wrap_pyfunction!(propagate, m)?)?;
    m.add_function(wrap_pyfunction!(sample_born, m)?)?;
    m.add_function(wrap_pyfunction!(trajectories, m)?)?;
    m.add_function(wrap_pyfunction!(ks_statistic, m)?)?;
    m.add_function(wrap_pyfunction!(holland_deviation, m)?)?;
    m.add_function(wrap_pyfunction!(list_scenarios, m)?)?;
    m.add_function(wrap_pyfunction!(check_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}

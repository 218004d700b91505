//! Python bindings for the fepkit toolkit.

use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use fepkit_core::dynamics::{run_fep, Gamma, RateSchedule, RunOptions};
use fepkit_core::harness::{execute, prepare, Overrides};
use fepkit_core::{ensembles, fluctuations, lattice, mapping, measures, seed, FepError};

fn err(e: FepError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn gamma_from(g: f64) -> Gamma {
    if g == f64::NEG_INFINITY {
        Gamma::MinusInf
    } else {
        Gamma::Finite(g)
    }
}

/// Exclusion configuration on a ring or in a box.
#[pyclass(name = "FepConfig", module = "fepkit", skip_from_py_object)]
#[derive(Clone)]
pub struct PyFepConfig {
    inner: lattice::FepConfig,
}

#[pymethods]
impl PyFepConfig {
    #[staticmethod]
    fn ring(sites: Vec<u8>) -> PyResult<Self> {
        Ok(Self { inner: lattice::FepConfig::ring(&sites).map_err(err)? })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(Self { inner: lattice::FepConfig::from_text(text).map_err(err)? })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn occupations(&self) -> Vec<u8> {
        self.inner.occupations()
    }

    fn particles(&self) -> usize {
        self.inner.particles()
    }

    fn is_ergodic(&self) -> bool {
        self.inner.is_ergodic()
    }

    /// Configuration after swapping sites `x` and `x + 1`.
    fn swap(&self, x: i64) -> PyResult<Self> {
        Ok(Self { inner: self.inner.apply_swap(x).map_err(err)? })
    }

    /// Zero-range occupations and the tagged empty site.
    fn map_forward(&self) -> PyResult<(Vec<u64>, i64)> {
        let state = mapping::map_forward(&self.inner).map_err(err)?;
        Ok((state.omega.sites().to_vec(), state.x0))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("FepConfig({:?})", self.inner.to_text())
    }
}

/// Test function for fluctuation fields.
#[pyclass(name = "TestFunction", module = "fepkit", skip_from_py_object)]
#[derive(Clone)]
pub struct PyTestFunction {
    inner: fluctuations::TestFunction,
}

#[pymethods]
impl PyTestFunction {
    #[staticmethod]
    fn gaussian(center: f64, width: f64) -> PyResult<Self> {
        Ok(Self { inner: fluctuations::TestFunction::gaussian(center, width).map_err(err)? })
    }

    #[staticmethod]
    fn bump(center: f64, radius: f64) -> PyResult<Self> {
        Ok(Self { inner: fluctuations::TestFunction::bump(center, radius).map_err(err)? })
    }

    fn __call__(&self, u: f64) -> f64 {
        self.inner.value(u)
    }

    fn __repr__(&self) -> String {
        self.inner.label()
    }
}

/// Coefficients of the macroscopic theory at density `rho`.
#[pyfunction]
fn theory<'py>(py: Python<'py>, rho: f64) -> PyResult<Bound<'py, PyDict>> {
    let th = measures::theory(rho).map_err(err)?;
    let d = PyDict::new(py);
    for (k, v) in [
        ("rho", th.rho),
        ("a", th.a),
        ("D", th.d),
        ("sigma", th.sigma),
        ("chi", th.chi),
        ("v", th.v),
        ("alpha", th.alpha),
        ("phi", th.phi),
        ("phi_prime", th.phi_prime),
    ] {
        d.set_item(k, v)?;
    }
    Ok(d)
}

#[pyfunction]
fn window_prob(rho: f64, sigma: Vec<u8>) -> PyResult<f64> {
    measures::window_prob(rho, &sigma).map_err(err)
}

#[pyfunction]
fn pair_covariance(rho: f64, x: u64) -> PyResult<f64> {
    measures::pair_covariance(rho, x).map_err(err)
}

#[pyfunction]
fn count_ergodic(ell: i64, j: i64) -> PyResult<u128> {
    ensembles::count_ergodic(ell, j).map_err(err)
}

#[pyfunction]
fn seed_split(master: u64, index: u64) -> u64 {
    seed::seed_split(master, index)
}

/// Grand-canonical ergodic ring of `length` sites.
#[pyfunction]
fn sample_grand_ring(length: usize, rho: f64, seed: u64) -> PyResult<PyFepConfig> {
    let mut rng = seed::replica_rng(seed, 0);
    Ok(PyFepConfig { inner: measures::sample_grand_ring(length, rho, &mut rng).map_err(err)? })
}

/// Runs the exclusion process to macroscopic time `t_end`; returns the final
/// configuration, the number of events and the per-bond net currents.
#[pyfunction]
#[pyo3(signature = (config, t_end, n, s_switch = 1, gamma = f64::NEG_INFINITY, seed = 0))]
fn simulate(
    config: &PyFepConfig,
    t_end: f64,
    n: u32,
    s_switch: u8,
    gamma: f64,
    seed: u64,
) -> PyResult<(PyFepConfig, u64, Vec<i64>)> {
    let sched = RateSchedule::new(s_switch, gamma_from(gamma), n).map_err(err)?;
    let mut rng = seed::replica_rng(seed, 0);
    let log = run_fep(config.inner.clone(), &sched, t_end, &mut [], &RunOptions::default(), &mut rng).map_err(err)?;
    let last = log
        .final_state
        .as_fep()
        .cloned()
        .ok_or_else(|| PyValueError::new_err("run ended in a zero-range state"))?;
    Ok((PyFepConfig { inner: last }, log.n_events, log.currents))
}

/// Predicted stationary covariance of the fields of `g` and `h` at time lag `lag`.
#[pyfunction]
fn she_covariance(rho: f64, g: &PyTestFunction, h: &PyTestFunction, lag: f64) -> PyResult<f64> {
    Ok(fluctuations::she_covariance(rho, &g.inner, &h.inner, lag).map_err(err)?.value)
}

/// Runs one experiment from a JSON config; returns `(task, pass, metrics_json)`.
#[pyfunction]
#[pyo3(signature = (config_json, out_dir = None, seed = None))]
fn run_experiment(
    py: Python<'_>,
    config_json: &str,
    out_dir: Option<PathBuf>,
    seed: Option<u64>,
) -> PyResult<(String, bool, String)> {
    let ov = Overrides {
        seed,
        out: out_dir,
        workers: None,
    };
    let prepared = prepare(config_json, None, &ov).map_err(err)?;
    let out = py.detach(|| execute(&prepared)).map_err(err)?;
    Ok((out.task.name(), out.pass, out.metrics.to_string()))
}

/// Adds every binding to `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFepConfig>()?;
    m.add_class::<PyTestFunction>()?;
    m.add_function(wrap_pyfunction!(theory, m)?)?;
    m.add_function(wrap_pyfunction!(window_prob, m)?)?;
    m.add_function(wrap_pyfunction!(pair_covariance, m)?)?;
    m.add_function(wrap_pyfunction!(count_ergodic, m)?)?;
    m.add_function(wrap_pyfunction!(seed_split, m)?)?;
    m.add_function(wrap_pyfunction!(sample_grand_ring, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(she_covariance, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

#[pymodule]
fn fepkit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}

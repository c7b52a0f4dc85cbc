//! Python bindings. Structured results cross the boundary as JSON and come
//! out as plain dicts and lists.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;
use serde::Serialize;

use jamset::greedy_sim::uniform_grid;
use jamset::theory::DEFAULT_TOL;
use jamset::{Error, GraphMode, LoopsPolicy, ReplicaSpec, SimMode, TrackConfig};

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Numerical(_) | Error::RejectionExhausted { .. } => PyRuntimeError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

fn to_object<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse<T: serde::de::DeserializeOwned>(text: &str) -> PyResult<T> {
    serde_json::from_str(text).map_err(|e| PyValueError::new_err(format!("bad spec: {e}")))
}

fn parse_enum<T: serde::de::DeserializeOwned>(name: &str) -> PyResult<T> {
    parse(&format!("\"{name}\""))
}

/// Finite degree sequence, stored as vertex counts per degree.
#[pyclass(frozen)]
struct DegreeSequence {
    inner: jamset::DegreeSequence,
}

#[pymethods]
impl DegreeSequence {
    #[new]
    fn new(counts: BTreeMap<usize, usize>) -> PyResult<Self> {
        Ok(Self { inner: jamset::DegreeSequence::from_counts(counts).map_err(to_py)? })
    }

    #[staticmethod]
    fn regular(d: usize, n: usize) -> PyResult<Self> {
        Ok(Self { inner: jamset::DegreeSequence::regular(d, n).map_err(to_py)? })
    }

    #[staticmethod]
    fn star(n: usize) -> PyResult<Self> {
        Ok(Self { inner: jamset::DegreeSequence::star(n).map_err(to_py)? })
    }

    /// Builds a sequence from a JSON spec such as `{"kind":"regular","d":3,"n":100}`.
    /// Sampled kinds draw with `seed`.
    #[staticmethod]
    #[pyo3(signature = (spec, seed = 1))]
    fn from_spec(spec: &str, seed: u64) -> PyResult<Self> {
        let spec: jamset::SequenceSpec = parse(spec)?;
        let inner = spec.build(&mut jamset::rng::stream_rng(seed, 0)).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn counts(&self) -> BTreeMap<usize, usize> {
        self.inner.counts().clone()
    }

    #[getter]
    fn half_edges(&self) -> u64 {
        self.inner.half_edges()
    }

    fn __repr__(&self) -> String {
        format!("DegreeSequence(n={}, counts={:?})", self.inner.n(), self.inner.counts())
    }
}

/// Limiting degree law with its mean-degree parameter.
#[pyclass(frozen)]
struct LimitModel {
    inner: jamset::LimitModel,
}

#[pymethods]
impl LimitModel {
    #[new]
    #[pyo3(signature = (p, lam = None, tail_tol = jamset::degree_model::DEFAULT_TAIL_TOL))]
    fn new(p: BTreeMap<usize, f64>, lam: Option<f64>, tail_tol: f64) -> PyResult<Self> {
        Ok(Self { inner: jamset::LimitModel::new(p, lam, tail_tol).map_err(to_py)? })
    }

    #[staticmethod]
    fn regular(d: usize) -> PyResult<Self> {
        Ok(Self { inner: jamset::LimitModel::regular(d).map_err(to_py)? })
    }

    #[staticmethod]
    #[pyo3(signature = (c, tail_tol = jamset::degree_model::DEFAULT_TAIL_TOL))]
    fn poisson(c: f64, tail_tol: f64) -> PyResult<Self> {
        Ok(Self { inner: jamset::LimitModel::poisson(c, tail_tol).map_err(to_py)? })
    }

    /// Builds a model from a JSON spec such as `{"kind":"poisson","c":1}`.
    #[staticmethod]
    fn from_spec(spec: &str) -> PyResult<Self> {
        let spec: jamset::ModelSpec = parse(spec)?;
        Ok(Self { inner: spec.build().map_err(to_py)? })
    }

    #[getter]
    fn lam(&self) -> f64 {
        self.inner.lambda()
    }

    #[getter]
    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    #[getter]
    fn p(&self) -> BTreeMap<usize, f64> {
        self.inner.p().clone()
    }

    fn __repr__(&self) -> String {
        format!("LimitModel(lam={}, support={})", self.inner.lambda(), self.inner.p().len())
    }
}

#[pyfunction]
#[pyo3(signature = (model, tol = DEFAULT_TOL))]
fn tau_infinity(model: &LimitModel, tol: f64) -> PyResult<f64> {
    jamset::tau_infinity(&model.inner, tol).map_err(to_py)
}

/// Jamming constant with its per-degree split, as a dict.
#[pyfunction]
#[pyo3(signature = (model, tol = DEFAULT_TOL))]
fn jamming_constant<'py>(py: Python<'py>, model: &LimitModel, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    let result = py.detach(|| jamset::jamming_constant(&model.inner, tol)).map_err(to_py)?;
    to_object(py, &result)
}

#[pyfunction]
#[pyo3(signature = (model, k, tol = DEFAULT_TOL))]
fn degree_mass(model: &LimitModel, k: usize, tol: f64) -> PyResult<f64> {
    jamset::degree_mass(&model.inner, k, tol).map_err(to_py)
}

/// `(exact, lower, upper)` connection probability.
#[pyfunction]
fn p_connect(j: usize, k: usize, u: usize) -> PyResult<(f64, f64, f64)> {
    let p = jamset::p_connect(j, k, u).map_err(to_py)?;
    Ok((p.exact, p.lower, p.upper))
}

/// Fluid-limit profile on `grid` (or a uniform grid on `[0, t_max]`).
#[pyfunction]
#[pyo3(signature = (model, grid = None, t_max = 8.0, points = 161, tol = DEFAULT_TOL))]
fn limit_trajectory<'py>(
    py: Python<'py>,
    model: &LimitModel,
    grid: Option<Vec<f64>>,
    t_max: f64,
    points: usize,
    tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let grid = grid.unwrap_or_else(|| uniform_grid(t_max, points));
    let traj = py.detach(|| jamset::limit_trajectory(&model.inner, &grid, tol)).map_err(to_py)?;
    to_object(py, &traj)
}

/// Independent replicas of the greedy process; returns the aggregate and the
/// per-replica results.
#[pyfunction]
#[pyo3(signature = (seq, replicas = 20, seed = 1, graph = "multigraph", mode = "dynamic", loops = "include", track = false))]
#[allow(clippy::too_many_arguments)]
fn simulate<'py>(
    py: Python<'py>,
    seq: &str,
    replicas: usize,
    seed: u64,
    graph: &str,
    mode: &str,
    loops: &str,
    track: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let mut spec = ReplicaSpec::new(parse(seq)?, parse_enum::<GraphMode>(graph)?, parse_enum::<SimMode>(mode)?);
    spec.loops_policy = parse_enum::<LoopsPolicy>(loops)?;
    let config = track.then(TrackConfig::default);
    let run = py.detach(|| jamset::run_replicas(&spec, replicas, seed, config.as_ref())).map_err(to_py)?;
    let trajectories: Vec<_> = run.outcomes.iter().filter_map(|o| o.trajectory.as_ref()).collect();
    let doc = serde_json::json!({
        "seed": run.seed,
        "aggregate": run.aggregate,
        "replicas": run.results_json(),
        "trajectories": trajectories,
    });
    to_object(py, &doc)
}

#[pymodule]
#[pyo3(name = "jamset")]
fn jamset_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", jamset::VERSION)?;
    m.add_class::<DegreeSequence>()?;
    m.add_class::<LimitModel>()?;
    m.add_function(wrap_pyfunction!(tau_infinity, m)?)?;
    m.add_function(wrap_pyfunction!(jamming_constant, m)?)?;
    m.add_function(wrap_pyfunction!(degree_mass, m)?)?;
    m.add_function(wrap_pyfunction!(p_connect, m)?)?;
    m.add_function(wrap_pyfunction!(limit_trajectory, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}

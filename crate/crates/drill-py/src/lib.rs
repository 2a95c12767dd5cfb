//! Python module `drillbench`: graphs, model spaces, δ, horoballs, the
//! constants ledger and the staged pipeline. Structured results come back as
//! plain dicts (the JSON the CLI prints).

use drill_core::drill::{constants_ledger, LedgerInputs, PhiSpec, Profile};
use drill_core::horoball::build_horoball;
use drill_core::hyperbolicity::{four_point_delta, DeltaPolicy};
use drill_core::pipeline::{build_space, run_pipeline, PipelineConfig, SpaceSpec, Stage};
use drill_core::{Error, Graph};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyString;
use std::str::FromStr;

fn err(e: Error) -> PyErr {
    match e {
        Error::Invalid(_) | Error::Json(_) | Error::Precondition(_) | Error::Unsupported(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (v.to_string(),))
}

/// Accepts a JSON string or any JSON-serialisable Python object.
fn json_text(obj: &Bound<'_, PyAny>) -> PyResult<String> {
    if let Ok(s) = obj.cast::<PyString>() {
        return Ok(s.to_str()?.to_owned());
    }
    obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()
}

fn config(obj: &Bound<'_, PyAny>) -> PyResult<PipelineConfig> {
    let cfg = PipelineConfig::from_json(&json_text(obj)?).map_err(err)?;
    cfg.validate().map_err(err)?;
    Ok(cfg)
}

/// A finite simple undirected graph on vertices 0..n.
#[pyclass(name = "Graph", module = "drillbench", frozen)]
pub struct PyGraph {
    inner: Graph,
}

#[pymethods]
impl PyGraph {
    #[new]
    fn new(n: usize, edges: Vec<(u32, u32)>) -> PyResult<Self> {
        Ok(PyGraph { inner: Graph::from_edges(n, &edges).map_err(err)? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    fn edges(&self) -> Vec<(u32, u32)> {
        self.inner.edges()
    }

    fn neighbors(&self, v: u32) -> PyResult<Vec<u32>> {
        if (v as usize) >= self.inner.n() {
            return Err(PyValueError::new_err(format!("vertex {v} out of range")));
        }
        Ok(self.inner.neighbors(v).to_vec())
    }

    fn is_connected(&self) -> bool {
        self.inner.is_connected()
    }

    /// Distance from the nearest source, `None` when unreachable.
    fn distances(&self, sources: Vec<u32>) -> PyResult<Vec<Option<u32>>> {
        let f = self.inner.distances(&sources).map_err(err)?;
        Ok((0..self.inner.n() as u32).map(|v| f.get(v)).collect())
    }

    fn geodesic(&self, u: u32, v: u32) -> PyResult<Vec<u32>> {
        self.inner.geodesic(u, v).map_err(err)
    }

    #[pyo3(signature = (name = "g"))]
    fn to_dot(&self, name: &str) -> String {
        self.inner.to_dot(name)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner.to_json()).map_err(|e| err(e.into()))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let j = serde_json::from_str(text).map_err(|e| err(e.into()))?;
        Ok(PyGraph { inner: Graph::from_json(&j).map_err(err)? })
    }

    fn __repr__(&self) -> String {
        format!("Graph(n={}, m={})", self.inner.n(), self.inner.m())
    }
}

/// Builds a space from the same `kind` strings the pipeline config accepts.
#[pyfunction]
#[pyo3(signature = (kind, radius = None, seed = 0))]
fn generate(kind: &str, radius: Option<u32>, seed: u64) -> PyResult<PyGraph> {
    let (g, _) = build_space(&SpaceSpec { kind: kind.into(), radius }, seed).map_err(err)?;
    Ok(PyGraph { inner: g })
}

/// Four-point δ; `policy` is `exact` or `sample:N:SEED`.
#[pyfunction]
#[pyo3(signature = (graph, policy = "exact"))]
fn delta<'py>(py: Python<'py>, graph: &PyGraph, policy: &str) -> PyResult<Bound<'py, PyAny>> {
    let policy = DeltaPolicy::from_str(policy).map_err(err)?;
    let est = py.detach(|| four_point_delta(&graph.inner, policy)).map_err(err)?;
    to_py(py, &serde_json::to_value(&est).map_err(|e| err(e.into()))?)
}

/// Truncated combinatorial horoball over `graph`: `(graph, depth, base)` where
/// vertex `i` sits at depth `depth[i]` over base vertex `base[i]`.
#[pyfunction]
fn horoball(py: Python<'_>, graph: &PyGraph, depth_max: u32) -> PyResult<(PyGraph, Vec<u32>, Vec<u32>)> {
    let h = py.detach(|| build_horoball(&graph.inner, depth_max)).map_err(err)?;
    Ok((PyGraph { inner: h.graph }, h.depth, h.base_of))
}

/// The constants ledger. `inputs` and `phi` use the config's JSON shapes.
#[pyfunction]
#[pyo3(signature = (profile = "exact", inputs = None, phi = None))]
fn constants<'py>(py: Python<'py>, profile: &str, inputs: Option<&Bound<'py, PyAny>>, phi: Option<&Bound<'py, PyAny>>) -> PyResult<Bound<'py, PyAny>> {
    let profile = Profile::from_str(profile).map_err(err)?;
    let inputs: LedgerInputs = match inputs {
        Some(o) => serde_json::from_str(&json_text(o)?).map_err(|e| err(e.into()))?,
        None => LedgerInputs::toy(),
    };
    let phi: PhiSpec = match phi {
        Some(o) => serde_json::from_str(&json_text(o)?).map_err(|e| err(e.into()))?,
        None => PhiSpec::Identity,
    };
    let ledger = constants_ledger(profile, &inputs, &|x| phi.eval(x)).map_err(err)?;
    to_py(py, &serde_json::to_value(ledger.report()).map_err(|e| err(e.into()))?)
}

/// Validates a config and returns its hash.
#[pyfunction]
fn config_hash(cfg: &Bound<'_, PyAny>) -> PyResult<String> {
    Ok(config(cfg)?.hash())
}

/// Runs a config (dict or JSON text) and returns the bundle. With `stages`,
/// those stages replace the config's list.
#[pyfunction]
#[pyo3(signature = (cfg, stages = None))]
fn run<'py>(py: Python<'py>, cfg: &Bound<'py, PyAny>, stages: Option<Vec<String>>) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = config(cfg)?;
    if let Some(stages) = stages {
        cfg.stages = stages
            .iter()
            .map(|s| serde_json::from_value::<Stage>(serde_json::Value::String(s.clone())).map_err(|_| PyValueError::new_err(format!("unknown stage {s:?}"))))
            .collect::<PyResult<_>>()?;
        cfg.validate().map_err(err)?;
    }
    let bundle = py.detach(|| run_pipeline(&cfg)).map_err(err)?;
    to_py(py, &serde_json::to_value(&bundle).map_err(|e| err(e.into()))?)
}

/// Exit code the CLI would use for a verdict string.
#[pyfunction]
fn exit_code(verdict: &str) -> PyResult<i32> {
    let v: drill_core::Verdict = serde_json::from_value(serde_json::Value::String(verdict.into())).map_err(|_| PyValueError::new_err(format!("unknown verdict {verdict:?}")))?;
    Ok(v.exit_code())
}

#[pymodule]
fn drillbench(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(delta, m)?)?;
    m.add_function(wrap_pyfunction!(horoball, m)?)?;
    m.add_function(wrap_pyfunction!(constants, m)?)?;
    m.add_function(wrap_pyfunction!(config_hash, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(exit_code, m)?)?;
    Ok(())
}

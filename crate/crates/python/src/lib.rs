//! Python bindings: environments, models, training, evaluation and the
//! numeric checks. Thin wrappers over plain-Rust helpers in `ops`.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use nidlab::checkpoint::AnyModel;
use nidlab::envs::{EnvSpec, Split};
use nidlab::model::Hyper;
use nidlab::predictor::ModelKind;

pub mod ops;

fn py_err(e: nidlab::Error) -> PyErr {
    match e {
        nidlab::Error::Config { .. } | nidlab::Error::Contract(_) | nidlab::Error::Shape { .. } | nidlab::Error::Json(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

#[pyclass(name = "EnvSpec", frozen)]
pub struct PyEnvSpec {
    pub inner: EnvSpec,
}

#[pymethods]
impl PyEnvSpec {
    /// `inclined_plane`, `valley` or `stochastic_plane`, optionally with an agent.
    #[staticmethod]
    #[pyo3(signature = (name, agent = false))]
    fn preset(name: &str, agent: bool) -> PyResult<Self> {
        ops::preset(name, agent).map(|inner| Self { inner }).map_err(py_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        ops::env_from_json(text).map(|inner| Self { inner }).map_err(py_err)
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("env serializes")
    }

    #[getter]
    fn positions(&self) -> usize {
        self.inner.positions
    }

    #[getter]
    fn apex(&self) -> usize {
        self.inner.apex
    }

    #[getter]
    fn horizon(&self) -> usize {
        self.inner.horizon
    }

    #[getter]
    fn n_objects(&self) -> usize {
        self.inner.n_objects()
    }

    #[getter]
    fn n_actions(&self) -> usize {
        self.inner.n_actions()
    }

    #[getter]
    fn object_names(&self) -> Vec<String> {
        self.inner.objects.iter().map(|o| o.name.clone()).collect()
    }

    /// Deterministic successor; `mover_dir` fixes the stochastic mover's move.
    #[pyo3(signature = (positions, action = None, mover_dir = None))]
    fn step(&self, positions: Vec<usize>, action: Option<u8>, mover_dir: Option<i64>) -> PyResult<Vec<usize>> {
        ops::step(&self.inner, positions, action, mover_dir).map_err(py_err)
    }

    /// Positions at t = 0..=horizon and the actions taken, for one seeded episode.
    #[pyo3(signature = (split = "train", seed = 0))]
    fn episode(&self, split: &str, seed: u64) -> PyResult<(Vec<Vec<usize>>, Vec<u8>)> {
        ops::episode(&self.inner, split, seed).map_err(py_err)
    }

    fn render(&self, positions: Vec<usize>) -> PyResult<String> {
        ops::render(&self.inner, positions).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "EnvSpec(positions={}, apex={}, orientation={:?}, objects={})",
            self.inner.positions,
            self.inner.apex,
            self.inner.orientation,
            self.inner.n_objects()
        )
    }
}

#[pyclass(name = "Model")]
pub struct PyModel {
    pub env: EnvSpec,
    pub hyper: Hyper,
    pub model: AnyModel,
    pub curve: Vec<f64>,
}

#[pymethods]
impl PyModel {
    /// Fresh parameters for `env`; `hyper` is a JSON object of overrides.
    #[new]
    #[pyo3(signature = (env, kind = "nid", hyper = None, seed = None))]
    fn new(env: &PyEnvSpec, kind: &str, hyper: Option<&str>, seed: Option<u64>) -> PyResult<Self> {
        let hyper = ops::hyper(hyper, seed).map_err(py_err)?;
        let kind: ModelKind = kind.parse().map_err(py_err)?;
        let model = AnyModel::for_env(kind, &hyper, &env.inner).map_err(py_err)?;
        Ok(Self { env: env.inner.clone(), hyper, model, curve: Vec::new() })
    }

    /// Trains from the current hyperparameters, replacing the parameters.
    /// Returns the binned learning curve.
    #[pyo3(signature = (steps = None))]
    fn train(&mut self, py: Python<'_>, steps: Option<usize>) -> PyResult<Vec<f64>> {
        if let Some(s) = steps {
            self.hyper.steps = s;
        }
        let (env, hyper, kind) = (&self.env, &self.hyper, self.model.as_dyn().kind());
        let trained = py.detach(|| nidlab::harness::train(kind, env, hyper)).map_err(py_err)?;
        self.model = trained.model;
        self.curve = trained.curve.means;
        Ok(self.curve.clone())
    }

    /// Predicted next-state distribution, one row per object.
    #[pyo3(signature = (positions, action = None))]
    fn predict(&self, positions: Vec<usize>, action: Option<u8>) -> PyResult<Vec<Vec<f64>>> {
        ops::predict(&self.model, &self.env, positions, action).map_err(py_err)
    }

    /// Mean and population std of cumulative compound BCE at steps 1..=horizon.
    #[pyo3(signature = (split = "test", n_rollouts = 100, horizon = None, seed = 0))]
    fn rollout(
        &self,
        py: Python<'_>,
        split: &str,
        n_rollouts: usize,
        horizon: Option<usize>,
        seed: u64,
    ) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let split: Split = split.parse().map_err(py_err)?;
        let horizon = horizon.unwrap_or(self.env.horizon);
        let r = py
            .detach(|| nidlab::harness::compound_rollout(self.model.as_dyn(), &self.env, split, n_rollouts, horizon, seed))
            .map_err(py_err)?;
        Ok((r.mean, r.std))
    }

    /// Encoder bottleneck points per (object, position), cluster labels and silhouette.
    fn embedding(&self) -> PyResult<ops::Embedding> {
        ops::embedding(&self.model, &self.env).map_err(py_err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        ops::save(&self.model, &self.hyper, &path).map_err(py_err)
    }

    #[staticmethod]
    fn load(path: PathBuf, env: &PyEnvSpec) -> PyResult<Self> {
        let (model, hyper) = ops::load(&path, &env.inner).map_err(py_err)?;
        Ok(Self { env: env.inner.clone(), hyper, model, curve: Vec::new() })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.model.as_dyn().kind().as_str()
    }

    #[getter]
    fn n_params(&self) -> usize {
        self.model.n_params()
    }

    #[getter]
    fn hyper(&self) -> String {
        serde_json::to_string(&self.hyper).expect("hyper serializes")
    }

    fn __repr__(&self) -> String {
        format!("Model(kind={}, n_params={})", self.kind(), self.n_params())
    }
}

/// Worst relative finite-difference gradient error over random tiny models.
#[pyfunction]
#[pyo3(signature = (n_configs = 100, h = 1e-5, coords_per_param = 24, seed = 0))]
fn check_gradients(py: Python<'_>, n_configs: usize, h: f64, coords_per_param: usize, seed: u64) -> PyResult<f64> {
    py.detach(|| nidlab::harness::gradient_sweep(n_configs, h, coords_per_param, seed))
        .map(|r| r.max_rel_error)
        .map_err(py_err)
}

#[pyfunction]
fn silhouette(points: Vec<Vec<f64>>, labels: Vec<usize>) -> PyResult<f64> {
    nidlab::harness::silhouette(&points, &labels).map_err(py_err)
}

/// (mean row entropy, entropy of the mean row) of softmax over rows of `q`.
#[pyfunction]
fn entropy_terms(q: Vec<Vec<f64>>) -> PyResult<(f64, f64)> {
    ops::entropy_terms(&q).map_err(py_err)
}

#[pyfunction]
fn bce(target: Vec<Vec<f64>>, pred: Vec<Vec<f64>>) -> PyResult<f64> {
    ops::bce(&target, &pred).map_err(py_err)
}

#[pymodule]
fn nidlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEnvSpec>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(check_gradients, m)?)?;
    m.add_function(wrap_pyfunction!(silhouette, m)?)?;
    m.add_function(wrap_pyfunction!(entropy_terms, m)?)?;
    m.add_function(wrap_pyfunction!(bce, m)?)?;
    Ok(())
}

//! Interpreter-free helpers behind the Python methods.

use std::path::Path;

use pyo3::IntoPyObject;

use nidlab::checkpoint::{AnyModel, Checkpoint};
use nidlab::cli::{render_state, EnvBlock, EnvPreset};
use nidlab::diffcore::Tensor;
use nidlab::envs::{run_episode, step_with, to_state_tensor, Action, EnvSpec, GridState, Policy, Split};
use nidlab::harness::{embedding_report, Cluster};
use nidlab::model::Hyper;
use nidlab::predictor::predict as model_predict;
use nidlab::{Error, Result};

fn arg_err(path: &str, message: impl Into<String>) -> Error {
    Error::Config { path: path.into(), message: message.into() }
}

pub fn preset(name: &str, agent: bool) -> Result<EnvSpec> {
    let preset: EnvPreset =
        serde_json::from_value(serde_json::Value::from(name)).map_err(|_| arg_err("name", format!("unknown preset `{name}`")))?;
    EnvBlock { preset, agent, ..EnvBlock::default() }.build()
}

pub fn env_from_json(text: &str) -> Result<EnvSpec> {
    let spec: EnvSpec = serde_json::from_str(text)?;
    spec.validate()?;
    Ok(spec)
}

/// Default hyperparameters overlaid with a JSON object of overrides.
pub fn hyper(overrides: Option<&str>, seed: Option<u64>) -> Result<Hyper> {
    let mut h: Hyper = match overrides {
        Some(text) => serde_json::from_str(text)?,
        None => Hyper::default(),
    };
    if let Some(s) = seed {
        h.seed = s;
    }
    h.validate()?;
    Ok(h)
}

fn action(spec: &EnvSpec, a: Option<u8>) -> Result<Action> {
    match a {
        None if spec.has_agent() => Err(arg_err("action", "this environment needs an action")),
        None => Ok(Action::None),
        Some(i) => Action::from_index(i).ok_or_else(|| arg_err("action", format!("no action with index {i}"))),
    }
}

fn state(spec: &EnvSpec, positions: Vec<usize>) -> Result<GridState> {
    let s = GridState::new(positions);
    s.validate(spec)?;
    Ok(s)
}

pub fn step(spec: &EnvSpec, positions: Vec<usize>, a: Option<u8>, mover_dir: Option<i64>) -> Result<Vec<usize>> {
    let s = state(spec, positions)?;
    Ok(step_with(spec, &s, action(spec, a)?, mover_dir)?.pos)
}

pub fn episode(spec: &EnvSpec, split: &str, seed: u64) -> Result<(Vec<Vec<usize>>, Vec<u8>)> {
    let split: Split = split.parse()?;
    let ep = run_episode(spec, split, Policy::for_env(spec), seed)?;
    Ok((ep.states.into_iter().map(|s| s.pos).collect(), ep.actions.iter().map(|a| a.index()).collect()))
}

pub fn render(spec: &EnvSpec, positions: Vec<usize>) -> Result<String> {
    Ok(render_state(spec, &state(spec, positions)?))
}

fn model_action(model: &AnyModel, spec: &EnvSpec, a: Option<u8>) -> Result<Option<Action>> {
    if model.as_dyn().n_actions() == 0 {
        return Ok(None);
    }
    action(spec, a).map(Some)
}

pub fn predict(model: &AnyModel, spec: &EnvSpec, positions: Vec<usize>, a: Option<u8>) -> Result<Vec<Vec<f64>>> {
    let x = to_state_tensor(spec, &state(spec, positions)?);
    let y = model_predict(model.as_dyn(), &x, model_action(model, spec, a)?)?;
    Ok((0..y.rows()).map(|r| y.row(r).to_vec()).collect())
}

#[derive(Debug, IntoPyObject)]
pub struct Embedding {
    pub pairs: Vec<(usize, usize)>,
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<&'static str>,
    pub silhouette: f64,
}

fn cluster_name(c: Cluster) -> &'static str {
    match c.index() {
        0 => "C1",
        1 => "C2",
        _ => "C3",
    }
}

pub fn embedding(model: &AnyModel, spec: &EnvSpec) -> Result<Embedding> {
    let nid = model.as_nid().ok_or_else(|| arg_err("kind", "only nid models have an embedding"))?;
    let r = embedding_report(nid, spec)?;
    Ok(Embedding {
        pairs: r.pairs,
        points: r.points,
        labels: r.labels.into_iter().map(cluster_name).collect(),
        silhouette: r.silhouette,
    })
}

pub fn save(model: &AnyModel, hyper: &Hyper, path: &Path) -> Result<()> {
    Checkpoint::of(model, hyper).save(path)
}

pub fn load(path: &Path, spec: &EnvSpec) -> Result<(AnyModel, Hyper)> {
    let ck = Checkpoint::load(path)?;
    let model = ck.restore()?;
    let want = AnyModel::for_env(ck.kind, &ck.hyper, spec)?.dims();
    if model.dims() != want {
        return Err(arg_err("env", format!("checkpoint has dims {:?}, environment needs {want:?}", model.dims())));
    }
    Ok((model, ck.hyper))
}

pub fn entropy_terms(q: &[Vec<f64>]) -> Result<(f64, f64)> {
    nidlab::model::entropy_terms(&Tensor::from_rows(q)?)
}

pub fn bce(target: &[Vec<f64>], pred: &[Vec<f64>]) -> Result<f64> {
    nidlab::diffcore::bce(&Tensor::from_rows(target)?, &Tensor::from_rows(pred)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_and_bad_names() {
        let v = preset("valley", true).unwrap();
        assert_eq!((v.positions, v.n_objects()), (12, 5));
        assert!(matches!(preset("hill", false), Err(Error::Config { .. })));
        assert!(preset("stochastic_plane", true).is_err());
        let back = env_from_json(&serde_json::to_string(&v).unwrap()).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn step_rolls_and_checks_actions() {
        let spec = preset("inclined_plane", false).unwrap();
        // green ball at 3 rolls down toward the left wall
        assert_eq!(step(&spec, vec![0, 3, 8, 10], None, None).unwrap(), vec![0, 2, 8, 11]);
        let agent = preset("inclined_plane", true).unwrap();
        assert!(step(&agent, vec![0, 3, 8, 10, 5], None, None).is_err());
        assert!(step(&spec, vec![0, 0, 8, 10], None, None).is_err());
    }

    #[test]
    fn zero_model_predicts_uniform_rows() {
        let spec = preset("inclined_plane", false).unwrap();
        let mut m = AnyModel::for_env(nidlab::predictor::ModelKind::Nid, &Hyper::default(), &spec).unwrap();
        if let AnyModel::Nid(n) = &mut m {
            for t in nidlab::predictor::TransitionModel::params_mut(n) {
                t.data_mut().iter_mut().for_each(|v| *v = 0.0);
            }
        }
        let rows = predict(&m, &spec, vec![0, 3, 8, 10], None).unwrap();
        assert_eq!(rows.len(), 4);
        for r in rows {
            assert!(r.iter().all(|&p| (p - 1.0 / 12.0).abs() < 1e-15));
        }
    }

    #[test]
    fn checkpoints_round_trip_and_reject_other_envs() {
        let spec = preset("valley", false).unwrap();
        let h = hyper(Some(r#"{"steps": 50, "k": 3}"#), Some(4)).unwrap();
        assert_eq!((h.k, h.seed), (3, 4));
        let m = nidlab::harness::train(nidlab::predictor::ModelKind::Nid, &spec, &h).unwrap().model;
        let d = tempfile::tempdir().unwrap();
        let path = d.path().join("m.json");
        save(&m, &h, &path).unwrap();
        let (back, hb) = load(&path, &spec).unwrap();
        assert_eq!(back, m);
        assert_eq!(hb, h);
        assert!(load(&path, &preset("valley", true).unwrap()).is_err());
        let e = embedding(&m, &spec).unwrap();
        assert_eq!(e.points.len(), e.labels.len());
        assert!(e.silhouette.is_finite());
    }

    #[test]
    fn numeric_helpers_match_closed_forms() {
        // uniform logits: maximal row entropy ln 3, and the mean row is uniform too
        let (r1, r2) = entropy_terms(&[vec![0.0; 3], vec![0.0; 3]]).unwrap();
        assert!((r1 - 3f64.ln()).abs() < 1e-12 && (r2 - 3f64.ln()).abs() < 1e-12);
        let b = bce(&[vec![1.0, 0.0]], &[vec![0.5, 0.5]]).unwrap();
        assert!((b - 2f64.ln()).abs() < 1e-12);
        assert!(hyper(Some(r#"{"kk": 1}"#), None).is_err());
    }
}

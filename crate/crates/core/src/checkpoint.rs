//! One enum over every predictor, and its JSON checkpoint format.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::{Conv1Model, Conv3Model, MlpModel};
use crate::diffcore::{Tape, Tensor, Var};
use crate::envs::{Action, EnvSpec};
use crate::error::{Error, Result};
use crate::model::{Hyper, NidModel};
use crate::predictor::{ModelKind, TransitionModel};
use crate::seed;

#[derive(Clone, Debug, PartialEq)]
pub enum AnyModel {
    Nid(NidModel),
    Mlp(MlpModel),
    Conv1(Conv1Model),
    Conv3(Conv3Model),
}

impl AnyModel {
    /// Fresh parameters, deterministic in `hyper.seed`.
    pub fn init(kind: ModelKind, hyper: &Hyper, n_objects: usize, n_positions: usize, n_actions: usize) -> Result<Self> {
        hyper.validate()?;
        if n_objects == 0 || n_positions == 0 {
            return Err(Error::contract("model needs at least one object and one position"));
        }
        let mut rng = seed::stream(hyper.seed, "init", 0);
        Ok(match kind {
            ModelKind::Nid => AnyModel::Nid(NidModel::init(hyper, n_objects, n_positions, n_actions, &mut rng)?),
            ModelKind::Mlp => AnyModel::Mlp(MlpModel::init(n_objects, n_positions, n_actions, &mut rng)),
            ModelKind::Conv1 => AnyModel::Conv1(Conv1Model::init(n_objects, n_positions, n_actions, &mut rng)),
            ModelKind::Conv3 => AnyModel::Conv3(Conv3Model::init(n_objects, n_positions, n_actions, &mut rng)),
        })
    }

    pub fn for_env(kind: ModelKind, hyper: &Hyper, env: &EnvSpec) -> Result<Self> {
        Self::init(kind, hyper, env.n_objects(), env.positions, env.n_actions())
    }

    pub fn as_dyn(&self) -> &dyn TransitionModel {
        match self {
            AnyModel::Nid(m) => m,
            AnyModel::Mlp(m) => m,
            AnyModel::Conv1(m) => m,
            AnyModel::Conv3(m) => m,
        }
    }

    fn as_dyn_mut(&mut self) -> &mut dyn TransitionModel {
        match self {
            AnyModel::Nid(m) => m,
            AnyModel::Mlp(m) => m,
            AnyModel::Conv1(m) => m,
            AnyModel::Conv3(m) => m,
        }
    }

    pub fn as_nid(&self) -> Option<&NidModel> {
        match self {
            AnyModel::Nid(m) => Some(m),
            _ => None,
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        match self {
            AnyModel::Nid(m) => (m.n_objects, m.n_positions, m.n_actions),
            AnyModel::Mlp(m) => (m.n_objects, m.n_positions, m.n_actions),
            AnyModel::Conv1(m) => (m.n_objects, m.n_positions, m.n_actions),
            AnyModel::Conv3(m) => (m.n_objects, m.n_positions, m.n_actions),
        }
    }

    pub fn n_params(&self) -> usize {
        self.named_params().iter().map(|(_, t)| t.numel()).sum()
    }
}

impl TransitionModel for AnyModel {
    fn kind(&self) -> ModelKind {
        self.as_dyn().kind()
    }

    fn named_params(&self) -> Vec<(&'static str, &Tensor)> {
        self.as_dyn().named_params()
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.as_dyn_mut().params_mut()
    }

    fn n_actions(&self) -> usize {
        self.as_dyn().n_actions()
    }

    fn forward(&self, tape: &mut Tape, params: &[Var], x: &Tensor, action: Option<Action>) -> Result<Var> {
        self.as_dyn().forward(tape, params, x, action)
    }

    fn regularizer(&self, tape: &mut Tape, params: &[Var]) -> Result<Option<Var>> {
        self.as_dyn().regularizer(tape, params)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamRecord {
    pub name: String,
    pub shape: Vec<usize>,
    /// Row-major.
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub kind: ModelKind,
    pub hyper: Hyper,
    pub n_objects: usize,
    pub n_positions: usize,
    pub n_actions: usize,
    pub params: Vec<ParamRecord>,
}

impl Checkpoint {
    pub fn of(model: &AnyModel, hyper: &Hyper) -> Self {
        let (n_objects, n_positions, n_actions) = model.dims();
        let hyper = match model {
            AnyModel::Nid(m) => m.hyper.clone(),
            _ => hyper.clone(),
        };
        Self {
            kind: model.kind(),
            hyper,
            n_objects,
            n_positions,
            n_actions,
            params: model
                .named_params()
                .into_iter()
                .map(|(name, t)| ParamRecord {
                    name: name.to_string(),
                    shape: t.shape().to_vec(),
                    values: t.data().to_vec(),
                })
                .collect(),
        }
    }

    /// Rebuilds the model; names and shapes must match the architecture exactly.
    pub fn restore(&self) -> Result<AnyModel> {
        let mut model = AnyModel::init(self.kind, &self.hyper, self.n_objects, self.n_positions, self.n_actions)?;
        let expected: Vec<(&'static str, Vec<usize>)> =
            model.named_params().into_iter().map(|(n, t)| (n, t.shape().to_vec())).collect();
        if expected.len() != self.params.len() {
            return Err(Error::contract(format!(
                "checkpoint holds {} tensors, {} model needs {}",
                self.params.len(),
                self.kind.as_str(),
                expected.len()
            )));
        }
        for ((slot, (name, shape)), rec) in model.params_mut().into_iter().zip(expected).zip(&self.params) {
            if rec.name != name || rec.shape != shape {
                return Err(Error::contract(format!(
                    "checkpoint tensor `{}` {:?} does not match expected `{name}` {shape:?}",
                    rec.name, rec.shape
                )));
            }
            *slot = Tensor::new(rec.shape.clone(), rec.values.clone())?;
        }
        Ok(model)
    }

    pub fn write(&self, w: impl Write) -> Result<()> {
        serde_json::to_writer(w, self)?;
        Ok(())
    }

    pub fn read(r: impl Read) -> Result<Self> {
        let mut de = serde_json::Deserializer::from_reader(r);
        serde_path_to_error::deserialize(&mut de).map_err(|e| Error::Config {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

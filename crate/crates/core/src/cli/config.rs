use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::envs::{EnvSpec, ObjectSpec, Orientation, Split};
use crate::error::{Error, Result};
use crate::harness::{AblationGrid, DEFAULT_ROLLOUTS};
use crate::model::Hyper;
use crate::predictor::ModelKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvPreset {
    InclinedPlane,
    Valley,
    StochasticPlane,
}

/// A named environment with optional field overrides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvBlock {
    pub preset: EnvPreset,
    /// Adds the agent as the last object (slopes only).
    pub agent: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positions: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub apex: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orientation: Option<Orientation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objects: Option<Vec<ObjectSpec>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
}

impl Default for EnvBlock {
    fn default() -> Self {
        Self {
            preset: EnvPreset::InclinedPlane,
            agent: false,
            positions: None,
            apex: None,
            orientation: None,
            objects: None,
            horizon: None,
        }
    }
}

impl EnvBlock {
    pub fn build(&self) -> Result<EnvSpec> {
        let cfg_err = |path: &str, message: String| Error::Config {
            path: path.into(),
            message,
        };
        let mut spec = match (self.preset, self.agent) {
            (EnvPreset::InclinedPlane, false) => EnvSpec::inclined_plane(),
            (EnvPreset::InclinedPlane, true) => EnvSpec::inclined_plane_with_agent(),
            (EnvPreset::Valley, false) => EnvSpec::valley(),
            (EnvPreset::Valley, true) => EnvSpec::valley_with_agent(),
            (EnvPreset::StochasticPlane, false) => EnvSpec::stochastic_plane(),
            (EnvPreset::StochasticPlane, true) => {
                return Err(cfg_err("env.agent", "the stochastic plane has no agent".into()))
            }
        };
        if let Some(p) = self.positions {
            spec.positions = p;
        }
        if let Some(a) = self.apex {
            spec.apex = a;
        }
        if let Some(o) = self.orientation {
            spec.orientation = o;
        }
        if let Some(objs) = &self.objects {
            spec.objects = objs.clone();
            if self.agent && !objs.iter().any(|o| o.is_agent) {
                spec.objects.push(ObjectSpec::agent(objs.len()));
            }
        }
        if let Some(h) = self.horizon {
            spec.horizon = h;
        }
        spec.validate().map_err(|e| cfg_err("env", e.to_string()))?;
        Ok(spec)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    #[serde(default = "default_kind")]
    pub kind: ModelKind,
    #[serde(default)]
    pub hyper: Hyper,
}

fn default_kind() -> ModelKind {
    ModelKind::Nid
}

impl Default for ModelBlock {
    fn default() -> Self {
        Self {
            kind: default_kind(),
            hyper: Hyper::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainBlock {
    pub seeds: Vec<u64>,
    /// Optional recorded episodes to train on instead of online sampling.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub episodes: Option<PathBuf>,
}

impl Default for TrainBlock {
    fn default() -> Self {
        Self {
            seeds: vec![0],
            episodes: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalBlock {
    pub n_rollouts: usize,
    pub horizon: usize,
    pub splits: Vec<Split>,
}

impl Default for EvalBlock {
    fn default() -> Self {
        Self {
            n_rollouts: DEFAULT_ROLLOUTS,
            horizon: crate::envs::DEFAULT_HORIZON,
            splits: vec![Split::Train, Split::Test],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenBlock {
    pub n_episodes: usize,
}

impl Default for GenBlock {
    fn default() -> Self {
        Self { n_episodes: 100 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckGradBlock {
    /// Random configurations per model family.
    pub n_configs: usize,
    pub step: f64,
    pub tolerance: f64,
    /// Coordinates probed per tensor; larger tensors are subsampled.
    pub coords_per_param: usize,
}

impl Default for CheckGradBlock {
    fn default() -> Self {
        Self {
            n_configs: 100,
            step: 1e-5,
            tolerance: 1e-4,
            coords_per_param: 24,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridPreset {
    Full,
}

/// Either an explicit grid or the named 720-run preset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AblateBlock {
    Preset { preset: GridPreset },
    Grid(AblationGrid),
}

impl AblateBlock {
    pub fn grid(&self) -> AblationGrid {
        match self {
            AblateBlock::Preset { preset: GridPreset::Full } => AblationGrid::full(),
            AblateBlock::Grid(g) => g.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub env: EnvBlock,
    pub model: ModelBlock,
    pub train: TrainBlock,
    pub eval: EvalBlock,
    pub gen: GenBlock,
    pub check_grad: CheckGradBlock,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ablate: Option<AblateBlock>,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            env: EnvBlock::default(),
            model: ModelBlock::default(),
            train: TrainBlock::default(),
            eval: EvalBlock::default(),
            gen: GenBlock::default(),
            check_grad: CheckGradBlock::default(),
            ablate: None,
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut de = serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            Error::Config {
                path: if path == "." { "<root>".into() } else { path },
                message: e.into_inner().to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.env.build()?;
        self.model.hyper.validate()?;
        if self.train.seeds.is_empty() {
            return Err(Error::Config {
                path: "train.seeds".into(),
                message: "needs at least one seed".into(),
            });
        }
        if self.eval.n_rollouts == 0 || self.eval.horizon == 0 {
            return Err(Error::Config {
                path: "eval".into(),
                message: "n_rollouts and horizon must be positive".into(),
            });
        }
        if let Some(a) = &self.ablate {
            a.grid().validate()?;
        }
        Ok(())
    }

    /// Canonical JSON of the fully defaulted configuration.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }
}

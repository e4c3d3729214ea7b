use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::checkpoint::AnyModel;
use crate::diffcore::{RmsProp, Tape, Tensor};
use crate::envs::{sample_initial, step, to_state_tensor, Action, EnvSpec, Episode, Policy, Split};
use crate::error::{Error, Result};
use crate::model::Hyper;
use crate::predictor::{bind, loss_on_tape, ModelKind, TransitionModel};
use crate::seed;

pub const CURVE_BIN: usize = 500;

/// Per-step training losses averaged over consecutive bins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub bin: usize,
    pub steps: usize,
    /// Mean loss per bin; the last bin may be partial.
    pub means: Vec<f64>,
}

impl LearningCurve {
    pub fn from_losses(losses: &[f64], bin: usize) -> Self {
        Self {
            bin,
            steps: losses.len(),
            means: losses.chunks(bin).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect(),
        }
    }
}

/// One supervised example (x_t, a_t, x_{t+1}).
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub x: Tensor,
    pub action: Option<Action>,
    pub next: Tensor,
}

/// Where training transitions come from.
pub enum TransitionSource<'a> {
    /// Fresh simulation every step: a training-split initial state run for a
    /// uniformly drawn number of steps inside the episode horizon.
    Online,
    /// Uniform draws from a fixed set of recorded episodes.
    Episodes(&'a [Episode]),
}

fn encode_action(env: &EnvSpec, a: Action) -> Option<Action> {
    env.has_agent().then_some(a)
}

pub fn sample_transition(env: &EnvSpec, source: &TransitionSource, rng: &mut impl Rng) -> Result<Transition> {
    match source {
        TransitionSource::Online => {
            let policy = Policy::for_env(env);
            let mut s = sample_initial(env, Split::Train, rng)?;
            let t = rng.gen_range(0..env.horizon.max(1));
            for _ in 0..t {
                let a = policy.act(rng);
                s = step(env, &s, a, rng)?;
            }
            let a = policy.act(rng);
            let next = step(env, &s, a, rng)?;
            Ok(Transition {
                x: to_state_tensor(env, &s),
                action: encode_action(env, a),
                next: to_state_tensor(env, &next),
            })
        }
        TransitionSource::Episodes(eps) => {
            if eps.is_empty() || eps.iter().any(|e| e.actions.is_empty()) {
                return Err(Error::contract("episode dataset has no transitions"));
            }
            let ep = &eps[rng.gen_range(0..eps.len())];
            let t = rng.gen_range(0..ep.actions.len());
            Ok(Transition {
                x: to_state_tensor(env, &ep.states[t]),
                action: encode_action(env, ep.actions[t]),
                next: to_state_tensor(env, &ep.states[t + 1]),
            })
        }
    }
}

fn diverged(step: usize, loss: f64) -> Error {
    Error::Diverged { step, loss }
}

/// Online RMSProp with batch size 1 on `model`, in place. Returns per-step losses.
pub fn fit(model: &mut AnyModel, env: &EnvSpec, hyper: &Hyper, source: &TransitionSource, rng: &mut impl Rng) -> Result<Vec<f64>> {
    let mut opt = {
        let params: Vec<&Tensor> = model.named_params().into_iter().map(|(_, t)| t).collect();
        RmsProp::new(&params, hyper.optimizer())?
    };
    let mut losses = Vec::with_capacity(hyper.steps);
    for i in 0..hyper.steps {
        let tr = sample_transition(env, source, rng)?;
        let mut tape = Tape::new();
        let vars = bind(&mut tape, model, true);
        let loss = match loss_on_tape(model, &mut tape, &vars, &tr.x, &tr.next, tr.action) {
            Ok(l) => l,
            Err(Error::NonFinite(_)) => return Err(diverged(i, f64::NAN)),
            Err(e) => return Err(e),
        };
        let value = tape.value(loss).item();
        if !value.is_finite() {
            return Err(diverged(i, value));
        }
        let grads = tape.grad(loss)?;
        let g: Vec<Tensor> = vars.iter().map(|&v| grads.wrt(v)).collect();
        match opt.step(model.params_mut(), &g) {
            Ok(()) => {}
            Err(Error::NonFinite(_)) => return Err(diverged(i, value)),
            Err(e) => return Err(e),
        }
        losses.push(value);
    }
    Ok(losses)
}

pub struct Trained {
    pub model: AnyModel,
    pub curve: LearningCurve,
}

/// Initialises a `kind` model for `env` and trains it online; fully
/// determined by `hyper.seed`.
pub fn train(kind: ModelKind, env: &EnvSpec, hyper: &Hyper) -> Result<Trained> {
    env.validate()?;
    let mut model = AnyModel::for_env(kind, hyper, env)?;
    let mut rng = seed::stream(hyper.seed, "train", 0);
    let losses = fit(&mut model, env, hyper, &TransitionSource::Online, &mut rng)?;
    Ok(Trained {
        model,
        curve: LearningCurve::from_losses(&losses, CURVE_BIN),
    })
}

/// As [`train`] but drawing transitions from recorded episodes.
pub fn train_on_episodes(kind: ModelKind, env: &EnvSpec, hyper: &Hyper, episodes: &[Episode]) -> Result<Trained> {
    env.validate()?;
    let mut model = AnyModel::for_env(kind, hyper, env)?;
    let mut rng = seed::stream(hyper.seed, "train", 0);
    let losses = fit(&mut model, env, hyper, &TransitionSource::Episodes(episodes), &mut rng)?;
    Ok(Trained {
        model,
        curve: LearningCurve::from_losses(&losses, CURVE_BIN),
    })
}

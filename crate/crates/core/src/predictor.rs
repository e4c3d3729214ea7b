//! Common contract for next-state predictors.

use serde::{Deserialize, Serialize};

use crate::diffcore::{Tape, Tensor, Var};
use crate::envs::Action;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Nid,
    Mlp,
    Conv1,
    Conv3,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Nid, ModelKind::Mlp, ModelKind::Conv1, ModelKind::Conv3];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Nid => "nid",
            ModelKind::Mlp => "mlp",
            ModelKind::Conv1 => "conv1",
            ModelKind::Conv3 => "conv3",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config {
                path: "model.kind".into(),
                message: format!("unknown model kind `{s}`"),
            })
    }
}

/// A learnable map from a state tensor (and optional action) to a predicted
/// next-state distribution with strictly positive rows summing to one.
pub trait TransitionModel {
    fn kind(&self) -> ModelKind;

    /// Parameters in a fixed order; `forward` receives them bound in this order.
    fn named_params(&self) -> Vec<(&'static str, &Tensor)>;

    fn params_mut(&mut self) -> Vec<&mut Tensor>;

    /// Width of the action one-hot, 0 when the model ignores actions.
    fn n_actions(&self) -> usize;

    /// Records the prediction for `x` on `tape`.
    fn forward(&self, tape: &mut Tape, params: &[Var], x: &Tensor, action: Option<Action>) -> Result<Var>;

    /// Extra loss terms beyond the prediction BCE.
    fn regularizer(&self, _tape: &mut Tape, _params: &[Var]) -> Result<Option<Var>> {
        Ok(None)
    }
}

pub(crate) fn check_action(expected: usize, action: Option<Action>) -> Result<Option<usize>> {
    match (expected, action) {
        (0, None) | (0, Some(Action::None)) => Ok(None),
        (n, Some(a)) if n > 0 && a != Action::None => {
            let i = a.index() as usize;
            if i >= n {
                return Err(Error::contract(format!("action index {i} exceeds {n} actions")));
            }
            Ok(Some(i))
        }
        (0, Some(a)) => Err(Error::contract(format!("model takes no actions, got {a:?}"))),
        _ => Err(Error::contract("model is action-conditioned but no action was given")),
    }
}

/// Registers every parameter of `model` on `tape`, trainable or frozen.
pub fn bind(tape: &mut Tape, model: &dyn TransitionModel, trainable: bool) -> Vec<Var> {
    model
        .named_params()
        .into_iter()
        .map(|(_, t)| {
            if trainable {
                tape.param(t.clone())
            } else {
                tape.constant(t.clone())
            }
        })
        .collect()
}

/// Owned copies of the parameters in `named_params` order.
pub fn param_values(model: &dyn TransitionModel) -> Vec<Tensor> {
    model.named_params().into_iter().map(|(_, t)| t.clone()).collect()
}

/// Prediction for `x` without keeping the tape.
pub fn predict(model: &dyn TransitionModel, x: &Tensor, action: Option<Action>) -> Result<Tensor> {
    let mut tape = Tape::new();
    let params = bind(&mut tape, model, false);
    let out = model.forward(&mut tape, &params, x, action)?;
    Ok(tape.value(out).clone())
}

/// BCE of the prediction against `target` plus the model's regularizer.
pub fn loss_on_tape(
    model: &dyn TransitionModel,
    tape: &mut Tape,
    params: &[Var],
    x: &Tensor,
    target: &Tensor,
    action: Option<Action>,
) -> Result<Var> {
    let pred = model.forward(tape, params, x, action)?;
    let bce = tape.bce(target, pred)?;
    match model.regularizer(tape, params)? {
        Some(r) => tape.add(bce, r),
        None => Ok(bce),
    }
}

pub fn loss(model: &dyn TransitionModel, x: &Tensor, target: &Tensor, action: Option<Action>) -> Result<f64> {
    let mut tape = Tape::new();
    let params = bind(&mut tape, model, false);
    let l = loss_on_tape(model, &mut tape, &params, x, target, action)?;
    Ok(tape.value(l).item())
}

/// Glorot-uniform matrix with bound √(6/(rows+cols)).
pub fn glorot(rows: usize, cols: usize, rng: &mut impl rand::Rng) -> Tensor {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.gen_range(-bound..=bound)).collect();
    Tensor::from_parts(vec![rows, cols], data)
}

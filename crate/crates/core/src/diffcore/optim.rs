use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RmsPropConfig {
    pub lr: f64,
    pub rho: f64,
    pub eps: f64,
}

impl Default for RmsPropConfig {
    fn default() -> Self {
        Self {
            lr: 1e-2,
            rho: 0.99,
            eps: 1e-8,
        }
    }
}

/// Mean-square accumulator for one parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub s: Tensor,
    pub config: RmsPropConfig,
}

impl OptimizerState {
    pub fn new(shape: &[usize], config: RmsPropConfig) -> Result<Self> {
        if !(config.rho > 0.0 && config.rho < 1.0) || config.eps <= 0.0 {
            return Err(Error::contract(format!(
                "rmsprop needs rho in (0,1) and eps > 0, got {config:?}"
            )));
        }
        Ok(Self {
            s: Tensor::zeros(shape),
            config,
        })
    }
}

/// s ← ρ·s + (1−ρ)·g²; param ← param − lr·g/(√s + eps).
///
/// A non-finite gradient leaves both `param` and `state` untouched.
pub fn rmsprop_step(param: &mut Tensor, grad: &Tensor, state: &mut OptimizerState) -> Result<()> {
    if param.shape() != grad.shape() || grad.shape() != state.s.shape() {
        return Err(Error::shape("rmsprop_step", param.shape(), grad.shape()));
    }
    if !grad.is_finite() {
        return Err(Error::NonFinite("gradient".into()));
    }
    let RmsPropConfig { lr, rho, eps } = state.config;
    let s = state.s.data_mut();
    let p = param.data_mut();
    for ((pv, sv), &g) in p.iter_mut().zip(s.iter_mut()).zip(grad.data()) {
        *sv = rho * *sv + (1.0 - rho) * g * g;
        *pv -= lr * g / (sv.sqrt() + eps);
    }
    Ok(())
}

/// RMSProp over an ordered list of parameter tensors.
#[derive(Clone, Debug)]
pub struct RmsProp {
    states: Vec<OptimizerState>,
}

impl RmsProp {
    pub fn new(params: &[&Tensor], config: RmsPropConfig) -> Result<Self> {
        let states = params
            .iter()
            .map(|p| OptimizerState::new(p.shape(), config))
            .collect::<Result<_>>()?;
        Ok(Self { states })
    }

    pub fn step(&mut self, params: Vec<&mut Tensor>, grads: &[Tensor]) -> Result<()> {
        if params.len() != self.states.len() || grads.len() != self.states.len() {
            return Err(Error::contract("parameter count changed between steps"));
        }
        if let Some(bad) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!("gradient of parameter {bad}")));
        }
        for ((p, g), s) in params.into_iter().zip(grads).zip(&mut self.states) {
            rmsprop_step(p, g, s)?;
        }
        Ok(())
    }
}

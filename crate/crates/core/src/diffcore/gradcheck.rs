//! Central finite-difference gradient checking.

use super::tape::{Tape, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Result of comparing analytic adjoints against central differences.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub worst_param: usize,
    pub worst_coord: usize,
    pub coords_checked: usize,
}

fn eval<F>(f: &F, params: &[Tensor]) -> Result<f64>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = params.iter().map(|p| tape.param(p.clone())).collect();
    let out = f(&mut tape, &vars)?;
    let v = tape.value(out);
    if v.numel() != 1 {
        return Err(Error::contract("gradient check needs a scalar function"));
    }
    if !v.item().is_finite() {
        return Err(Error::NonFinite("checked function".into()));
    }
    Ok(v.item())
}

/// Max over coordinates of |analytic − central| / max(1, |analytic|, |central|).
///
/// The numeric side re-runs only the forward pass, so it is independent of
/// the adjoint rules it checks.
pub fn check_gradients<F>(f: F, params: &[Tensor], h: f64) -> Result<GradCheck>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let all: Vec<Vec<usize>> = params.iter().map(|p| (0..p.numel()).collect()).collect();
    check_coords(f, params, h, &all)
}

/// Like [`check_gradients`] but probes at most `per_param` coordinates of
/// each tensor, drawn without replacement from `rng`.
pub fn check_gradients_sampled<F>(f: F, params: &[Tensor], h: f64, per_param: usize, rng: &mut impl rand::Rng) -> Result<GradCheck>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let coords: Vec<Vec<usize>> = params
        .iter()
        .map(|p| {
            let mut c = rand::seq::index::sample(rng, p.numel(), per_param.min(p.numel())).into_vec();
            c.sort_unstable();
            c
        })
        .collect();
    check_coords(f, params, h, &coords)
}

fn check_coords<F>(f: F, params: &[Tensor], h: f64, coords: &[Vec<usize>]) -> Result<GradCheck>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    if h <= 0.0 {
        return Err(Error::contract("finite-difference step must be positive"));
    }
    let mut tape = Tape::new();
    let vars: Vec<Var> = params.iter().map(|p| tape.param(p.clone())).collect();
    let out = f(&mut tape, &vars)?;
    let grads = tape.grad(out)?;

    let mut report = GradCheck {
        max_rel_error: 0.0,
        worst_param: 0,
        worst_coord: 0,
        coords_checked: 0,
    };
    let mut probe: Vec<Tensor> = params.to_vec();
    for (pi, v) in vars.iter().enumerate() {
        let analytic = grads.wrt(*v);
        for &ci in &coords[pi] {
            let orig = params[pi].data()[ci];
            probe[pi].data_mut()[ci] = orig + h;
            let up = eval(&f, &probe)?;
            probe[pi].data_mut()[ci] = orig - h;
            let down = eval(&f, &probe)?;
            probe[pi].data_mut()[ci] = orig;
            let central = (up - down) / (2.0 * h);
            let a = analytic.data()[ci];
            let rel = (a - central).abs() / 1f64.max(a.abs()).max(central.abs());
            report.coords_checked += 1;
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst_param = pi;
                report.worst_coord = ci;
            }
        }
    }
    Ok(report)
}

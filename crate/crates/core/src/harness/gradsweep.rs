use rand::Rng;
use serde::Serialize;

use super::fmt;
use crate::checkpoint::AnyModel;
use crate::diffcore::{check_gradients_sampled, Tensor};
use crate::envs::AGENT_ACTIONS;
use crate::error::Result;
use crate::model::{AttentionVariant, Hyper, InitScheme};
use crate::predictor::{loss_on_tape, param_values, ModelKind, TransitionModel};
use crate::seed;

/// Model families the sweep cycles through.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    NidDependent,
    NidDependentActions,
    NidIndependent,
    NidIndependentActions,
    Mlp,
    Conv1,
    Conv3,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::NidDependent,
        Family::NidDependentActions,
        Family::NidIndependent,
        Family::NidIndependentActions,
        Family::Mlp,
        Family::Conv1,
        Family::Conv3,
    ];
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub configs: usize,
    pub coords: usize,
    #[serde(serialize_with = "fmt::serialize")]
    pub max_rel_error: f64,
    pub worst_family: Family,
    pub worst_config: usize,
}

/// A random small model plus one random (x, action, target) sample.
fn tiny_case(family: Family, rng: &mut impl Rng) -> Result<(AnyModel, Tensor, Option<crate::envs::Action>, Tensor)> {
    let n_obj = rng.gen_range(1..=3);
    let d = rng.gen_range(3..=6);
    let with_actions = match family {
        Family::NidDependentActions | Family::NidIndependentActions => true,
        Family::NidDependent | Family::NidIndependent | Family::Conv1 => false,
        Family::Mlp | Family::Conv3 => rng.gen_bool(0.5),
    };
    let n_act = if with_actions { AGENT_ACTIONS.len() } else { 0 };
    let kind = match family {
        Family::Mlp => ModelKind::Mlp,
        Family::Conv1 => ModelKind::Conv1,
        Family::Conv3 => ModelKind::Conv3,
        _ => ModelKind::Nid,
    };
    let variant = match family {
        Family::NidIndependent | Family::NidIndependentActions => AttentionVariant::SampleIndependent,
        _ => AttentionVariant::SampleDependent,
    };
    let hyper = Hyper {
        k: rng.gen_range(2..=4),
        m: rng.gen_range(1..=3),
        d1: rng.gen_range(1..=3),
        dp: rng.gen_range(1..=3),
        dr: rng.gen_range(1..=3),
        s1: rng.gen_range(0..=1),
        s2: rng.gen_range(0..=1),
        hidden: rng.gen_range(2..=5),
        // large enough that the entropy gradients are not lost in the BCE
        lambda1: rng.gen_range(0.0..0.2),
        lambda2: rng.gen_range(0.0..0.2),
        variant,
        init: InitScheme::Random,
        seed: rng.gen(),
        ..Hyper::default()
    };
    let mut model = AnyModel::init(kind, &hyper, n_obj, d, n_act)?;
    // move Q off its symmetric start so every softmax sees distinct logits
    if let AnyModel::Nid(m) = &mut model {
        for v in m.encoder.q.data_mut() {
            *v += rng.gen_range(-1.0..1.0);
        }
    }
    let mut x = Tensor::zeros(&[n_obj, d]);
    let mut y = Tensor::zeros(&[n_obj, d]);
    for o in 0..n_obj {
        x.set(o, rng.gen_range(0..d), 1.0);
        y.set(o, rng.gen_range(0..d), 1.0);
    }
    let action = with_actions.then(|| AGENT_ACTIONS[rng.gen_range(0..AGENT_ACTIONS.len())]);
    Ok((model, x, action, y))
}

/// Central-difference check of the full training loss over `n_configs`
/// random tiny models, cycling through every family.
pub fn gradient_sweep(n_configs: usize, h: f64, coords_per_param: usize, seed: u64) -> Result<SweepReport> {
    let mut rng = seed::stream(seed, "check-grad", 0);
    let mut report = SweepReport {
        configs: 0,
        coords: 0,
        max_rel_error: 0.0,
        worst_family: Family::ALL[0],
        worst_config: 0,
    };
    for i in 0..n_configs {
        let family = Family::ALL[i % Family::ALL.len()];
        let (model, x, action, y) = tiny_case(family, &mut rng)?;
        let m: &dyn TransitionModel = model.as_dyn();
        let r = check_gradients_sampled(
            |tape, vars| loss_on_tape(m, tape, vars, &x, &y, action),
            &param_values(m),
            h,
            coords_per_param,
            &mut rng,
        )?;
        report.configs += 1;
        report.coords += r.coords_checked;
        if r.max_rel_error > report.max_rel_error {
            report.max_rel_error = r.max_rel_error;
            report.worst_family = family;
            report.worst_config = i;
        }
    }
    Ok(report)
}

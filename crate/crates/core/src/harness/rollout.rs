use std::io::Write;

use serde::Serialize;

use super::fmt::{self, f17};
use crate::diffcore::{bce, Tensor};
use crate::envs::{sample_initial, step, to_state_tensor, Action, EnvSpec, GridState, Policy, Split};
use crate::error::{Error, Result};
use crate::predictor::{predict, TransitionModel};
use crate::seed;

pub const DEFAULT_ROLLOUTS: usize = 100;

pub const CSV_HEADER: &str = "step,mean_cumulative_bce,std_cumulative_bce,split,model,seed";

/// Cumulative compound error at steps 1..=T for one evaluation seed.
/// `std` is the population standard deviation across rollouts.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RolloutReport {
    pub model: String,
    pub split: Split,
    pub seed: u64,
    pub n_rollouts: usize,
    pub horizon: usize,
    #[serde(serialize_with = "fmt::vec::serialize")]
    pub mean: Vec<f64>,
    #[serde(serialize_with = "fmt::vec::serialize")]
    pub std: Vec<f64>,
}

impl RolloutReport {
    pub fn final_mean(&self) -> f64 {
        self.mean.last().copied().unwrap_or(0.0)
    }
}

/// Mean and population standard deviation of per-seed means.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AggregateReport {
    pub model: String,
    pub split: Split,
    pub seeds: Vec<u64>,
    pub horizon: usize,
    #[serde(serialize_with = "fmt::vec::serialize")]
    pub mean: Vec<f64>,
    #[serde(serialize_with = "fmt::vec::serialize")]
    pub std: Vec<f64>,
}

fn split_index(split: Split) -> u64 {
    match split {
        Split::Train => 0,
        Split::Test => 1,
    }
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, v.sqrt())
}

/// Rolls `n` ground-truth trajectories of `horizon` steps and, for each,
/// lets `predict_step` run open loop from the initial state. Trajectories and
/// actions are drawn from `seed` alone, so every predictor evaluated with the
/// same seed faces the same episodes.
pub fn rollout_with<F>(
    env: &EnvSpec,
    split: Split,
    n: usize,
    horizon: usize,
    seed: u64,
    label: &str,
    mut predict_step: F,
) -> Result<RolloutReport>
where
    F: FnMut(&Tensor, Option<Action>, &GridState) -> Result<Tensor>,
{
    if n == 0 || horizon == 0 {
        return Err(Error::contract("rollout needs n ≥ 1 and horizon ≥ 1"));
    }
    let policy = Policy::for_env(env);
    let mut rng = seed::stream(seed, "rollout", split_index(split));
    let mut cum = vec![vec![0.0; n]; horizon];
    for r in 0..n {
        let mut s = sample_initial(env, split, &mut rng)?;
        let mut xhat = to_state_tensor(env, &s);
        let mut total = 0.0;
        for t in 0..horizon {
            let a = policy.act(&mut rng);
            s = step(env, &s, a, &mut rng)?;
            let fed = env.has_agent().then_some(a);
            xhat = predict_step(&xhat, fed, &s)?;
            let truth = to_state_tensor(env, &s);
            total += bce(&truth, &xhat)?;
            cum[t][r] = total;
        }
    }
    let (mean, std) = cum.iter().map(|c| mean_std(c)).unzip();
    Ok(RolloutReport {
        model: label.to_string(),
        split,
        seed,
        n_rollouts: n,
        horizon,
        mean,
        std,
    })
}

pub fn compound_rollout(model: &dyn TransitionModel, env: &EnvSpec, split: Split, n: usize, horizon: usize, seed: u64) -> Result<RolloutReport> {
    rollout_with(env, split, n, horizon, seed, model.kind().as_str(), |x, a, _| predict(model, x, a))
}

/// A predictor that returns the true next state as a one-hot tensor.
pub fn oracle_rollout(env: &EnvSpec, split: Split, n: usize, horizon: usize, seed: u64) -> Result<RolloutReport> {
    rollout_with(env, split, n, horizon, seed, "oracle", |_, _, s| Ok(to_state_tensor(env, s)))
}

/// Every row is uniform over positions.
pub fn uniform_rollout(env: &EnvSpec, split: Split, n: usize, horizon: usize, seed: u64) -> Result<RolloutReport> {
    let u = Tensor::full(&[env.n_objects(), env.positions], 1.0 / env.positions as f64);
    rollout_with(env, split, n, horizon, seed, "uniform", |_, _, _| Ok(u.clone()))
}

/// Combines per-seed reports of one model and split.
pub fn aggregate(reports: &[RolloutReport]) -> Result<AggregateReport> {
    let first = reports.first().ok_or_else(|| Error::contract("nothing to aggregate"))?;
    if reports.iter().any(|r| r.horizon != first.horizon || r.split != first.split || r.model != first.model) {
        return Err(Error::contract("reports differ in model, split or horizon"));
    }
    let (mean, std) = (0..first.horizon)
        .map(|t| mean_std(&reports.iter().map(|r| r.mean[t]).collect::<Vec<_>>()))
        .unzip();
    Ok(AggregateReport {
        model: first.model.clone(),
        split: first.split,
        seeds: reports.iter().map(|r| r.seed).collect(),
        horizon: first.horizon,
        mean,
        std,
    })
}

pub fn write_csv_header(w: &mut impl Write) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    Ok(())
}

pub fn write_csv_rows(w: &mut impl Write, r: &RolloutReport) -> Result<()> {
    for t in 0..r.horizon {
        writeln!(w, "{},{},{},{},{},{}", t + 1, f17(r.mean[t]), f17(r.std[t]), r.split.as_str(), r.model, r.seed)?;
    }
    Ok(())
}

/// Aggregate rows carry `all` in the seed column.
pub fn write_csv_aggregate(w: &mut impl Write, r: &AggregateReport) -> Result<()> {
    for t in 0..r.horizon {
        writeln!(w, "{},{},{},{},{},all", t + 1, f17(r.mean[t]), f17(r.std[t]), r.split.as_str(), r.model)?;
    }
    Ok(())
}

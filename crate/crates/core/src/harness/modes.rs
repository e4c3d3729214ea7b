use serde::Serialize;

use super::fmt;
use crate::envs::{sample_initial, to_state_tensor, EnvSpec, Split};
use crate::error::{Error, Result};
use crate::predictor::{predict, TransitionModel};
use crate::seed;

/// Average predicted mass of the stochastic mover's next-position row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MoverSplit {
    pub n_states: usize,
    #[serde(serialize_with = "fmt::serialize")]
    pub left: f64,
    #[serde(serialize_with = "fmt::serialize")]
    pub right: f64,
    /// Everything outside p−1 and p+1, including p itself.
    #[serde(serialize_with = "fmt::serialize")]
    pub elsewhere: f64,
}

/// Probes `n` random states in which both neighbours of the mover are free
/// cells, so either step is possible.
pub fn mover_split(model: &dyn TransitionModel, env: &EnvSpec, n: usize, seed: u64) -> Result<MoverSplit> {
    let mover = env
        .stochastic_mover
        .ok_or_else(|| Error::contract("environment has no stochastic mover"))?;
    if n == 0 {
        return Err(Error::contract("need at least one probe state"));
    }
    let mut rng = seed::stream(seed, "modes", 0);
    let (mut left, mut right, mut elsewhere) = (0.0, 0.0, 0.0);
    let mut found = 0;
    let mut tries = 0;
    while found < n {
        tries += 1;
        if tries > 1000 * n {
            return Err(Error::contract("could not find unblocked mover states"));
        }
        let s = sample_initial(env, Split::Test, &mut rng)?;
        let p = s.pos[mover];
        let free = |q: usize| s.pos.iter().enumerate().all(|(o, &r)| o == mover || r != q);
        if p == 0 || p + 1 >= env.positions || !free(p - 1) || !free(p + 1) {
            continue;
        }
        let y = predict(model, &to_state_tensor(env, &s), None)?;
        let row = y.row(mover);
        left += row[p - 1];
        right += row[p + 1];
        elsewhere += 1.0 - row[p - 1] - row[p + 1];
        found += 1;
    }
    let k = n as f64;
    Ok(MoverSplit {
        n_states: n,
        left: left / k,
        right: right / k,
        elsewhere: elsewhere / k,
    })
}

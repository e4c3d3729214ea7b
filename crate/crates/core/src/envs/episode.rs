use std::io::{BufRead, Write};

use rand::seq::index::sample;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::sim::{step, Action, GridState};
use super::spec::EnvSpec;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::Config {
                path: "split".into(),
                message: format!("expected `train` or `test`, got `{other}`"),
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    RandomAction,
    None,
}

impl Policy {
    pub fn for_env(spec: &EnvSpec) -> Self {
        if spec.has_agent() {
            Policy::RandomAction
        } else {
            Policy::None
        }
    }

    pub fn act(self, rng: &mut impl Rng) -> Action {
        match self {
            Policy::RandomAction => Action::random(rng),
            Policy::None => Action::None,
        }
    }
}

/// Draws an initial state for `split`.
///
/// Non-agent objects take distinct cells uniformly without replacement; on
/// the train split, objects flagged `train_left_only` are confined to the
/// left plane. The agent is placed uniformly and may share a cell.
pub fn sample_initial(spec: &EnvSpec, split: Split, rng: &mut impl Rng) -> Result<GridState> {
    let confined = |o: usize| split == Split::Train && spec.objects[o].train_left_only;
    let non_agents: Vec<usize> = (0..spec.n_objects())
        .filter(|&o| !spec.objects[o].is_agent)
        .collect();
    let n_confined = non_agents.iter().filter(|&&o| confined(o)).count();
    if n_confined > spec.apex {
        return Err(Error::contract(format!(
            "{n_confined} left-only objects do not fit in {} left cells",
            spec.apex
        )));
    }
    if non_agents.len() > spec.positions {
        return Err(Error::contract(format!(
            "{} objects do not fit in {} cells",
            non_agents.len(),
            spec.positions
        )));
    }
    let mut pos = vec![0usize; spec.n_objects()];
    let mut free: Vec<bool> = vec![true; spec.positions];
    let order = non_agents
        .iter()
        .filter(|&&o| confined(o))
        .chain(non_agents.iter().filter(|&&o| !confined(o)));
    for &o in order {
        let limit = if confined(o) { spec.apex } else { spec.positions };
        let cells: Vec<usize> = (0..limit).filter(|&p| free[p]).collect();
        if cells.is_empty() {
            return Err(Error::contract(format!("no free cell left for object {o}")));
        }
        let p = cells[sample(rng, cells.len(), 1).index(0)];
        free[p] = false;
        pos[o] = p;
    }
    if let Some(a) = spec.agent() {
        pos[a] = rng.gen_range(0..spec.positions);
    }
    Ok(GridState { pos })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Episode {
    pub seed: u64,
    pub split: Split,
    pub states: Vec<GridState>,
    pub actions: Vec<Action>,
}

/// On-disk record; field order is part of the file format.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EpisodeRecord {
    seed: u64,
    env: EnvSpec,
    split: Split,
    actions: Vec<Action>,
    positions: Vec<Vec<usize>>,
}

/// Rolls out one episode of `spec.horizon` steps from its own seed.
pub fn run_episode(spec: &EnvSpec, split: Split, policy: Policy, episode_seed: u64) -> Result<Episode> {
    if spec.has_agent() && policy == Policy::None {
        return Err(Error::contract("agent environments need an action policy"));
    }
    let mut rng = seed::rng(episode_seed);
    let mut state = sample_initial(spec, split, &mut rng)?;
    let mut states = vec![state.clone()];
    let mut actions = Vec::with_capacity(spec.horizon);
    for _ in 0..spec.horizon {
        let a = if spec.has_agent() { policy.act(&mut rng) } else { Action::None };
        state = step(spec, &state, a, &mut rng)?;
        actions.push(a);
        states.push(state.clone());
    }
    Ok(Episode {
        seed: episode_seed,
        split,
        states,
        actions,
    })
}

/// `n` episodes whose per-episode seeds are drawn from `rng`.
pub fn generate_episodes(
    spec: &EnvSpec,
    split: Split,
    n: usize,
    policy: Policy,
    rng: &mut impl RngCore,
) -> Result<Vec<Episode>> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::contract("episode count must be at least 1"));
    }
    (0..n)
        .map(|_| run_episode(spec, split, policy, rng.next_u64()))
        .collect()
}

pub fn write_episodes(w: &mut impl Write, spec: &EnvSpec, episodes: &[Episode]) -> Result<()> {
    for ep in episodes {
        let rec = EpisodeRecord {
            seed: ep.seed,
            env: spec.clone(),
            split: ep.split,
            actions: ep.actions.clone(),
            positions: ep.states.iter().map(|s| s.pos.clone()).collect(),
        };
        serde_json::to_writer(&mut *w, &rec)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Parses an episode file and checks every record against the simulator.
pub fn read_episodes(r: impl BufRead) -> Result<Vec<(EnvSpec, Episode)>> {
    let mut out = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: EpisodeRecord = serde_json::from_str(&line)?;
        rec.env.validate()?;
        if rec.positions.len() != rec.actions.len() + 1 {
            return Err(Error::contract(format!(
                "episode on line {} has {} states for {} actions",
                lineno + 1,
                rec.positions.len(),
                rec.actions.len()
            )));
        }
        let states: Vec<GridState> = rec.positions.into_iter().map(GridState::new).collect();
        for s in &states {
            s.validate(&rec.env)?;
        }
        out.push((
            rec.env,
            Episode {
                seed: rec.seed,
                split: rec.split,
                states,
                actions: rec.actions,
            },
        ));
    }
    Ok(out)
}

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::spec::{EnvSpec, Orientation};
use crate::diffcore::Tensor;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Action {
    MoveLeftNoGrab,
    MoveRightNoGrab,
    MoveLeftGrab,
    MoveRightGrab,
    None,
}

pub const AGENT_ACTIONS: [Action; 4] = [
    Action::MoveLeftNoGrab,
    Action::MoveRightNoGrab,
    Action::MoveLeftGrab,
    Action::MoveRightGrab,
];

impl Action {
    pub fn index(self) -> u8 {
        match self {
            Action::MoveLeftNoGrab => 0,
            Action::MoveRightNoGrab => 1,
            Action::MoveLeftGrab => 2,
            Action::MoveRightGrab => 3,
            Action::None => 4,
        }
    }

    pub fn from_index(i: u8) -> Option<Self> {
        [
            Action::MoveLeftNoGrab,
            Action::MoveRightNoGrab,
            Action::MoveLeftGrab,
            Action::MoveRightGrab,
            Action::None,
        ]
        .get(i as usize)
        .copied()
    }

    fn direction(self) -> Option<i64> {
        match self {
            Action::MoveLeftNoGrab | Action::MoveLeftGrab => Some(-1),
            Action::MoveRightNoGrab | Action::MoveRightGrab => Some(1),
            Action::None => None,
        }
    }

    fn grabs(self) -> bool {
        matches!(self, Action::MoveLeftGrab | Action::MoveRightGrab)
    }

    pub fn random(rng: &mut impl Rng) -> Self {
        *AGENT_ACTIONS.choose(rng).expect("non-empty")
    }
}

impl From<Action> for u8 {
    fn from(a: Action) -> u8 {
        a.index()
    }
}

impl TryFrom<u8> for Action {
    type Error = String;
    fn try_from(i: u8) -> std::result::Result<Self, String> {
        Action::from_index(i).ok_or_else(|| format!("unknown action index {i}"))
    }
}

/// Integer position of every object.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GridState {
    pub pos: Vec<usize>,
}

impl GridState {
    pub fn new(pos: Vec<usize>) -> Self {
        Self { pos }
    }

    /// Range check plus the no-co-location rule (the agent may share any cell).
    pub fn validate(&self, spec: &EnvSpec) -> Result<()> {
        if self.pos.len() != spec.n_objects() {
            return Err(Error::contract(format!(
                "state has {} positions for {} objects",
                self.pos.len(),
                spec.n_objects()
            )));
        }
        let mut seen = vec![false; spec.positions];
        for (o, &p) in self.pos.iter().enumerate() {
            if p >= spec.positions {
                return Err(Error::contract(format!("object {o} at {p} is off the grid")));
            }
            if spec.objects[o].is_agent {
                continue;
            }
            if seen[p] {
                return Err(Error::contract(format!("two objects share cell {p}")));
            }
            seen[p] = true;
        }
        Ok(())
    }
}

/// Rolling direction at `p`: −1 (left) or +1 (right).
pub fn direction_of(spec: &EnvSpec, p: usize) -> Result<i64> {
    if p >= spec.positions {
        return Err(Error::contract(format!("position {p} is off the grid")));
    }
    let left = p < spec.apex;
    match spec.orientation {
        Orientation::Peak => Ok(if left { -1 } else { 1 }),
        Orientation::Valley => Ok(if left { 1 } else { -1 }),
        Orientation::Flat => Err(Error::contract("flat planes have no rolling direction")),
    }
}

fn check_action(spec: &EnvSpec, a: Action) -> Result<()> {
    match (spec.has_agent(), a) {
        (true, Action::None) => Err(Error::contract("agent environments need a move action")),
        (false, a) if a != Action::None => {
            Err(Error::contract(format!("{a:?} given in an agent-free environment")))
        }
        _ => Ok(()),
    }
}

/// One simulator step with the stochastic mover's direction supplied by the caller.
///
/// Phases: agent move (with optional grab), downhill rolling, stochastic move.
pub fn step_with(spec: &EnvSpec, s: &GridState, a: Action, mover_dir: Option<i64>) -> Result<GridState> {
    check_action(spec, a)?;
    s.validate(spec)?;
    let d = spec.positions as i64;
    let mut pos = s.pos.clone();
    let mut occupied = vec![false; spec.positions];
    for (o, &p) in pos.iter().enumerate() {
        if !spec.objects[o].is_agent {
            occupied[p] = true;
        }
    }

    let mut grabbed = None;
    if let Some(agent) = spec.agent() {
        let dir = a.direction().expect("checked above");
        let from = pos[agent];
        let to = (from as i64 + dir).clamp(0, d - 1) as usize;
        pos[agent] = to;
        if a.grabs() {
            let carried = (0..pos.len()).find(|&o| o != agent && pos[o] == from);
            if let Some(o) = carried {
                // the carried object follows only into a cell no other object holds
                if to == from || !occupied[to] {
                    occupied[from] = false;
                    occupied[to] = true;
                    pos[o] = to;
                    grabbed = Some(o);
                }
            }
        }
    }

    if spec.orientation != Orientation::Flat {
        let mut movers: Vec<(usize, i64)> = Vec::new();
        for (o, obj) in spec.objects.iter().enumerate() {
            if obj.rollable && grabbed != Some(o) {
                movers.push((o, direction_of(spec, pos[o])?));
            }
        }
        let mut lefts: Vec<usize> = movers.iter().filter(|m| m.1 < 0).map(|m| m.0).collect();
        let mut rights: Vec<usize> = movers.iter().filter(|m| m.1 > 0).map(|m| m.0).collect();
        lefts.sort_by_key(|&o| pos[o]);
        rights.sort_by_key(|&o| std::cmp::Reverse(pos[o]));
        for (o, dir) in lefts
            .into_iter()
            .map(|o| (o, -1))
            .chain(rights.into_iter().map(|o| (o, 1)))
        {
            let dest = pos[o] as i64 + dir;
            if dest >= 0 && dest < d && !occupied[dest as usize] {
                occupied[pos[o]] = false;
                occupied[dest as usize] = true;
                pos[o] = dest as usize;
            }
        }
    }

    if let Some(m) = spec.stochastic_mover {
        let dir = mover_dir
            .ok_or_else(|| Error::contract("stochastic step needs a mover direction"))?;
        if dir != -1 && dir != 1 {
            return Err(Error::contract(format!("mover direction must be ±1, got {dir}")));
        }
        let dest = pos[m] as i64 + dir;
        if dest >= 0 && dest < d && !occupied[dest as usize] {
            pos[m] = dest as usize;
        }
    }
    Ok(GridState { pos })
}

/// One simulator step; the stochastic mover (if any) draws its direction from `rng`.
pub fn step(spec: &EnvSpec, s: &GridState, a: Action, rng: &mut impl Rng) -> Result<GridState> {
    let dir = spec
        .stochastic_mover
        .map(|_| if rng.gen_bool(0.5) { -1 } else { 1 });
    step_with(spec, s, a, dir)
}

/// |O|×D tensor whose row o is the one-hot indicator of `pos[o]`.
pub fn to_state_tensor(spec: &EnvSpec, s: &GridState) -> Tensor {
    let mut t = Tensor::zeros(&[spec.n_objects(), spec.positions]);
    for (o, &p) in s.pos.iter().enumerate() {
        t.set(o, p, 1.0);
    }
    t
}

/// Inverse of [`to_state_tensor`] for one-hot (or peaked) rows.
pub fn argmax_state(x: &Tensor) -> GridState {
    GridState {
        pos: (0..x.rows()).map(|o| x.argmax_row(o)).collect(),
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Objects roll away from the apex.
    Peak,
    /// Objects roll towards the apex.
    Valley,
    /// No slope; only the stochastic mover moves.
    Flat,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub id: usize,
    pub name: String,
    pub rollable: bool,
    #[serde(default)]
    pub train_left_only: bool,
    #[serde(default)]
    pub is_agent: bool,
}

impl ObjectSpec {
    pub fn new(id: usize, name: &str, rollable: bool, train_left_only: bool) -> Self {
        Self {
            id,
            name: name.to_string(),
            rollable,
            train_left_only,
            is_agent: false,
        }
    }

    pub fn agent(id: usize) -> Self {
        Self {
            id,
            name: "agent".to_string(),
            rollable: false,
            train_left_only: false,
            is_agent: true,
        }
    }

    /// Display letter used by the ASCII renderer.
    pub fn letter(&self) -> char {
        self.name.chars().next().unwrap_or('?').to_ascii_lowercase()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSpec {
    pub positions: usize,
    pub apex: usize,
    pub orientation: Orientation,
    pub objects: Vec<ObjectSpec>,
    #[serde(default)]
    pub stochastic_mover: Option<usize>,
    pub horizon: usize,
}

pub const DEFAULT_POSITIONS: usize = 12;
pub const DEFAULT_APEX: usize = 6;
pub const DEFAULT_HORIZON: usize = 8;

/// red (blocker), green (ball), purple (blocker, left only in training),
/// yellow (ball, left only in training).
pub fn default_roster() -> Vec<ObjectSpec> {
    vec![
        ObjectSpec::new(0, "red", false, false),
        ObjectSpec::new(1, "green", true, false),
        ObjectSpec::new(2, "purple", false, true),
        ObjectSpec::new(3, "yellow", true, true),
    ]
}

impl EnvSpec {
    fn sloped(orientation: Orientation, agent: bool) -> Self {
        let mut objects = default_roster();
        if agent {
            objects.push(ObjectSpec::agent(objects.len()));
        }
        Self {
            positions: DEFAULT_POSITIONS,
            apex: DEFAULT_APEX,
            orientation,
            objects,
            stochastic_mover: None,
            horizon: DEFAULT_HORIZON,
        }
    }

    pub fn inclined_plane() -> Self {
        Self::sloped(Orientation::Peak, false)
    }

    pub fn valley() -> Self {
        Self::sloped(Orientation::Valley, false)
    }

    pub fn inclined_plane_with_agent() -> Self {
        Self::sloped(Orientation::Peak, true)
    }

    pub fn valley_with_agent() -> Self {
        Self::sloped(Orientation::Valley, true)
    }

    /// Two objects on a flat line: a random walker and a static blocker.
    pub fn stochastic_plane() -> Self {
        Self {
            positions: DEFAULT_POSITIONS,
            apex: DEFAULT_APEX,
            orientation: Orientation::Flat,
            objects: vec![
                ObjectSpec::new(0, "green", false, false),
                ObjectSpec::new(1, "red", false, false),
            ],
            stochastic_mover: Some(0),
            horizon: DEFAULT_HORIZON,
        }
    }

    pub fn n_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn agent(&self) -> Option<usize> {
        self.objects.iter().position(|o| o.is_agent)
    }

    pub fn has_agent(&self) -> bool {
        self.agent().is_some()
    }

    /// Width of the action one-hot fed to action-conditioned models.
    pub fn n_actions(&self) -> usize {
        if self.has_agent() {
            super::AGENT_ACTIONS.len()
        } else {
            0
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::contract(m));
        if self.positions < 2 {
            return bad(format!("need at least 2 positions, got {}", self.positions));
        }
        if self.apex == 0 || self.apex >= self.positions {
            return bad(format!("apex {} must lie in (0, {})", self.apex, self.positions));
        }
        if self.objects.is_empty() {
            return bad("environment has no objects".into());
        }
        for (i, o) in self.objects.iter().enumerate() {
            if o.id != i {
                return bad(format!("object {i} has id {}", o.id));
            }
            if o.is_agent && o.rollable {
                return bad(format!("agent `{}` cannot be rollable", o.name));
            }
        }
        if self.objects.iter().filter(|o| o.is_agent).count() > 1 {
            return bad("at most one agent is supported".into());
        }
        let flat = self.orientation == Orientation::Flat;
        match self.stochastic_mover {
            Some(m) => {
                if !flat {
                    return bad("a stochastic mover requires flat orientation".into());
                }
                match self.objects.get(m) {
                    None => return bad(format!("stochastic mover {m} is not an object")),
                    Some(o) if o.is_agent || o.rollable => {
                        return bad("stochastic mover must be a plain non-rollable object".into())
                    }
                    Some(_) => {}
                }
            }
            None if flat => return bad("flat orientation requires a stochastic mover".into()),
            None => {}
        }
        if flat && self.objects.iter().any(|o| o.rollable) {
            return bad("rollable objects need a sloped orientation".into());
        }
        let non_agents = self.objects.iter().filter(|o| !o.is_agent).count();
        if non_agents > self.positions {
            return bad(format!("{non_agents} objects do not fit in {} cells", self.positions));
        }
        Ok(())
    }
}

//! Grid-world simulators: Inclined Plane, Valley, their agent variants and
//! Stochastic Plane, plus initial-state sampling and episode files.

mod episode;
mod sim;
mod spec;

pub use episode::{
    generate_episodes, read_episodes, run_episode, sample_initial, write_episodes, Episode, Policy,
    Split,
};
pub use sim::{
    argmax_state, direction_of, step, step_with, to_state_tensor, Action, GridState, AGENT_ACTIONS,
};
pub use spec::{
    default_roster, EnvSpec, ObjectSpec, Orientation, DEFAULT_APEX, DEFAULT_HORIZON,
    DEFAULT_POSITIONS,
};

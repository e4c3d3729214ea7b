pub mod baselines;
pub mod checkpoint;
pub mod cli;
pub mod diffcore;
pub mod envs;
pub mod harness;
pub mod error;
pub mod model;
pub mod predictor;
pub mod seed;

pub use error::{Error, Result};

//! Minimal reverse-mode differentiable tensor core.

mod gradcheck;
mod optim;
mod tape;
mod tensor;

pub use gradcheck::{check_gradients, check_gradients_sampled, GradCheck};
pub use optim::{rmsprop_step, OptimizerState, RmsProp, RmsPropConfig};
pub use tape::{bce, primitive_catalog, Gradients, Tape, Var, LOG_EPS};
pub(crate) use tape::conv1d_rows;
pub use tensor::Tensor;

#[cfg(test)]
mod tests;

//! The neural interaction-detection transition model.

mod hyper;
mod nid;
mod ops;

pub use hyper::{AttentionVariant, Hyper, InitScheme, OmegaInit};
pub use nid::{sign_pattern, DecoderParams, EdgeParams, EncoderParams, NidModel, OutcomeKernels};
pub use ops::{
    apply_outcomes, edge_aggregate, encode, entropy_terms, loss, predict_next, select_transition,
    Encoding,
};

//! Value-level entry points for the model's building blocks.

use super::nid::{edge_on_tape, encode_on_tape, EdgeParams, EncoderParams, NidModel, OutcomeKernels};
use crate::diffcore::{conv1d_rows, Tape, Tensor};
use crate::envs::Action;
use crate::error::{Error, Result};
use crate::predictor::{self, bind};

/// Encoder outputs for one (object, position) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct Encoding {
    /// Attention distribution over the K rows. For the sample-independent
    /// variant this is the object row followed by the position row of softmax_rows(Q).
    pub attn: Vec<f64>,
    /// Bottleneck vector σ(·) in (0,1)^d1, used for embedding analysis.
    pub h: Vec<f64>,
    pub theta: Vec<f64>,
}

pub fn encode(enc: &EncoderParams, n_objects: usize, o: usize, p: usize) -> Result<Encoding> {
    let mut tape = Tape::new();
    let q = tape.constant(enc.q.clone());
    let v = tape.constant(enc.v.clone());
    let w = tape.constant(enc.w.clone());
    let rows = encode_on_tape(&mut tape, enc.variant, n_objects, q, v, w, &[(o, p)])?;
    Ok(Encoding {
        attn: tape.value(rows.attn).data().to_vec(),
        h: tape.value(rows.h).data().to_vec(),
        theta: tape.value(rows.theta).data().to_vec(),
    })
}

/// D×dR summed edge features for object `o` at every position.
pub fn edge_aggregate(edge: &EdgeParams, x: &Tensor, o: usize) -> Result<Tensor> {
    if x.rank() != 2 || o >= x.rows() {
        return Err(Error::contract(format!("object {o} not in state of shape {:?}", x.shape())));
    }
    let rows: Vec<(usize, usize)> = (0..x.cols()).map(|p| (o, p)).collect();
    let mut tape = Tape::new();
    let a = tape.constant(edge.a.clone());
    let b = tape.constant(edge.b.clone());
    let out = edge_on_tape(&mut tape, edge.s1, a, b, x, &rows)?;
    Ok(tape.value(out).clone())
}

/// P(z | x, o, p[, a]) over the m outcomes.
pub fn select_transition(model: &NidModel, x: &Tensor, o: usize, p: usize, action: Option<Action>) -> Result<Vec<f64>> {
    if x.shape() != [model.n_objects, model.n_positions] {
        return Err(Error::shape("select_transition", x.shape(), &[model.n_objects, model.n_positions]));
    }
    let mut tape = Tape::new();
    let params = bind(&mut tape, model, false);
    let out = model.selector_on_tape(&mut tape, &params, x, &[(o, p)], action)?;
    Ok(tape.value(out).data().to_vec())
}

/// Ω_z(x) for every kernel: zero-padded same-size convolution of each row.
pub fn apply_outcomes(kernels: &OutcomeKernels, x: &Tensor) -> Vec<Tensor> {
    (0..kernels.count())
        .map(|z| {
            let out = conv1d_rows(x.data(), x.rows(), x.cols(), kernels.kernel(z));
            Tensor::from_parts(x.shape().to_vec(), out)
        })
        .collect()
}

pub fn predict_next(model: &NidModel, x: &Tensor, action: Option<Action>) -> Result<Tensor> {
    predictor::predict(model, x, action)
}

/// (R1, R2): mean conditional entropy of the rows of softmax(Q) and entropy
/// of their average.
pub fn entropy_terms(q: &Tensor) -> Result<(f64, f64)> {
    if q.rank() != 2 {
        return Err(Error::shape("entropy_terms", q.shape(), &[0, 0]));
    }
    let mut tape = Tape::new();
    let qv = tape.constant(q.clone());
    let (r1, r2) = NidModel::entropy_on_tape(&mut tape, qv)?;
    Ok((tape.value(r1).item(), tape.value(r2).item()))
}

/// BCE(x_next, predict_next(x)) + λ1·R1 + λ2·R2.
pub fn loss(model: &NidModel, x: &Tensor, x_next: &Tensor, lambda1: f64, lambda2: f64, action: Option<Action>) -> Result<f64> {
    let mut m = model.clone();
    m.hyper.lambda1 = lambda1;
    m.hyper.lambda2 = lambda2;
    predictor::loss(&m, x, x_next, action)
}

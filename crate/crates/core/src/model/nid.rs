use rand::Rng;

use super::hyper::{AttentionVariant, Hyper, InitScheme, OmegaInit};
use crate::diffcore::{Tape, Tensor, Var};
use crate::envs::Action;
use crate::error::{Error, Result};
use crate::predictor::{check_action, glorot, ModelKind, TransitionModel};
use crate::seed;

/// Property encoder: attention over K rows of V, then a linear read-out W.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderParams {
    /// (|O|+D)×K attention logits; rows 0..|O| are objects, the rest positions.
    pub q: Tensor,
    /// K×d1 property vectors.
    pub v: Tensor,
    /// d1×dP read-out.
    pub w: Tensor,
    pub variant: AttentionVariant,
}

/// Shared pairwise map over two zero-padded windows: tanh(A·[w_other; w_self] + b).
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeParams {
    /// dR×2(2S1+1).
    pub a: Tensor,
    pub b: Tensor,
    pub s1: usize,
}

/// Two-layer tanh MLP from node features to outcome logits.
#[derive(Clone, Debug, PartialEq)]
pub struct DecoderParams {
    pub w1: Tensor,
    pub b1: Tensor,
    pub w2: Tensor,
    pub b2: Tensor,
}

/// m convolution kernels of length 2S2+1, stored as an m×(2S2+1) matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeKernels {
    pub omega: Tensor,
}

impl OutcomeKernels {
    pub fn count(&self) -> usize {
        self.omega.rows()
    }

    pub fn len(&self) -> usize {
        self.omega.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.numel() == 0
    }

    pub fn kernel(&self, z: usize) -> &[f64] {
        self.omega.row(z)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NidModel {
    pub encoder: EncoderParams,
    pub edge: EdgeParams,
    pub decoder: DecoderParams,
    pub kernels: OutcomeKernels,
    pub hyper: Hyper,
    pub n_objects: usize,
    pub n_positions: usize,
    pub n_actions: usize,
}

/// Row k of the sign pattern: bit j of k (from the most significant of d1
/// bits) picks −, scaled by 1/√d1. Row 1 of d1=2 is (+, −).
pub fn sign_pattern(k: usize, d1: usize) -> Tensor {
    let scale = 1.0 / (d1 as f64).sqrt();
    let period = if d1 >= usize::BITS as usize { usize::MAX } else { 1usize << d1 };
    let mut data = Vec::with_capacity(k * d1);
    for row in 0..k {
        let code = row % period;
        for j in 0..d1 {
            let bit = (code >> (d1 - 1 - j)) & 1;
            data.push(if bit == 0 { scale } else { -scale });
        }
    }
    Tensor::from_parts(vec![k, d1], data)
}

/// Tape handles for the parameters, in `named_params` order.
struct Bound {
    q: Var,
    v: Var,
    w: Var,
    a: Var,
    b: Var,
    w1: Var,
    b1: Var,
    w2: Var,
    b2: Var,
    omega: Var,
}

impl Bound {
    fn new(p: &[Var]) -> Result<Self> {
        if p.len() != 10 {
            return Err(Error::contract(format!("NID model binds 10 tensors, got {}", p.len())));
        }
        Ok(Self {
            q: p[0],
            v: p[1],
            w: p[2],
            a: p[3],
            b: p[4],
            w1: p[5],
            b1: p[6],
            w2: p[7],
            b2: p[8],
            omega: p[9],
        })
    }
}

/// Per-row outputs of the encoder on a tape.
pub(crate) struct EncodedRows {
    pub attn: Var,
    pub h: Var,
    pub theta: Var,
}

impl NidModel {
    pub fn init(hyper: &Hyper, n_objects: usize, n_positions: usize, n_actions: usize, rng: &mut impl Rng) -> Result<Self> {
        hyper.validate()?;
        if n_objects == 0 || n_positions == 0 {
            return Err(Error::contract("model needs at least one object and one position"));
        }
        let rows = n_objects + n_positions;
        let (q, v) = match hyper.init {
            InitScheme::Random => (glorot(rows, hyper.k, rng), glorot(hyper.k, hyper.d1, rng)),
            InitScheme::FixedRows => (Tensor::zeros(&[rows, hyper.k]), sign_pattern(hyper.k, hyper.d1)),
        };
        let w = glorot(hyper.d1, hyper.dp, rng);
        let a = glorot(hyper.dr, 2 * hyper.window_len(), rng);
        let node = hyper.dp + hyper.dr + n_actions;
        let w1 = glorot(node, hyper.hidden, rng);
        let w2 = glorot(hyper.hidden, hyper.m, rng);
        let mut omega = glorot(hyper.m, hyper.kernel_len(), rng);
        if hyper.omega_init == OmegaInit::Shifts {
            for z in 0..hyper.m.min(hyper.kernel_len()) {
                for l in 0..hyper.kernel_len() {
                    omega.set(z, l, if l == z { hyper.omega_gain } else { 0.0 });
                }
            }
        }
        Ok(Self {
            encoder: EncoderParams {
                q,
                v,
                w,
                variant: hyper.variant,
            },
            edge: EdgeParams {
                a,
                b: Tensor::zeros(&[hyper.dr]),
                s1: hyper.s1,
            },
            decoder: DecoderParams {
                w1,
                b1: Tensor::zeros(&[hyper.hidden]),
                w2,
                b2: Tensor::zeros(&[hyper.m]),
            },
            kernels: OutcomeKernels { omega },
            hyper: hyper.clone(),
            n_objects,
            n_positions,
            n_actions,
        })
    }

    /// Deterministic in `hyper.seed`.
    pub fn from_seed(hyper: &Hyper, n_objects: usize, n_positions: usize, n_actions: usize) -> Result<Self> {
        let mut rng = seed::stream(hyper.seed, "init", 0);
        Self::init(hyper, n_objects, n_positions, n_actions, &mut rng)
    }

    fn check_state(&self, x: &Tensor) -> Result<()> {
        if x.shape() != [self.n_objects, self.n_positions] {
            return Err(Error::shape("predict_next", x.shape(), &[self.n_objects, self.n_positions]));
        }
        for o in 0..self.n_objects {
            let s: f64 = x.row(o).iter().sum();
            if (s - 1.0).abs() > 1e-6 || x.row(o).iter().any(|&v| v < 0.0) {
                return Err(Error::contract(format!("row {o} of the state is not a distribution (sum {s})")));
            }
        }
        Ok(())
    }

    pub(crate) fn encode_rows(&self, tape: &mut Tape, q: Var, v: Var, w: Var, rows: &[(usize, usize)]) -> Result<EncodedRows> {
        encode_on_tape(tape, self.encoder.variant, self.n_objects, q, v, w, rows)
    }

    pub(crate) fn edge_rows(&self, tape: &mut Tape, a: Var, b: Var, x: &Tensor, rows: &[(usize, usize)]) -> Result<Var> {
        edge_on_tape(tape, self.edge.s1, a, b, x, rows)
    }

    /// Outcome distribution P(z | x, o, p[, a]) for each listed pair, as an N×m matrix.
    fn selector_rows(&self, tape: &mut Tape, bd: &Bound, x: &Tensor, rows: &[(usize, usize)], action: Option<usize>) -> Result<Var> {
        let enc = self.encode_rows(tape, bd.q, bd.v, bd.w, rows)?;
        let edge = self.edge_rows(tape, bd.a, bd.b, x, rows)?;
        let mut parts = vec![enc.theta, edge];
        if self.n_actions > 0 {
            let mut oh = Tensor::zeros(&[rows.len(), self.n_actions]);
            let ai = action.expect("checked by caller");
            for n in 0..rows.len() {
                oh.set(n, ai, 1.0);
            }
            parts.push(tape.constant(oh));
        }
        let node = tape.concat(&parts)?;
        let hid = tape.matmul(node, bd.w1)?;
        let hid = tape.add_bias(hid, bd.b1)?;
        let hid = tape.tanh(hid)?;
        let logits = tape.matmul(hid, bd.w2)?;
        let logits = tape.add_bias(logits, bd.b2)?;
        tape.softmax_rows(logits)
    }

    pub(crate) fn selector_on_tape(&self, tape: &mut Tape, params: &[Var], x: &Tensor, rows: &[(usize, usize)], action: Option<Action>) -> Result<Var> {
        let ai = check_action(self.n_actions, action)?;
        let bd = Bound::new(params)?;
        self.selector_rows(tape, &bd, x, rows, ai)
    }

    /// Conditional and marginal attention entropies of the rows of Q.
    pub(crate) fn entropy_on_tape(tape: &mut Tape, q: Var) -> Result<(Var, Var)> {
        let n = tape.value(q).rows();
        let probs = tape.softmax_rows(q)?;
        let logp = tape.log(probs)?;
        let plogp = tape.mul(probs, logp)?;
        let s = tape.sum(plogp)?;
        let r1 = tape.scale(s, -1.0 / n as f64)?;
        let ones = tape.constant(Tensor::full(&[1, n], 1.0 / n as f64));
        let marginal = tape.matmul(ones, probs)?;
        let logm = tape.log(marginal)?;
        let mlogm = tape.mul(marginal, logm)?;
        let s2 = tape.sum(mlogm)?;
        let r2 = tape.scale(s2, -1.0)?;
        Ok((r1, r2))
    }
}

/// Encoder outputs for a list of (object, position) pairs.
pub(crate) fn encode_on_tape(
    tape: &mut Tape,
    variant: AttentionVariant,
    n_objects: usize,
    q: Var,
    v: Var,
    w: Var,
    rows: &[(usize, usize)],
) -> Result<EncodedRows> {
    let n_positions = tape.value(q).rows().saturating_sub(n_objects);
    for &(o, p) in rows {
        if o >= n_objects || p >= n_positions {
            return Err(Error::contract(format!(
                "(o={o}, p={p}) out of range for {n_objects} objects and {n_positions} positions"
            )));
        }
    }
    let obj_rows: Vec<usize> = rows.iter().map(|r| r.0).collect();
    let pos_rows: Vec<usize> = rows.iter().map(|r| n_objects + r.1).collect();
    let (attn, pre) = match variant {
        AttentionVariant::SampleDependent => {
            let qo = tape.select_rows(q, &obj_rows)?;
            let qp = tape.select_rows(q, &pos_rows)?;
            let logits = tape.add(qo, qp)?;
            let attn = tape.softmax_rows(logits)?;
            let pre = tape.matmul(attn, v)?;
            (attn, pre)
        }
        AttentionVariant::SampleIndependent => {
            let table = tape.softmax_rows(q)?;
            let w1 = tape.matmul(table, v)?;
            let wo = tape.select_rows(w1, &obj_rows)?;
            let wp = tape.select_rows(w1, &pos_rows)?;
            let pre = tape.add(wo, wp)?;
            let ao = tape.select_rows(table, &obj_rows)?;
            let ap = tape.select_rows(table, &pos_rows)?;
            let attn = tape.concat(&[ao, ap])?;
            (attn, pre)
        }
    };
    let h = tape.sigmoid(pre)?;
    let theta = tape.matmul(h, w)?;
    Ok(EncodedRows { attn, h, theta })
}

/// Σ_{õ≠o} tanh(A·[window(x[õ],p); window(x[o],p)] + b) for each listed pair.
pub(crate) fn edge_on_tape(tape: &mut Tape, s1: usize, a: Var, b: Var, x: &Tensor, rows: &[(usize, usize)]) -> Result<Var> {
    let dr = tape.value(a).rows();
    let wlen = 2 * s1 + 1;
    if tape.value(a).cols() != 2 * wlen {
        return Err(Error::shape("edge", tape.value(a).shape(), &[dr, 2 * wlen]));
    }
    let (n_objects, n_positions) = (x.rows(), x.cols());
    if n_objects < 2 {
        return Ok(tape.constant(Tensor::zeros(&[rows.len(), dr])));
    }
    let half = s1 as isize;
    let d = n_positions as isize;
    let window = |obj: usize, p: usize, out: &mut Vec<f64>| {
        for l in -half..=half {
            let q = p as isize + l;
            out.push(if q >= 0 && q < d { x.at(obj, q as usize) } else { 0.0 });
        }
    };
    let pairs = n_objects - 1;
    let m = rows.len() * pairs;
    let mut feats = Vec::with_capacity(m * 2 * wlen);
    let mut agg = vec![0.0; rows.len() * m];
    let mut col = 0;
    for (n, &(o, p)) in rows.iter().enumerate() {
        for other in (0..n_objects).filter(|&j| j != o) {
            window(other, p, &mut feats);
            window(o, p, &mut feats);
            agg[n * m + col] = 1.0;
            col += 1;
        }
    }
    let feats = tape.constant(Tensor::from_parts(vec![m, 2 * wlen], feats));
    let agg = tape.constant(Tensor::from_parts(vec![rows.len(), m], agg));
    let at = tape.transpose(a)?;
    let pre = tape.matmul(feats, at)?;
    let pre = tape.add_bias(pre, b)?;
    let phi = tape.tanh(pre)?;
    tape.matmul(agg, phi)
}

impl TransitionModel for NidModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Nid
    }

    fn named_params(&self) -> Vec<(&'static str, &Tensor)> {
        vec![
            ("Q", &self.encoder.q),
            ("V", &self.encoder.v),
            ("W", &self.encoder.w),
            ("edge.A", &self.edge.a),
            ("edge.b", &self.edge.b),
            ("dec.W1", &self.decoder.w1),
            ("dec.b1", &self.decoder.b1),
            ("dec.W2", &self.decoder.w2),
            ("dec.b2", &self.decoder.b2),
            ("omega", &self.kernels.omega),
        ]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![
            &mut self.encoder.q,
            &mut self.encoder.v,
            &mut self.encoder.w,
            &mut self.edge.a,
            &mut self.edge.b,
            &mut self.decoder.w1,
            &mut self.decoder.b1,
            &mut self.decoder.w2,
            &mut self.decoder.b2,
            &mut self.kernels.omega,
        ]
    }

    fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Source-gated mixture: the mass at (o, p) picks outcome z with
    /// P(z | x, o, p) and is moved by kernel ω_z; rows are then softmaxed.
    fn forward(&self, tape: &mut Tape, params: &[Var], x: &Tensor, action: Option<Action>) -> Result<Var> {
        self.check_state(x)?;
        let ai = check_action(self.n_actions, action)?;
        let bd = Bound::new(params)?;
        let (no, d) = (self.n_objects, self.n_positions);
        let mut rows = Vec::new();
        let mut row_of = vec![None; no * d];
        for o in 0..no {
            for p in 0..d {
                if x.at(o, p) != 0.0 {
                    row_of[o * d + p] = Some(rows.len());
                    rows.push((o, p));
                }
            }
        }
        let sel = self.selector_rows(tape, &bd, x, &rows, ai)?;
        let m = self.hyper.m;
        let klen = self.hyper.kernel_len();
        let xs = tape.constant(x.clone());
        let mut tilde: Option<Var> = None;
        for z in 0..m {
            let idx = row_of.iter().map(|r| r.map(|n| n * m + z)).collect();
            let gate = tape.gather(sel, idx, &[no, d])?;
            let mass = tape.mul(gate, xs)?;
            let kernel = tape.gather(bd.omega, (z * klen..(z + 1) * klen).map(Some).collect(), &[klen])?;
            let moved = tape.conv1d(mass, kernel)?;
            tilde = Some(match tilde {
                Some(t) => tape.add(t, moved)?,
                None => moved,
            });
        }
        tape.softmax_rows(tilde.expect("m >= 1"))
    }

    fn regularizer(&self, tape: &mut Tape, params: &[Var]) -> Result<Option<Var>> {
        let (l1, l2) = (self.hyper.lambda1, self.hyper.lambda2);
        if l1 == 0.0 && l2 == 0.0 {
            return Ok(None);
        }
        let bd = Bound::new(params)?;
        let (r1, r2) = Self::entropy_on_tape(tape, bd.q)?;
        let a = tape.scale(r1, l1)?;
        let b = tape.scale(r2, l2)?;
        Ok(Some(tape.add(a, b)?))
    }
}

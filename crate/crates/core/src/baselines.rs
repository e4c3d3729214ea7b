//! Comparison predictors: a fully connected net and two convolutional nets.
//! All end in a row softmax so they share the NID output contract.

use rand::Rng;

use crate::diffcore::{Tape, Tensor, Var};
use crate::envs::Action;
use crate::error::{Error, Result};
use crate::predictor::{check_action, glorot, ModelKind, TransitionModel};

pub const MLP_WIDTH: usize = 128;
pub const MLP_DEPTH: usize = 3;
pub const CONV3_CHANNELS: usize = 16;
const KERNEL: usize = 3;

fn check_shape(x: &Tensor, n_objects: usize, n_positions: usize) -> Result<()> {
    if x.shape() != [n_objects, n_positions] {
        return Err(Error::shape("predict_next", x.shape(), &[n_objects, n_positions]));
    }
    Ok(())
}

/// flatten → 3×(linear + tanh) → linear → reshape → row softmax.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpModel {
    /// (weight, bias) per layer; the last layer is linear.
    pub layers: Vec<(Tensor, Tensor)>,
    pub n_objects: usize,
    pub n_positions: usize,
    pub n_actions: usize,
}

impl MlpModel {
    pub fn init(n_objects: usize, n_positions: usize, n_actions: usize, rng: &mut impl Rng) -> Self {
        let input = n_objects * n_positions + n_actions;
        let mut widths = vec![input];
        widths.extend([MLP_WIDTH; MLP_DEPTH]);
        widths.push(n_objects * n_positions);
        let layers = widths
            .windows(2)
            .map(|w| (glorot(w[0], w[1], rng), Tensor::zeros(&[w[1]])))
            .collect();
        Self {
            layers,
            n_objects,
            n_positions,
            n_actions,
        }
    }
}

const MLP_NAMES: [(&str, &str); 4] = [("l0.W", "l0.b"), ("l1.W", "l1.b"), ("l2.W", "l2.b"), ("l3.W", "l3.b")];

impl TransitionModel for MlpModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Mlp
    }

    fn named_params(&self) -> Vec<(&'static str, &Tensor)> {
        self.layers
            .iter()
            .zip(MLP_NAMES)
            .flat_map(|((w, b), (nw, nb))| [(nw, w), (nb, b)])
            .collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers.iter_mut().flat_map(|(w, b)| [w, b]).collect()
    }

    fn n_actions(&self) -> usize {
        self.n_actions
    }

    fn forward(&self, tape: &mut Tape, params: &[Var], x: &Tensor, action: Option<Action>) -> Result<Var> {
        check_shape(x, self.n_objects, self.n_positions)?;
        let ai = check_action(self.n_actions, action)?;
        if params.len() != 2 * self.layers.len() {
            return Err(Error::contract("MLP parameter count mismatch"));
        }
        let mut input = x.data().to_vec();
        input.extend((0..self.n_actions).map(|i| if Some(i) == ai { 1.0 } else { 0.0 }));
        let n = input.len();
        let mut h = tape.constant(Tensor::from_parts(vec![1, n], input));
        let last = self.layers.len() - 1;
        for (l, pair) in params.chunks(2).enumerate() {
            h = tape.matmul(h, pair[0])?;
            h = tape.add_bias(h, pair[1])?;
            if l < last {
                h = tape.tanh(h)?;
            }
        }
        let h = tape.reshape(h, &[self.n_objects, self.n_positions])?;
        tape.softmax_rows(h)
    }
}

/// One width-3 kernel shared by every object row, no bias. It has no
/// cross-row pathway, so action channels could never reach the output and
/// the model ignores actions.
#[derive(Clone, Debug, PartialEq)]
pub struct Conv1Model {
    pub kernel: Tensor,
    pub n_objects: usize,
    pub n_positions: usize,
    pub n_actions: usize,
}

impl Conv1Model {
    pub fn init(n_objects: usize, n_positions: usize, n_actions: usize, rng: &mut impl Rng) -> Self {
        // fan-in = fan-out = kernel width
        let bound = (6.0 / (2 * KERNEL) as f64).sqrt();
        let kernel = Tensor::from_parts(vec![KERNEL], (0..KERNEL).map(|_| rng.gen_range(-bound..=bound)).collect());
        Self {
            kernel,
            n_objects,
            n_positions,
            n_actions,
        }
    }
}

impl TransitionModel for Conv1Model {
    fn kind(&self) -> ModelKind {
        ModelKind::Conv1
    }

    fn named_params(&self) -> Vec<(&'static str, &Tensor)> {
        vec![("kernel", &self.kernel)]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.kernel]
    }

    fn n_actions(&self) -> usize {
        self.n_actions
    }

    fn forward(&self, tape: &mut Tape, params: &[Var], x: &Tensor, action: Option<Action>) -> Result<Var> {
        check_shape(x, self.n_objects, self.n_positions)?;
        check_action(self.n_actions, action)?;
        let [k] = params else {
            return Err(Error::contract("Conv1 binds exactly one tensor"));
        };
        let xs = tape.constant(x.clone());
        let out = tape.conv1d(xs, *k)?;
        tape.softmax_rows(out)
    }
}

/// Three width-3 convolutions with full channel mixing,
/// (|O|+|A|) → 16 → 16 → |O|, tanh between layers. Actions enter as
/// constant broadcast channels.
#[derive(Clone, Debug, PartialEq)]
pub struct Conv3Model {
    /// Per layer: weight of shape (3·C_in)×C_out, laid out offset-major
    /// (row l·C_in + c multiplies input channel c at p+l−1), and bias C_out.
    pub layers: Vec<(Tensor, Tensor)>,
    pub n_objects: usize,
    pub n_positions: usize,
    pub n_actions: usize,
}

impl Conv3Model {
    pub fn init(n_objects: usize, n_positions: usize, n_actions: usize, rng: &mut impl Rng) -> Self {
        let chans = [n_objects + n_actions, CONV3_CHANNELS, CONV3_CHANNELS, n_objects];
        let layers = chans
            .windows(2)
            .map(|c| (glorot(KERNEL * c[0], c[1], rng), Tensor::zeros(&[c[1]])))
            .collect();
        Self {
            layers,
            n_objects,
            n_positions,
            n_actions,
        }
    }

    /// Gather indices turning a D×C activation into D×(3·C) zero-padded patches.
    fn patch_index(d: usize, c: usize) -> Vec<Option<usize>> {
        let mut idx = Vec::with_capacity(d * KERNEL * c);
        for p in 0..d {
            for l in 0..KERNEL {
                let q = p as isize + l as isize - (KERNEL / 2) as isize;
                for ch in 0..c {
                    idx.push((q >= 0 && (q as usize) < d).then(|| q as usize * c + ch));
                }
            }
        }
        idx
    }
}

const CONV3_NAMES: [(&str, &str); 3] = [("c0.W", "c0.b"), ("c1.W", "c1.b"), ("c2.W", "c2.b")];

impl TransitionModel for Conv3Model {
    fn kind(&self) -> ModelKind {
        ModelKind::Conv3
    }

    fn named_params(&self) -> Vec<(&'static str, &Tensor)> {
        self.layers
            .iter()
            .zip(CONV3_NAMES)
            .flat_map(|((w, b), (nw, nb))| [(nw, w), (nb, b)])
            .collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers.iter_mut().flat_map(|(w, b)| [w, b]).collect()
    }

    fn n_actions(&self) -> usize {
        self.n_actions
    }

    fn forward(&self, tape: &mut Tape, params: &[Var], x: &Tensor, action: Option<Action>) -> Result<Var> {
        check_shape(x, self.n_objects, self.n_positions)?;
        let ai = check_action(self.n_actions, action)?;
        if params.len() != 2 * self.layers.len() {
            return Err(Error::contract("Conv3 parameter count mismatch"));
        }
        let d = self.n_positions;
        // positions × channels
        let c0 = self.n_objects + self.n_actions;
        let mut input = vec![0.0; d * c0];
        for p in 0..d {
            for o in 0..self.n_objects {
                input[p * c0 + o] = x.at(o, p);
            }
            if let Some(a) = ai {
                input[p * c0 + self.n_objects + a] = 1.0;
            }
        }
        let mut h = tape.constant(Tensor::from_parts(vec![d, c0], input));
        let last = self.layers.len() - 1;
        for (l, pair) in params.chunks(2).enumerate() {
            let c = tape.value(h).cols();
            let patches = tape.gather(h, Self::patch_index(d, c), &[d, KERNEL * c])?;
            h = tape.matmul(patches, pair[0])?;
            h = tape.add_bias(h, pair[1])?;
            if l < last {
                h = tape.tanh(h)?;
            }
        }
        let h = tape.transpose(h)?;
        tape.softmax_rows(h)
    }
}

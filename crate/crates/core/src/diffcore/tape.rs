//! Reverse-mode tape over a fixed primitive set.
//!
//! Every primitive application appends one record holding its output value
//! and whatever the adjoint rule needs. Records are topologically ordered by
//! construction, so the backward pass is a single reverse sweep.

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Clamp applied to the arguments of `ln` inside `log` and `bce`.
pub const LOG_EPS: f64 = 1e-12;

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    MatVec(Var, Var),
    Add(Var, Var),
    AddBias(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Sigmoid(Var),
    Tanh(Var),
    SoftmaxRows(Var),
    Log(Var),
    Conv1d { input: Var, kernel: Var },
    Concat(Vec<Var>),
    Transpose(Var),
    Sum(Var),
    Mean(Var),
    Gather { src: Var, index: Vec<Option<usize>> },
    Bce { target: Tensor, pred: Var },
}

#[derive(Clone, Debug)]
struct Record {
    value: Tensor,
    op: Op,
    trainable: bool,
}

/// Ordered list of primitive applications.
#[derive(Clone, Debug, Default)]
pub struct Tape {
    records: Vec<Record>,
}

/// Adjoints produced by [`Tape::grad`], indexed by [`Var`].
#[derive(Clone, Debug)]
pub struct Gradients {
    shapes: Vec<Vec<usize>>,
    adjoints: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    /// Gradient with respect to `v`; exact zeros if `v` does not reach the loss.
    pub fn wrt(&self, v: Var) -> Tensor {
        let shape = self.shapes[v.0].clone();
        match &self.adjoints[v.0] {
            Some(g) => Tensor::from_parts(shape, g.clone()),
            None => Tensor::zeros(&shape),
        }
    }
}

/// One-line table of the primitives the tape supports.
pub fn primitive_catalog() -> &'static [&'static str] {
    &[
        "matmul",
        "matvec",
        "add",
        "add_bias",
        "sub",
        "mul",
        "scale",
        "sigmoid",
        "tanh",
        "softmax_rows",
        "log",
        "conv1d",
        "concat",
        "transpose",
        "sum",
        "mean",
        "gather",
        "select_rows",
        "bce",
    ]
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// Same-size zero-padded convolution of each row: out[p] = Σ_l k[l]·x[p−l],
/// l ∈ [−S, S], kernel stored at offset l + S.
pub(crate) fn conv1d_rows(x: &[f64], rows: usize, cols: usize, kernel: &[f64]) -> Vec<f64> {
    let half = (kernel.len() / 2) as isize;
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        let xr = &x[r * cols..(r + 1) * cols];
        let or = &mut out[r * cols..(r + 1) * cols];
        for (p, o) in or.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (ki, &k) in kernel.iter().enumerate() {
                let src = p as isize - (ki as isize - half);
                if src >= 0 && (src as usize) < cols {
                    acc += k * xr[src as usize];
                }
            }
            *o = acc;
        }
    }
    out
}

fn bce_value(target: &[f64], pred: &[f64]) -> f64 {
    let n = target.len() as f64;
    let total: f64 = target
        .iter()
        .zip(pred)
        .map(|(&t, &p)| -(t * p.max(LOG_EPS).ln() + (1.0 - t) * (1.0 - p).max(LOG_EPS).ln()))
        .sum();
    total / n
}

/// Binary cross entropy averaged over all entries, without a tape.
pub fn bce(target: &Tensor, pred: &Tensor) -> Result<f64> {
    if target.shape() != pred.shape() {
        return Err(Error::shape("bce", target.shape(), pred.shape()));
    }
    Ok(bce_value(target.data(), pred.data()))
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.records[v.0].value
    }

    fn shape(&self, v: Var) -> &[usize] {
        self.records[v.0].value.shape()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Result<Var> {
        if !value.is_finite() {
            return Err(Error::NonFinite(format!("output of {}", op_name(&op))));
        }
        self.records.push(Record {
            value,
            op,
            trainable: false,
        });
        Ok(Var(self.records.len() - 1))
    }

    /// Registers a trainable leaf.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.records.push(Record {
            value,
            op: Op::Leaf,
            trainable: true,
        });
        Var(self.records.len() - 1)
    }

    /// Registers a non-trainable leaf (inputs, targets, fixed matrices).
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.records.push(Record {
            value,
            op: Op::Leaf,
            trainable: false,
        });
        Var(self.records.len() - 1)
    }

    pub fn is_param(&self, v: Var) -> bool {
        self.records[v.0].trainable
    }

    fn matrix_dims(&self, v: Var, op: &'static str) -> Result<(usize, usize)> {
        let s = self.shape(v);
        if s.len() != 2 {
            return Err(Error::shape(op, s, &[0, 0]));
        }
        Ok((s[0], s[1]))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, k) = self.matrix_dims(a, "matmul")?;
        let (k2, n) = self.matrix_dims(b, "matmul")?;
        if k != k2 {
            return Err(Error::shape("matmul", self.shape(a), self.shape(b)));
        }
        let av = self.value(a).data();
        let bv = self.value(b).data();
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let orow = &mut out[i * n..(i + 1) * n];
            for p in 0..k {
                let x = av[i * k + p];
                if x == 0.0 {
                    continue;
                }
                let brow = &bv[p * n..(p + 1) * n];
                for (o, &y) in orow.iter_mut().zip(brow) {
                    *o += x * y;
                }
            }
        }
        self.push(Tensor::from_parts(vec![m, n], out), Op::MatMul(a, b))
    }

    pub fn matvec(&mut self, a: Var, x: Var) -> Result<Var> {
        let (m, k) = self.matrix_dims(a, "matvec")?;
        let xs = self.shape(x);
        if xs.len() != 1 || xs[0] != k {
            return Err(Error::shape("matvec", self.shape(a), xs));
        }
        let av = self.value(a).data();
        let xv = self.value(x).data();
        let out = (0..m)
            .map(|i| av[i * k..(i + 1) * k].iter().zip(xv).map(|(p, q)| p * q).sum())
            .collect();
        self.push(Tensor::from_parts(vec![m], out), Op::MatVec(a, x))
    }

    fn same_shape(&self, a: Var, b: Var, op: &'static str) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::shape(op, self.shape(a), self.shape(b)));
        }
        Ok(())
    }

    fn zip_with(&mut self, a: Var, b: Var, op: Op, f: impl Fn(f64, f64) -> f64) -> Result<Var> {
        let av = self.value(a);
        let bv = self.value(b);
        let out = av.data().iter().zip(bv.data()).map(|(&x, &y)| f(x, y)).collect();
        let shape = av.shape().to_vec();
        self.push(Tensor::from_parts(shape, out), op)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "add")?;
        self.zip_with(a, b, Op::Add(a, b), |x, y| x + y)
    }

    /// Adds a length-c vector to every row of an r×c matrix.
    pub fn add_bias(&mut self, a: Var, bias: Var) -> Result<Var> {
        let (r, c) = self.matrix_dims(a, "add_bias")?;
        if self.shape(bias) != [c] {
            return Err(Error::shape("add_bias", self.shape(a), self.shape(bias)));
        }
        let bv = self.value(bias).data().to_vec();
        let mut out = self.value(a).data().to_vec();
        for i in 0..r {
            for (o, b) in out[i * c..(i + 1) * c].iter_mut().zip(&bv) {
                *o += b;
            }
        }
        self.push(Tensor::from_parts(vec![r, c], out), Op::AddBias(a, bias))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "sub")?;
        self.zip_with(a, b, Op::Sub(a, b), |x, y| x - y)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "mul")?;
        self.zip_with(a, b, Op::Mul(a, b), |x, y| x * y)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Result<Var> {
        let out = self.value(a).map(|x| c * x);
        self.push(out, Op::Scale(a, c))
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(sigmoid);
        self.push(out, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(f64::tanh);
        self.push(out, Op::Tanh(a))
    }

    /// Softmax over the last axis (a vector is one row).
    pub fn softmax_rows(&mut self, a: Var) -> Result<Var> {
        let v = self.value(a);
        if v.rank() == 0 {
            return Err(Error::shape("softmax_rows", v.shape(), &[1]));
        }
        let (r, c) = (v.rows(), v.cols());
        let mut out = v.data().to_vec();
        for i in 0..r {
            softmax_in_place(&mut out[i * c..(i + 1) * c]);
        }
        let shape = v.shape().to_vec();
        self.push(Tensor::from_parts(shape, out), Op::SoftmaxRows(a))
    }

    /// Natural log with the argument clamped below at [`LOG_EPS`].
    pub fn log(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(|x| x.max(LOG_EPS).ln());
        self.push(out, Op::Log(a))
    }

    /// Same-size zero-padded convolution of every row of `input` with an odd-length `kernel`.
    pub fn conv1d(&mut self, input: Var, kernel: Var) -> Result<Var> {
        let ks = self.shape(kernel);
        if ks.len() != 1 || ks[0] % 2 == 0 {
            return Err(Error::shape("conv1d", self.shape(input), ks));
        }
        let x = self.value(input);
        if x.rank() == 0 {
            return Err(Error::shape("conv1d", x.shape(), ks));
        }
        let out = conv1d_rows(x.data(), x.rows(), x.cols(), self.value(kernel).data());
        let shape = x.shape().to_vec();
        self.push(Tensor::from_parts(shape, out), Op::Conv1d { input, kernel })
    }

    /// Concatenation along the last axis; all parts share rank and row count.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::contract("concat of zero tensors"))?;
        let rank = self.shape(*first).len();
        let rows = self.value(*first).rows();
        if rank == 0 || rank > 2 {
            return Err(Error::shape("concat", self.shape(*first), &[rows]));
        }
        for p in parts {
            let v = self.value(*p);
            if v.rank() != rank || v.rows() != rows {
                return Err(Error::shape("concat", self.shape(*first), v.shape()));
            }
        }
        let total: usize = parts.iter().map(|p| self.value(*p).cols()).sum();
        let mut out = Vec::with_capacity(rows * total);
        for i in 0..rows {
            for p in parts {
                out.extend_from_slice(self.value(*p).row(i));
            }
        }
        let shape = if rank == 1 { vec![total] } else { vec![rows, total] };
        self.push(Tensor::from_parts(shape, out), Op::Concat(parts.to_vec()))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let (r, c) = self.matrix_dims(a, "transpose")?;
        let v = self.value(a).data();
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                out[j * r + i] = v[i * c + j];
            }
        }
        self.push(Tensor::from_parts(vec![c, r], out), Op::Transpose(a))
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let s = self.value(a).data().iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(a))
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let v = self.value(a);
        if v.numel() == 0 {
            return Err(Error::contract("mean of empty tensor"));
        }
        let s = v.data().iter().sum::<f64>() / v.numel() as f64;
        self.push(Tensor::scalar(s), Op::Mean(a))
    }

    /// Flat gather: out.flat[i] = src.flat[index[i]], or 0 where the index is `None`.
    pub fn gather(&mut self, src: Var, index: Vec<Option<usize>>, shape: &[usize]) -> Result<Var> {
        let n: usize = shape.iter().product();
        if n != index.len() {
            return Err(Error::shape("gather", shape, &[index.len()]));
        }
        let sv = self.value(src).data();
        let mut out = Vec::with_capacity(n);
        for j in &index {
            match *j {
                Some(j) if j < sv.len() => out.push(sv[j]),
                Some(j) => {
                    return Err(Error::contract(format!(
                        "gather index {j} out of range for {} entries",
                        sv.len()
                    )))
                }
                None => out.push(0.0),
            }
        }
        self.push(Tensor::from_parts(shape.to_vec(), out), Op::Gather { src, index })
    }

    /// Masked row selection: stacks the listed rows of a matrix.
    pub fn select_rows(&mut self, src: Var, rows: &[usize]) -> Result<Var> {
        let (r, c) = self.matrix_dims(src, "select_rows")?;
        if let Some(&bad) = rows.iter().find(|&&i| i >= r) {
            return Err(Error::contract(format!("row {bad} out of range for {r} rows")));
        }
        let index = rows
            .iter()
            .flat_map(|&i| (0..c).map(move |j| Some(i * c + j)))
            .collect();
        self.gather(src, index, &[rows.len(), c])
    }

    pub fn reshape(&mut self, src: Var, shape: &[usize]) -> Result<Var> {
        let n = self.value(src).numel();
        if shape.iter().product::<usize>() != n {
            return Err(Error::shape("reshape", self.shape(src), shape));
        }
        self.gather(src, (0..n).map(Some).collect(), shape)
    }

    /// Mean binary cross entropy of `pred` against a fixed `target`.
    pub fn bce(&mut self, target: &Tensor, pred: Var) -> Result<Var> {
        if target.shape() != self.shape(pred) {
            return Err(Error::shape("bce", target.shape(), self.shape(pred)));
        }
        let v = bce_value(target.data(), self.value(pred).data());
        self.push(
            Tensor::scalar(v),
            Op::Bce {
                target: target.clone(),
                pred,
            },
        )
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn grad(&self, loss: Var) -> Result<Gradients> {
        let lv = self.value(loss);
        if lv.numel() != 1 {
            return Err(Error::contract(format!(
                "grad needs a scalar loss, got shape {:?}",
                lv.shape()
            )));
        }
        if !lv.is_finite() {
            return Err(Error::NonFinite("loss".into()));
        }
        let mut adj: Vec<Option<Vec<f64>>> = vec![None; self.records.len()];
        adj[loss.0] = Some(vec![1.0]);
        for idx in (0..=loss.0).rev() {
            let Some(g) = adj[idx].take() else { continue };
            self.backprop(idx, &g, &mut adj);
            adj[idx] = Some(g);
        }
        Ok(Gradients {
            shapes: self.records.iter().map(|r| r.value.shape().to_vec()).collect(),
            adjoints: adj,
        })
    }

    fn backprop(&self, idx: usize, g: &[f64], adj: &mut [Option<Vec<f64>>]) {
        let rec = &self.records[idx];
        let out = rec.value.data();
        let mut acc = |v: Var, f: &mut dyn FnMut(&mut [f64])| {
            let n = self.records[v.0].value.numel();
            let slot = adj[v.0].get_or_insert_with(|| vec![0.0; n]);
            f(slot);
        };
        match &rec.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let av = self.value(*a);
                let bv = self.value(*b);
                let (m, k, n) = (av.shape()[0], av.shape()[1], bv.shape()[1]);
                let (ad, bd) = (av.data(), bv.data());
                acc(*a, &mut |ga| {
                    for i in 0..m {
                        for p in 0..k {
                            let mut s = 0.0;
                            for j in 0..n {
                                s += g[i * n + j] * bd[p * n + j];
                            }
                            ga[i * k + p] += s;
                        }
                    }
                });
                acc(*b, &mut |gb| {
                    for i in 0..m {
                        for p in 0..k {
                            let x = ad[i * k + p];
                            if x == 0.0 {
                                continue;
                            }
                            for j in 0..n {
                                gb[p * n + j] += x * g[i * n + j];
                            }
                        }
                    }
                });
            }
            Op::MatVec(a, x) => {
                let av = self.value(*a);
                let xd = self.value(*x).data();
                let (m, k) = (av.shape()[0], av.shape()[1]);
                let ad = av.data();
                acc(*a, &mut |ga| {
                    for i in 0..m {
                        for p in 0..k {
                            ga[i * k + p] += g[i] * xd[p];
                        }
                    }
                });
                acc(*x, &mut |gx| {
                    for i in 0..m {
                        for p in 0..k {
                            gx[p] += g[i] * ad[i * k + p];
                        }
                    }
                });
            }
            Op::Add(a, b) => {
                acc(*a, &mut |ga| add_into(ga, g));
                acc(*b, &mut |gb| add_into(gb, g));
            }
            Op::AddBias(a, bias) => {
                acc(*a, &mut |ga| add_into(ga, g));
                let c = self.value(*bias).numel();
                acc(*bias, &mut |gb| {
                    for (i, &v) in g.iter().enumerate() {
                        gb[i % c] += v;
                    }
                });
            }
            Op::Sub(a, b) => {
                acc(*a, &mut |ga| add_into(ga, g));
                acc(*b, &mut |gb| {
                    for (x, &v) in gb.iter_mut().zip(g) {
                        *x -= v;
                    }
                });
            }
            Op::Mul(a, b) => {
                let ad = self.value(*a).data();
                let bd = self.value(*b).data();
                acc(*a, &mut |ga| {
                    for i in 0..g.len() {
                        ga[i] += g[i] * bd[i];
                    }
                });
                acc(*b, &mut |gb| {
                    for i in 0..g.len() {
                        gb[i] += g[i] * ad[i];
                    }
                });
            }
            Op::Scale(a, c) => acc(*a, &mut |ga| {
                for (x, &v) in ga.iter_mut().zip(g) {
                    *x += c * v;
                }
            }),
            Op::Sigmoid(a) => acc(*a, &mut |ga| {
                for i in 0..g.len() {
                    ga[i] += g[i] * out[i] * (1.0 - out[i]);
                }
            }),
            Op::Tanh(a) => acc(*a, &mut |ga| {
                for i in 0..g.len() {
                    ga[i] += g[i] * (1.0 - out[i] * out[i]);
                }
            }),
            Op::SoftmaxRows(a) => {
                let c = rec.value.cols();
                acc(*a, &mut |ga| {
                    for ((arow, grow), yrow) in ga.chunks_mut(c).zip(g.chunks(c)).zip(out.chunks(c)) {
                        let dot: f64 = grow.iter().zip(yrow).map(|(gv, yv)| gv * yv).sum();
                        for j in 0..c {
                            arow[j] += yrow[j] * (grow[j] - dot);
                        }
                    }
                });
            }
            Op::Log(a) => {
                let ad = self.value(*a).data();
                acc(*a, &mut |ga| {
                    for i in 0..g.len() {
                        if ad[i] > LOG_EPS {
                            ga[i] += g[i] / ad[i];
                        }
                    }
                });
            }
            Op::Conv1d { input, kernel } => {
                let x = self.value(*input);
                let (rows, cols) = (x.rows(), x.cols());
                let xd = x.data();
                let kd = self.value(*kernel).data();
                let half = (kd.len() / 2) as isize;
                acc(*input, &mut |gx| {
                    for r in 0..rows {
                        for p in 0..cols {
                            let gp = g[r * cols + p];
                            if gp == 0.0 {
                                continue;
                            }
                            for (ki, &k) in kd.iter().enumerate() {
                                let src = p as isize - (ki as isize - half);
                                if src >= 0 && (src as usize) < cols {
                                    gx[r * cols + src as usize] += k * gp;
                                }
                            }
                        }
                    }
                });
                acc(*kernel, &mut |gk| {
                    for r in 0..rows {
                        for p in 0..cols {
                            let gp = g[r * cols + p];
                            if gp == 0.0 {
                                continue;
                            }
                            for (ki, slot) in gk.iter_mut().enumerate() {
                                let src = p as isize - (ki as isize - half);
                                if src >= 0 && (src as usize) < cols {
                                    *slot += gp * xd[r * cols + src as usize];
                                }
                            }
                        }
                    }
                });
            }
            Op::Concat(parts) => {
                let rows = rec.value.rows();
                let total = rec.value.cols();
                let mut offset = 0;
                for p in parts {
                    let c = self.value(*p).cols();
                    acc(*p, &mut |gp| {
                        for i in 0..rows {
                            for j in 0..c {
                                gp[i * c + j] += g[i * total + offset + j];
                            }
                        }
                    });
                    offset += c;
                }
            }
            Op::Transpose(a) => {
                let (r, c) = (self.value(*a).shape()[0], self.value(*a).shape()[1]);
                acc(*a, &mut |ga| {
                    for i in 0..r {
                        for j in 0..c {
                            ga[i * c + j] += g[j * r + i];
                        }
                    }
                });
            }
            Op::Sum(a) => acc(*a, &mut |ga| {
                for x in ga.iter_mut() {
                    *x += g[0];
                }
            }),
            Op::Mean(a) => {
                let n = self.value(*a).numel() as f64;
                acc(*a, &mut |ga| {
                    for x in ga.iter_mut() {
                        *x += g[0] / n;
                    }
                });
            }
            Op::Gather { src, index } => acc(*src, &mut |gs| {
                for (i, j) in index.iter().enumerate() {
                    if let Some(j) = j {
                        gs[*j] += g[i];
                    }
                }
            }),
            Op::Bce { target, pred } => {
                let pd = self.value(*pred).data();
                let td = target.data();
                let n = td.len() as f64;
                acc(*pred, &mut |gp| {
                    for i in 0..td.len() {
                        let (t, p) = (td[i], pd[i]);
                        let mut d = 0.0;
                        if p > LOG_EPS {
                            d -= t / p;
                        }
                        if 1.0 - p > LOG_EPS {
                            d += (1.0 - t) / (1.0 - p);
                        }
                        gp[i] += g[0] * d / n;
                    }
                });
            }
        }
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

fn op_name(op: &Op) -> &'static str {
    match op {
        Op::Leaf => "leaf",
        Op::MatMul(..) => "matmul",
        Op::MatVec(..) => "matvec",
        Op::Add(..) => "add",
        Op::AddBias(..) => "add_bias",
        Op::Sub(..) => "sub",
        Op::Mul(..) => "mul",
        Op::Scale(..) => "scale",
        Op::Sigmoid(_) => "sigmoid",
        Op::Tanh(_) => "tanh",
        Op::SoftmaxRows(_) => "softmax_rows",
        Op::Log(_) => "log",
        Op::Conv1d { .. } => "conv1d",
        Op::Concat(_) => "concat",
        Op::Transpose(_) => "transpose",
        Op::Sum(_) => "sum",
        Op::Mean(_) => "mean",
        Op::Gather { .. } => "gather",
        Op::Bce { .. } => "bce",
    }
}

//! Tape-based reverse-mode differentiation.
//!
//! A [`Tape`] records every primitive applied during a forward pass as a
//! node holding its output value and the [`Var`]s it was computed from.
//! Nodes are appended in evaluation order, so the tape is topologically
//! sorted by construction and [`Tape::backward`] visits each record once,
//! last to first.
//!
//! Parameters enter through [`Tape::param`], which copies the current
//! value out of a [`ParamStore`]. Requesting the same name twice returns
//! the same `Var`, so a weight shared across loop iterations accumulates
//! a single gradient.
//!
//! Broadcasting is limited to bias addition ([`Tape::add_row`]); every
//! other binary primitive needs exactly equal shapes.

use std::collections::HashMap;

use crate::error::TensorError;
use crate::params::{Gradients, ParamStore};
use crate::tensor::Tensor;

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Constant,
    Param(String),
    MatMul(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    MulConst(Var, Tensor),
    Scale(Var, f64),
    Concat { parts: Vec<Var>, axis: usize },
    SliceRows { src: Var, start: usize },
    SliceCols { src: Var, start: usize },
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Softmax { src: Var, axis: usize },
    Sum(Var),
    Mean(Var),
    L1Loss { pred: Var, target: Tensor },
    BceLoss { logits: Var, targets: Tensor },
    GatherRows { table: Var, ids: Vec<usize> },
    IndexAdd { src: Var, pairs: Vec<(usize, usize)> },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    params: HashMap<String, Var>,
}

fn mismatch(op: &'static str, a: &Tensor, b: &Tensor) -> TensorError {
    TensorError::ShapeMismatch {
        op,
        left: a.shape().to_vec(),
        right: b.shape().to_vec(),
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    /// Records an input that receives no gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Constant)
    }

    /// Records (once per tape) the named parameter from `store`.
    pub fn param(&mut self, store: &ParamStore, name: &str) -> Result<Var, TensorError> {
        if let Some(&v) = self.params.get(name) {
            return Ok(v);
        }
        let value = store.get(name)?.clone();
        let v = self.push(value, Op::Param(name.to_string()));
        self.params.insert(name.to_string(), v);
        Ok(v)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let out = self.value(a).matmul(self.value(b))?;
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let out = self.value(a).transpose();
        self.push(out, Op::Transpose(a))
    }

    /// `x · wᵀ + b` for a weight stored as `[out × in]` and a bias `[out]`.
    pub fn linear(&mut self, x: Var, w: Var, b: Option<Var>) -> Result<Var, TensorError> {
        let wt = self.transpose(w);
        let y = self.matmul(x, wt)?;
        match b {
            Some(b) => self.add_row(y, b),
            None => Ok(y),
        }
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let out = self.value(a).zip_with(self.value(b), "add", |x, y| x + y)?;
        Ok(self.push(out, Op::Add(a, b)))
    }

    /// Matrix `[m × n]` plus a row vector `[n]` or `[1 × n]`, added to every row.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var, TensorError> {
        let (av, rv) = (self.value(a), self.value(row));
        let (m, n) = av.dims2();
        if rv.rows() != 1 || rv.cols() != n || av.shape().len() > 2 {
            return Err(mismatch("add_row", av, rv));
        }
        let mut out = av.clone();
        let r = rv.data();
        for i in 0..m {
            for (o, b) in out.data_mut()[i * n..(i + 1) * n].iter_mut().zip(r) {
                *o += b;
            }
        }
        Ok(self.push(out, Op::AddRow(a, row)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let out = self.value(a).zip_with(self.value(b), "sub", |x, y| x - y)?;
        Ok(self.push(out, Op::Sub(a, b)))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let out = self.value(a).zip_with(self.value(b), "mul", |x, y| x * y)?;
        Ok(self.push(out, Op::Mul(a, b)))
    }

    /// Elementwise product with a constant tensor of the same shape.
    pub fn mul_const(&mut self, a: Var, c: Tensor) -> Result<Var, TensorError> {
        let out = self.value(a).zip_with(&c, "mul_const", |x, y| x * y)?;
        Ok(self.push(out, Op::MulConst(a, c)))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let out = self.value(a).map(|x| x * c);
        self.push(out, Op::Scale(a, c))
    }

    /// Concatenates matrices along rows (`axis = 0`) or columns (`axis = 1`).
    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var, TensorError> {
        if axis > 1 {
            return Err(TensorError::InvalidAxis { op: "concat", axis });
        }
        let first = self.value(parts[0]);
        let (r0, c0) = first.dims2();
        let mut data = Vec::new();
        let (rows, cols) = if axis == 0 {
            let mut rows = 0;
            for &p in parts {
                let t = self.value(p);
                if t.cols() != c0 {
                    return Err(mismatch("concat", first, t));
                }
                rows += t.rows();
                data.extend_from_slice(t.data());
            }
            (rows, c0)
        } else {
            let mut cols = 0;
            for &p in parts {
                let t = self.value(p);
                if t.rows() != r0 {
                    return Err(mismatch("concat", first, t));
                }
                cols += t.cols();
            }
            data.reserve(r0 * cols);
            for i in 0..r0 {
                for &p in parts {
                    data.extend_from_slice(self.value(p).row(i));
                }
            }
            (r0, cols)
        };
        let out = Tensor::matrix(rows, cols, data)?;
        Ok(self.push(
            out,
            Op::Concat {
                parts: parts.to_vec(),
                axis,
            },
        ))
    }

    /// Rows `start..start + len` of a matrix.
    pub fn slice_rows(&mut self, src: Var, start: usize, len: usize) -> Result<Var, TensorError> {
        let t = self.value(src);
        let (r, c) = t.dims2();
        if len == 0 || start + len > r {
            return Err(TensorError::IndexOutOfRange {
                op: "slice_rows",
                index: start + len,
                len: r,
            });
        }
        let out = Tensor::matrix(len, c, t.data()[start * c..(start + len) * c].to_vec())?;
        Ok(self.push(out, Op::SliceRows { src, start }))
    }

    /// Columns `start..start + len` of a matrix.
    pub fn slice_cols(&mut self, src: Var, start: usize, len: usize) -> Result<Var, TensorError> {
        let t = self.value(src);
        let (r, c) = t.dims2();
        if len == 0 || start + len > c {
            return Err(TensorError::IndexOutOfRange {
                op: "slice_cols",
                index: start + len,
                len: c,
            });
        }
        let mut data = Vec::with_capacity(r * len);
        for i in 0..r {
            data.extend_from_slice(&t.row(i)[start..start + len]);
        }
        let out = Tensor::matrix(r, len, data)?;
        Ok(self.push(out, Op::SliceCols { src, start }))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.value(a).map(sigmoid);
        self.push(out, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out = self.value(a).map(f64::tanh);
        self.push(out, Op::Tanh(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|x| x.max(0.0));
        self.push(out, Op::Relu(a))
    }

    /// Softmax of a matrix along `axis` (1 normalizes each row).
    pub fn softmax(&mut self, a: Var, axis: usize) -> Result<Var, TensorError> {
        if axis > 1 {
            return Err(TensorError::InvalidAxis { op: "softmax", axis });
        }
        let t = self.value(a);
        let out = if axis == 1 {
            softmax_rows(t)
        } else {
            softmax_rows(&t.transpose()).transpose()
        };
        let out = out.reshape(t.shape().to_vec())?;
        Ok(self.push(out, Op::Softmax { src: a, axis }))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let out = Tensor::scalar(self.value(a).sum());
        self.push(out, Op::Sum(a))
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let t = self.value(a);
        let out = Tensor::scalar(t.sum() / t.len() as f64);
        self.push(out, Op::Mean(a))
    }

    /// Mean absolute error against a constant target.
    pub fn l1_loss(&mut self, pred: Var, target: Tensor) -> Result<Var, TensorError> {
        let p = self.value(pred);
        let diff = p.zip_with(&target, "l1_loss", |x, y| (x - y).abs())?;
        let out = Tensor::scalar(diff.sum() / diff.len() as f64);
        Ok(self.push(out, Op::L1Loss { pred, target }))
    }

    /// Mean binary cross-entropy of `sigmoid(logits)` against 0/1 targets,
    /// evaluated in the overflow-safe logit form.
    pub fn bce_loss(&mut self, logits: Var, targets: Tensor) -> Result<Var, TensorError> {
        let x = self.value(logits);
        let per = x.zip_with(&targets, "bce_loss", |x, y| {
            x.max(0.0) - x * y + (-x.abs()).exp().ln_1p()
        })?;
        let out = Tensor::scalar(per.sum() / per.len() as f64);
        Ok(self.push(out, Op::BceLoss { logits, targets }))
    }

    /// Row lookup: output row `i` is `table[ids[i]]`.
    pub fn gather_rows(&mut self, table: Var, ids: &[usize]) -> Result<Var, TensorError> {
        let t = self.value(table);
        let (r, c) = t.dims2();
        let mut data = Vec::with_capacity(ids.len() * c);
        for &id in ids {
            if id >= r {
                return Err(TensorError::IndexOutOfRange {
                    op: "gather_rows",
                    index: id,
                    len: r,
                });
            }
            data.extend_from_slice(t.row(id));
        }
        let out = Tensor::matrix(ids.len(), c, data)?;
        Ok(self.push(
            out,
            Op::GatherRows {
                table,
                ids: ids.to_vec(),
            },
        ))
    }

    /// Sparse scatter-add: for each `(from, to)` pair, output row `to`
    /// accumulates `src[from]`. Output has `n_out` rows; untouched rows are zero.
    pub fn index_add(&mut self, src: Var, pairs: &[(usize, usize)], n_out: usize) -> Result<Var, TensorError> {
        let t = self.value(src);
        let (r, c) = t.dims2();
        let mut out = Tensor::zeros(&[n_out, c]);
        for &(from, to) in pairs {
            if from >= r || to >= n_out {
                return Err(TensorError::IndexOutOfRange {
                    op: "index_add",
                    index: from.max(to),
                    len: r.min(n_out),
                });
            }
            let row = t.row(from);
            for (o, x) in out.data_mut()[to * c..(to + 1) * c].iter_mut().zip(row) {
                *o += x;
            }
        }
        Ok(self.push(
            out,
            Op::IndexAdd {
                src,
                pairs: pairs.to_vec(),
            },
        ))
    }

    /// Reverse sweep from a scalar `loss`, consuming the tape. Returns the
    /// gradient of every parameter recorded through [`Tape::param`].
    pub fn backward(self, loss: Var) -> Result<Gradients, TensorError> {
        let shape = self.value(loss).shape();
        if shape != [1] && shape != [1, 1] {
            return Err(TensorError::NonScalarLoss { shape: shape.to_vec() });
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Tensor::filled(shape, 1.0));
        let mut out = Gradients::new();
        let mut nodes = self.nodes;
        nodes.truncate(loss.0 + 1);

        while let Some(node) = nodes.pop() {
            let idx = nodes.len();
            let Some(g) = grads[idx].take() else {
                continue;
            };
            let y = &node.value;
            let val = |v: Var| &nodes[v.0].value;
            match node.op {
                Op::Constant => {}
                Op::Param(name) => {
                    out.insert(name, g);
                }
                Op::MatMul(a, b) => {
                    let ga = g.matmul(&val(b).transpose())?;
                    let gb = val(a).transpose().matmul(&g)?;
                    acc(&mut grads, a, ga);
                    acc(&mut grads, b, gb);
                }
                Op::Transpose(a) => {
                    let ga = g.transpose().reshape(val(a).shape().to_vec())?;
                    acc(&mut grads, a, ga);
                }
                Op::Add(a, b) => {
                    acc(&mut grads, a, g.clone());
                    acc(&mut grads, b, g);
                }
                Op::AddRow(a, row) => {
                    let (m, n) = g.dims2();
                    let mut gr = Tensor::zeros(val(row).shape());
                    for i in 0..m {
                        for (o, x) in gr.data_mut().iter_mut().zip(&g.data()[i * n..(i + 1) * n]) {
                            *o += x;
                        }
                    }
                    acc(&mut grads, a, g);
                    acc(&mut grads, row, gr);
                }
                Op::Sub(a, b) => {
                    acc(&mut grads, b, g.map(|x| -x));
                    acc(&mut grads, a, g);
                }
                Op::Mul(a, b) => {
                    let ga = g.zip_with(val(b), "mul", |x, y| x * y)?;
                    let gb = g.zip_with(val(a), "mul", |x, y| x * y)?;
                    acc(&mut grads, a, ga);
                    acc(&mut grads, b, gb);
                }
                Op::MulConst(a, c) => {
                    acc(&mut grads, a, g.zip_with(&c, "mul_const", |x, y| x * y)?);
                }
                Op::Scale(a, c) => acc(&mut grads, a, g.map(|x| x * c)),
                Op::Concat { parts, axis } => {
                    let (_, cols) = g.dims2();
                    let mut offset = 0;
                    for p in parts {
                        let pv = val(p);
                        let (pr, pc) = pv.dims2();
                        let mut gp = Vec::with_capacity(pr * pc);
                        if axis == 0 {
                            gp.extend_from_slice(&g.data()[offset * cols..(offset + pr) * cols]);
                            offset += pr;
                        } else {
                            for i in 0..pr {
                                gp.extend_from_slice(&g.row(i)[offset..offset + pc]);
                            }
                            offset += pc;
                        }
                        let gp = Tensor::new(pv.shape().to_vec(), gp)?;
                        acc(&mut grads, p, gp);
                    }
                }
                Op::SliceRows { src, start } => {
                    let sv = val(src);
                    let c = sv.cols();
                    let mut gs = Tensor::zeros(sv.shape());
                    gs.data_mut()[start * c..start * c + g.len()].copy_from_slice(g.data());
                    acc(&mut grads, src, gs);
                }
                Op::SliceCols { src, start } => {
                    let sv = val(src);
                    let (r, c) = sv.dims2();
                    let len = g.cols();
                    let mut gs = Tensor::zeros(sv.shape());
                    for i in 0..r {
                        gs.data_mut()[i * c + start..i * c + start + len].copy_from_slice(g.row(i));
                    }
                    acc(&mut grads, src, gs);
                }
                Op::Sigmoid(a) => {
                    acc(&mut grads, a, g.zip_with(y, "sigmoid", |g, y| g * y * (1.0 - y))?);
                }
                Op::Tanh(a) => {
                    acc(&mut grads, a, g.zip_with(y, "tanh", |g, y| g * (1.0 - y * y))?);
                }
                Op::Relu(a) => {
                    let ga = g.zip_with(val(a), "relu", |g, x| if x > 0.0 { g } else { 0.0 })?;
                    acc(&mut grads, a, ga);
                }
                Op::Softmax { src, axis } => {
                    let ga = if axis == 1 {
                        softmax_rows_backward(y, &g)
                    } else {
                        softmax_rows_backward(&y.transpose(), &g.transpose()).transpose()
                    };
                    let ga = ga.reshape(val(src).shape().to_vec())?;
                    acc(&mut grads, src, ga);
                }
                Op::Sum(a) => {
                    let s = g.data()[0];
                    acc(&mut grads, a, Tensor::filled(val(a).shape(), s));
                }
                Op::Mean(a) => {
                    let av = val(a);
                    let s = g.data()[0] / av.len() as f64;
                    acc(&mut grads, a, Tensor::filled(av.shape(), s));
                }
                Op::L1Loss { pred, target } => {
                    let s = g.data()[0] / target.len() as f64;
                    let gp = val(pred).zip_with(&target, "l1_loss", |p, t| {
                        let d = p - t;
                        if d > 0.0 {
                            s
                        } else if d < 0.0 {
                            -s
                        } else {
                            0.0
                        }
                    })?;
                    acc(&mut grads, pred, gp);
                }
                Op::BceLoss { logits, targets } => {
                    let s = g.data()[0] / targets.len() as f64;
                    let gl = val(logits).zip_with(&targets, "bce_loss", |x, t| s * (sigmoid(x) - t))?;
                    acc(&mut grads, logits, gl);
                }
                Op::GatherRows { table, ids } => {
                    let tv = val(table);
                    let c = tv.cols();
                    let mut gt = Tensor::zeros(tv.shape());
                    for (i, &id) in ids.iter().enumerate() {
                        for (o, x) in gt.data_mut()[id * c..(id + 1) * c].iter_mut().zip(g.row(i)) {
                            *o += x;
                        }
                    }
                    acc(&mut grads, table, gt);
                }
                Op::IndexAdd { src, pairs } => {
                    let sv = val(src);
                    let c = sv.cols();
                    let mut gs = Tensor::zeros(sv.shape());
                    for &(from, to) in &pairs {
                        for (o, x) in gs.data_mut()[from * c..(from + 1) * c].iter_mut().zip(g.row(to)) {
                            *o += x;
                        }
                    }
                    acc(&mut grads, src, gs);
                }
            }
        }
        Ok(out)
    }

    /// Runs [`Tape::backward`] and adds the result into `store`'s gradients.
    pub fn backward_into(self, loss: Var, store: &mut ParamStore) -> Result<(), TensorError> {
        let grads = self.backward(loss)?;
        store.accumulate(&grads, 1.0)
    }
}

fn acc(grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
    match &mut grads[v.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

fn softmax_rows(t: &Tensor) -> Tensor {
    let (r, c) = t.dims2();
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        let row = t.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|x| (x - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        out.extend(exps.into_iter().map(|e| e / z));
    }
    Tensor::matrix(r, c, out).expect("softmax keeps shape")
}

fn softmax_rows_backward(y: &Tensor, g: &Tensor) -> Tensor {
    let (r, c) = y.dims2();
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        let (yr, gr) = (y.row(i), g.row(i));
        let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
        out.extend(yr.iter().zip(gr).map(|(y, g)| y * (g - dot)));
    }
    Tensor::matrix(r, c, out).expect("softmax keeps shape")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store_with(name: &str, t: Tensor) -> ParamStore {
        let mut s = ParamStore::new();
        s.insert(name, t);
        s
    }

    #[test]
    fn softmax_of_zeros_is_uniform() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::zeros(&[1, 2]));
        let y = tape.softmax(x, 1).unwrap();
        assert_eq!(tape.value(y).data(), &[0.5, 0.5]);
    }

    #[test]
    fn matmul_identity_and_hand_example() {
        let mut tape = Tape::new();
        let i2 = tape.constant(Tensor::identity(2));
        let x = tape.constant(Tensor::matrix(2, 1, vec![3.0, -4.0]).unwrap());
        let y = tape.matmul(i2, x).unwrap();
        assert_eq!(tape.value(y).data(), &[3.0, -4.0]);

        let a = tape.constant(Tensor::matrix(2, 2, vec![1.0, 1.0, 0.0, 1.0]).unwrap());
        let e = tape.constant(Tensor::matrix(2, 1, vec![1.0, 0.0]).unwrap());
        let y = tape.matmul(a, e).unwrap();
        assert_eq!(tape.value(y).data(), &[1.0, 0.0]);
    }

    #[test]
    fn grad_of_sum_is_ones() {
        let store = store_with("w", Tensor::vector(vec![0.3, -1.0, 2.0]));
        let mut tape = Tape::new();
        let w = tape.param(&store, "w").unwrap();
        let loss = tape.sum(w);
        let g = tape.backward(loss).unwrap();
        assert_eq!(g["w"].data(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn grad_of_sum_of_squares() {
        let store = store_with("w", Tensor::vector(vec![1.0, 2.0]));
        let mut tape = Tape::new();
        let w = tape.param(&store, "w").unwrap();
        let sq = tape.mul(w, w).unwrap();
        let loss = tape.sum(sq);
        let g = tape.backward(loss).unwrap();
        assert_eq!(g["w"].data(), &[2.0, 4.0]);
    }

    #[test]
    fn non_scalar_loss_is_rejected() {
        let store = store_with("w", Tensor::vector(vec![1.0, 2.0]));
        let mut tape = Tape::new();
        let w = tape.param(&store, "w").unwrap();
        assert!(matches!(tape.backward(w), Err(TensorError::NonScalarLoss { .. })));
    }

    #[test]
    fn shape_mismatch_names_both_shapes() {
        let mut tape = Tape::new();
        let a = tape.constant(Tensor::zeros(&[2, 3]));
        let b = tape.constant(Tensor::zeros(&[3, 2]));
        let err = tape.add(a, b).unwrap_err();
        assert_eq!(
            err,
            TensorError::ShapeMismatch {
                op: "add",
                left: vec![2, 3],
                right: vec![3, 2]
            }
        );
        assert!(tape.add_row(a, b).is_err());
    }

    #[test]
    fn param_is_recorded_once() {
        let store = store_with("w", Tensor::scalar(3.0));
        let mut tape = Tape::new();
        let a = tape.param(&store, "w").unwrap();
        let b = tape.param(&store, "w").unwrap();
        assert_eq!(a, b);
        let y = tape.mul(a, b).unwrap();
        let g = tape.backward(y).unwrap();
        assert_eq!(g["w"].data(), &[6.0]);
    }

    #[test]
    fn index_add_leaves_unreached_rows_zero() {
        let mut tape = Tape::new();
        let src = tape.constant(Tensor::matrix(3, 1, vec![1.0, 2.0, 4.0]).unwrap());
        let out = tape.index_add(src, &[(0, 1), (2, 1)], 3).unwrap();
        assert_eq!(tape.value(out).data(), &[0.0, 5.0, 0.0]);
        assert!(tape.index_add(src, &[(3, 0)], 3).is_err());
    }

    #[test]
    fn bce_matches_direct_formula() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::vector(vec![0.7, -2.0]));
        let l = tape.bce_loss(x, Tensor::vector(vec![1.0, 0.0])).unwrap();
        let p = |z: f64| 1.0 / (1.0 + (-z).exp());
        let want = -((p(0.7)).ln() + (1.0 - p(-2.0)).ln()) / 2.0;
        assert!((tape.value(l).data()[0] - want).abs() < 1e-12);
    }
}

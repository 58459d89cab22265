//! Reverse-mode automatic differentiation over [`Tensor`]s.
//!
//! A [`Tape`] records every operation applied to its [`Var`]s in execution
//! order, which is already a topological order. [`Tape::backward`] walks the
//! record in reverse and accumulates adjoints. A tape belongs to one thread
//! and is reset (or dropped) after each optimisation step.

use std::cell::{Cell, Ref, RefCell};

use crate::tensor::{Shape, Tensor, TensorError, TensorResult};

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(usize, usize),
    Transpose(usize),
    Add(usize, usize),
    /// `m×n + 1×n`, the row vector broadcast over every row.
    AddRow(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Scale(usize, f64),
    AddScalar(usize),
    Relu(usize),
    Sigmoid(usize),
    Exp(usize),
    Log(usize),
    Clamp(usize, f64, f64),
    Sum(usize),
    Mean(usize),
    RowConcat(Vec<usize>),
    ColConcat(Vec<usize>),
    /// Winning row per column, first occurrence on ties.
    ColMax(usize, Vec<usize>),
    FrobeniusSq(usize),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    /// True for trainable leaves and anything computed from one.
    tracked: bool,
}

/// Records operations for one forward/backward pass.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
    consumed: Cell<bool>,
}

/// Handle to a value on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    id: usize,
}

impl std::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Var#{}{:?}", self.id, self.value())
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of recorded nodes.
    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Drops every recorded node so the tape can be reused.
    pub fn reset(&mut self) {
        self.nodes.get_mut().clear();
        self.consumed.set(false);
    }

    /// A leaf whose gradient will be reported by [`Tape::backward`].
    pub fn param(&self, value: Tensor) -> Var<'_> {
        self.push(value, Op::Leaf, true)
    }

    /// A leaf treated as a constant: no gradient flows into it.
    pub fn constant(&self, value: Tensor) -> Var<'_> {
        self.push(value, Op::Leaf, false)
    }

    pub fn scalar(&self, value: f64) -> Var<'_> {
        self.constant(Tensor::scalar(value))
    }

    /// Hash of every piecewise branch recorded so far: ReLU input signs,
    /// clamp regions and column-max winners. Two evaluations of the same
    /// program with equal signatures lie on the same smooth piece.
    pub fn branch_signature(&self) -> u64 {
        use std::hash::{DefaultHasher, Hash, Hasher};
        let nodes = self.nodes.borrow();
        let mut h = DefaultHasher::new();
        for (i, node) in nodes.iter().enumerate() {
            match &node.op {
                Op::Relu(a) => {
                    i.hash(&mut h);
                    for &v in nodes[*a].value.data() {
                        (v > 0.0).hash(&mut h);
                    }
                }
                Op::Clamp(a, lo, hi) => {
                    i.hash(&mut h);
                    for &v in nodes[*a].value.data() {
                        (v < *lo, v > *hi).hash(&mut h);
                    }
                }
                Op::ColMax(_, argmax) => {
                    i.hash(&mut h);
                    argmax.hash(&mut h);
                }
                _ => {}
            }
        }
        h.finish()
    }

    fn push(&self, value: Tensor, op: Op, tracked: bool) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { value, op, tracked });
        Var {
            tape: self,
            id: nodes.len() - 1,
        }
    }

    fn tracked(&self, id: usize) -> bool {
        self.nodes.borrow()[id].tracked
    }

    /// Computes `∂loss/∂v` for every tracked node reachable from `loss`.
    pub fn backward(&self, loss: Var<'_>) -> TensorResult<Gradients> {
        if !std::ptr::eq(self, loss.tape) {
            return Err(TensorError::Detached);
        }
        if self.consumed.get() {
            return Err(TensorError::BackwardTwice);
        }
        let nodes = self.nodes.borrow();
        let shape = nodes[loss.id].value.shape();
        if shape != Shape::new(1, 1) {
            return Err(TensorError::NotScalar { op: "backward", shape });
        }
        self.consumed.set(true);

        let mut grads: Vec<Option<Tensor>> = vec![None; nodes.len()];
        grads[loss.id] = Some(Tensor::scalar(1.0));

        for id in (0..=loss.id).rev() {
            let node = &nodes[id];
            if !node.tracked {
                continue;
            }
            let Some(g) = grads[id].take() else {
                continue;
            };
            if matches!(node.op, Op::Leaf) {
                grads[id] = Some(g);
                continue;
            }
            let mut send = |target: usize, contribution: Tensor| {
                if !nodes[target].tracked {
                    return;
                }
                match &mut grads[target] {
                    Some(acc) => acc.add_assign(&contribution),
                    slot @ None => *slot = Some(contribution),
                }
            };
            match &node.op {
                Op::Leaf => unreachable!(),
                Op::MatMul(a, b) => {
                    let (av, bv) = (&nodes[*a].value, &nodes[*b].value);
                    if nodes[*a].tracked {
                        send(*a, g.matmul_nt(bv)?);
                    }
                    if nodes[*b].tracked {
                        send(*b, av.matmul_tn(&g)?);
                    }
                }
                Op::Transpose(a) => send(*a, g.transpose()),
                Op::Add(a, b) => {
                    send(*b, g.clone());
                    send(*a, g);
                }
                Op::AddRow(a, b) => {
                    let cols = g.cols();
                    let mut row = vec![0.0; cols];
                    for r in 0..g.rows() {
                        for (acc, v) in row.iter_mut().zip(g.row_slice(r)) {
                            *acc += v;
                        }
                    }
                    send(*b, Tensor::row(&row));
                    send(*a, g);
                }
                Op::Sub(a, b) => {
                    send(*b, g.map(|v| -v));
                    send(*a, g);
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (&nodes[*a].value, &nodes[*b].value);
                    if nodes[*a].tracked {
                        send(*a, g.zip_map(bv, |x, y| x * y));
                    }
                    if nodes[*b].tracked {
                        send(*b, g.zip_map(av, |x, y| x * y));
                    }
                }
                Op::Scale(a, k) => send(*a, g.map(|v| v * k)),
                Op::AddScalar(a) => send(*a, g),
                Op::Relu(a) => {
                    let x = &nodes[*a].value;
                    send(*a, g.zip_map(x, |gv, xv| if xv > 0.0 { gv } else { 0.0 }));
                }
                Op::Sigmoid(a) => {
                    let y = &node.value;
                    send(*a, g.zip_map(y, |gv, yv| gv * yv * (1.0 - yv)));
                }
                Op::Exp(a) => {
                    let y = &node.value;
                    send(*a, g.zip_map(y, |gv, yv| gv * yv));
                }
                Op::Log(a) => {
                    let x = &nodes[*a].value;
                    send(*a, g.zip_map(x, |gv, xv| gv / xv));
                }
                Op::Clamp(a, lo, hi) => {
                    let x = &nodes[*a].value;
                    send(*a, g.zip_map(x, |gv, xv| if xv >= *lo && xv <= *hi { gv } else { 0.0 }));
                }
                Op::Sum(a) => {
                    let s = nodes[*a].value.shape();
                    send(*a, Tensor::full(s.rows, s.cols, g.data()[0]));
                }
                Op::Mean(a) => {
                    let s = nodes[*a].value.shape();
                    send(*a, Tensor::full(s.rows, s.cols, g.data()[0] / s.len() as f64));
                }
                Op::RowConcat(parts) => {
                    let cols = g.cols();
                    let mut offset = 0;
                    for &p in parts {
                        let rows = nodes[p].value.rows();
                        let slice = g.data()[offset * cols..(offset + rows) * cols].to_vec();
                        send(p, Tensor::from_vec(rows, cols, slice)?);
                        offset += rows;
                    }
                }
                Op::ColConcat(parts) => {
                    let rows = g.rows();
                    let total = g.cols();
                    let mut offset = 0;
                    for &p in parts {
                        let cols = nodes[p].value.cols();
                        let mut part = Vec::with_capacity(rows * cols);
                        for r in 0..rows {
                            part.extend_from_slice(&g.data()[r * total + offset..r * total + offset + cols]);
                        }
                        send(p, Tensor::from_vec(rows, cols, part)?);
                        offset += cols;
                    }
                }
                Op::ColMax(a, argmax) => {
                    let s = nodes[*a].value.shape();
                    let mut out = Tensor::zeros(s.rows, s.cols);
                    for (c, &r) in argmax.iter().enumerate() {
                        out.set(r, c, g.data()[c]);
                    }
                    send(*a, out);
                }
                Op::FrobeniusSq(a) => {
                    let k = 2.0 * g.data()[0];
                    send(*a, nodes[*a].value.map(|v| k * v));
                }
            }
        }
        Ok(Gradients { grads })
    }
}

/// Adjoints produced by [`Tape::backward`], indexed by [`Var`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient of a tracked leaf; `None` if the loss does not depend on it.
    pub fn get(&self, var: Var<'_>) -> Option<&Tensor> {
        self.grads.get(var.id).and_then(Option::as_ref)
    }

    /// Gradient of `var`, or zeros of its shape when it did not influence the loss.
    pub fn get_or_zeros(&self, var: Var<'_>) -> Tensor {
        self.get(var).cloned().unwrap_or_else(|| {
            let s = var.shape();
            Tensor::zeros(s.rows, s.cols)
        })
    }
}

impl<'t> Var<'t> {
    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    pub fn value(&self) -> Tensor {
        self.tape.nodes.borrow()[self.id].value.clone()
    }

    /// Borrows the value without copying. Do not record new operations
    /// while the borrow is alive.
    pub fn value_ref(&self) -> Ref<'t, Tensor> {
        Ref::map(self.tape.nodes.borrow(), |n| &n[self.id].value)
    }

    pub fn shape(&self) -> Shape {
        self.tape.nodes.borrow()[self.id].value.shape()
    }

    pub fn item(&self) -> TensorResult<f64> {
        self.value_ref().item()
    }

    pub fn is_tracked(&self) -> bool {
        self.tape.tracked(self.id)
    }

    fn same_tape(&self, other: &Var<'_>) -> TensorResult<()> {
        if std::ptr::eq(self.tape, other.tape) {
            Ok(())
        } else {
            Err(TensorError::Detached)
        }
    }

    fn unary(&self, value: Tensor, op: Op) -> Var<'t> {
        self.tape.push(value, op, self.is_tracked())
    }

    fn binary(&self, other: &Var<'t>, value: Tensor, op: Op) -> Var<'t> {
        let tracked = self.is_tracked() || other.is_tracked();
        self.tape.push(value, op, tracked)
    }

    fn check_same_shape(&self, other: &Var<'_>, op: &'static str) -> TensorResult<()> {
        self.same_tape(other)?;
        let (lhs, rhs) = (self.shape(), other.shape());
        if lhs != rhs {
            return Err(TensorError::ShapeMismatch { op, lhs, rhs });
        }
        Ok(())
    }

    pub fn matmul(&self, other: Var<'t>) -> TensorResult<Var<'t>> {
        self.same_tape(&other)?;
        let value = self.value_ref().matmul(&other.value_ref())?;
        Ok(self.binary(&other, value, Op::MatMul(self.id, other.id)))
    }

    pub fn transpose(&self) -> Var<'t> {
        let value = self.value_ref().transpose();
        self.unary(value, Op::Transpose(self.id))
    }

    pub fn add(&self, other: Var<'t>) -> TensorResult<Var<'t>> {
        self.check_same_shape(&other, "add")?;
        let value = self.value_ref().zip_map(&other.value_ref(), |a, b| a + b);
        Ok(self.binary(&other, value, Op::Add(self.id, other.id)))
    }

    /// Adds a `1×n` row to every row of an `m×n` matrix.
    pub fn add_row(&self, row: Var<'t>) -> TensorResult<Var<'t>> {
        self.same_tape(&row)?;
        let (lhs, rhs) = (self.shape(), row.shape());
        if rhs.rows != 1 || rhs.cols != lhs.cols {
            return Err(TensorError::ShapeMismatch {
                op: "add_row",
                lhs,
                rhs,
            });
        }
        let value = {
            let x = self.value_ref();
            let r = row.value_ref();
            let mut out = x.clone();
            for i in 0..lhs.rows {
                for (o, b) in out.data_mut()[i * lhs.cols..(i + 1) * lhs.cols]
                    .iter_mut()
                    .zip(r.data())
                {
                    *o += b;
                }
            }
            out
        };
        Ok(self.binary(&row, value, Op::AddRow(self.id, row.id)))
    }

    pub fn sub(&self, other: Var<'t>) -> TensorResult<Var<'t>> {
        self.check_same_shape(&other, "sub")?;
        let value = self.value_ref().zip_map(&other.value_ref(), |a, b| a - b);
        Ok(self.binary(&other, value, Op::Sub(self.id, other.id)))
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&self, other: Var<'t>) -> TensorResult<Var<'t>> {
        self.check_same_shape(&other, "mul")?;
        let value = self.value_ref().zip_map(&other.value_ref(), |a, b| a * b);
        Ok(self.binary(&other, value, Op::Mul(self.id, other.id)))
    }

    pub fn scale(&self, k: f64) -> Var<'t> {
        let value = self.value_ref().map(|v| v * k);
        self.unary(value, Op::Scale(self.id, k))
    }

    pub fn neg(&self) -> Var<'t> {
        self.scale(-1.0)
    }

    pub fn add_scalar(&self, k: f64) -> Var<'t> {
        let value = self.value_ref().map(|v| v + k);
        self.unary(value, Op::AddScalar(self.id))
    }

    /// `k - self`, elementwise.
    pub fn rsub_scalar(&self, k: f64) -> Var<'t> {
        self.neg().add_scalar(k)
    }

    pub fn relu(&self) -> Var<'t> {
        let value = self.value_ref().map(|v| v.max(0.0));
        self.unary(value, Op::Relu(self.id))
    }

    pub fn sigmoid(&self) -> Var<'t> {
        let value = self.value_ref().map(sigmoid);
        self.unary(value, Op::Sigmoid(self.id))
    }

    pub fn exp(&self) -> Var<'t> {
        let value = self.value_ref().map(f64::exp);
        self.unary(value, Op::Exp(self.id))
    }

    /// Natural log. Every input must be strictly positive; callers clamp.
    pub fn log(&self) -> TensorResult<Var<'t>> {
        let value = {
            let x = self.value_ref();
            if let Some(&bad) = x.data().iter().find(|&&v| !(v > 0.0)) {
                return Err(TensorError::Domain { op: "log", value: bad });
            }
            x.map(f64::ln)
        };
        Ok(self.unary(value, Op::Log(self.id)))
    }

    /// Clamps into `[lo, hi]`; the gradient is zero where clamping bites.
    pub fn clamp(&self, lo: f64, hi: f64) -> Var<'t> {
        let value = self.value_ref().map(|v| v.clamp(lo, hi));
        self.unary(value, Op::Clamp(self.id, lo, hi))
    }

    pub fn sum(&self) -> Var<'t> {
        let value = Tensor::scalar(self.value_ref().sum());
        self.unary(value, Op::Sum(self.id))
    }

    pub fn mean(&self) -> TensorResult<Var<'t>> {
        let value = {
            let x = self.value_ref();
            if x.is_empty() {
                return Err(TensorError::Empty { op: "mean" });
            }
            Tensor::scalar(x.sum() / x.len() as f64)
        };
        Ok(self.unary(value, Op::Mean(self.id)))
    }

    pub fn frobenius_sq(&self) -> Var<'t> {
        let value = Tensor::scalar(self.value_ref().frobenius_sq());
        self.unary(value, Op::FrobeniusSq(self.id))
    }

    /// Column-wise maximum over rows, producing a `1×n` row.
    pub fn col_max(&self) -> TensorResult<Var<'t>> {
        let (value, argmax) = {
            let x = self.value_ref();
            let Shape { rows, cols } = x.shape();
            if rows == 0 {
                return Err(TensorError::Empty { op: "col_max" });
            }
            let mut best = x.row_slice(0).to_vec();
            let mut argmax = vec![0usize; cols];
            for r in 1..rows {
                for (c, &v) in x.row_slice(r).iter().enumerate() {
                    if v > best[c] {
                        best[c] = v;
                        argmax[c] = r;
                    }
                }
            }
            (Tensor::row(&best), argmax)
        };
        Ok(self.unary(value, Op::ColMax(self.id, argmax)))
    }

    /// Stacks matrices vertically; all must share a column count.
    pub fn row_concat(parts: &[Var<'t>]) -> TensorResult<Var<'t>> {
        let first = parts.first().ok_or(TensorError::Empty { op: "row_concat" })?;
        let cols = first.shape().cols;
        let mut data = Vec::new();
        let mut rows = 0;
        for p in parts {
            first.same_tape(p)?;
            let s = p.shape();
            if s.cols != cols {
                return Err(TensorError::ShapeMismatch {
                    op: "row_concat",
                    lhs: first.shape(),
                    rhs: s,
                });
            }
            data.extend_from_slice(p.value_ref().data());
            rows += s.rows;
        }
        let tracked = parts.iter().any(Var::is_tracked);
        let ids = parts.iter().map(|p| p.id).collect();
        Ok(first
            .tape
            .push(Tensor::from_vec(rows, cols, data)?, Op::RowConcat(ids), tracked))
    }

    /// Places matrices side by side; all must share a row count.
    pub fn col_concat(parts: &[Var<'t>]) -> TensorResult<Var<'t>> {
        let first = parts.first().ok_or(TensorError::Empty { op: "col_concat" })?;
        let rows = first.shape().rows;
        for p in parts {
            first.same_tape(p)?;
            if p.shape().rows != rows {
                return Err(TensorError::ShapeMismatch {
                    op: "col_concat",
                    lhs: first.shape(),
                    rhs: p.shape(),
                });
            }
        }
        let total: usize = parts.iter().map(|p| p.shape().cols).sum();
        let mut data = Vec::with_capacity(rows * total);
        {
            let values: Vec<_> = parts.iter().map(|p| p.value_ref()).collect();
            for r in 0..rows {
                for v in &values {
                    data.extend_from_slice(v.row_slice(r));
                }
            }
        }
        let tracked = parts.iter().any(Var::is_tracked);
        let ids = parts.iter().map(|p| p.id).collect();
        Ok(first
            .tape
            .push(Tensor::from_vec(rows, total, data)?, Op::ColConcat(ids), tracked))
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_matmul_is_exact() {
        let tape = Tape::new();
        let m = tape.constant(Tensor::from_rows(&[[1.5, -2.0], [0.25, 7.0]]));
        let i = tape.constant(Tensor::identity(2));
        assert_eq!(i.matmul(m).unwrap().value(), m.value());
    }

    #[test]
    fn sigmoid_at_zero() {
        let tape = Tape::new();
        let x = tape.param(Tensor::zeros(2, 3));
        let y = x.sigmoid();
        assert!(y.value().data().iter().all(|&v| v == 0.5));
        let loss = tape.param(Tensor::scalar(0.0)).sigmoid();
        let g = tape.backward(loss).unwrap();
        let leaf = Var { tape: &tape, id: 2 };
        assert_eq!(g.get(leaf).unwrap().item().unwrap(), 0.25);
    }

    #[test]
    fn sum_gradient_is_all_ones() {
        let tape = Tape::new();
        let x = tape.param(Tensor::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]));
        let loss = x.sum();
        let g = tape.backward(loss).unwrap();
        assert_eq!(g.get(x).unwrap(), &Tensor::ones(2, 3));
    }

    #[test]
    fn backward_twice_is_an_error() {
        let mut tape = Tape::new();
        {
            let x = tape.param(Tensor::scalar(2.0));
            let loss = x.mul(x).unwrap();
            tape.backward(loss).unwrap();
            assert_eq!(tape.backward(loss).unwrap_err(), TensorError::BackwardTwice);
        }
        tape.reset();
        let x = tape.param(Tensor::scalar(3.0));
        let loss = x.mul(x).unwrap();
        assert_eq!(tape.backward(loss).unwrap().get(x).unwrap().item().unwrap(), 6.0);
    }

    #[test]
    fn non_scalar_loss_rejected() {
        let tape = Tape::new();
        let x = tape.param(Tensor::zeros(2, 2));
        assert!(matches!(tape.backward(x), Err(TensorError::NotScalar { .. })));
    }

    #[test]
    fn mixing_tapes_is_detected() {
        let a = Tape::new();
        let b = Tape::new();
        let x = a.param(Tensor::scalar(1.0));
        let y = b.param(Tensor::scalar(1.0));
        assert_eq!(x.add(y).unwrap_err(), TensorError::Detached);
        assert_eq!(a.backward(y).unwrap_err(), TensorError::Detached);
    }

    #[test]
    fn log_domain_error() {
        let tape = Tape::new();
        let x = tape.constant(Tensor::row(&[1.0, 0.0]));
        assert!(matches!(x.log(), Err(TensorError::Domain { op: "log", .. })));
        let y = tape.constant(Tensor::row(&[1.0, -3.0]));
        assert!(y.log().is_err());
    }

    #[test]
    fn shape_mismatch_reports_both_shapes() {
        let tape = Tape::new();
        let a = tape.constant(Tensor::zeros(2, 3));
        let b = tape.constant(Tensor::zeros(3, 2));
        let err = a.add(b).unwrap_err();
        assert_eq!(
            err,
            TensorError::ShapeMismatch {
                op: "add",
                lhs: Shape::new(2, 3),
                rhs: Shape::new(3, 2)
            }
        );
    }

    #[test]
    fn col_max_and_its_gradient() {
        let tape = Tape::new();
        let x = tape.param(Tensor::from_rows(&[[1.0, 5.0], [3.0, 2.0]]));
        let m = x.col_max().unwrap();
        assert_eq!(m.value(), Tensor::row(&[3.0, 5.0]));
        let g = tape.backward(m.sum()).unwrap();
        assert_eq!(g.get(x).unwrap(), &Tensor::from_rows(&[[0.0, 1.0], [1.0, 0.0]]));
    }

    #[test]
    fn constants_receive_no_gradient() {
        let tape = Tape::new();
        let c = tape.constant(Tensor::scalar(4.0));
        let p = tape.param(Tensor::scalar(2.0));
        let loss = c.mul(p).unwrap();
        let g = tape.backward(loss).unwrap();
        assert!(g.get(c).is_none());
        assert_eq!(g.get(p).unwrap().item().unwrap(), 4.0);
    }

    #[test]
    fn concat_round_trip_gradients() {
        let tape = Tape::new();
        let a = tape.param(Tensor::from_rows(&[[1.0], [2.0]]));
        let b = tape.param(Tensor::from_rows(&[[3.0, 4.0], [5.0, 6.0]]));
        let c = Var::col_concat(&[a, b]).unwrap();
        assert_eq!(c.value(), Tensor::from_rows(&[[1.0, 3.0, 4.0], [2.0, 5.0, 6.0]]));
        let w = tape.constant(Tensor::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]));
        let g = tape.backward(c.mul(w).unwrap().sum()).unwrap();
        assert_eq!(g.get(a).unwrap(), &Tensor::from_rows(&[[1.0], [4.0]]));
        assert_eq!(g.get(b).unwrap(), &Tensor::from_rows(&[[2.0, 3.0], [5.0, 6.0]]));

        let r = Var::row_concat(&[b, b]).unwrap();
        assert_eq!(r.shape(), Shape::new(4, 2));
    }
}

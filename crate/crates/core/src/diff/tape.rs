//! Tape-based reverse-mode differentiation over dense matrices.
//!
//! Every operation appends a node holding its forward value and the
//! indices of its inputs. Nodes are appended in evaluation order, so the
//! node index is already a topological order and the backward sweep is a
//! single reverse scan.

use std::collections::BTreeMap;

use ndarray::linalg::general_mat_mul;
use ndarray::{concatenate, Array2, ArrayView2, Axis};

use super::params::ParamStore;
use crate::error::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    MatMulT(Var, Var),
    AddRow(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Hadamard(Var, Var),
    Tanh(Var),
    Sigmoid(Var),
    SoftmaxRows(Var),
    LogSoftmaxRows(Var),
    Transpose(Var),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    Scale(Var, f64),
    MeanRows(Var),
    RowSums(Var),
    SelectRow(Var, usize),
    Powf(Var, f64),
    Ln(Var),
    Flatten(Var),
    Sum(Var),
}

#[derive(Debug, Clone)]
struct Node {
    value: Array2<f64>,
    op: Op,
    requires_grad: bool,
}

/// Parameters bound onto a tape, by name.
#[derive(Debug, Clone, Default)]
pub struct Bindings {
    vars: BTreeMap<String, Var>,
}

impl Bindings {
    pub fn get(&self, name: &str) -> Result<Var> {
        self.vars
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Var)> {
        self.vars.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// A single-threaded computation record.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    grads: Vec<Option<Array2<f64>>>,
}

fn shape_err(op: &'static str, a: &Array2<f64>, b: &Array2<f64>) -> Error {
    Error::Shape {
        op,
        lhs: a.dim(),
        rhs: b.dim(),
    }
}

/// `acc += a · b`, or a fresh product when `acc` is empty. Single-row and
/// rank-one products walk contiguous rows instead of the general kernel,
/// which pads them to a full tile.
fn mm_acc(acc: &mut Option<Array2<f64>>, a: ArrayView2<f64>, b: ArrayView2<f64>) {
    let (m, n) = (a.nrows(), b.ncols());
    if a.ncols() == 1 || (m == 1 && b.strides()[1] == 1) {
        let out = acc.get_or_insert_with(|| Array2::zeros((m, n)));
        for (mut row, arow) in out.outer_iter_mut().zip(a.outer_iter()) {
            for (&x, brow) in arow.iter().zip(b.outer_iter()) {
                row.scaled_add(x, &brow);
            }
        }
        return;
    }
    let product = if m == 1 {
        b.t().dot(&a.row(0)).insert_axis(Axis(0))
    } else if n == 1 && a.strides()[1] == 1 {
        a.dot(&b.column(0)).insert_axis(Axis(1))
    } else {
        match acc {
            Some(out) => {
                general_mat_mul(1.0, &a, &b, 1.0, out);
                return;
            }
            None => a.dot(&b),
        }
    };
    match acc {
        Some(out) => *out += &product,
        None => *acc = Some(product),
    }
}

fn mm(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Array2<f64> {
    let mut out = None;
    mm_acc(&mut out, a, b);
    out.expect("product assigned")
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softmax_rows(a: &Array2<f64>) -> Array2<f64> {
    let mut out = a.clone();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

fn log_softmax_rows(a: &Array2<f64>) -> Array2<f64> {
    let mut out = a.clone();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let lse = max + row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
        row.mapv_inplace(|v| v - lse);
    }
    out
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

    fn push(&mut self, value: Array2<f64>, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        self.grads.push(None);
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// A value that never receives a gradient.
    pub fn constant(&mut self, value: Array2<f64>) -> Var {
        self.push(value, Op::Leaf, false)
    }

    /// A leaf that accumulates gradients during [`Tape::backward`].
    pub fn leaf(&mut self, value: Array2<f64>) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// Puts every parameter of `store` on the tape.
    pub fn bind(&mut self, store: &ParamStore, requires_grad: bool) -> Bindings {
        let vars = store
            .iter()
            .map(|(name, value)| {
                let v = self.push(value.clone(), Op::Leaf, requires_grad);
                (name.to_string(), v)
            })
            .collect();
        Bindings { vars }
    }

    pub fn value(&self, v: Var) -> &Array2<f64> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.dim()
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value[[0, 0]]
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.rg(v)
    }

    /// Accumulated gradient of a leaf, if any backward pass reached it.
    pub fn grad(&self, v: Var) -> Option<&Array2<f64>> {
        self.grads[v.0].as_ref()
    }

    /// Gradients of bound parameters; untouched parameters get zeros.
    pub fn gradients(&self, bindings: &Bindings) -> ParamStore {
        let mut out = ParamStore::new();
        for (name, v) in bindings.iter() {
            let g = self.grads[v.0]
                .clone()
                .unwrap_or_else(|| Array2::zeros(self.shape(v)));
            out.insert(name, g);
        }
        out
    }

    /// Like [`Tape::gradients`] but moves the accumulators out of the tape.
    pub fn into_gradients(mut self, bindings: &Bindings) -> ParamStore {
        let mut out = ParamStore::new();
        for (name, v) in bindings.iter() {
            let g = self.grads[v.0]
                .take()
                .unwrap_or_else(|| Array2::zeros(self.shape(v)));
            out.insert(name, g);
        }
        out
    }

    pub fn zero_grads(&mut self) {
        self.grads.iter_mut().for_each(|g| *g = None);
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.ncols() != vb.nrows() {
            return Err(shape_err("matmul", va, vb));
        }
        let out = mm(va.view(), vb.view());
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(out, Op::MatMul(a, b), rg))
    }

    /// `a · bᵀ` without materializing the transpose.
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.ncols() != vb.ncols() {
            return Err(shape_err("matmul_t", va, vb));
        }
        let out = mm(va.view(), vb.t());
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(out, Op::MatMulT(a, b), rg))
    }

    /// Adds the `1 × cols` row `b` to every row of `a`.
    pub fn add_broadcast_row(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        if vb.nrows() != 1 || vb.ncols() != va.ncols() {
            return Err(shape_err("add_broadcast_row", va, vb));
        }
        let out = va + vb;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(out, Op::AddRow(a, b), rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.dim() != vb.dim() {
            return Err(shape_err("add", va, vb));
        }
        let out = va + vb;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(out, Op::Add(a, b), rg))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.dim() != vb.dim() {
            return Err(shape_err("sub", va, vb));
        }
        let out = va - vb;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(out, Op::Sub(a, b), rg))
    }

    pub fn hadamard(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.dim() != vb.dim() {
            return Err(shape_err("hadamard", va, vb));
        }
        let out = va * vb;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(out, Op::Hadamard(a, b), rg))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out = self.value(a).mapv(f64::tanh);
        let rg = self.rg(a);
        self.push(out, Op::Tanh(a), rg)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.value(a).mapv(sigmoid);
        let rg = self.rg(a);
        self.push(out, Op::Sigmoid(a), rg)
    }

    /// Row-wise softmax, max-shifted before exponentiation.
    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let out = softmax_rows(self.value(a));
        let rg = self.rg(a);
        self.push(out, Op::SoftmaxRows(a), rg)
    }

    pub fn log_softmax_rows(&mut self, a: Var) -> Var {
        let out = log_softmax_rows(self.value(a));
        let rg = self.rg(a);
        self.push(out, Op::LogSoftmaxRows(a), rg)
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let out = self.value(a).t().to_owned();
        let rg = self.rg(a);
        self.push(out, Op::Transpose(a), rg)
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        self.concat(parts, Axis(1))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        self.concat(parts, Axis(0))
    }

    fn concat(&mut self, parts: &[Var], axis: Axis) -> Result<Var> {
        let name = if axis == Axis(1) { "concat_cols" } else { "concat_rows" };
        let first = *parts.first().ok_or_else(|| Error::InvalidArgument(format!("{name} of nothing")))?;
        for &p in &parts[1..] {
            let (v0, vp) = (self.value(first), self.value(p));
            let same = if axis == Axis(1) { v0.nrows() == vp.nrows() } else { v0.ncols() == vp.ncols() };
            if !same {
                return Err(shape_err(name, v0, vp));
            }
        }
        let views: Vec<ArrayView2<f64>> = parts.iter().map(|&p| self.value(p).view()).collect();
        let out = concatenate(axis, &views).expect("shapes checked");
        let rg = parts.iter().any(|&p| self.rg(p));
        let op = if axis == Axis(1) {
            Op::ConcatCols(parts.to_vec())
        } else {
            Op::ConcatRows(parts.to_vec())
        };
        Ok(self.push(out, op, rg))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let out = self.value(a) * s;
        let rg = self.rg(a);
        self.push(out, Op::Scale(a, s), rg)
    }

    /// Mean over rows, giving a `1 × cols` row.
    pub fn mean_rows(&mut self, a: Var) -> Var {
        let v = self.value(a);
        let out = v.sum_axis(Axis(0)).insert_axis(Axis(0)) / v.nrows() as f64;
        let rg = self.rg(a);
        self.push(out, Op::MeanRows(a), rg)
    }

    /// Sum of each row, giving a `rows × 1` column.
    pub fn row_sums(&mut self, a: Var) -> Var {
        let out = self.value(a).sum_axis(Axis(1)).insert_axis(Axis(1));
        let rg = self.rg(a);
        self.push(out, Op::RowSums(a), rg)
    }

    pub fn select_row(&mut self, a: Var, i: usize) -> Result<Var> {
        let v = self.value(a);
        if i >= v.nrows() {
            return Err(Error::InvalidArgument(format!(
                "select_row {i} out of range for {:?}",
                v.dim()
            )));
        }
        let out = v.row(i).to_owned().insert_axis(Axis(0));
        let rg = self.rg(a);
        Ok(self.push(out, Op::SelectRow(a, i), rg))
    }

    pub fn powf(&mut self, a: Var, p: f64) -> Var {
        let out = self.value(a).mapv(|x| x.powf(p));
        let rg = self.rg(a);
        self.push(out, Op::Powf(a, p), rg)
    }

    pub fn ln(&mut self, a: Var) -> Var {
        let out = self.value(a).mapv(f64::ln);
        let rg = self.rg(a);
        self.push(out, Op::Ln(a), rg)
    }

    /// Row-major flatten into a single `1 × (rows·cols)` row.
    pub fn flatten(&mut self, a: Var) -> Var {
        let v = self.value(a);
        let n = v.len();
        let out = Array2::from_shape_vec((1, n), v.iter().copied().collect()).expect("length matches");
        let rg = self.rg(a);
        self.push(out, Op::Flatten(a), rg)
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let out = Array2::from_elem((1, 1), self.value(a).sum());
        let rg = self.rg(a);
        self.push(out, Op::Sum(a), rg)
    }

    /// Propagates `d loss / d node` to every gradient-requiring leaf and adds
    /// it to that leaf's accumulator.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.shape(loss) != (1, 1) {
            return Err(Error::InvalidArgument(format!(
                "backward needs a scalar loss, got {:?}",
                self.shape(loss)
            )));
        }
        let mut adj: Vec<Option<Array2<f64>>> = vec![None; loss.0 + 1];
        adj[loss.0] = Some(Array2::ones((1, 1)));
        for i in (0..=loss.0).rev() {
            let Some(g) = adj[i].take() else { continue };
            if !self.nodes[i].requires_grad {
                continue;
            }
            let node = &self.nodes[i];
            let mut send = |v: Var, contrib: Array2<f64>| {
                if self.nodes[v.0].requires_grad {
                    match &mut adj[v.0] {
                        Some(acc) => *acc += &contrib,
                        slot @ None => *slot = Some(contrib),
                    }
                }
            };
            match &node.op {
                Op::Leaf => {
                    match &mut self.grads[i] {
                        Some(acc) => *acc += &g,
                        slot @ None => *slot = Some(g),
                    }
                    continue;
                }
                Op::MatMul(a, b) => {
                    let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    if self.nodes[a.0].requires_grad {
                        mm_acc(&mut adj[a.0], g.view(), vb.t());
                    }
                    if self.nodes[b.0].requires_grad {
                        mm_acc(&mut adj[b.0], va.t(), g.view());
                    }
                }
                Op::MatMulT(a, b) => {
                    let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    if self.nodes[a.0].requires_grad {
                        mm_acc(&mut adj[a.0], g.view(), vb.view());
                    }
                    if self.nodes[b.0].requires_grad {
                        mm_acc(&mut adj[b.0], g.t(), va.view());
                    }
                }
                Op::AddRow(a, b) => {
                    send(*b, g.sum_axis(Axis(0)).insert_axis(Axis(0)));
                    send(*a, g);
                }
                Op::Add(a, b) => {
                    send(*b, g.clone());
                    send(*a, g);
                }
                Op::Sub(a, b) => {
                    send(*b, -&g);
                    send(*a, g);
                }
                Op::Hadamard(a, b) => {
                    let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    send(*a, &g * vb);
                    send(*b, &g * va);
                }
                Op::Tanh(a) => {
                    let y = &node.value;
                    send(*a, &g * &y.mapv(|t| 1.0 - t * t));
                }
                Op::Sigmoid(a) => {
                    let y = &node.value;
                    send(*a, &g * &y.mapv(|s| s * (1.0 - s)));
                }
                Op::SoftmaxRows(a) => {
                    let s = &node.value;
                    let gs = &g * s;
                    let dot = gs.sum_axis(Axis(1)).insert_axis(Axis(1));
                    send(*a, gs - s * &dot);
                }
                Op::LogSoftmaxRows(a) => {
                    let p = node.value.mapv(f64::exp);
                    let total = g.sum_axis(Axis(1)).insert_axis(Axis(1));
                    send(*a, &g - &(p * &total));
                }
                Op::Transpose(a) => send(*a, g.t().to_owned()),
                Op::ConcatCols(parts) => {
                    let mut start = 0;
                    for p in parts {
                        let w = self.nodes[p.0].value.ncols();
                        send(*p, g.slice(ndarray::s![.., start..start + w]).to_owned());
                        start += w;
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut start = 0;
                    for p in parts {
                        let h = self.nodes[p.0].value.nrows();
                        send(*p, g.slice(ndarray::s![start..start + h, ..]).to_owned());
                        start += h;
                    }
                }
                Op::Scale(a, s) => send(*a, g * *s),
                Op::MeanRows(a) => {
                    let rows = self.nodes[a.0].value.nrows();
                    let row = g / rows as f64;
                    send(*a, row.broadcast((rows, row.ncols())).expect("row broadcast").to_owned());
                }
                Op::RowSums(a) => {
                    let cols = self.nodes[a.0].value.ncols();
                    send(*a, g.broadcast((g.nrows(), cols)).expect("col broadcast").to_owned());
                }
                Op::SelectRow(a, r) => {
                    let mut full = Array2::zeros(self.nodes[a.0].value.dim());
                    full.row_mut(*r).assign(&g.row(0));
                    send(*a, full);
                }
                Op::Powf(a, p) => {
                    let x = &self.nodes[a.0].value;
                    send(*a, &g * &x.mapv(|v| p * v.powf(p - 1.0)));
                }
                Op::Ln(a) => {
                    let x = &self.nodes[a.0].value;
                    send(*a, &g / x);
                }
                Op::Flatten(a) => {
                    let dim = self.nodes[a.0].value.dim();
                    let data: Vec<f64> = g.iter().copied().collect();
                    send(*a, Array2::from_shape_vec(dim, data).expect("length matches"));
                }
                Op::Sum(a) => {
                    let dim = self.nodes[a.0].value.dim();
                    send(*a, Array2::from_elem(dim, g[[0, 0]]));
                }
            }
        }
        Ok(())
    }
}

//! Reverse-mode automatic differentiation over [`Matrix`] values.
//!
//! A [`Graph`] is a per-step arena: every operation appends a node holding
//! its forward value, so node indices are already topologically ordered and
//! [`Graph::backward`] is a single reverse sweep. Graphs are rebuilt for
//! each training step and dropped afterwards.

use crate::error::{Error, Result};
use crate::tensor::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

struct Node {
    value: Matrix,
    grad: Option<Matrix>,
    needs_grad: bool,
    op: Op,
}

enum Op {
    Leaf,
    /// Elementwise sum of two same-shape nodes.
    Add(NodeId, NodeId),
    /// `[m x n] + [1 x n]`, the bias pattern.
    AddRowBroadcast(NodeId, NodeId),
    Sub(NodeId, NodeId),
    /// Elementwise product of two same-shape nodes.
    Mul(NodeId, NodeId),
    /// `[m x n] * s` where `s` is a `[1 x 1]` node.
    MulScalarNode(NodeId, NodeId),
    /// `[m x n] / s` where `s` is a `[1 x 1]` node.
    DivScalarNode(NodeId, NodeId),
    Scale(NodeId, f64),
    /// `a * b`.
    MatMul(NodeId, NodeId),
    /// `a * b^T`; weights are stored `[out x in]` so this is the linear-layer product.
    MatMulNT(NodeId, NodeId),
    SoftmaxRows(NodeId),
    LogSoftmaxRows(NodeId),
    LayerNorm {
        x: NodeId,
        gamma: NodeId,
        beta: NodeId,
        xhat: Matrix,
        inv_std: Vec<f64>,
    },
    Tanh(NodeId),
    Gelu(NodeId),
    /// Row `i` of the output is row `ids[i]` of the table.
    EmbeddingLookup { table: NodeId, ids: Vec<usize> },
    ConcatRows(NodeId, NodeId),
    ConcatCols(Vec<NodeId>),
    SliceRows { x: NodeId, start: usize, len: usize },
    SliceCols { x: NodeId, start: usize, len: usize },
    SumAll(NodeId),
    Sqrt(NodeId),
    Exp(NodeId),
    Ln(NodeId),
    /// Row `r` scaled by the fixed factor `factors[r]`.
    ScaleRows(NodeId, Vec<f64>),
}

#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Matrix {
        &self.nodes[id.0].value
    }

    pub fn grad(&self, id: NodeId) -> Option<&Matrix> {
        self.nodes[id.0].grad.as_ref()
    }

    fn push(&mut self, value: Matrix, needs_grad: bool, op: Op) -> NodeId {
        self.nodes.push(Node { value, grad: None, needs_grad, op });
        NodeId(self.nodes.len() - 1)
    }

    fn needs(&self, id: NodeId) -> bool {
        self.nodes[id.0].needs_grad
    }

    /// Differentiable input.
    pub fn leaf(&mut self, value: Matrix) -> NodeId {
        self.push(value, true, Op::Leaf)
    }

    /// Non-differentiable input (data, masks, fixed coefficients).
    pub fn constant(&mut self, value: Matrix) -> NodeId {
        self.push(value, false, Op::Leaf)
    }

    pub fn scalar(&mut self, v: f64) -> NodeId {
        self.constant(Matrix::row_vector(vec![v]))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let value = self.value(a).add(self.value(b));
        self.push(value, self.needs(a) || self.needs(b), Op::Add(a, b))
    }

    pub fn add_row_broadcast(&mut self, a: NodeId, bias: NodeId) -> NodeId {
        let (m, n) = self.value(a).shape();
        assert_eq!(self.value(bias).shape(), (1, n), "bias shape mismatch");
        let mut value = self.value(a).clone();
        for r in 0..m {
            let b = self.value(bias).row(0).to_vec();
            for (v, bv) in value.row_mut(r).iter_mut().zip(&b) {
                *v += bv;
            }
        }
        self.push(value, self.needs(a) || self.needs(bias), Op::AddRowBroadcast(a, bias))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        assert_eq!(self.value(a).shape(), self.value(b).shape(), "sub shape mismatch");
        let data = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(x, y)| x - y)
            .collect();
        let (m, n) = self.value(a).shape();
        let value = Matrix::from_vec(m, n, data).expect("shape checked");
        self.push(value, self.needs(a) || self.needs(b), Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        assert_eq!(self.value(a).shape(), self.value(b).shape(), "mul shape mismatch");
        let data = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(x, y)| x * y)
            .collect();
        let (m, n) = self.value(a).shape();
        let value = Matrix::from_vec(m, n, data).expect("shape checked");
        self.push(value, self.needs(a) || self.needs(b), Op::Mul(a, b))
    }

    pub fn mul_scalar_node(&mut self, a: NodeId, s: NodeId) -> NodeId {
        assert_eq!(self.value(s).shape(), (1, 1), "scalar node must be 1x1");
        let sv = self.value(s).data()[0];
        let value = self.value(a).scaled(sv);
        self.push(value, self.needs(a) || self.needs(s), Op::MulScalarNode(a, s))
    }

    pub fn div_scalar_node(&mut self, a: NodeId, s: NodeId) -> NodeId {
        assert_eq!(self.value(s).shape(), (1, 1), "scalar node must be 1x1");
        let sv = self.value(s).data()[0];
        let value = self.value(a).scaled(1.0 / sv);
        self.push(value, self.needs(a) || self.needs(s), Op::DivScalarNode(a, s))
    }

    pub fn scale(&mut self, a: NodeId, c: f64) -> NodeId {
        let value = self.value(a).scaled(c);
        self.push(value, self.needs(a), Op::Scale(a, c))
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let value = self.value(a).matmul(self.value(b));
        self.push(value, self.needs(a) || self.needs(b), Op::MatMul(a, b))
    }

    /// `a * b^T`; computes `x W^T` for weights stored `[out x in]`.
    pub fn matmul_nt(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let value = self.value(a).matmul_transposed(self.value(b));
        self.push(value, self.needs(a) || self.needs(b), Op::MatMulNT(a, b))
    }

    /// Linear layer: `x W^T + bias`.
    pub fn linear(&mut self, x: NodeId, w: NodeId, bias: NodeId) -> NodeId {
        let prod = self.matmul_nt(x, w);
        self.add_row_broadcast(prod, bias)
    }

    pub fn softmax_rows(&mut self, a: NodeId) -> NodeId {
        let value = softmax_rows(self.value(a));
        self.push(value, self.needs(a), Op::SoftmaxRows(a))
    }

    pub fn log_softmax_rows(&mut self, a: NodeId) -> NodeId {
        let value = log_softmax_rows(self.value(a));
        self.push(value, self.needs(a), Op::LogSoftmaxRows(a))
    }

    pub fn layer_norm(&mut self, x: NodeId, gamma: NodeId, beta: NodeId, eps: f64) -> NodeId {
        let xv = self.value(x);
        let (m, n) = xv.shape();
        assert_eq!(self.value(gamma).shape(), (1, n), "layer_norm gamma shape");
        assert_eq!(self.value(beta).shape(), (1, n), "layer_norm beta shape");
        let mut xhat = Matrix::zeros(m, n);
        let mut inv_std = vec![0.0; m];
        for r in 0..m {
            let row = xv.row(r);
            let mean = row.iter().sum::<f64>() / n as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            let is = 1.0 / (var + eps).sqrt();
            inv_std[r] = is;
            for c in 0..n {
                xhat.set(r, c, (row[c] - mean) * is);
            }
        }
        let g = self.value(gamma).row(0).to_vec();
        let b = self.value(beta).row(0).to_vec();
        let mut value = Matrix::zeros(m, n);
        for r in 0..m {
            for c in 0..n {
                value.set(r, c, xhat.get(r, c) * g[c] + b[c]);
            }
        }
        let needs = self.needs(x) || self.needs(gamma) || self.needs(beta);
        self.push(value, needs, Op::LayerNorm { x, gamma, beta, xhat, inv_std })
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let value = self.value(a).map(f64::tanh);
        self.push(value, self.needs(a), Op::Tanh(a))
    }

    pub fn gelu(&mut self, a: NodeId) -> NodeId {
        let value = self.value(a).map(gelu);
        self.push(value, self.needs(a), Op::Gelu(a))
    }

    pub fn embedding_lookup(&mut self, table: NodeId, ids: &[usize]) -> NodeId {
        let t = self.value(table);
        let d = t.cols();
        let mut value = Matrix::zeros(ids.len(), d);
        for (r, &id) in ids.iter().enumerate() {
            assert!(id < t.rows(), "embedding id {} out of range {}", id, t.rows());
            value.row_mut(r).copy_from_slice(t.row(id));
        }
        self.push(value, self.needs(table), Op::EmbeddingLookup { table, ids: ids.to_vec() })
    }

    pub fn concat_rows(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (ar, c) = self.value(a).shape();
        let (br, bc) = self.value(b).shape();
        assert_eq!(c, bc, "concat_rows column mismatch");
        let mut data = Vec::with_capacity((ar + br) * c);
        data.extend_from_slice(self.value(a).data());
        data.extend_from_slice(self.value(b).data());
        let value = Matrix::from_vec(ar + br, c, data).expect("shape checked");
        self.push(value, self.needs(a) || self.needs(b), Op::ConcatRows(a, b))
    }

    pub fn concat_cols(&mut self, parts: &[NodeId]) -> NodeId {
        assert!(!parts.is_empty(), "concat_cols needs at least one part");
        let m = self.value(parts[0]).rows();
        let total: usize = parts.iter().map(|&p| self.value(p).cols()).sum();
        let mut value = Matrix::zeros(m, total);
        let mut offset = 0;
        for &p in parts {
            let pv = self.value(p);
            assert_eq!(pv.rows(), m, "concat_cols row mismatch");
            for r in 0..m {
                value.row_mut(r)[offset..offset + pv.cols()].copy_from_slice(pv.row(r));
            }
            offset += pv.cols();
        }
        let needs = parts.iter().any(|&p| self.needs(p));
        self.push(value, needs, Op::ConcatCols(parts.to_vec()))
    }

    pub fn slice_rows(&mut self, x: NodeId, start: usize, len: usize) -> NodeId {
        let xv = self.value(x);
        assert!(start + len <= xv.rows(), "slice_rows out of range");
        let c = xv.cols();
        let data = xv.data()[start * c..(start + len) * c].to_vec();
        let value = Matrix::from_vec(len, c, data).expect("shape checked");
        self.push(value, self.needs(x), Op::SliceRows { x, start, len })
    }

    pub fn slice_cols(&mut self, x: NodeId, start: usize, len: usize) -> NodeId {
        let xv = self.value(x);
        assert!(start + len <= xv.cols(), "slice_cols out of range");
        let m = xv.rows();
        let mut value = Matrix::zeros(m, len);
        for r in 0..m {
            value.row_mut(r).copy_from_slice(&xv.row(r)[start..start + len]);
        }
        self.push(value, self.needs(x), Op::SliceCols { x, start, len })
    }

    pub fn sum_all(&mut self, a: NodeId) -> NodeId {
        let s: f64 = self.value(a).data().iter().sum();
        self.push(Matrix::row_vector(vec![s]), self.needs(a), Op::SumAll(a))
    }

    pub fn sqrt(&mut self, a: NodeId) -> NodeId {
        let value = self.value(a).map(f64::sqrt);
        self.push(value, self.needs(a), Op::Sqrt(a))
    }

    pub fn exp(&mut self, a: NodeId) -> NodeId {
        let value = self.value(a).map(f64::exp);
        self.push(value, self.needs(a), Op::Exp(a))
    }

    pub fn ln(&mut self, a: NodeId) -> NodeId {
        let value = self.value(a).map(f64::ln);
        self.push(value, self.needs(a), Op::Ln(a))
    }

    pub fn scale_rows(&mut self, x: NodeId, factors: &[f64]) -> NodeId {
        let xv = self.value(x);
        assert_eq!(xv.rows(), factors.len(), "scale_rows factor count");
        let mut value = xv.clone();
        for (r, &f) in factors.iter().enumerate() {
            for v in value.row_mut(r) {
                *v *= f;
            }
        }
        self.push(value, self.needs(x), Op::ScaleRows(x, factors.to_vec()))
    }

    /// Backpropagate from a `[1 x 1]` node, seeding its gradient with 1.
    pub fn backward(&mut self, target: NodeId) -> Result<()> {
        if self.value(target).shape() != (1, 1) {
            return Err(Error::input("backward target must be a 1x1 scalar node".to_string()));
        }
        if !self.value(target).is_finite() {
            return Err(Error::Training("non-finite loss; cannot backpropagate".to_string()));
        }
        self.nodes[target.0].grad = Some(Matrix::row_vector(vec![1.0]));
        for i in (0..=target.0).rev() {
            if self.nodes[i].grad.is_none() || !self.nodes[i].needs_grad {
                continue;
            }
            self.backward_node(i);
        }
        Ok(())
    }

    fn accumulate(&mut self, id: NodeId, delta: Matrix) {
        if !self.needs(id) {
            return;
        }
        match &mut self.nodes[id.0].grad {
            Some(g) => g.add_assign(&delta),
            slot @ None => *slot = Some(delta),
        }
    }

    fn backward_node(&mut self, i: usize) {
        let grad = self.nodes[i].grad.clone().expect("checked by caller");
        // Ops are moved out so `self` can be borrowed mutably below; `Leaf`
        // stands in because leaves have no parents to visit.
        let op = std::mem::replace(&mut self.nodes[i].op, Op::Leaf);
        match &op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                self.accumulate(*a, grad.clone());
                self.accumulate(*b, grad);
            }
            Op::AddRowBroadcast(a, bias) => {
                if self.needs(*bias) {
                    let n = grad.cols();
                    let mut db = Matrix::zeros(1, n);
                    for r in 0..grad.rows() {
                        for c in 0..n {
                            db.set(0, c, db.get(0, c) + grad.get(r, c));
                        }
                    }
                    self.accumulate(*bias, db);
                }
                self.accumulate(*a, grad);
            }
            Op::Sub(a, b) => {
                self.accumulate(*a, grad.clone());
                self.accumulate(*b, grad.scaled(-1.0));
            }
            Op::Mul(a, b) => {
                if self.needs(*a) {
                    let da = elementwise(&grad, self.value(*b), |g, v| g * v);
                    self.accumulate(*a, da);
                }
                if self.needs(*b) {
                    let db = elementwise(&grad, self.value(*a), |g, v| g * v);
                    self.accumulate(*b, db);
                }
            }
            Op::MulScalarNode(a, s) => {
                let sv = self.value(*s).data()[0];
                if self.needs(*a) {
                    self.accumulate(*a, grad.scaled(sv));
                }
                if self.needs(*s) {
                    let ds = grad
                        .data()
                        .iter()
                        .zip(self.value(*a).data())
                        .map(|(g, v)| g * v)
                        .sum();
                    self.accumulate(*s, Matrix::row_vector(vec![ds]));
                }
            }
            Op::DivScalarNode(a, s) => {
                let sv = self.value(*s).data()[0];
                if self.needs(*a) {
                    self.accumulate(*a, grad.scaled(1.0 / sv));
                }
                if self.needs(*s) {
                    let ds = grad
                        .data()
                        .iter()
                        .zip(self.value(*a).data())
                        .map(|(g, v)| -g * v / (sv * sv))
                        .sum();
                    self.accumulate(*s, Matrix::row_vector(vec![ds]));
                }
            }
            Op::Scale(a, c) => {
                self.accumulate(*a, grad.scaled(*c));
            }
            Op::MatMul(a, b) => {
                if self.needs(*a) {
                    let da = grad.matmul_transposed(self.value(*b));
                    self.accumulate(*a, da);
                }
                if self.needs(*b) {
                    let db = self.value(*a).transpose().matmul(&grad);
                    self.accumulate(*b, db);
                }
            }
            Op::MatMulNT(a, b) => {
                if self.needs(*a) {
                    let da = grad.matmul(self.value(*b));
                    self.accumulate(*a, da);
                }
                if self.needs(*b) {
                    let db = grad.transpose().matmul(self.value(*a));
                    self.accumulate(*b, db);
                }
            }
            Op::SoftmaxRows(a) => {
                let p = self.value_of(i);
                let mut dx = Matrix::zeros(p.rows(), p.cols());
                for r in 0..p.rows() {
                    let pr = p.row(r);
                    let gr = grad.row(r);
                    let dot: f64 = pr.iter().zip(gr).map(|(x, y)| x * y).sum();
                    for c in 0..p.cols() {
                        dx.set(r, c, pr[c] * (gr[c] - dot));
                    }
                }
                self.accumulate(*a, dx);
            }
            Op::LogSoftmaxRows(a) => {
                let y = self.value_of(i);
                let mut dx = Matrix::zeros(y.rows(), y.cols());
                for r in 0..y.rows() {
                    let gr = grad.row(r);
                    let gsum: f64 = gr.iter().sum();
                    for c in 0..y.cols() {
                        let p = y.get(r, c).exp();
                        dx.set(r, c, gr[c] - p * gsum);
                    }
                }
                self.accumulate(*a, dx);
            }
            Op::LayerNorm { x, gamma, beta, xhat, inv_std } => {
                let (m, n) = xhat.shape();
                let gvals = self.value(*gamma).row(0).to_vec();
                if self.needs(*gamma) {
                    let mut dg = Matrix::zeros(1, n);
                    for r in 0..m {
                        for c in 0..n {
                            dg.set(0, c, dg.get(0, c) + grad.get(r, c) * xhat.get(r, c));
                        }
                    }
                    self.accumulate(*gamma, dg);
                }
                if self.needs(*beta) {
                    let mut db = Matrix::zeros(1, n);
                    for r in 0..m {
                        for c in 0..n {
                            db.set(0, c, db.get(0, c) + grad.get(r, c));
                        }
                    }
                    self.accumulate(*beta, db);
                }
                if self.needs(*x) {
                    let mut dx = Matrix::zeros(m, n);
                    for r in 0..m {
                        let mut mean_dxhat = 0.0;
                        let mut mean_dxhat_xhat = 0.0;
                        for c in 0..n {
                            let dxh = grad.get(r, c) * gvals[c];
                            mean_dxhat += dxh;
                            mean_dxhat_xhat += dxh * xhat.get(r, c);
                        }
                        mean_dxhat /= n as f64;
                        mean_dxhat_xhat /= n as f64;
                        for c in 0..n {
                            let dxh = grad.get(r, c) * gvals[c];
                            dx.set(
                                r,
                                c,
                                inv_std[r] * (dxh - mean_dxhat - xhat.get(r, c) * mean_dxhat_xhat),
                            );
                        }
                    }
                    self.accumulate(*x, dx);
                }
            }
            Op::Tanh(a) => {
                let y = self.value_of(i);
                let dx = elementwise(&grad, y, |g, t| g * (1.0 - t * t));
                self.accumulate(*a, dx);
            }
            Op::Gelu(a) => {
                let dx = elementwise(&grad, self.value(*a), |g, x| g * gelu_grad(x));
                self.accumulate(*a, dx);
            }
            Op::EmbeddingLookup { table, ids } => {
                let t = self.value(*table);
                let mut dt = Matrix::zeros(t.rows(), t.cols());
                for (r, &id) in ids.iter().enumerate() {
                    let src = grad.row(r).to_vec();
                    for (dv, sv) in dt.row_mut(id).iter_mut().zip(&src) {
                        *dv += sv;
                    }
                }
                self.accumulate(*table, dt);
            }
            Op::ConcatRows(a, b) => {
                let ar = self.value(*a).rows();
                let c = grad.cols();
                if self.needs(*a) {
                    let da = Matrix::from_vec(ar, c, grad.data()[..ar * c].to_vec());
                    self.accumulate(*a, da.expect("shape checked"));
                }
                if self.needs(*b) {
                    let br = grad.rows() - ar;
                    let db = Matrix::from_vec(br, c, grad.data()[ar * c..].to_vec());
                    self.accumulate(*b, db.expect("shape checked"));
                }
            }
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let pc = self.value(p).cols();
                    if self.needs(p) {
                        let m = grad.rows();
                        let mut dp = Matrix::zeros(m, pc);
                        for r in 0..m {
                            dp.row_mut(r).copy_from_slice(&grad.row(r)[offset..offset + pc]);
                        }
                        self.accumulate(p, dp);
                    }
                    offset += pc;
                }
            }
            Op::SliceRows { x, start, len } => {
                let xv = self.value(*x);
                let mut dx = Matrix::zeros(xv.rows(), xv.cols());
                for r in 0..*len {
                    dx.row_mut(start + r).copy_from_slice(grad.row(r));
                }
                self.accumulate(*x, dx);
            }
            Op::SliceCols { x, start, len } => {
                let xv = self.value(*x);
                let mut dx = Matrix::zeros(xv.rows(), xv.cols());
                for r in 0..grad.rows() {
                    dx.row_mut(r)[*start..start + len].copy_from_slice(grad.row(r));
                }
                self.accumulate(*x, dx);
            }
            Op::SumAll(a) => {
                let g = grad.get(0, 0);
                let av = self.value(*a);
                let da = Matrix::from_vec(av.rows(), av.cols(), vec![g; av.len()])
                    .expect("shape checked");
                self.accumulate(*a, da);
            }
            Op::Sqrt(a) => {
                let y = self.value_of(i);
                let dx = elementwise(&grad, y, |g, s| g * 0.5 / s);
                self.accumulate(*a, dx);
            }
            Op::Exp(a) => {
                let y = self.value_of(i);
                let dx = elementwise(&grad, y, |g, e| g * e);
                self.accumulate(*a, dx);
            }
            Op::Ln(a) => {
                let dx = elementwise(&grad, self.value(*a), |g, x| g / x);
                self.accumulate(*a, dx);
            }
            Op::ScaleRows(x, factors) => {
                let mut dx = grad.clone();
                for (r, &f) in factors.iter().enumerate() {
                    for v in dx.row_mut(r) {
                        *v *= f;
                    }
                }
                self.accumulate(*x, dx);
            }
        }
        self.nodes[i].op = op;
    }

    fn value_of(&self, i: usize) -> &Matrix {
        &self.nodes[i].value
    }
}

fn elementwise(a: &Matrix, b: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
    debug_assert_eq!(a.shape(), b.shape());
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    Matrix::from_vec(a.rows(), a.cols(), data).expect("shape checked")
}

pub fn softmax_rows(x: &Matrix) -> Matrix {
    let (m, n) = x.shape();
    let mut out = Matrix::zeros(m, n);
    for r in 0..m {
        let row = x.row(r);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for c in 0..n {
            let e = (row[c] - max).exp();
            out.set(r, c, e);
            sum += e;
        }
        for c in 0..n {
            out.set(r, c, out.get(r, c) / sum);
        }
    }
    out
}

pub fn log_softmax_rows(x: &Matrix) -> Matrix {
    let (m, n) = x.shape();
    let mut out = Matrix::zeros(m, n);
    for r in 0..m {
        let row = x.row(r);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let logsum = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
        for c in 0..n {
            out.set(r, c, row[c] - logsum);
        }
    }
    out
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044715;

/// Smooth tanh-approximated GELU; the kink-free form keeps finite-difference
/// gradient checks stable.
pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_A * x * x * x)).tanh())
}

fn gelu_grad(x: f64) -> f64 {
    let u = GELU_C * (x + GELU_A * x * x * x);
    let t = u.tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
}

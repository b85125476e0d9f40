//! Reverse-mode differentiation over a dynamically recorded graph.
//!
//! Nodes are appended in evaluation order, so the node vector is already a
//! topological order and [`Graph::backward`] is a single reverse sweep.
//! Leaves are either constants or parameters; only nodes reachable from a
//! parameter carry gradients.

use super::ops::{bilinear_resize, bilinear_resize_adjoint, softmax_in_place};
use super::tensor::dot;
use super::Tensor2D;
use crate::error::{Error, Result};

/// Handle to a node of one [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

const LAYER_NORM_EPS: f64 = 1e-5;
const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Div(NodeId, NodeId),
    AddRow(NodeId, NodeId),
    MulRow(NodeId, NodeId),
    Scale(NodeId, f64),
    Offset(NodeId),
    MatMul(NodeId, NodeId),
    MatMulBt(NodeId, NodeId),
    Softmax(NodeId),
    LayerNorm(NodeId),
    Gelu(NodeId),
    Log(NodeId),
    Exp(NodeId),
    Powf(NodeId, f64),
    Clamp(NodeId, f64, f64),
    Sum(NodeId),
    Mean(NodeId),
    SliceCols(NodeId, usize),
    ConcatCols(Vec<NodeId>),
    GatherRows(NodeId, Vec<usize>),
    Reshape(NodeId),
    Resize(NodeId),
    MeanOf(Vec<NodeId>),
    MaxOf(Vec<NodeId>),
    CrossEntropy(NodeId, usize),
}

#[derive(Clone, Debug)]
struct Node {
    value: Tensor2D,
    grad: Option<Tensor2D>,
    op: Op,
    requires_grad: bool,
    is_param: bool,
}

/// A single-threaded computation graph.
#[derive(Clone, Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn constant(&mut self, value: Tensor2D) -> NodeId {
        self.push_leaf(value, false)
    }

    /// A trainable leaf; [`Graph::backward`] accumulates into its gradient.
    pub fn param(&mut self, value: Tensor2D) -> NodeId {
        self.push_leaf(value, true)
    }

    pub fn value(&self, id: NodeId) -> &Tensor2D {
        &self.nodes[id.0].value
    }

    /// Scalar value of a 1×1 node.
    pub fn scalar(&self, id: NodeId) -> f64 {
        let v = self.value(id);
        debug_assert_eq!(v.shape(), (1, 1));
        v.data()[0]
    }

    /// Accumulated gradient of a parameter, if backward has reached it.
    pub fn grad(&self, id: NodeId) -> Option<&Tensor2D> {
        self.nodes[id.0].grad.as_ref()
    }

    pub fn zero_grad(&mut self) {
        for n in &mut self.nodes {
            n.grad = None;
        }
    }

    fn push_leaf(&mut self, value: Tensor2D, is_param: bool) -> NodeId {
        self.nodes.push(Node {
            value,
            grad: None,
            op: Op::Leaf,
            requires_grad: is_param,
            is_param,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn push(&mut self, value: Tensor2D, op: Op) -> NodeId {
        let requires_grad = parents(&op).iter().any(|p| self.nodes[p.0].requires_grad);
        self.nodes.push(Node {
            value,
            grad: None,
            op,
            requires_grad,
            is_param: false,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn same_shape(&self, a: NodeId, b: NodeId, what: &str) {
        assert_eq!(
            self.value(a).shape(),
            self.value(b).shape(),
            "{what}: operand shapes differ"
        );
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.same_shape(a, b, "add");
        let v = self.value(a).zip_map(self.value(b), |x, y| x + y);
        self.push(v, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.same_shape(a, b, "sub");
        let v = self.value(a).zip_map(self.value(b), |x, y| x - y);
        self.push(v, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.same_shape(a, b, "mul");
        let v = self.value(a).zip_map(self.value(b), |x, y| x * y);
        self.push(v, Op::Mul(a, b))
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.same_shape(a, b, "div");
        let v = self.value(a).zip_map(self.value(b), |x, y| x / y);
        self.push(v, Op::Div(a, b))
    }

    /// `x + b` with a 1×n row `b` broadcast over the rows of `x`.
    pub fn add_row(&mut self, x: NodeId, b: NodeId) -> NodeId {
        let v = broadcast_row(self.value(x), self.value(b), |a, b| a + b);
        self.push(v, Op::AddRow(x, b))
    }

    /// `x ⊙ g` with a 1×n row `g` broadcast over the rows of `x`.
    pub fn mul_row(&mut self, x: NodeId, g: NodeId) -> NodeId {
        let v = broadcast_row(self.value(x), self.value(g), |a, b| a * b);
        self.push(v, Op::MulRow(x, g))
    }

    pub fn scale(&mut self, a: NodeId, factor: f64) -> NodeId {
        let v = self.value(a).map(|x| x * factor);
        self.push(v, Op::Scale(a, factor))
    }

    pub fn offset(&mut self, a: NodeId, shift: f64) -> NodeId {
        let v = self.value(a).map(|x| x + shift);
        self.push(v, Op::Offset(a))
    }

    /// `c - a`, element-wise.
    pub fn rsub(&mut self, c: f64, a: NodeId) -> NodeId {
        let neg = self.scale(a, -1.0);
        self.offset(neg, c)
    }

    /// Constant copy of `a`'s current value; no gradient flows through it.
    pub fn detach(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).clone();
        self.constant(v)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a).matmul(self.value(b));
        self.push(v, Op::MatMul(a, b))
    }

    /// `a · bᵀ`.
    pub fn matmul_bt(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a).matmul_bt(self.value(b));
        self.push(v, Op::MatMulBt(a, b))
    }

    /// Row-wise softmax.
    pub fn softmax(&mut self, a: NodeId) -> NodeId {
        let mut v = self.value(a).clone();
        for r in 0..v.rows() {
            softmax_in_place(v.row_mut(r));
        }
        self.push(v, Op::Softmax(a))
    }

    /// Row-wise softmax where row `i` only sees columns `0..=i`.
    pub fn causal_softmax(&mut self, a: NodeId) -> NodeId {
        let mut v = self.value(a).clone();
        let cols = v.cols();
        for r in 0..v.rows() {
            let row = v.row_mut(r);
            let visible = (r + 1).min(cols);
            softmax_in_place(&mut row[..visible]);
            row[visible..].fill(0.0);
        }
        // Masked entries have zero probability, so the plain softmax
        // backward formula is exact for them as well.
        self.push(v, Op::Softmax(a))
    }

    /// Row-wise standardization (no affine part; combine with `mul_row`/`add_row`).
    pub fn layer_norm(&mut self, a: NodeId) -> NodeId {
        let x = self.value(a);
        let mut v = x.clone();
        for r in 0..v.rows() {
            let (_, rstd) = row_stats(x.row(r));
            let mean = x.row(r).iter().sum::<f64>() / x.cols() as f64;
            for e in v.row_mut(r) {
                *e = (*e - mean) * rstd;
            }
        }
        self.push(v, Op::LayerNorm(a))
    }

    /// Tanh-approximated GELU.
    pub fn gelu(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).map(|x| 0.5 * x * (1.0 + (GELU_C * (x + 0.044715 * x * x * x)).tanh()));
        self.push(v, Op::Gelu(a))
    }

    pub fn log(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).map(f64::ln);
        self.push(v, Op::Log(a))
    }

    pub fn exp(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).map(f64::exp);
        self.push(v, Op::Exp(a))
    }

    pub fn powf(&mut self, a: NodeId, p: f64) -> NodeId {
        let v = self.value(a).map(|x| x.powf(p));
        self.push(v, Op::Powf(a, p))
    }

    /// Element-wise clamp; the gradient is zero outside `(lo, hi)`.
    pub fn clamp(&mut self, a: NodeId, lo: f64, hi: f64) -> NodeId {
        let v = self.value(a).map(|x| x.clamp(lo, hi));
        self.push(v, Op::Clamp(a, lo, hi))
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let v = Tensor2D::scalar(self.value(a).sum());
        self.push(v, Op::Sum(a))
    }

    pub fn mean(&mut self, a: NodeId) -> NodeId {
        let x = self.value(a);
        let v = Tensor2D::scalar(x.sum() / x.len() as f64);
        self.push(v, Op::Mean(a))
    }

    pub fn slice_cols(&mut self, a: NodeId, start: usize, width: usize) -> NodeId {
        let x = self.value(a);
        assert!(start + width <= x.cols(), "slice_cols out of range");
        let mut data = Vec::with_capacity(x.rows() * width);
        for r in 0..x.rows() {
            data.extend_from_slice(&x.row(r)[start..start + width]);
        }
        let v = Tensor2D::from_raw(x.rows(), width, data);
        self.push(v, Op::SliceCols(a, start))
    }

    pub fn concat_cols(&mut self, parts: &[NodeId]) -> NodeId {
        assert!(!parts.is_empty(), "concat_cols of nothing");
        let rows = self.value(parts[0]).rows();
        assert!(parts.iter().all(|p| self.value(*p).rows() == rows));
        let cols: usize = parts.iter().map(|p| self.value(*p).cols()).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for p in parts {
                data.extend_from_slice(self.value(*p).row(r));
            }
        }
        let v = Tensor2D::from_raw(rows, cols, data);
        self.push(v, Op::ConcatCols(parts.to_vec()))
    }

    /// Rows of `a` picked by index (repeats allowed), e.g. embedding lookup.
    pub fn gather_rows(&mut self, a: NodeId, idx: &[usize]) -> NodeId {
        let x = self.value(a);
        let mut data = Vec::with_capacity(idx.len() * x.cols());
        for &i in idx {
            data.extend_from_slice(x.row(i));
        }
        let v = Tensor2D::from_raw(idx.len(), x.cols(), data);
        self.push(v, Op::GatherRows(a, idx.to_vec()))
    }

    pub fn reshape(&mut self, a: NodeId, rows: usize, cols: usize) -> NodeId {
        let v = self
            .value(a)
            .reshape(rows, cols)
            .expect("reshape must preserve the element count");
        self.push(v, Op::Reshape(a))
    }

    /// Align-corners bilinear resize.
    pub fn resize(&mut self, a: NodeId, rows: usize, cols: usize) -> Result<NodeId> {
        let v = bilinear_resize(self.value(a), rows, cols)?;
        Ok(self.push(v, Op::Resize(a)))
    }

    /// Element-wise mean of equally shaped nodes.
    pub fn mean_of(&mut self, parts: &[NodeId]) -> NodeId {
        assert!(!parts.is_empty(), "mean_of nothing");
        // running mean: identical operands give back the operand bit for bit
        let mut acc = self.value(parts[0]).clone();
        for (i, p) in parts.iter().enumerate().skip(1) {
            self.same_shape(parts[0], *p, "mean_of");
            let k = (i + 1) as f64;
            acc = acc.zip_map(self.value(*p), |m, x| m + (x - m) / k);
        }
        self.push(acc, Op::MeanOf(parts.to_vec()))
    }

    /// Element-wise maximum; the gradient flows to the first maximal operand.
    pub fn max_of(&mut self, parts: &[NodeId]) -> NodeId {
        assert!(!parts.is_empty(), "max_of nothing");
        let mut acc = self.value(parts[0]).clone();
        for p in &parts[1..] {
            self.same_shape(parts[0], *p, "max_of");
            acc = acc.zip_map(self.value(*p), f64::max);
        }
        self.push(acc, Op::MaxOf(parts.to_vec()))
    }

    /// `-log softmax(logits)[target]` for a 1×V row of logits.
    pub fn cross_entropy(&mut self, logits: NodeId, target: usize) -> NodeId {
        let x = self.value(logits);
        assert_eq!(x.rows(), 1, "cross_entropy expects a single row");
        assert!(target < x.cols(), "cross_entropy target out of range");
        let row = x.row(0);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        let v = Tensor2D::scalar(lse - row[target]);
        self.push(v, Op::CrossEntropy(logits, target))
    }

    /// Accumulates `∂root/∂p` into every parameter `p` reachable from `root`.
    ///
    /// Calling it again without [`Graph::zero_grad`] adds a second copy of the
    /// gradients on top of the first.
    pub fn backward(&mut self, root: NodeId) -> Result<()> {
        let (rows, cols) = self.value(root).shape();
        if (rows, cols) != (1, 1) {
            return Err(Error::NonScalarRoot { rows, cols });
        }
        let mut grads: Vec<Option<Tensor2D>> = vec![None; root.0 + 1];
        grads[root.0] = Some(Tensor2D::scalar(1.0));

        for i in (0..=root.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            if !self.nodes[i].requires_grad {
                continue;
            }
            if self.nodes[i].is_param {
                match &mut self.nodes[i].grad {
                    Some(acc) => acc.add_assign(&g),
                    slot @ None => *slot = Some(g),
                }
                continue;
            }
            self.propagate(i, &g, &mut grads);
        }
        Ok(())
    }

    fn propagate(&self, i: usize, g: &Tensor2D, grads: &mut [Option<Tensor2D>]) {
        let node = &self.nodes[i];
        let mut send = |id: NodeId, delta: Tensor2D| {
            if !self.nodes[id.0].requires_grad {
                return;
            }
            match &mut grads[id.0] {
                Some(acc) => acc.add_assign(&delta),
                slot @ None => *slot = Some(delta),
            }
        };
        let wants = |id: NodeId| self.nodes[id.0].requires_grad;
        let val = |id: NodeId| &self.nodes[id.0].value;

        match &node.op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                send(*a, g.clone());
                send(*b, g.clone());
            }
            Op::Sub(a, b) => {
                send(*a, g.clone());
                send(*b, g.map(|x| -x));
            }
            Op::Mul(a, b) => {
                if wants(*a) {
                    send(*a, g.zip_map(val(*b), |g, y| g * y));
                }
                if wants(*b) {
                    send(*b, g.zip_map(val(*a), |g, x| g * x));
                }
            }
            Op::Div(a, b) => {
                if wants(*a) {
                    send(*a, g.zip_map(val(*b), |g, y| g / y));
                }
                if wants(*b) {
                    let q = &node.value;
                    let gb = Tensor2D::from_raw(
                        g.rows(),
                        g.cols(),
                        g.data()
                            .iter()
                            .zip(q.data())
                            .zip(val(*b).data())
                            .map(|((g, q), y)| -g * q / y)
                            .collect(),
                    );
                    send(*b, gb);
                }
            }
            Op::AddRow(x, b) => {
                send(*x, g.clone());
                if wants(*b) {
                    send(*b, column_sums(g));
                }
            }
            Op::MulRow(x, gain) => {
                if wants(*x) {
                    send(*x, broadcast_row(g, val(*gain), |a, b| a * b));
                }
                if wants(*gain) {
                    let prod = g.zip_map(val(*x), |a, b| a * b);
                    send(*gain, column_sums(&prod));
                }
            }
            Op::Scale(a, f) => send(*a, g.map(|x| x * f)),
            Op::Offset(a) => send(*a, g.clone()),
            Op::MatMul(a, b) => {
                if wants(*a) {
                    send(*a, g.matmul_bt(val(*b)));
                }
                if wants(*b) {
                    send(*b, val(*a).matmul_at(g));
                }
            }
            Op::MatMulBt(a, b) => {
                // C = A Bᵀ: dA = G B, dB = Gᵀ A
                if wants(*a) {
                    send(*a, g.matmul(val(*b)));
                }
                if wants(*b) {
                    send(*b, g.matmul_at(val(*a)));
                }
            }
            Op::Softmax(a) => {
                let p = &node.value;
                let mut out = Tensor2D::zeros(p.rows(), p.cols());
                for r in 0..p.rows() {
                    let (pr, gr) = (p.row(r), g.row(r));
                    let inner = dot(pr, gr);
                    for ((o, &pj), &gj) in out.row_mut(r).iter_mut().zip(pr).zip(gr) {
                        *o = pj * (gj - inner);
                    }
                }
                send(*a, out);
            }
            Op::LayerNorm(a) => {
                let x = val(*a);
                let y = &node.value;
                let n = x.cols() as f64;
                let mut out = Tensor2D::zeros(x.rows(), x.cols());
                for r in 0..x.rows() {
                    let (_, rstd) = row_stats(x.row(r));
                    let (yr, gr) = (y.row(r), g.row(r));
                    let mean_g = gr.iter().sum::<f64>() / n;
                    let mean_gy = dot(gr, yr) / n;
                    for ((o, &gj), &yj) in out.row_mut(r).iter_mut().zip(gr).zip(yr) {
                        *o = rstd * (gj - mean_g - yj * mean_gy);
                    }
                }
                send(*a, out);
            }
            Op::Gelu(a) => {
                let d = val(*a).map(|x| {
                    let inner = GELU_C * (x + 0.044715 * x * x * x);
                    let t = inner.tanh();
                    0.5 * (1.0 + t)
                        + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * 0.044715 * x * x)
                });
                send(*a, g.zip_map(&d, |g, d| g * d));
            }
            Op::Log(a) => send(*a, g.zip_map(val(*a), |g, x| g / x)),
            Op::Exp(a) => send(*a, g.zip_map(&node.value, |g, y| g * y)),
            Op::Powf(a, p) => {
                let p = *p;
                let d = val(*a).map(|x| if p == 0.0 { 0.0 } else { p * x.powf(p - 1.0) });
                send(*a, g.zip_map(&d, |g, d| g * d));
            }
            Op::Clamp(a, lo, hi) => {
                let (lo, hi) = (*lo, *hi);
                let pass = val(*a).map(|x| if x > lo && x < hi { 1.0 } else { 0.0 });
                send(*a, g.zip_map(&pass, |g, m| g * m));
            }
            Op::Sum(a) => {
                let (r, c) = val(*a).shape();
                send(*a, Tensor2D::filled(r, c, g.data()[0]));
            }
            Op::Mean(a) => {
                let (r, c) = val(*a).shape();
                send(*a, Tensor2D::filled(r, c, g.data()[0] / (r * c) as f64));
            }
            Op::SliceCols(a, start) => {
                let (r, c) = val(*a).shape();
                let mut out = Tensor2D::zeros(r, c);
                let w = g.cols();
                for row in 0..r {
                    out.row_mut(row)[*start..*start + w].copy_from_slice(g.row(row));
                }
                send(*a, out);
            }
            Op::ConcatCols(parts) => {
                let mut start = 0;
                for p in parts {
                    let w = val(*p).cols();
                    if wants(*p) {
                        let mut data = Vec::with_capacity(g.rows() * w);
                        for row in 0..g.rows() {
                            data.extend_from_slice(&g.row(row)[start..start + w]);
                        }
                        send(*p, Tensor2D::from_raw(g.rows(), w, data));
                    }
                    start += w;
                }
            }
            Op::GatherRows(a, idx) => {
                let (r, c) = val(*a).shape();
                let mut out = Tensor2D::zeros(r, c);
                for (k, &src) in idx.iter().enumerate() {
                    for (o, &gv) in out.row_mut(src).iter_mut().zip(g.row(k)) {
                        *o += gv;
                    }
                }
                send(*a, out);
            }
            Op::Reshape(a) => {
                let (r, c) = val(*a).shape();
                send(*a, Tensor2D::from_raw(r, c, g.data().to_vec()));
            }
            Op::Resize(a) => {
                let (r, c) = val(*a).shape();
                send(*a, bilinear_resize_adjoint(g, r, c));
            }
            Op::MeanOf(parts) => {
                let share = g.map(|x| x / parts.len() as f64);
                for p in parts {
                    send(*p, share.clone());
                }
            }
            Op::MaxOf(parts) => {
                let out = &node.value;
                let mut taken = vec![false; out.len()];
                for p in parts {
                    if !wants(*p) {
                        // ties resolve to the first operand even if it is constant
                        for (k, (&x, &m)) in val(*p).data().iter().zip(out.data()).enumerate() {
                            if x == m {
                                taken[k] = true;
                            }
                        }
                        continue;
                    }
                    let mut d = vec![0.0; out.len()];
                    for (k, (&x, &m)) in val(*p).data().iter().zip(out.data()).enumerate() {
                        if !taken[k] && x == m {
                            taken[k] = true;
                            d[k] = g.data()[k];
                        }
                    }
                    send(*p, Tensor2D::from_raw(out.rows(), out.cols(), d));
                }
            }
            Op::CrossEntropy(logits, target) => {
                let mut p = val(*logits).row(0).to_vec();
                softmax_in_place(&mut p);
                p[*target] -= 1.0;
                let scale = g.data()[0];
                send(*logits, Tensor2D::row_vector(p.into_iter().map(|v| v * scale).collect()));
            }
        }
    }
}

fn parents(op: &Op) -> Vec<NodeId> {
    match op {
        Op::Leaf => vec![],
        Op::Add(a, b)
        | Op::Sub(a, b)
        | Op::Mul(a, b)
        | Op::Div(a, b)
        | Op::AddRow(a, b)
        | Op::MulRow(a, b)
        | Op::MatMul(a, b)
        | Op::MatMulBt(a, b) => vec![*a, *b],
        Op::Scale(a, _)
        | Op::Offset(a)
        | Op::Softmax(a)
        | Op::LayerNorm(a)
        | Op::Gelu(a)
        | Op::Log(a)
        | Op::Exp(a)
        | Op::Powf(a, _)
        | Op::Clamp(a, _, _)
        | Op::Sum(a)
        | Op::Mean(a)
        | Op::SliceCols(a, _)
        | Op::GatherRows(a, _)
        | Op::Reshape(a)
        | Op::Resize(a)
        | Op::CrossEntropy(a, _) => vec![*a],
        Op::ConcatCols(ps) | Op::MeanOf(ps) | Op::MaxOf(ps) => ps.clone(),
    }
}

fn broadcast_row(x: &Tensor2D, row: &Tensor2D, f: impl Fn(f64, f64) -> f64) -> Tensor2D {
    assert_eq!(row.rows(), 1, "broadcast operand must be a single row");
    assert_eq!(row.cols(), x.cols(), "broadcast width mismatch");
    let mut out = x.clone();
    for r in 0..out.rows() {
        for (o, &b) in out.row_mut(r).iter_mut().zip(row.data()) {
            *o = f(*o, b);
        }
    }
    out
}

fn column_sums(x: &Tensor2D) -> Tensor2D {
    let mut out = vec![0.0; x.cols()];
    for r in 0..x.rows() {
        for (o, &v) in out.iter_mut().zip(x.row(r)) {
            *o += v;
        }
    }
    Tensor2D::row_vector(out)
}

fn row_stats(row: &[f64]) -> (f64, f64) {
    let n = row.len() as f64;
    let mean = row.iter().sum::<f64>() / n;
    let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (var, 1.0 / (var + LAYER_NORM_EPS).sqrt())
}

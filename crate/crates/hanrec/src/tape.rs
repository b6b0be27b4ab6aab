//! Tape-based reverse-mode differentiation over batched tensor ops.
//!
//! The forward pass appends one node per primitive op; `backward` replays the
//! record in exact reverse order and accumulates gradients for every
//! parameter leaf reachable from the loss. Ops are matrix-level (GEMM,
//! gathers, segment softmax/pooling) so a whole mini-batch of neighborhood
//! aggregations runs through a handful of GEMM calls.

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use rand::Rng;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(pub(crate) usize);

/// Identifier of a trainable parameter, assigned by `nn::ParamSet`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId(pub usize);

/// Train-time vs eval-time behaviour toggle for dropout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

enum Op<S> {
    Leaf { param: Option<ParamId> },
    Matmul { a: NodeId, b: NodeId },
    Add { a: NodeId, b: NodeId },
    Sub { a: NodeId, b: NodeId },
    Mul { a: NodeId, b: NodeId },
    Scale { a: NodeId, c: S },
    /// Broadcast-add a rank-1 bias to every row.
    AddRow { a: NodeId, bias: NodeId },
    /// Elementwise `x > 0 ? x : slope * x` with a learnable scalar slope.
    Prelu { x: NodeId, slope: NodeId },
    Sigmoid { x: NodeId },
    /// Concatenation along the last axis (vectors, or matrix columns).
    Concat { parts: Vec<NodeId> },
    /// Stack matrices vertically (shared column count).
    ConcatRows { parts: Vec<NodeId> },
    GatherRows { src: NodeId, idx: Vec<usize> },
    /// Mean of the rows inside each CSR-style segment; empty segment → zero row.
    SegmentMean { src: NodeId, offsets: Vec<usize> },
    /// Softmax over each segment of a rank-1 logit vector (max-subtracted).
    SegmentSoftmax { logits: NodeId, offsets: Vec<usize> },
    /// out[s] = Σ_{i in seg s} weights[i] · rows[i].
    WeightedSumRows {
        weights: NodeId,
        rows: NodeId,
        offsets: Vec<usize>,
    },
    /// Inverted dropout; mask entries are 0 or 1/(1-rate).
    Dropout { x: NodeId, mask: Vec<S> },
    Sum { x: NodeId },
    Reshape { x: NodeId },
}

struct Node<S> {
    value: Tensor<S>,
    op: Op<S>,
}

/// Gradients keyed by parameter id, produced by [`Tape::backward`].
/// Parameters never touched by the forward pass are simply absent; readers
/// treat absence as an exact zero.
#[derive(Debug, Default)]
pub struct Gradients<S> {
    by_param: std::collections::HashMap<ParamId, Tensor<S>>,
}

impl<S: Scalar> Gradients<S> {
    pub fn get(&self, pid: ParamId) -> Option<&Tensor<S>> {
        self.by_param.get(&pid)
    }

    /// Gradient for `pid`, materializing zeros for unreached parameters.
    pub fn get_or_zeros(&self, pid: ParamId, shape: &[usize]) -> Tensor<S> {
        match self.by_param.get(&pid) {
            Some(t) => t.clone(),
            None => Tensor::zeros(shape.to_vec()),
        }
    }
}

pub struct Tape<S> {
    nodes: Vec<Node<S>>,
}

impl<S: Scalar> Default for Tape<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> Tape<S> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor<S> {
        &self.nodes[id.0].value
    }

    fn push(&mut self, value: Tensor<S>, op: Op<S>) -> NodeId {
        self.nodes.push(Node { value, op });
        NodeId(self.nodes.len() - 1)
    }

    /// Record a constant input (no gradient tracked).
    pub fn leaf(&mut self, value: Tensor<S>) -> NodeId {
        self.push(value, Op::Leaf { param: None })
    }

    /// Record a parameter leaf; gradients flowing into it are accumulated
    /// under `pid` during [`Tape::backward`].
    pub fn param_leaf(&mut self, pid: ParamId, value: Tensor<S>) -> NodeId {
        self.push(value, Op::Leaf { param: Some(pid) })
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.rank() != 2 || bv.rank() != 2 {
            return Err(Error::shape(
                "matmul",
                format!("expected rank-2 operands, got {:?} and {:?}", av.shape(), bv.shape()),
            ));
        }
        if av.cols() != bv.rows() {
            return Err(Error::shape(
                "matmul",
                format!("inner extents differ: {:?} · {:?}", av.shape(), bv.shape()),
            ));
        }
        let out = linalg::matmul(av, bv);
        Ok(self.push(out, Op::Matmul { a, b }))
    }

    fn binary_same_shape(
        &mut self,
        op_name: &'static str,
        a: NodeId,
        b: NodeId,
        f: impl Fn(S, S) -> S,
        op: Op<S>,
    ) -> Result<NodeId> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape() != bv.shape() {
            return Err(Error::shape(
                op_name,
                format!("{:?} vs {:?}", av.shape(), bv.shape()),
            ));
        }
        let data = av
            .data()
            .iter()
            .zip(bv.data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        let out = Tensor::new(av.shape().to_vec(), data)?;
        Ok(self.push(out, op))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.binary_same_shape("add", a, b, |x, y| x + y, Op::Add { a, b })
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.binary_same_shape("sub", a, b, |x, y| x - y, Op::Sub { a, b })
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.binary_same_shape("mul", a, b, |x, y| x * y, Op::Mul { a, b })
    }

    pub fn scale(&mut self, a: NodeId, c: S) -> NodeId {
        let out = self.value(a).map(|v| v * c);
        self.push(out, Op::Scale { a, c })
    }

    pub fn add_row(&mut self, a: NodeId, bias: NodeId) -> Result<NodeId> {
        let (av, bv) = (self.value(a), self.value(bias));
        if bv.rank() != 1 || av.cols() != bv.cols() {
            return Err(Error::shape(
                "add_row",
                format!("{:?} + row {:?}", av.shape(), bv.shape()),
            ));
        }
        let cols = av.cols();
        let mut data = av.data().to_vec();
        for (i, v) in data.iter_mut().enumerate() {
            *v += bv.data()[i % cols];
        }
        let out = Tensor::new(av.shape().to_vec(), data)?;
        Ok(self.push(out, Op::AddRow { a, bias }))
    }

    pub fn prelu(&mut self, x: NodeId, slope: NodeId) -> Result<NodeId> {
        if !self.value(slope).is_scalar() {
            return Err(Error::contract("prelu", "slope must be scalar"));
        }
        let s = self.value(slope).data()[0];
        let out = self.value(x).map(|v| if v > S::zero() { v } else { s * v });
        Ok(self.push(out, Op::Prelu { x, slope }))
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        let out = self
            .value(x)
            .map(|v| S::one() / (S::one() + (-v).exp()));
        self.push(out, Op::Sigmoid { x })
    }

    /// Concatenate rank-1 vectors in order. Errs on an empty list; empty
    /// vectors are valid operands.
    pub fn concat(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        if parts.is_empty() {
            return Err(Error::contract("concat", "empty operand list"));
        }
        let mut data = Vec::new();
        for &p in parts {
            let v = self.value(p);
            if v.rank() != 1 {
                return Err(Error::shape("concat", format!("rank-1 expected, got {:?}", v.shape())));
            }
            data.extend_from_slice(v.data());
        }
        let out = Tensor::vector(data);
        Ok(self.push(out, Op::Concat { parts: parts.to_vec() }))
    }

    /// Concatenate matrices horizontally (same row count).
    pub fn concat_cols(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        if parts.is_empty() {
            return Err(Error::contract("concat_cols", "empty operand list"));
        }
        let rows = self.value(parts[0]).rows();
        let mut total_cols = 0;
        for &p in parts {
            let v = self.value(p);
            if v.rank() != 2 || v.rows() != rows {
                return Err(Error::shape(
                    "concat_cols",
                    format!("expected {} rows, got {:?}", rows, v.shape()),
                ));
            }
            total_cols += v.cols();
        }
        let mut data = Vec::with_capacity(rows * total_cols);
        for r in 0..rows {
            for &p in parts {
                data.extend_from_slice(self.value(p).row(r));
            }
        }
        let out = Tensor::matrix(rows, total_cols, data)?;
        Ok(self.push(out, Op::Concat { parts: parts.to_vec() }))
    }

    /// Stack matrices vertically (same column count).
    pub fn concat_rows(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        if parts.is_empty() {
            return Err(Error::contract("concat_rows", "empty operand list"));
        }
        let cols = self.value(parts[0]).cols();
        let mut rows = 0;
        let mut data = Vec::new();
        for &p in parts {
            let v = self.value(p);
            if v.rank() != 2 || v.cols() != cols {
                return Err(Error::shape(
                    "concat_rows",
                    format!("expected {} cols, got {:?}", cols, v.shape()),
                ));
            }
            rows += v.rows();
            data.extend_from_slice(v.data());
        }
        let out = Tensor::matrix(rows, cols, data)?;
        Ok(self.push(out, Op::ConcatRows { parts: parts.to_vec() }))
    }

    pub fn gather_rows(&mut self, src: NodeId, idx: Vec<usize>) -> Result<NodeId> {
        let sv = self.value(src);
        if sv.rank() != 2 {
            return Err(Error::shape("gather_rows", "rank-2 source required"));
        }
        let (n, c) = (sv.rows(), sv.cols());
        let mut data = Vec::with_capacity(idx.len() * c);
        for &i in &idx {
            if i >= n {
                return Err(Error::contract("gather_rows", format!("row {} out of {}", i, n)));
            }
            data.extend_from_slice(sv.row(i));
        }
        let out = Tensor::matrix(idx.len(), c, data)?;
        Ok(self.push(out, Op::GatherRows { src, idx }))
    }

    fn check_offsets(n_rows: usize, offsets: &[usize]) -> Result<()> {
        if offsets.len() < 2 || offsets[0] != 0 || *offsets.last().unwrap() != n_rows {
            return Err(Error::contract(
                "segments",
                format!("offsets must run 0..={} in CSR form", n_rows),
            ));
        }
        if offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::contract("segments", "offsets must be nondecreasing"));
        }
        Ok(())
    }

    pub fn segment_mean(&mut self, src: NodeId, offsets: Vec<usize>) -> Result<NodeId> {
        let sv = self.value(src);
        Self::check_offsets(sv.rows(), &offsets)?;
        let c = sv.cols();
        let segs = offsets.len() - 1;
        let mut out = Tensor::zeros(vec![segs, c]);
        for s in 0..segs {
            let (lo, hi) = (offsets[s], offsets[s + 1]);
            if lo == hi {
                continue;
            }
            let inv = S::one() / S::from_usize(hi - lo).unwrap();
            for r in lo..hi {
                let row = sv.row(r);
                let orow = out.row_mut(s);
                for (o, &v) in orow.iter_mut().zip(row) {
                    *o += v;
                }
            }
            for o in out.row_mut(s) {
                *o *= inv;
            }
        }
        Ok(self.push(out, Op::SegmentMean { src, offsets }))
    }

    /// Max-subtracted softmax over each segment of a rank-1 logit vector.
    pub fn segment_softmax(&mut self, logits: NodeId, offsets: Vec<usize>) -> Result<NodeId> {
        let lv = self.value(logits);
        if lv.rank() != 1 {
            return Err(Error::shape("softmax", "rank-1 logits required"));
        }
        Self::check_offsets(lv.numel(), &offsets)?;
        let mut data = lv.data().to_vec();
        for s in 0..offsets.len() - 1 {
            let (lo, hi) = (offsets[s], offsets[s + 1]);
            if lo == hi {
                continue;
            }
            let seg = &mut data[lo..hi];
            let max = seg.iter().cloned().fold(seg[0], S::max);
            let mut sum = S::zero();
            for v in seg.iter_mut() {
                *v = (*v - max).exp();
                sum += *v;
            }
            for v in seg.iter_mut() {
                *v /= sum;
            }
        }
        let out = Tensor::vector(data);
        Ok(self.push(out, Op::SegmentSoftmax { logits, offsets }))
    }

    /// Whole-vector softmax. Errs on empty input.
    pub fn softmax(&mut self, logits: NodeId) -> Result<NodeId> {
        let n = self.value(logits).numel();
        if n == 0 {
            return Err(Error::contract("softmax", "empty input"));
        }
        self.segment_softmax(logits, vec![0, n])
    }

    pub fn weighted_sum_rows(
        &mut self,
        weights: NodeId,
        rows: NodeId,
        offsets: Vec<usize>,
    ) -> Result<NodeId> {
        let wv = self.value(weights);
        let rv = self.value(rows);
        if wv.rank() != 1 || wv.numel() != rv.rows() {
            return Err(Error::shape(
                "weighted_sum_rows",
                format!("weights {:?} vs rows {:?}", wv.shape(), rv.shape()),
            ));
        }
        Self::check_offsets(rv.rows(), &offsets)?;
        let c = rv.cols();
        let segs = offsets.len() - 1;
        let mut out = Tensor::zeros(vec![segs, c]);
        for s in 0..segs {
            for r in offsets[s]..offsets[s + 1] {
                let w = wv.data()[r];
                let row = rv.row(r);
                let orow = out.row_mut(s);
                for (o, &v) in orow.iter_mut().zip(row) {
                    *o += w * v;
                }
            }
        }
        Ok(self.push(
            out,
            Op::WeightedSumRows {
                weights,
                rows,
                offsets,
            },
        ))
    }

    /// Inverted dropout: kept entries are scaled by 1/(1-rate) in train mode,
    /// eval mode is the identity (the same node is returned untouched).
    pub fn dropout(
        &mut self,
        x: NodeId,
        rate: f64,
        mode: Mode,
        rng: &mut impl Rng,
    ) -> Result<NodeId> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::contract(
                "dropout",
                format!("rate {} outside [0, 1)", rate),
            ));
        }
        if mode == Mode::Eval || rate == 0.0 {
            return Ok(x);
        }
        let keep_inv = S::from_f64_val(1.0 / (1.0 - rate));
        let xv = self.value(x);
        let mask: Vec<S> = (0..xv.numel())
            .map(|_| {
                if rng.gen::<f64>() < rate {
                    S::zero()
                } else {
                    keep_inv
                }
            })
            .collect();
        let data = xv
            .data()
            .iter()
            .zip(&mask)
            .map(|(&v, &m)| v * m)
            .collect();
        let out = Tensor::new(xv.shape().to_vec(), data)?;
        Ok(self.push(out, Op::Dropout { x, mask }))
    }

    pub fn sum(&mut self, x: NodeId) -> NodeId {
        let total = self
            .value(x)
            .data()
            .iter()
            .fold(S::zero(), |acc, &v| acc + v);
        self.push(Tensor::scalar(total), Op::Sum { x })
    }

    pub fn reshape(&mut self, x: NodeId, shape: Vec<usize>) -> Result<NodeId> {
        let xv = self.value(x);
        if shape.iter().product::<usize>() != xv.numel() {
            return Err(Error::shape(
                "reshape",
                format!("{:?} -> {:?}", xv.shape(), shape),
            ));
        }
        let out = Tensor::new(shape, xv.data().to_vec())?;
        Ok(self.push(out, Op::Reshape { x }))
    }

    /// Reverse sweep from a scalar loss. Pure: repeated calls yield
    /// identical gradients without re-running the forward pass.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients<S>> {
        if !self.value(loss).is_scalar() {
            return Err(Error::contract(
                "backward",
                format!("loss must be scalar, got shape {:?}", self.value(loss).shape()),
            ));
        }
        let mut grads: Vec<Option<Tensor<S>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(S::one()));
        let mut out = Gradients::default();

        for i in (0..self.nodes.len()).rev() {
            let g = match grads[i].take() {
                Some(g) => g,
                None => continue,
            };
            match &self.nodes[i].op {
                Op::Leaf { param } => {
                    if let Some(pid) = param {
                        match out.by_param.get_mut(pid) {
                            Some(acc) => {
                                for (a, b) in acc.data_mut().iter_mut().zip(g.data()) {
                                    *a += *b;
                                }
                            }
                            None => {
                                out.by_param.insert(*pid, g);
                            }
                        }
                    }
                }
                Op::Matmul { a, b } => {
                    let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    {
                        let ga = self.grad_slot(&mut grads, *a);
                        linalg::add_matmul_nt(ga, &g, bv);
                    }
                    let gb = self.grad_slot(&mut grads, *b);
                    linalg::add_matmul_tn(gb, av, &g);
                }
                Op::Add { a, b } => {
                    self.accumulate(&mut grads, *a, g.data(), S::one());
                    self.accumulate(&mut grads, *b, g.data(), S::one());
                }
                Op::Sub { a, b } => {
                    self.accumulate(&mut grads, *a, g.data(), S::one());
                    self.accumulate(&mut grads, *b, g.data(), -S::one());
                }
                Op::Mul { a, b } => {
                    let bv: Vec<S> = self.nodes[b.0]
                        .value
                        .data()
                        .iter()
                        .zip(g.data())
                        .map(|(&x, &dy)| x * dy)
                        .collect();
                    let av: Vec<S> = self.nodes[a.0]
                        .value
                        .data()
                        .iter()
                        .zip(g.data())
                        .map(|(&x, &dy)| x * dy)
                        .collect();
                    self.accumulate(&mut grads, *a, &bv, S::one());
                    self.accumulate(&mut grads, *b, &av, S::one());
                }
                Op::Scale { a, c } => {
                    self.accumulate(&mut grads, *a, g.data(), *c);
                }
                Op::AddRow { a, bias } => {
                    self.accumulate(&mut grads, *a, g.data(), S::one());
                    let cols = self.nodes[bias.0].value.numel();
                    let mut col_sum = vec![S::zero(); cols];
                    for (i, &v) in g.data().iter().enumerate() {
                        col_sum[i % cols] += v;
                    }
                    self.accumulate(&mut grads, *bias, &col_sum, S::one());
                }
                Op::Prelu { x, slope } => {
                    let s = self.nodes[slope.0].value.data()[0];
                    let xv = &self.nodes[x.0].value;
                    let mut dx = vec![S::zero(); xv.numel()];
                    let mut ds = S::zero();
                    for ((&v, &dy), d) in xv.data().iter().zip(g.data()).zip(dx.iter_mut()) {
                        if v > S::zero() {
                            *d = dy;
                        } else {
                            *d = s * dy;
                            ds += v * dy;
                        }
                    }
                    self.accumulate(&mut grads, *x, &dx, S::one());
                    self.accumulate(&mut grads, *slope, &[ds], S::one());
                }
                Op::Sigmoid { x } => {
                    let yv = &self.nodes[i].value;
                    let dx: Vec<S> = yv
                        .data()
                        .iter()
                        .zip(g.data())
                        .map(|(&y, &dy)| dy * y * (S::one() - y))
                        .collect();
                    self.accumulate(&mut grads, *x, &dx, S::one());
                }
                Op::Concat { parts } => {
                    // Rank-1 concat and column concat share the routing: for
                    // column concat the slices interleave per output row.
                    let first = &self.nodes[parts[0].0].value;
                    if first.rank() == 1 {
                        let mut off = 0;
                        for &p in parts {
                            let len = self.nodes[p.0].value.numel();
                            let slice = g.data()[off..off + len].to_vec();
                            self.accumulate(&mut grads, p, &slice, S::one());
                            off += len;
                        }
                    } else {
                        let rows = first.rows();
                        let total_cols = g.data().len() / rows;
                        let mut col_off = 0;
                        for &p in parts {
                            let pc = self.nodes[p.0].value.cols();
                            let mut dp = Vec::with_capacity(rows * pc);
                            for r in 0..rows {
                                let base = r * total_cols + col_off;
                                dp.extend_from_slice(&g.data()[base..base + pc]);
                            }
                            self.accumulate(&mut grads, p, &dp, S::one());
                            col_off += pc;
                        }
                    }
                }
                Op::ConcatRows { parts } => {
                    let mut off = 0;
                    for &p in parts {
                        let len = self.nodes[p.0].value.numel();
                        let slice = g.data()[off..off + len].to_vec();
                        self.accumulate(&mut grads, p, &slice, S::one());
                        off += len;
                    }
                }
                Op::GatherRows { src, idx } => {
                    let cols = self.nodes[src.0].value.cols();
                    let gsrc = self.grad_slot(&mut grads, *src);
                    for (out_r, &src_r) in idx.iter().enumerate() {
                        let grow = &g.data()[out_r * cols..(out_r + 1) * cols];
                        let srow = gsrc.row_mut(src_r);
                        for (s, &v) in srow.iter_mut().zip(grow) {
                            *s += v;
                        }
                    }
                }
                Op::SegmentMean { src, offsets } => {
                    let cols = self.nodes[src.0].value.cols();
                    let gsrc = self.grad_slot(&mut grads, *src);
                    for s in 0..offsets.len() - 1 {
                        let (lo, hi) = (offsets[s], offsets[s + 1]);
                        if lo == hi {
                            continue;
                        }
                        let inv = S::one() / S::from_usize(hi - lo).unwrap();
                        let grow = &g.data()[s * cols..(s + 1) * cols];
                        for r in lo..hi {
                            let srow = gsrc.row_mut(r);
                            for (sv, &v) in srow.iter_mut().zip(grow) {
                                *sv += v * inv;
                            }
                        }
                    }
                }
                Op::SegmentSoftmax { logits, offsets } => {
                    let yv = &self.nodes[i].value;
                    let mut dx = vec![S::zero(); yv.numel()];
                    for s in 0..offsets.len() - 1 {
                        let (lo, hi) = (offsets[s], offsets[s + 1]);
                        if lo == hi {
                            continue;
                        }
                        let mut dot = S::zero();
                        for r in lo..hi {
                            dot += yv.data()[r] * g.data()[r];
                        }
                        for r in lo..hi {
                            dx[r] = yv.data()[r] * (g.data()[r] - dot);
                        }
                    }
                    self.accumulate(&mut grads, *logits, &dx, S::one());
                }
                Op::WeightedSumRows {
                    weights,
                    rows,
                    offsets,
                } => {
                    let wv = &self.nodes[weights.0].value;
                    let rv = &self.nodes[rows.0].value;
                    let cols = rv.cols();
                    let mut dw = vec![S::zero(); wv.numel()];
                    let mut dr = vec![S::zero(); rv.numel()];
                    for s in 0..offsets.len() - 1 {
                        let grow = &g.data()[s * cols..(s + 1) * cols];
                        for r in offsets[s]..offsets[s + 1] {
                            let rrow = rv.row(r);
                            let mut dot = S::zero();
                            for (a, b) in grow.iter().zip(rrow) {
                                dot += *a * *b;
                            }
                            dw[r] = dot;
                            let w = wv.data()[r];
                            for (d, &gv) in dr[r * cols..(r + 1) * cols].iter_mut().zip(grow) {
                                *d += w * gv;
                            }
                        }
                    }
                    self.accumulate(&mut grads, *weights, &dw, S::one());
                    self.accumulate(&mut grads, *rows, &dr, S::one());
                }
                Op::Dropout { x, mask } => {
                    let dx: Vec<S> = g
                        .data()
                        .iter()
                        .zip(mask)
                        .map(|(&dy, &m)| dy * m)
                        .collect();
                    self.accumulate(&mut grads, *x, &dx, S::one());
                }
                Op::Sum { x } => {
                    let dy = g.data()[0];
                    let n = self.nodes[x.0].value.numel();
                    let dx = vec![dy; n];
                    self.accumulate(&mut grads, *x, &dx, S::one());
                }
                Op::Reshape { x } => {
                    self.accumulate(&mut grads, *x, g.data(), S::one());
                }
            }
        }
        Ok(out)
    }

    fn grad_slot<'g>(
        &self,
        grads: &'g mut [Option<Tensor<S>>],
        id: NodeId,
    ) -> &'g mut Tensor<S> {
        let shape = self.nodes[id.0].value.shape().to_vec();
        grads[id.0].get_or_insert_with(|| Tensor::zeros(shape))
    }

    fn accumulate(&self, grads: &mut [Option<Tensor<S>>], id: NodeId, delta: &[S], scale: S) {
        let slot = self.grad_slot(grads, id);
        for (a, &d) in slot.data_mut().iter_mut().zip(delta) {
            *a += d * scale;
        }
    }
}

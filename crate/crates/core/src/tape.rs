//! Reverse-mode automatic differentiation over a per-forward-pass tape.
//!
//! Every node is a flat f64 vector (a scalar is a length-1 vector); matrices
//! exist only inside the [`ParamStore`]. Operations compute eagerly and
//! record enough structure for [`Tape::backward`] to push gradients back to
//! parent nodes and, through leaf operations, into parameter gradient
//! buffers. Repeated backward calls accumulate into the store.

use alloc::vec;
use alloc::vec::Vec;

use crate::crf;
use crate::math;
use crate::rng::Rng;
use crate::tensor::{ParamId, ParamStore};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

enum Op {
    /// Constant vector; no gradient flows out.
    Constant,
    /// Whole parameter tensor, flattened.
    Param(ParamId),
    /// One row of a rank-2 parameter tensor.
    GatherRow { param: ParamId, row: usize },
    Concat { parts: Vec<(NodeId, usize)> },
    /// y = W·x + b with `w` (k × n) and `b` (k) parameters.
    Affine { w: ParamId, b: ParamId, x: NodeId },
    Sigmoid { x: NodeId },
    Tanh { x: NodeId },
    Add { a: NodeId, b: NodeId },
    /// Elementwise product.
    Mul { a: NodeId, b: NodeId },
    /// Elementwise product with a constant mask (dropout).
    MaskMul { x: NodeId, mask: Vec<f64> },
    Sum { x: NodeId },
    Dot { a: NodeId, b: NodeId },
    /// CRF negative log-likelihood over per-position emission nodes.
    CrfNll {
        emissions: Vec<NodeId>,
        trans: ParamId,
        gold: Vec<usize>,
    },
}

pub struct Tape {
    ops: Vec<Op>,
    values: Vec<Vec<f64>>,
    grads: Vec<Vec<f64>>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            ops: Vec::new(),
            values: Vec::new(),
            grads: Vec::new(),
        }
    }

    fn push(&mut self, op: Op, values: Vec<f64>) -> NodeId {
        self.grads.push(vec![0.0; values.len()]);
        self.values.push(values);
        self.ops.push(op);
        NodeId(self.ops.len() - 1)
    }

    pub fn len(&self, id: NodeId) -> usize {
        self.values[id.0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &[f64] {
        &self.values[id.0]
    }

    /// Value of a scalar (length-1) node.
    pub fn scalar(&self, id: NodeId) -> f64 {
        assert_eq!(self.len(id), 1, "scalar() on a non-scalar node");
        self.values[id.0][0]
    }

    pub fn constant(&mut self, values: Vec<f64>) -> NodeId {
        self.push(Op::Constant, values)
    }

    pub fn zeros(&mut self, len: usize) -> NodeId {
        self.constant(vec![0.0; len])
    }

    /// Leaf over a whole parameter tensor, flattened row-major.
    pub fn param(&mut self, store: &ParamStore, p: ParamId) -> NodeId {
        let values = store.get(p).values().to_vec();
        self.push(Op::Param(p), values)
    }

    /// Leaf over row `row` of a rank-2 parameter tensor (embedding lookup).
    pub fn gather_row(&mut self, store: &ParamStore, p: ParamId, row: usize) -> NodeId {
        let t = store.get(p);
        assert_eq!(t.shape().len(), 2, "gather_row needs a rank-2 parameter");
        assert!(row < t.shape()[0], "gather_row row out of range");
        let values = t.row(row).to_vec();
        self.push(Op::GatherRow { param: p, row }, values)
    }

    pub fn concat(&mut self, parts: &[NodeId]) -> NodeId {
        assert!(!parts.is_empty(), "concat of zero nodes");
        let mut values = Vec::new();
        let mut meta = Vec::with_capacity(parts.len());
        for &p in parts {
            let v = &self.values[p.0];
            meta.push((p, v.len()));
            values.extend_from_slice(v);
        }
        self.push(Op::Concat { parts: meta }, values)
    }

    /// y = W·x + b.
    pub fn affine(&mut self, store: &ParamStore, w: ParamId, b: ParamId, x: NodeId) -> NodeId {
        let wt = store.get(w);
        let bt = store.get(b);
        assert_eq!(wt.shape().len(), 2, "affine weight must be rank-2");
        let (k, n) = (wt.shape()[0], wt.shape()[1]);
        assert_eq!(bt.len(), k, "affine bias length must match weight rows");
        let xv = &self.values[x.0];
        assert_eq!(
            xv.len(),
            n,
            "affine input length {} does not match weight columns {}",
            xv.len(),
            n
        );
        let wv = wt.values();
        let bv = bt.values();
        let mut values = Vec::with_capacity(k);
        for r in 0..k {
            let row = &wv[r * n..(r + 1) * n];
            let mut acc = bv[r];
            for (wi, xi) in row.iter().zip(xv) {
                acc += wi * xi;
            }
            values.push(acc);
        }
        self.push(Op::Affine { w, b, x }, values)
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        let values = self.values[x.0].iter().map(|&v| math::sigmoid(v)).collect();
        self.push(Op::Sigmoid { x }, values)
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        let values = self.values[x.0].iter().map(|&v| math::tanh(v)).collect();
        self.push(Op::Tanh { x }, values)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        assert_eq!(self.len(a), self.len(b), "add length mismatch");
        let values = self.values[a.0]
            .iter()
            .zip(&self.values[b.0])
            .map(|(x, y)| x + y)
            .collect();
        self.push(Op::Add { a, b }, values)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        assert_eq!(self.len(a), self.len(b), "mul length mismatch");
        let values = self.values[a.0]
            .iter()
            .zip(&self.values[b.0])
            .map(|(x, y)| x * y)
            .collect();
        self.push(Op::Mul { a, b }, values)
    }

    /// Elementwise product with a fixed mask; the mask receives no gradient.
    pub fn mask_mul(&mut self, x: NodeId, mask: Vec<f64>) -> NodeId {
        assert_eq!(self.len(x), mask.len(), "mask length mismatch");
        let values = self.values[x.0]
            .iter()
            .zip(&mask)
            .map(|(v, m)| v * m)
            .collect();
        self.push(Op::MaskMul { x, mask }, values)
    }

    pub fn sum(&mut self, x: NodeId) -> NodeId {
        let s = self.values[x.0].iter().sum();
        self.push(Op::Sum { x }, vec![s])
    }

    pub fn dot(&mut self, a: NodeId, b: NodeId) -> NodeId {
        assert_eq!(self.len(a), self.len(b), "dot length mismatch");
        let s = self.values[a.0]
            .iter()
            .zip(&self.values[b.0])
            .map(|(x, y)| x * y)
            .sum();
        self.push(Op::Dot { a, b }, vec![s])
    }

    /// CRF negative log-likelihood of `gold` given per-position emission
    /// nodes (each of length K) and a (K+2)² transition parameter.
    ///
    /// Differentiable with respect to the emissions and the transitions; the
    /// backward pass uses exact marginals from the forward-backward
    /// recursions.
    pub fn crf_nll(
        &mut self,
        store: &ParamStore,
        emissions: &[NodeId],
        trans: ParamId,
        gold: &[usize],
    ) -> NodeId {
        assert!(!emissions.is_empty(), "crf_nll over an empty sentence");
        assert_eq!(emissions.len(), gold.len(), "gold length mismatch");
        let k = self.len(emissions[0]);
        for &e in emissions {
            assert_eq!(self.len(e), k, "emission rows must share a tag count");
        }
        let flat = self.flatten_emissions(emissions);
        let tview = crf::Transitions::new(store.get(trans).values(), k);
        let eview = crf::Emissions::new(&flat, emissions.len(), k);
        let value = crf::nll_value(eview, tview, gold);
        self.push(
            Op::CrfNll {
                emissions: emissions.to_vec(),
                trans,
                gold: gold.to_vec(),
            },
            vec![value],
        )
    }

    fn flatten_emissions(&self, emissions: &[NodeId]) -> Vec<f64> {
        let mut flat = Vec::with_capacity(emissions.len() * self.len(emissions[0]));
        for &e in emissions {
            flat.extend_from_slice(&self.values[e.0]);
        }
        flat
    }

    /// Reverse pass from a scalar `loss` node; accumulates ∂loss/∂θ into the
    /// gradient buffers of every parameter the tape touched. May be called
    /// more than once; parameter gradients keep accumulating.
    #[allow(clippy::needless_range_loop)] // index loops write two disjoint grad slots
    pub fn backward(&mut self, loss: NodeId, store: &mut ParamStore) {
        assert_eq!(self.len(loss), 1, "backward needs a scalar loss");
        for (g, v) in self.grads.iter_mut().zip(&self.values) {
            g.clear();
            g.resize(v.len(), 0.0);
        }
        self.grads[loss.0][0] = 1.0;

        // Walk in reverse creation order; every parent precedes its children,
        // so each node's gradient is complete when its turn comes. The op is
        // moved out for the duration of its arm to keep borrows disjoint.
        for i in (0..=loss.0).rev() {
            let grad = core::mem::take(&mut self.grads[i]);
            if grad.iter().all(|&g| g == 0.0) {
                continue;
            }
            let op = core::mem::replace(&mut self.ops[i], Op::Constant);
            match &op {
                Op::Constant => {}
                Op::Param(p) => {
                    let t = store.get_mut(*p);
                    for (pg, g) in t.grads_mut().iter_mut().zip(&grad) {
                        *pg += g;
                    }
                }
                Op::GatherRow { param, row } => {
                    let t = store.get_mut(*param);
                    let cols = t.shape()[1];
                    let dst = &mut t.grads_mut()[row * cols..(row + 1) * cols];
                    for (pg, g) in dst.iter_mut().zip(&grad) {
                        *pg += g;
                    }
                }
                Op::Concat { parts } => {
                    let mut off = 0;
                    for &(p, len) in parts {
                        for (pg, g) in self.grads[p.0].iter_mut().zip(&grad[off..off + len]) {
                            *pg += g;
                        }
                        off += len;
                    }
                }
                Op::Affine { w, b, x } => {
                    let n = self.values[x.0].len();
                    {
                        let wv = store.get(*w).values();
                        let xg = &mut self.grads[x.0];
                        for (r, g) in grad.iter().enumerate() {
                            let row = &wv[r * n..(r + 1) * n];
                            for (xgj, wj) in xg.iter_mut().zip(row) {
                                *xgj += g * wj;
                            }
                        }
                    }
                    {
                        let xv = &self.values[x.0];
                        let wg = store.get_mut(*w).grads_mut();
                        for (r, g) in grad.iter().enumerate() {
                            let row = &mut wg[r * n..(r + 1) * n];
                            for (wgj, xj) in row.iter_mut().zip(xv) {
                                *wgj += g * xj;
                            }
                        }
                    }
                    let bg = store.get_mut(*b).grads_mut();
                    for (bgr, g) in bg.iter_mut().zip(&grad) {
                        *bgr += g;
                    }
                }
                Op::Sigmoid { x } => {
                    let y = &self.values[i];
                    let xg = &mut self.grads[x.0];
                    for ((xgj, yj), g) in xg.iter_mut().zip(y).zip(&grad) {
                        *xgj += g * yj * (1.0 - yj);
                    }
                }
                Op::Tanh { x } => {
                    let y = &self.values[i];
                    let xg = &mut self.grads[x.0];
                    for ((xgj, yj), g) in xg.iter_mut().zip(y).zip(&grad) {
                        *xgj += g * (1.0 - yj * yj);
                    }
                }
                Op::Add { a, b } => {
                    for (ag, g) in self.grads[a.0].iter_mut().zip(&grad) {
                        *ag += g;
                    }
                    for (bg, g) in self.grads[b.0].iter_mut().zip(&grad) {
                        *bg += g;
                    }
                }
                Op::Mul { a, b } => {
                    for j in 0..grad.len() {
                        let (av, bv) = (self.values[a.0][j], self.values[b.0][j]);
                        self.grads[a.0][j] += grad[j] * bv;
                        self.grads[b.0][j] += grad[j] * av;
                    }
                }
                Op::MaskMul { x, mask } => {
                    let xg = &mut self.grads[x.0];
                    for ((xgj, m), g) in xg.iter_mut().zip(mask).zip(&grad) {
                        *xgj += g * m;
                    }
                }
                Op::Sum { x } => {
                    for xg in self.grads[x.0].iter_mut() {
                        *xg += grad[0];
                    }
                }
                Op::Dot { a, b } => {
                    for j in 0..self.values[a.0].len() {
                        let (av, bv) = (self.values[a.0][j], self.values[b.0][j]);
                        self.grads[a.0][j] += grad[0] * bv;
                        self.grads[b.0][j] += grad[0] * av;
                    }
                }
                Op::CrfNll {
                    emissions,
                    trans,
                    gold,
                } => {
                    let k = self.values[emissions[0].0].len();
                    let flat = self.flatten_emissions(emissions);
                    let (exi_grad, trans_grad) = {
                        let tview = crf::Transitions::new(store.get(*trans).values(), k);
                        let eview = crf::Emissions::new(&flat, emissions.len(), k);
                        crf::nll_gradients(eview, tview, gold)
                    };
                    for (t, &e) in emissions.iter().enumerate() {
                        let row = &exi_grad[t * k..(t + 1) * k];
                        for (eg, g) in self.grads[e.0].iter_mut().zip(row) {
                            *eg += grad[0] * g;
                        }
                    }
                    let tg = store.get_mut(*trans).grads_mut();
                    for (pg, g) in tg.iter_mut().zip(&trans_grad) {
                        *pg += grad[0] * g;
                    }
                }
            }
            self.ops[i] = op;
        }
    }
}

/// Inverted dropout mask: each entry is 0 with probability `rate`, otherwise
/// `1/(1-rate)`, so eval-time activations need no rescaling. `rate` must be
/// in [0, 1). A rate of exactly 0 consumes no randomness.
pub fn dropout_mask(dim: usize, rate: f64, rng: &mut Rng) -> Vec<f64> {
    assert!((0.0..1.0).contains(&rate), "dropout rate must be in [0, 1)");
    if rate == 0.0 {
        return vec![1.0; dim];
    }
    let keep = 1.0 / (1.0 - rate);
    (0..dim)
        .map(|_| if rng.next_f64() < rate { 0.0 } else { keep })
        .collect()
}

//! Linear-chain CRF over emission scores: sequence scoring, exact
//! log-partition via the forward algorithm, Viterbi decoding, and the
//! negative log-likelihood objective with its exact gradients.
//!
//! Transitions form a (K+2) × (K+2) row-major matrix indexed `[from][to]`,
//! with two virtual tags appended after the K real ones: START (id K) and
//! STOP (id K+1). Transitions into START and out of STOP are pinned at `-inf`
//! and never updated; every score path reads only the legal entries.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{self, logsumexp};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// View over an (n × K) emission score matrix.
#[derive(Clone, Copy)]
pub struct Emissions<'a> {
    n: usize,
    k: usize,
    xi: &'a [f64],
}

impl<'a> Emissions<'a> {
    pub fn new(xi: &'a [f64], n: usize, k: usize) -> Self {
        assert!(n >= 1, "emissions need at least one position");
        assert_eq!(xi.len(), n * k, "emission buffer does not match n × K");
        Emissions { n, k, xi }
    }

    pub fn positions(&self) -> usize {
        self.n
    }

    pub fn num_tags(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn at(&self, pos: usize, tag: usize) -> f64 {
        self.xi[pos * self.k + tag]
    }
}

/// View over a (K+2) × (K+2) transition score matrix with virtual
/// START/STOP tags.
#[derive(Clone, Copy)]
pub struct Transitions<'a> {
    k: usize,
    a: &'a [f64],
}

impl<'a> Transitions<'a> {
    pub fn new(a: &'a [f64], k: usize) -> Self {
        assert_eq!(a.len(), (k + 2) * (k + 2), "transition buffer must be (K+2)²");
        Transitions { k, a }
    }

    pub fn num_tags(&self) -> usize {
        self.k
    }

    pub fn start(&self) -> usize {
        self.k
    }

    pub fn stop(&self) -> usize {
        self.k + 1
    }

    #[inline]
    pub fn at(&self, from: usize, to: usize) -> f64 {
        self.a[from * (self.k + 2) + to]
    }
}

/// Freshly initialized (K+2)² transition tensor: learnable entries drawn
/// uniformly by the fan-based rule, forbidden entries (into START, out of
/// STOP) pinned at `-inf`. The pins keep zero gradients throughout training,
/// so they survive SGD untouched.
pub fn init_transitions(k: usize, rng: &mut Rng) -> Tensor {
    let mut t = Tensor::xavier(k + 2, k + 2, rng);
    let start = k;
    let stop = k + 1;
    for i in 0..k + 2 {
        t.row_mut(i)[start] = f64::NEG_INFINITY;
    }
    for v in t.row_mut(stop) {
        *v = f64::NEG_INFINITY;
    }
    t
}

/// s(X, y): boundary and pairwise transition scores plus per-position
/// emission scores of the path.
pub fn sentence_score(e: Emissions, t: Transitions, path: &[usize]) -> f64 {
    assert_eq!(path.len(), e.positions(), "path length mismatch");
    assert_eq!(e.num_tags(), t.num_tags(), "tag count mismatch");
    for &y in path {
        assert!(y < e.num_tags(), "tag id {y} out of range");
    }
    let mut score = t.at(t.start(), path[0]);
    for i in 0..path.len() - 1 {
        score += t.at(path[i], path[i + 1]);
    }
    score += t.at(path[path.len() - 1], t.stop());
    for (i, &y) in path.iter().enumerate() {
        score += e.at(i, y);
    }
    score
}

/// log Σ_y exp(s(X, y)) over all K^n paths, by the forward recursion in log
/// space.
pub fn log_partition(e: Emissions, t: Transitions) -> f64 {
    let (n, k) = (e.positions(), e.num_tags());
    assert_eq!(k, t.num_tags(), "tag count mismatch");
    let mut alpha: Vec<f64> = (0..k).map(|j| t.at(t.start(), j) + e.at(0, j)).collect();
    let mut scratch = vec![0.0; k];
    for i in 1..n {
        let mut next = vec![0.0; k];
        for (j, nj) in next.iter_mut().enumerate() {
            for (p, s) in scratch.iter_mut().enumerate() {
                *s = alpha[p] + t.at(p, j);
            }
            *nj = logsumexp(&scratch) + e.at(i, j);
        }
        alpha = next;
    }
    for (p, s) in scratch.iter_mut().enumerate() {
        *s = alpha[p] + t.at(p, t.stop());
    }
    logsumexp(&scratch)
}

/// Highest-scoring path and its score. Ties break toward the lowest tag id
/// at every backpointer decision (and at the final position).
pub fn viterbi(e: Emissions, t: Transitions) -> (Vec<usize>, f64) {
    let (n, k) = (e.positions(), e.num_tags());
    assert_eq!(k, t.num_tags(), "tag count mismatch");
    let mut delta: Vec<f64> = (0..k).map(|j| t.at(t.start(), j) + e.at(0, j)).collect();
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(n);
    for i in 1..n {
        let mut next = vec![f64::NEG_INFINITY; k];
        let mut ptr = vec![0usize; k];
        for (j, (nj, pj)) in next.iter_mut().zip(ptr.iter_mut()).enumerate() {
            let mut best = f64::NEG_INFINITY;
            let mut best_p = 0;
            for (p, &d) in delta.iter().enumerate() {
                let cand = d + t.at(p, j);
                if cand > best {
                    best = cand;
                    best_p = p;
                }
            }
            *nj = best + e.at(i, j);
            *pj = best_p;
        }
        delta = next;
        back.push(ptr);
    }

    let mut best = f64::NEG_INFINITY;
    let mut last = 0;
    for (j, &d) in delta.iter().enumerate() {
        let cand = d + t.at(j, t.stop());
        if cand > best {
            best = cand;
            last = j;
        }
    }

    let mut path = vec![0usize; n];
    path[n - 1] = last;
    for (i, ptr) in back.iter().enumerate().rev() {
        path[i] = ptr[path[i + 1]];
    }
    let score = sentence_score(e, t, &path);
    (path, score)
}

/// Negative log-likelihood of the gold path: log Z − s(X, y_gold). Always
/// non-negative, zero only when the gold path holds all probability mass.
pub fn nll_value(e: Emissions, t: Transitions, gold: &[usize]) -> f64 {
    // log Z ≥ gold score mathematically; clamp only the sliver of roundoff
    // seen when a single path carries all the mass. NaN and genuinely
    // negative values (overflowed inputs) pass through for the caller's
    // finiteness checks.
    let v = log_partition(e, t) - sentence_score(e, t, gold);
    if (-1e-6..0.0).contains(&v) {
        0.0
    } else {
        v
    }
}

/// Full alpha table; `alpha[i][j]` includes emissions up to and including
/// position `i`.
fn forward_table(e: Emissions, t: Transitions) -> Vec<Vec<f64>> {
    let (n, k) = (e.positions(), e.num_tags());
    let mut alpha = Vec::with_capacity(n);
    alpha.push((0..k).map(|j| t.at(t.start(), j) + e.at(0, j)).collect::<Vec<_>>());
    let mut scratch = vec![0.0; k];
    for i in 1..n {
        let prev = &alpha[i - 1];
        let mut row = vec![0.0; k];
        for (j, rj) in row.iter_mut().enumerate() {
            for p in 0..k {
                scratch[p] = prev[p] + t.at(p, j);
            }
            *rj = logsumexp(&scratch) + e.at(i, j);
        }
        alpha.push(row);
    }
    alpha
}

/// Full beta table; `beta[i][j]` scores the continuation from position `i`
/// with tag `j`, excluding position `i`'s own emission.
fn backward_table(e: Emissions, t: Transitions) -> Vec<Vec<f64>> {
    let (n, k) = (e.positions(), e.num_tags());
    let mut beta = vec![vec![0.0; k]; n];
    for (j, b) in beta[n - 1].iter_mut().enumerate() {
        *b = t.at(j, t.stop());
    }
    let mut scratch = vec![0.0; k];
    for i in (0..n - 1).rev() {
        let (head, tail) = beta.split_at_mut(i + 1);
        let next = &tail[0];
        for (j, b) in head[i].iter_mut().enumerate() {
            for q in 0..k {
                scratch[q] = t.at(j, q) + e.at(i + 1, q) + next[q];
            }
            *b = logsumexp(&scratch);
        }
    }
    beta
}

/// Exact gradients of the NLL with respect to the emissions (n × K, flat)
/// and the transition matrix ((K+2)², flat): posterior marginals minus gold
/// indicators.
pub(crate) fn nll_gradients(
    e: Emissions,
    t: Transitions,
    gold: &[usize],
) -> (Vec<f64>, Vec<f64>) {
    let (n, k) = (e.positions(), e.num_tags());
    assert_eq!(gold.len(), n, "gold length mismatch");
    let alpha = forward_table(e, t);
    let beta = backward_table(e, t);
    let mut scratch = vec![0.0; k];
    for (p, s) in scratch.iter_mut().enumerate() {
        *s = alpha[n - 1][p] + t.at(p, t.stop());
    }
    let log_z = logsumexp(&scratch);

    let mut exi = vec![0.0; n * k];
    for i in 0..n {
        for j in 0..k {
            exi[i * k + j] = math::exp(alpha[i][j] + beta[i][j] - log_z);
        }
        exi[i * k + gold[i]] -= 1.0;
    }

    let width = k + 2;
    let mut ea = vec![0.0; width * width];
    // boundary marginals
    for j in 0..k {
        ea[t.start() * width + j] = math::exp(alpha[0][j] + beta[0][j] - log_z);
        ea[j * width + t.stop()] = math::exp(alpha[n - 1][j] + beta[n - 1][j] - log_z);
    }
    // pairwise marginals
    for i in 0..n - 1 {
        for p in 0..k {
            for q in 0..k {
                ea[p * width + q] +=
                    math::exp(alpha[i][p] + t.at(p, q) + e.at(i + 1, q) + beta[i + 1][q] - log_z);
            }
        }
    }
    // subtract gold indicators
    ea[t.start() * width + gold[0]] -= 1.0;
    ea[gold[n - 1] * width + t.stop()] -= 1.0;
    for i in 0..n - 1 {
        ea[gold[i] * width + gold[i + 1]] -= 1.0;
    }
    (exi, ea)
}

//! LSTM cell and bidirectional sequence encoders on the autodiff tape.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::rng::Rng;
use crate::tape::{NodeId, Tape};
use crate::tensor::{ParamId, ParamStore, Tensor};

/// Parameter handles of one LSTM direction: four gate weight matrices of
/// shape (hidden × (input + hidden)) over the concatenated `[x_t; h_prev]`,
/// and four bias vectors.
#[derive(Debug, Clone)]
pub struct LstmParams {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub w_input: ParamId,
    pub w_forget: ParamId,
    pub w_output: ParamId,
    pub w_cand: ParamId,
    pub b_input: ParamId,
    pub b_forget: ParamId,
    pub b_output: ParamId,
    pub b_cand: ParamId,
}

const GATE_NAMES: [&str; 4] = ["input", "forget", "output", "cand"];

impl LstmParams {
    /// Fresh parameters under `prefix`: gate weights fan-based uniform,
    /// biases zero except the forget gate's, which starts at +1 so early
    /// training does not wipe the cell state.
    pub fn init(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: usize,
        hidden_dim: usize,
        rng: &mut Rng,
    ) -> Self {
        let cols = input_dim + hidden_dim;
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for gate in GATE_NAMES {
            weights.push(store.add(
                &format!("{prefix}.w_{gate}"),
                Tensor::xavier(hidden_dim, cols, rng),
            ));
        }
        for gate in GATE_NAMES {
            let mut b = Tensor::zeros(&[hidden_dim]);
            if gate == "forget" {
                b.values_mut().iter_mut().for_each(|v| *v = 1.0);
            }
            biases.push(store.add(&format!("{prefix}.b_{gate}"), b));
        }
        LstmParams {
            input_dim,
            hidden_dim,
            w_input: weights[0],
            w_forget: weights[1],
            w_output: weights[2],
            w_cand: weights[3],
            b_input: biases[0],
            b_forget: biases[1],
            b_output: biases[2],
            b_cand: biases[3],
        }
    }

    /// Resolve previously created parameters by name (model loading).
    pub fn from_store(
        store: &ParamStore,
        prefix: &str,
        input_dim: usize,
        hidden_dim: usize,
    ) -> Option<Self> {
        let mut ids = [None; 8];
        for (i, gate) in GATE_NAMES.iter().enumerate() {
            ids[i] = store.id(&format!("{prefix}.w_{gate}"));
            ids[i + 4] = store.id(&format!("{prefix}.b_{gate}"));
        }
        let ids: Option<Vec<ParamId>> = ids.into_iter().collect();
        let ids = ids?;
        let cols = input_dim + hidden_dim;
        for &w in &ids[..4] {
            if store.get(w).shape() != [hidden_dim, cols] {
                return None;
            }
        }
        for &b in &ids[4..] {
            if store.get(b).shape() != [hidden_dim] {
                return None;
            }
        }
        Some(LstmParams {
            input_dim,
            hidden_dim,
            w_input: ids[0],
            w_forget: ids[1],
            w_output: ids[2],
            w_cand: ids[3],
            b_input: ids[4],
            b_forget: ids[5],
            b_output: ids[6],
            b_cand: ids[7],
        })
    }

    /// Names of the tensors this direction owns, for save ordering.
    pub fn param_names(prefix: &str) -> Vec<String> {
        let mut names: Vec<String> = GATE_NAMES
            .iter()
            .map(|g| format!("{prefix}.w_{g}"))
            .collect();
        names.extend(GATE_NAMES.iter().map(|g| format!("{prefix}.b_{g}")));
        names
    }
}

/// One LSTM recurrence step:
/// i,f,o = σ(W·[x;h]+b), g = tanh(W_g·[x;h]+b_g),
/// c_t = f∘c_prev + i∘g, h_t = o∘tanh(c_t).
pub fn lstm_step(
    tape: &mut Tape,
    store: &ParamStore,
    p: &LstmParams,
    x: NodeId,
    h_prev: NodeId,
    c_prev: NodeId,
) -> (NodeId, NodeId) {
    assert_eq!(tape.len(x), p.input_dim, "lstm_step input dim mismatch");
    assert_eq!(tape.len(h_prev), p.hidden_dim, "lstm_step hidden dim mismatch");
    assert_eq!(tape.len(c_prev), p.hidden_dim, "lstm_step cell dim mismatch");
    let xh = tape.concat(&[x, h_prev]);
    let pre_i = tape.affine(store, p.w_input, p.b_input, xh);
    let pre_f = tape.affine(store, p.w_forget, p.b_forget, xh);
    let pre_o = tape.affine(store, p.w_output, p.b_output, xh);
    let pre_g = tape.affine(store, p.w_cand, p.b_cand, xh);
    let i = tape.sigmoid(pre_i);
    let f = tape.sigmoid(pre_f);
    let o = tape.sigmoid(pre_o);
    let g = tape.tanh(pre_g);
    let fc = tape.mul(f, c_prev);
    let ig = tape.mul(i, g);
    let c = tape.add(fc, ig);
    let tc = tape.tanh(c);
    let h = tape.mul(o, tc);
    (h, c)
}

/// Run one direction over `xs` from zero initial states, returning every
/// hidden state in input order.
fn run_direction(
    tape: &mut Tape,
    store: &ParamStore,
    p: &LstmParams,
    xs: &[NodeId],
    reverse: bool,
) -> Vec<NodeId> {
    let mut h = tape.zeros(p.hidden_dim);
    let mut c = tape.zeros(p.hidden_dim);
    let mut out = Vec::with_capacity(xs.len());
    let idx: Vec<usize> = if reverse {
        (0..xs.len()).rev().collect()
    } else {
        (0..xs.len()).collect()
    };
    for &i in &idx {
        let (nh, nc) = lstm_step(tape, store, p, xs[i], h, c);
        h = nh;
        c = nc;
        out.push(nh);
    }
    if reverse {
        out.reverse();
    }
    out
}

/// Bidirectional encoding: row i is `[→h_i ; ←h_i]`, the forward pass
/// reading left-to-right and the backward pass right-to-left, both from zero
/// initial states.
pub fn bilstm_encode(
    tape: &mut Tape,
    store: &ParamStore,
    fwd: &LstmParams,
    bwd: &LstmParams,
    xs: &[NodeId],
) -> Vec<NodeId> {
    assert!(!xs.is_empty(), "bilstm_encode over an empty sequence");
    assert_eq!(fwd.hidden_dim, bwd.hidden_dim, "direction widths differ");
    let f = run_direction(tape, store, fwd, xs, false);
    let b = run_direction(tape, store, bwd, xs, true);
    f.iter()
        .zip(&b)
        .map(|(&fh, &bh)| tape.concat(&[fh, bh]))
        .collect()
}

/// Fixed-length summary of a symbol sequence: embed each id through `emb`
/// (a (V × input_dim) matrix), run both directions, and concatenate the two
/// final hidden states into a vector of length 2·hidden_dim.
pub fn sequence_embed(
    tape: &mut Tape,
    store: &ParamStore,
    fwd: &LstmParams,
    bwd: &LstmParams,
    emb: ParamId,
    symbols: &[u32],
) -> NodeId {
    assert!(!symbols.is_empty(), "sequence_embed over an empty sequence");
    let xs: Vec<NodeId> = symbols
        .iter()
        .map(|&s| tape.gather_row(store, emb, s as usize))
        .collect();
    let f = run_direction(tape, store, fwd, &xs, false);
    let b = run_direction(tape, store, bwd, &xs, true);
    // final states: last of the forward run, first (in input order) of the backward run
    let last_f = *f.last().expect("non-empty");
    let first_b = b[0];
    tape.concat(&[last_f, first_b])
}

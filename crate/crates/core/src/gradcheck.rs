//! Finite-difference verification of the end-to-end gradients.
//!
//! The check compares every parameter entry's backpropagated gradient of the
//! total sentence NLL against a central finite difference of the same loss,
//! forward passes in eval mode so the comparison is deterministic.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::corpus::{build_vocabs, Sentence, Token};
use crate::math::abs;
use crate::morpho::{MorphAnalysis, Scheme};
use crate::tagger::{TaggerConfig, TaggerModel};
use crate::tape::Tape;

/// Largest acceptable scaled gradient error.
pub const TOLERANCE: f64 = 1e-4;

/// Differences at or below this are treated as exact agreement, which keeps
/// near-zero gradients from blowing up the relative measure.
pub const ABS_FLOOR: f64 = 1e-8;

/// Scaled disagreement between an analytic and a numeric gradient entry:
/// zero when the absolute difference is under [`ABS_FLOOR`], otherwise the
/// relative error against the larger magnitude.
pub fn grad_rel_error(analytic: f64, numeric: f64) -> f64 {
    let diff = abs(analytic - numeric);
    if diff <= ABS_FLOOR {
        return 0.0;
    }
    diff / abs(analytic).max(abs(numeric))
}

/// Worst-case error for one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupReport {
    pub name: String,
    pub max_rel_error: f64,
    pub entries: usize,
}

impl GroupReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error <= TOLERANCE
    }
}

fn total_nll(model: &TaggerModel, sentences: &[Sentence]) -> f64 {
    sentences.iter().map(|s| model.nll_value(s)).sum()
}

/// Compare backpropagated gradients of the summed NLL over `sentences`
/// against central finite differences with step `epsilon`, one report per
/// parameter tensor. Parameter values are restored before returning.
#[allow(clippy::needless_range_loop)] // the loop mutates the model it indexes
pub fn check_model_gradients(
    model: &mut TaggerModel,
    sentences: &[Sentence],
    epsilon: f64,
) -> Vec<GroupReport> {
    assert!(!sentences.is_empty(), "gradient check needs sentences");
    model.params.zero_grads();
    for sentence in sentences {
        let mut tape = Tape::new();
        let loss = model.nll(&mut tape, sentence, None);
        tape.backward(loss, &mut model.params);
    }
    let analytic: Vec<(String, Vec<f64>)> = model
        .params
        .iter()
        .map(|(_, name, t)| (name.to_string(), t.grads().to_vec()))
        .collect();
    model.params.zero_grads();

    let mut reports = Vec::with_capacity(analytic.len());
    for (name, grads) in &analytic {
        let pid = model.params.id(name).expect("parameter exists");
        let mut worst = 0.0f64;
        for j in 0..grads.len() {
            let orig = model.params.get(pid).values()[j];
            if !orig.is_finite() {
                // pinned transition entries; gradient must be exactly zero
                assert_eq!(grads[j], 0.0, "pinned entry of `{name}` has gradient");
                continue;
            }
            model.params.get_mut(pid).values_mut()[j] = orig + epsilon;
            let up = total_nll(model, sentences);
            model.params.get_mut(pid).values_mut()[j] = orig - epsilon;
            let down = total_nll(model, sentences);
            model.params.get_mut(pid).values_mut()[j] = orig;
            let numeric = (up - down) / (2.0 * epsilon);
            let err = grad_rel_error(grads[j], numeric);
            if err > worst {
                worst = err;
            }
        }
        reports.push(GroupReport {
            name: name.clone(),
            max_rel_error: worst,
            entries: grads.len(),
        });
    }
    reports
}

/// The small full-featured fixture the `gradcheck` command verifies: word,
/// character, and morphological channels all enabled at tiny sizes, two
/// short sentences with three label kinds and a derivation boundary.
pub fn fixture(seed: u64) -> (TaggerModel, Vec<Sentence>) {
    fn tok(surface: &str, analysis: &str, label: &str) -> Token {
        Token {
            surface: surface.to_string(),
            analysis: MorphAnalysis::parse(analysis).unwrap(),
            label: label.to_string(),
        }
    }
    let sentences = alloc::vec![
        Sentence::new(alloc::vec![
            tok("Ali", "Ali+Noun+Prop+A3sg+Pnon+Nom", "B-PER"),
            tok("Veli", "Veli+Noun+Prop+A3sg+Pnon+Nom", "I-PER"),
            tok("evdeydi", "ev+Noun+A3sg+Pnon+Loc^DB+Verb+Zero+Past+A3sg", "O"),
        ]),
        Sentence::new(alloc::vec![
            tok("ev", "ev+Noun+A3sg+Pnon+Nom", "O"),
            tok("Ali", "Ali+Noun+Prop+A3sg+Pnon+Nom", "B-PER"),
            tok("geldi", "gel+Verb+Pos+Past+A3sg", "O"),
            tok("x", "x", "O"),
        ]),
    ];
    let config = TaggerConfig {
        word_dim: 2,
        char_dim: 2,
        morph_dim: 2,
        hidden_dim: 3,
        use_char: true,
        morph_scheme: Some(Scheme::Wor),
        dropout_rate: 0.5,
        seed,
        ..TaggerConfig::default()
    };
    let vocabs = build_vocabs(&sentences, config.morph_scheme);
    let model = TaggerModel::new(config, vocabs, None);
    (model, sentences)
}

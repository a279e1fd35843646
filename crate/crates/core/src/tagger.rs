//! The assembled tagger: per-token representations (word ⊕ character ⊕
//! morphological embeddings) feed a sentence Bi-LSTM, a linear layer turns
//! its rows into per-tag emission scores, and a linear-chain CRF scores and
//! decodes label sequences.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::corpus::{Sentence, Token, Vocabs};
use crate::crf;
use crate::eval::{parse_iob, IobTag};
use crate::morpho::Scheme;
use crate::rng::Rng;
use crate::tape::{dropout_mask, NodeId, Tape};
use crate::tensor::{ParamId, ParamStore, Tensor};
use crate::lstm::{bilstm_encode, sequence_embed, LstmParams};
use crate::vocab::EMPTY;

pub const P_WORD_EMB: &str = "word_emb";
pub const P_CHAR_EMB: &str = "char_emb";
pub const P_MORPH_EMB: &str = "morph_emb";
pub const P_CHAR_FWD: &str = "char_fwd";
pub const P_CHAR_BWD: &str = "char_bwd";
pub const P_MORPH_FWD: &str = "morph_fwd";
pub const P_MORPH_BWD: &str = "morph_bwd";
pub const P_SENT_FWD: &str = "sent_fwd";
pub const P_SENT_BWD: &str = "sent_bwd";
pub const P_OUT_W: &str = "out.w";
pub const P_OUT_B: &str = "out.b";
pub const P_TRANS: &str = "crf.trans";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaggerConfig {
    /// Word vector size d_w.
    pub word_dim: usize,
    /// Character Bi-LSTM size d_c per direction (contributes 2·d_c).
    pub char_dim: usize,
    /// Morphological Bi-LSTM size d_m per direction (contributes 2·d_m).
    pub morph_dim: usize,
    /// Sentence Bi-LSTM size p per direction.
    pub hidden_dim: usize,
    pub use_char: bool,
    pub morph_scheme: Option<Scheme>,
    pub dropout_rate: f64,
    pub seed: u64,
    /// Update pretrained word vectors during training.
    pub fine_tune_words: bool,
    /// Pin impossible IOB transitions to -inf at decode time.
    pub constrain_decode: bool,
}

impl Default for TaggerConfig {
    fn default() -> Self {
        TaggerConfig {
            word_dim: 100,
            char_dim: 100,
            morph_dim: 100,
            hidden_dim: 100,
            use_char: false,
            morph_scheme: None,
            dropout_rate: 0.5,
            seed: 1,
            fine_tune_words: true,
            constrain_decode: false,
        }
    }
}

impl TaggerConfig {
    /// Token representation size d: word_dim plus 2·char_dim when character
    /// embeddings are on plus 2·morph_dim when a morphological scheme is set.
    pub fn input_dim(&self) -> usize {
        self.word_dim
            + if self.use_char { 2 * self.char_dim } else { 0 }
            + if self.morph_scheme.is_some() { 2 * self.morph_dim } else { 0 }
    }
}

/// Model assembly failure (shape or vocabulary inconsistencies, typically
/// from a hand-edited or mismatched model file).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelError {
    MissingParam(String),
    ShapeMismatch { param: String },
    EmptyLabelVocab,
}

impl core::fmt::Display for ModelError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ModelError::MissingParam(name) => write!(f, "missing parameter `{name}`"),
            ModelError::ShapeMismatch { param } => {
                write!(f, "parameter `{param}` has an unexpected shape")
            }
            ModelError::EmptyLabelVocab => write!(f, "label vocabulary is empty"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ModelError {}

/// All trainable parameters plus vocabularies and configuration.
#[derive(Debug, Clone)]
pub struct TaggerModel {
    pub config: TaggerConfig,
    pub vocabs: Vocabs,
    pub params: ParamStore,
    word_emb: ParamId,
    char_emb: Option<ParamId>,
    char_fwd: Option<LstmParams>,
    char_bwd: Option<LstmParams>,
    morph_emb: Option<ParamId>,
    morph_fwd: Option<LstmParams>,
    morph_bwd: Option<LstmParams>,
    sent_fwd: LstmParams,
    sent_bwd: LstmParams,
    out_w: ParamId,
    out_b: ParamId,
    trans: ParamId,
}

impl TaggerModel {
    /// Build a freshly initialized model. Word vectors come from `pretrained`
    /// where available (exact surface first, then its lowercased form);
    /// everything else starts at the `UNK` vector, which is drawn uniformly
    /// from ±0.5/word_dim. All other weights use the fan-based uniform rule;
    /// biases start at zero except the LSTM forget gates.
    pub fn new(
        config: TaggerConfig,
        vocabs: Vocabs,
        pretrained: Option<&crate::corpus::EmbeddingTable>,
    ) -> Self {
        if let Some(table) = pretrained {
            assert_eq!(
                table.dim(),
                config.word_dim,
                "pretrained vector size must equal word_dim"
            );
        }
        assert!(!vocabs.label.is_empty(), "label vocabulary is empty");
        let mut rng = Rng::seed_from_u64(config.seed);
        let mut params = ParamStore::new();

        // word embedding matrix
        let vw = vocabs.word.len();
        let dw = config.word_dim;
        let mut word = Tensor::zeros(&[vw, dw]);
        let bound = 0.5 / dw as f64;
        let unk_row: Vec<f64> = (0..dw).map(|_| rng.uniform(-bound, bound)).collect();
        word.row_mut(0).copy_from_slice(&unk_row);
        // PAD (row 1) stays zero
        for (i, sym) in vocabs.word.symbols().iter().enumerate().skip(2) {
            let vec = pretrained.and_then(|t| {
                t.get(sym).or_else(|| t.get(sym.to_lowercase().as_str()))
            });
            match vec {
                Some(v) => word.row_mut(i).copy_from_slice(v),
                None => word.row_mut(i).copy_from_slice(&unk_row),
            }
        }
        word.set_requires_grad(config.fine_tune_words);
        let word_emb = params.add(P_WORD_EMB, word);

        let (char_emb, char_fwd, char_bwd) = if config.use_char {
            let emb = params.add(
                P_CHAR_EMB,
                Tensor::xavier(vocabs.chars.len(), config.char_dim, &mut rng),
            );
            let fwd =
                LstmParams::init(&mut params, P_CHAR_FWD, config.char_dim, config.char_dim, &mut rng);
            let bwd =
                LstmParams::init(&mut params, P_CHAR_BWD, config.char_dim, config.char_dim, &mut rng);
            (Some(emb), Some(fwd), Some(bwd))
        } else {
            (None, None, None)
        };

        let (morph_emb, morph_fwd, morph_bwd) = if config.morph_scheme.is_some() {
            let emb = params.add(
                P_MORPH_EMB,
                Tensor::xavier(vocabs.morph.len(), config.morph_dim, &mut rng),
            );
            let fwd = LstmParams::init(
                &mut params,
                P_MORPH_FWD,
                config.morph_dim,
                config.morph_dim,
                &mut rng,
            );
            let bwd = LstmParams::init(
                &mut params,
                P_MORPH_BWD,
                config.morph_dim,
                config.morph_dim,
                &mut rng,
            );
            (Some(emb), Some(fwd), Some(bwd))
        } else {
            (None, None, None)
        };

        let d = config.input_dim();
        let sent_fwd = LstmParams::init(&mut params, P_SENT_FWD, d, config.hidden_dim, &mut rng);
        let sent_bwd = LstmParams::init(&mut params, P_SENT_BWD, d, config.hidden_dim, &mut rng);

        let k = vocabs.label.len();
        let out_w = params.add(P_OUT_W, Tensor::xavier(k, 2 * config.hidden_dim, &mut rng));
        let out_b = params.add(P_OUT_B, Tensor::zeros(&[k]));
        let trans = params.add(P_TRANS, crf::init_transitions(k, &mut rng));

        TaggerModel {
            config,
            vocabs,
            params,
            word_emb,
            char_emb,
            char_fwd,
            char_bwd,
            morph_emb,
            morph_fwd,
            morph_bwd,
            sent_fwd,
            sent_bwd,
            out_w,
            out_b,
            trans,
        }
    }

    /// Reassemble a model from loaded parts, resolving parameters by name
    /// and validating shapes against the configuration.
    pub fn from_parts(
        config: TaggerConfig,
        vocabs: Vocabs,
        params: ParamStore,
    ) -> Result<Self, ModelError> {
        let k = vocabs.label.len();
        if k == 0 {
            return Err(ModelError::EmptyLabelVocab);
        }
        let need = |name: &str| -> Result<ParamId, ModelError> {
            params.id(name).ok_or_else(|| ModelError::MissingParam(name.to_string()))
        };
        let check = |id: ParamId, shape: &[usize]| -> Result<ParamId, ModelError> {
            if params.get(id).shape() == shape {
                Ok(id)
            } else {
                Err(ModelError::ShapeMismatch { param: params.name(id).to_string() })
            }
        };
        let lstm = |prefix: &str, input: usize| -> Result<LstmParams, ModelError> {
            LstmParams::from_store(&params, prefix, input, lstm_hidden(prefix, &config))
                .ok_or_else(|| ModelError::MissingParam(prefix.to_string()))
        };
        fn lstm_hidden(prefix: &str, config: &TaggerConfig) -> usize {
            match prefix {
                P_CHAR_FWD | P_CHAR_BWD => config.char_dim,
                P_MORPH_FWD | P_MORPH_BWD => config.morph_dim,
                _ => config.hidden_dim,
            }
        }

        let word_emb = check(
            need(P_WORD_EMB)?,
            &[vocabs.word.len(), config.word_dim],
        )?;
        let (char_emb, char_fwd, char_bwd) = if config.use_char {
            let emb = check(need(P_CHAR_EMB)?, &[vocabs.chars.len(), config.char_dim])?;
            (
                Some(emb),
                Some(lstm(P_CHAR_FWD, config.char_dim)?),
                Some(lstm(P_CHAR_BWD, config.char_dim)?),
            )
        } else {
            (None, None, None)
        };
        let (morph_emb, morph_fwd, morph_bwd) = if config.morph_scheme.is_some() {
            let emb = check(need(P_MORPH_EMB)?, &[vocabs.morph.len(), config.morph_dim])?;
            (
                Some(emb),
                Some(lstm(P_MORPH_FWD, config.morph_dim)?),
                Some(lstm(P_MORPH_BWD, config.morph_dim)?),
            )
        } else {
            (None, None, None)
        };
        let d = config.input_dim();
        let sent_fwd = lstm(P_SENT_FWD, d)?;
        let sent_bwd = lstm(P_SENT_BWD, d)?;
        let out_w = check(need(P_OUT_W)?, &[k, 2 * config.hidden_dim])?;
        let out_b = check(need(P_OUT_B)?, &[k])?;
        let trans = check(need(P_TRANS)?, &[k + 2, k + 2])?;

        Ok(TaggerModel {
            config,
            vocabs,
            params,
            word_emb,
            char_emb,
            char_fwd,
            char_bwd,
            morph_emb,
            morph_fwd,
            morph_bwd,
            sent_fwd,
            sent_bwd,
            out_w,
            out_b,
            trans,
        })
    }

    pub fn num_labels(&self) -> usize {
        self.vocabs.label.len()
    }

    pub fn transitions(&self) -> ParamId {
        self.trans
    }

    /// Word id under the out-of-vocabulary policy: exact surface form, then
    /// its lowercased form, then `UNK`.
    pub fn word_id(&self, surface: &str) -> u32 {
        self.vocabs
            .word
            .id(surface)
            .or_else(|| self.vocabs.word.id(surface.to_lowercase().as_str()))
            .unwrap_or_else(|| self.vocabs.word.unk_id().expect("word vocab has UNK"))
    }

    /// Per-token representation x_i. In training mode (`train_rng` set) a
    /// dropout mask is applied to the whole concatenated vector.
    pub fn embed_token(
        &self,
        tape: &mut Tape,
        token: &Token,
        train_rng: Option<&mut Rng>,
    ) -> NodeId {
        let mut parts = Vec::with_capacity(3);
        let wid = self.word_id(&token.surface);
        parts.push(tape.gather_row(&self.params, self.word_emb, wid as usize));

        if let (Some(emb), Some(fwd), Some(bwd)) = (self.char_emb, &self.char_fwd, &self.char_bwd)
        {
            let ids: Vec<u32> = token
                .surface
                .chars()
                .map(|c| {
                    let mut buf = [0u8; 4];
                    self.vocabs.chars.id_or_unk(c.encode_utf8(&mut buf))
                })
                .collect();
            parts.push(sequence_embed(tape, &self.params, fwd, bwd, emb, &ids));
        }

        if let (Some(scheme), Some(emb), Some(fwd), Some(bwd)) = (
            self.config.morph_scheme,
            self.morph_emb,
            &self.morph_fwd,
            &self.morph_bwd,
        ) {
            let symbols = token.analysis.project(scheme);
            let ids: Vec<u32> = if symbols.is_empty() {
                alloc::vec![self.vocabs.morph.id_or_unk(EMPTY)]
            } else {
                symbols.iter().map(|s| self.vocabs.morph.id_or_unk(s)).collect()
            };
            parts.push(sequence_embed(tape, &self.params, fwd, bwd, emb, &ids));
        }

        let x = if parts.len() == 1 { parts[0] } else { tape.concat(&parts) };
        match train_rng {
            Some(rng) if self.config.dropout_rate > 0.0 => {
                let mask = dropout_mask(tape.len(x), self.config.dropout_rate, rng);
                tape.mask_mul(x, mask)
            }
            _ => x,
        }
    }

    /// Emission scores ξ: one node of length K per sentence position.
    pub fn forward(
        &self,
        tape: &mut Tape,
        sentence: &Sentence,
        mut train_rng: Option<&mut Rng>,
    ) -> Vec<NodeId> {
        let xs: Vec<NodeId> = sentence
            .tokens()
            .iter()
            .map(|t| self.embed_token(tape, t, train_rng.as_deref_mut()))
            .collect();
        let rows = bilstm_encode(tape, &self.params, &self.sent_fwd, &self.sent_bwd, &xs);
        rows.into_iter()
            .map(|r| tape.affine(&self.params, self.out_w, self.out_b, r))
            .collect()
    }

    /// CRF negative log-likelihood of the sentence's gold labels. Every gold
    /// label must be present in the label vocabulary.
    pub fn nll(
        &self,
        tape: &mut Tape,
        sentence: &Sentence,
        train_rng: Option<&mut Rng>,
    ) -> NodeId {
        let emissions = self.forward(tape, sentence, train_rng);
        let gold: Vec<usize> = sentence
            .tokens()
            .iter()
            .map(|t| {
                self.vocabs
                    .label
                    .id(&t.label)
                    .expect("gold label missing from the label vocabulary")
                    as usize
            })
            .collect();
        tape.crf_nll(&self.params, &emissions, self.trans, &gold)
    }

    /// Decode-time transition scores; a copy with impossible IOB transitions
    /// pinned to -inf when `constrain_decode` is on.
    fn decode_transitions(&self) -> Vec<f64> {
        let base = self.params.get(self.trans).values().to_vec();
        if !self.config.constrain_decode {
            return base;
        }
        let k = self.num_labels();
        let width = k + 2;
        let mut a = base;
        let labels = self.vocabs.label.symbols();
        for (q, to) in labels.iter().enumerate() {
            if let Ok(IobTag::Inside(ty)) = parse_iob(to) {
                // I-ty is reachable only from B-ty / I-ty
                for p in 0..width {
                    let ok = p < k
                        && matches!(
                            parse_iob(&labels[p]),
                            Ok(IobTag::Begin(t) | IobTag::Inside(t)) if t == ty
                        );
                    if !ok {
                        a[p * width + q] = f64::NEG_INFINITY;
                    }
                }
            }
        }
        a
    }

    /// Viterbi-decode a sentence into IOB labels.
    pub fn tag(&self, sentence: &Sentence) -> Vec<String> {
        let mut tape = Tape::new();
        let emissions = self.forward(&mut tape, sentence, None);
        let k = self.num_labels();
        let mut flat = Vec::with_capacity(emissions.len() * k);
        for e in &emissions {
            flat.extend_from_slice(tape.value(*e));
        }
        let trans = self.decode_transitions();
        let (path, _) = crf::viterbi(
            crf::Emissions::new(&flat, sentence.len(), k),
            crf::Transitions::new(&trans, k),
        );
        path.iter()
            .map(|&id| self.vocabs.label.symbol(id as u32).to_string())
            .collect()
    }

    /// Plain NLL value of a sentence without touching gradients (eval mode).
    pub fn nll_value(&self, sentence: &Sentence) -> f64 {
        let mut tape = Tape::new();
        let loss = self.nll(&mut tape, sentence, None);
        tape.scalar(loss)
    }
}

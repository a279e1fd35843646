//! Corpus data model: tokens with disambiguated morphological analyses and
//! IOB labels, vocabulary construction, and pretrained embedding tables.
//!
//! The corpus text format is one token per line with whitespace-separated
//! columns `surface analysis label` and a blank line between sentences. Two
//! columns (no label) are accepted for tagging input; four columns treat the
//! last column as the label (the output of the tagger appends its prediction
//! after the gold column). Column counts must be consistent within a file.
//!
//! Embedding files are text: a `"<count> <dim>"` header line followed by
//! `"<word> <v1> … <v_dim>"` rows.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::eval::{parse_iob, IobTag};
use crate::morpho::{self, MorphAnalysis, Scheme};
use crate::vocab::{Vocab, EMPTY};

/// One corpus token. `label` is an IOB label; tagging-only input carries
/// the placeholder `"O"`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub analysis: MorphAnalysis,
    pub label: String,
}

/// A non-empty token sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    tokens: Vec<Token>,
}

impl Sentence {
    pub fn new(tokens: Vec<Token>) -> Self {
        assert!(!tokens.is_empty(), "a sentence needs at least one token");
        Sentence { tokens }
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn labels(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.label.clone()).collect()
    }
}

/// How IOB sequence violations (an `I-X` with no live `X` entity) are
/// handled at load time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IobPolicy {
    /// Rewrite the offending `I-X` to `B-X` (counted in [`ParsedCorpus`]).
    #[default]
    Normalize,
    /// Reject the corpus with an error.
    Strict,
    /// Leave labels untouched (evaluation inputs).
    Keep,
}

#[derive(Debug, Clone, Copy)]
pub struct CorpusOptions {
    pub iob: IobPolicy,
    /// Reject label-less (2-column) lines. On for training/evaluation
    /// corpora; off for tagging input.
    pub require_labels: bool,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        CorpusOptions { iob: IobPolicy::Normalize, require_labels: true }
    }
}

impl CorpusOptions {
    /// Options for tagging input: labels optional and left untouched.
    pub fn tagging_input() -> Self {
        CorpusOptions { iob: IobPolicy::Keep, require_labels: false }
    }
}

/// Parse result plus ingestion statistics.
#[derive(Debug, Clone)]
pub struct ParsedCorpus {
    pub sentences: Vec<Sentence>,
    /// Whether the file carried a label column.
    pub has_labels: bool,
    /// Number of `I-X` labels rewritten to `B-X` under
    /// [`IobPolicy::Normalize`].
    pub normalized_labels: usize,
}

/// Corpus text-format error, with 1-based line numbers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CorpusError {
    WrongColumnCount { line: usize, found: usize },
    InconsistentColumns { line: usize, found: usize, expected: usize },
    BadLabel { line: usize, label: String },
    BadAnalysis { line: usize, source: morpho::ParseError },
    IobViolation { line: usize, label: String },
}

impl fmt::Display for CorpusError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorpusError::WrongColumnCount { line, found } => {
                write!(f, "line {line}: expected 2-4 whitespace-separated columns, found {found}")
            }
            CorpusError::InconsistentColumns { line, found, expected } => {
                write!(f, "line {line}: {found} columns, but earlier lines had {expected}")
            }
            CorpusError::BadLabel { line, label } => {
                write!(f, "line {line}: label `{label}` is not `O` or `B-TYPE`/`I-TYPE`")
            }
            CorpusError::BadAnalysis { line, source } => {
                write!(f, "line {line}: bad morphological analysis: {source}")
            }
            CorpusError::IobViolation { line, label } => {
                write!(f, "line {line}: `{label}` continues no open entity (strict IOB mode)")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CorpusError {}

fn flush_sentence(
    sentences: &mut Vec<Sentence>,
    tokens: &mut Vec<Token>,
    lines: &mut Vec<usize>,
    has_labels: bool,
    iob: IobPolicy,
    normalized: &mut usize,
) -> Result<(), CorpusError> {
    if tokens.is_empty() {
        return Ok(());
    }
    if has_labels && iob != IobPolicy::Keep {
        *normalized += repair_iob(tokens, lines, iob == IobPolicy::Strict)?;
    }
    sentences.push(Sentence::new(core::mem::take(tokens)));
    lines.clear();
    Ok(())
}

/// Parse corpus text. Sentences are split on blank lines; trailing blank
/// lines are fine; an empty file yields an empty sentence list.
pub fn parse_corpus(text: &str, opts: CorpusOptions) -> Result<ParsedCorpus, CorpusError> {
    let mut sentences = Vec::new();
    let mut current: Vec<Token> = Vec::new();
    let mut current_lines: Vec<usize> = Vec::new();
    let mut columns: Option<usize> = None;
    let mut normalized = 0usize;
    let mut has_labels = false;

    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            flush_sentence(
                &mut sentences,
                &mut current,
                &mut current_lines,
                has_labels,
                opts.iob,
                &mut normalized,
            )?;
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        let min_cols = if opts.require_labels { 3 } else { 2 };
        if !(min_cols..=4).contains(&cols.len()) {
            return Err(CorpusError::WrongColumnCount { line: lineno, found: cols.len() });
        }
        match columns {
            None => {
                columns = Some(cols.len());
                has_labels = cols.len() >= 3;
            }
            Some(expected) if expected != cols.len() => {
                return Err(CorpusError::InconsistentColumns {
                    line: lineno,
                    found: cols.len(),
                    expected,
                });
            }
            Some(_) => {}
        }
        let analysis = MorphAnalysis::parse(cols[1])
            .map_err(|source| CorpusError::BadAnalysis { line: lineno, source })?;
        let label = if cols.len() >= 3 {
            let label = cols[cols.len() - 1];
            if parse_iob(label).is_err() {
                return Err(CorpusError::BadLabel { line: lineno, label: label.to_string() });
            }
            label.to_string()
        } else {
            "O".to_string()
        };
        current.push(Token {
            surface: cols[0].to_string(),
            analysis,
            label,
        });
        current_lines.push(lineno);
    }
    flush_sentence(
        &mut sentences,
        &mut current,
        &mut current_lines,
        has_labels,
        opts.iob,
        &mut normalized,
    )?;

    Ok(ParsedCorpus {
        sentences,
        has_labels,
        normalized_labels: normalized,
    })
}

/// Rewrite orphan `I-X` labels to `B-X` (or reject them in strict mode).
/// Returns the number of rewrites.
fn repair_iob(tokens: &mut [Token], lines: &[usize], strict: bool) -> Result<usize, CorpusError> {
    let mut repaired = 0;
    let mut open: Option<String> = None;
    for (i, tok) in tokens.iter_mut().enumerate() {
        let tag = parse_iob(&tok.label).expect("label validated at parse");
        match tag {
            IobTag::Outside => open = None,
            IobTag::Begin(ty) => open = Some(ty.to_string()),
            IobTag::Inside(ty) => {
                if open.as_deref() != Some(ty) {
                    if strict {
                        return Err(CorpusError::IobViolation {
                            line: lines.get(i).copied().unwrap_or(0),
                            label: tok.label.clone(),
                        });
                    }
                    let ty = ty.to_string();
                    tok.label = alloc::format!("B-{ty}");
                    open = Some(ty);
                    repaired += 1;
                } else {
                    open = Some(ty.to_string());
                }
            }
        }
    }
    Ok(repaired)
}

/// Render sentences back to the corpus text format (single-space separated,
/// one blank line between sentences). With `predictions`, each token line
/// gains a trailing predicted-label column.
pub fn render_corpus(
    sentences: &[Sentence],
    with_gold: bool,
    predictions: Option<&[Vec<String>]>,
) -> String {
    let mut out = String::new();
    for (si, sent) in sentences.iter().enumerate() {
        if si > 0 {
            out.push('\n');
        }
        for (ti, tok) in sent.tokens().iter().enumerate() {
            out.push_str(&tok.surface);
            out.push(' ');
            out.push_str(tok.analysis.raw());
            if with_gold {
                out.push(' ');
                out.push_str(&tok.label);
            }
            if let Some(preds) = predictions {
                out.push(' ');
                out.push_str(&preds[si][ti]);
            }
            out.push('\n');
        }
    }
    out
}

/// The four vocabularies a tagger needs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabs {
    pub word: Vocab,
    pub chars: Vocab,
    pub morph: Vocab,
    pub label: Vocab,
}

/// Build vocabularies from training sentences in first-occurrence order.
///
/// Word, character, and morph vocabularies carry `UNK`/`PAD`; the morph
/// vocabulary also reserves [`EMPTY`] for empty projections. The label
/// vocabulary has no specials. Without a scheme the morph vocabulary holds
/// only its reserved symbols.
pub fn build_vocabs(sentences: &[Sentence], scheme: Option<Scheme>) -> Vocabs {
    assert!(!sentences.is_empty(), "cannot build vocabularies from nothing");
    let mut word = Vocab::with_specials();
    let mut chars = Vocab::with_specials();
    let mut morph = Vocab::with_specials();
    morph.insert(EMPTY);
    let mut label = Vocab::plain();
    for sent in sentences {
        for tok in sent.tokens() {
            word.insert(&tok.surface);
            for c in tok.surface.chars() {
                let mut buf = [0u8; 4];
                chars.insert(c.encode_utf8(&mut buf));
            }
            if let Some(s) = scheme {
                for sym in tok.analysis.project(s) {
                    morph.insert(&sym);
                }
            }
            label.insert(&tok.label);
        }
    }
    Vocabs { word, chars, morph, label }
}

/// Pretrained word vectors, all of one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
    /// Duplicate rows seen while parsing (last occurrence wins).
    pub duplicates: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EmbeddingError {
    MissingHeader,
    BadHeader { line: usize },
    /// Header dimension differs from what the caller expects.
    WrongDim { header_dim: usize, expected: usize },
    DimMismatch { line: usize, word: String, found: usize, expected: usize },
    BadNumber { line: usize, word: String },
}

impl fmt::Display for EmbeddingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmbeddingError::MissingHeader => write!(f, "embedding file is empty"),
            EmbeddingError::BadHeader { line } => {
                write!(f, "line {line}: header must be `<count> <dim>`")
            }
            EmbeddingError::WrongDim { header_dim, expected } => {
                write!(f, "embedding dimension {header_dim} does not match expected {expected}")
            }
            EmbeddingError::DimMismatch { line, word, found, expected } => {
                write!(f, "line {line}: word `{word}` has {found} values, expected {expected}")
            }
            EmbeddingError::BadNumber { line, word } => {
                write!(f, "line {line}: word `{word}` has a malformed number")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for EmbeddingError {}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable { dim, vectors: BTreeMap::new(), duplicates: 0 }
    }

    pub fn insert(&mut self, word: &str, vector: Vec<f64>) {
        assert_eq!(vector.len(), self.dim, "vector length must equal dim");
        if self.vectors.insert(word.to_string(), vector).is_some() {
            self.duplicates += 1;
        }
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Parse the text vector format; every row must have `expected_dim`
    /// values and the header dimension must agree.
    pub fn parse(text: &str, expected_dim: usize) -> Result<Self, EmbeddingError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(EmbeddingError::MissingHeader)?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(EmbeddingError::BadHeader { line: 1 });
        }
        let header_dim: usize = fields[1]
            .parse()
            .map_err(|_| EmbeddingError::BadHeader { line: 1 })?;
        let _count: usize = fields[0]
            .parse()
            .map_err(|_| EmbeddingError::BadHeader { line: 1 })?;
        if header_dim != expected_dim {
            return Err(EmbeddingError::WrongDim { header_dim, expected: expected_dim });
        }

        let mut table = EmbeddingTable::new(expected_dim);
        for (lineno, line) in lines {
            let lineno = lineno + 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let word = fields.next().expect("non-blank line has a first field");
            let values: Vec<&str> = fields.collect();
            if values.len() != expected_dim {
                return Err(EmbeddingError::DimMismatch {
                    line: lineno,
                    word: word.to_string(),
                    found: values.len(),
                    expected: expected_dim,
                });
            }
            let mut vector = Vec::with_capacity(expected_dim);
            for v in values {
                vector.push(v.parse::<f64>().map_err(|_| EmbeddingError::BadNumber {
                    line: lineno,
                    word: word.to_string(),
                })?);
            }
            table.insert(word, vector);
        }
        Ok(table)
    }
}

//! Entity-level precision/recall/F1 in the CoNLL exact-match style, plus
//! McNemar's significance test between two taggers' outputs.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::fmt::Write as _;

/// χ² threshold for one degree of freedom at the 95% confidence level.
pub const CHI_SQUARE_95: f64 = 3.841459;

/// A syntactically decomposed IOB label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IobTag<'a> {
    Outside,
    Begin(&'a str),
    Inside(&'a str),
}

/// Error for a label that is not `O`, `B-TYPE`, or `I-TYPE`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BadLabel(pub String);

impl fmt::Display for BadLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "label `{}` is not `O` or `B-TYPE`/`I-TYPE`", self.0)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for BadLabel {}

pub fn parse_iob(label: &str) -> Result<IobTag<'_>, BadLabel> {
    if label == "O" {
        return Ok(IobTag::Outside);
    }
    if let Some(ty) = label.strip_prefix("B-") {
        if !ty.is_empty() {
            return Ok(IobTag::Begin(ty));
        }
    }
    if let Some(ty) = label.strip_prefix("I-") {
        if !ty.is_empty() {
            return Ok(IobTag::Inside(ty));
        }
    }
    Err(BadLabel(label.to_string()))
}

/// A maximal entity span; `start..=end` are token indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct EntitySpan {
    pub entity_type: String,
    pub start: usize,
    pub end: usize,
}

/// Extract maximal entity spans from an IOB sequence.
///
/// A span opens at `B-X`, or leniently at an `I-X` that continues nothing
/// (the usual reading of IOB1-style files), and closes before `O`, any `B-`,
/// or a type change.
pub fn extract_spans<S: AsRef<str>>(labels: &[S]) -> Result<Vec<EntitySpan>, BadLabel> {
    let mut spans = Vec::new();
    let mut open: Option<(String, usize)> = None;
    for (i, label) in labels.iter().enumerate() {
        let tag = parse_iob(label.as_ref())?;
        match tag {
            IobTag::Outside => {
                if let Some((ty, start)) = open.take() {
                    spans.push(EntitySpan { entity_type: ty, start, end: i - 1 });
                }
            }
            IobTag::Begin(ty) => {
                if let Some((prev, start)) = open.take() {
                    spans.push(EntitySpan { entity_type: prev, start, end: i - 1 });
                }
                open = Some((ty.to_string(), i));
            }
            IobTag::Inside(ty) => match &open {
                Some((prev, _)) if prev == ty => {}
                _ => {
                    if let Some((prev, start)) = open.take() {
                        spans.push(EntitySpan { entity_type: prev, start, end: i - 1 });
                    }
                    open = Some((ty.to_string(), i));
                }
            },
        }
    }
    if let Some((ty, start)) = open {
        spans.push(EntitySpan { entity_type: ty, start, end: labels.len() - 1 });
    }
    Ok(spans)
}

/// Render a span list back to an IOB2 label sequence of length `len`.
/// Spans must be sorted, in range, and non-overlapping.
pub fn spans_to_labels(spans: &[EntitySpan], len: usize) -> Vec<String> {
    let mut labels = alloc::vec!["O".to_string(); len];
    for span in spans {
        labels[span.start] = alloc::format!("B-{}", span.entity_type);
        for slot in labels.iter_mut().take(span.end + 1).skip(span.start + 1) {
            *slot = alloc::format!("I-{}", span.entity_type);
        }
    }
    labels
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EvalCounts {
    pub gold: usize,
    pub predicted: usize,
    pub correct: usize,
}

/// Precision/recall/F1 over exact (type, start, end) matches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub counts: EvalCounts,
}

impl Score {
    fn from_counts(counts: EvalCounts) -> Self {
        let precision = ratio(counts.correct, counts.predicted);
        let recall = ratio(counts.correct, counts.gold);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Score { precision, recall, f1, counts }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub overall: Score,
    pub per_type: BTreeMap<String, Score>,
}

/// Evaluation contract violations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalError {
    /// Differing sentence counts, or differing lengths at this sentence.
    ShapeMismatch { sentence: usize },
    Label(BadLabel),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::ShapeMismatch { sentence } => {
                write!(f, "gold/prediction shapes diverge at sentence {sentence}")
            }
            EvalError::Label(e) => e.fmt(f),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for EvalError {}

impl From<BadLabel> for EvalError {
    fn from(e: BadLabel) -> Self {
        EvalError::Label(e)
    }
}

fn check_shapes<A: AsRef<str>, B: AsRef<str>>(
    gold: &[Vec<A>],
    pred: &[Vec<B>],
) -> Result<(), EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::ShapeMismatch { sentence: gold.len().min(pred.len()) });
    }
    for (i, (g, p)) in gold.iter().zip(pred).enumerate() {
        if g.len() != p.len() {
            return Err(EvalError::ShapeMismatch { sentence: i });
        }
    }
    Ok(())
}

/// Entity-level F1 over aligned gold and predicted label sequences.
pub fn f1_score<A: AsRef<str>, B: AsRef<str>>(
    gold: &[Vec<A>],
    pred: &[Vec<B>],
) -> Result<EvalResult, EvalError> {
    check_shapes(gold, pred)?;
    let mut overall = EvalCounts::default();
    let mut per_type: BTreeMap<String, EvalCounts> = BTreeMap::new();
    for (g, p) in gold.iter().zip(pred) {
        let gs = extract_spans(g)?;
        let ps = extract_spans(p)?;
        for span in &gs {
            per_type.entry(span.entity_type.clone()).or_default().gold += 1;
            overall.gold += 1;
        }
        for span in &ps {
            let slot = per_type.entry(span.entity_type.clone()).or_default();
            slot.predicted += 1;
            overall.predicted += 1;
            if gs.contains(span) {
                slot.correct += 1;
                overall.correct += 1;
            }
        }
    }
    Ok(EvalResult {
        overall: Score::from_counts(overall),
        per_type: per_type
            .into_iter()
            .map(|(ty, c)| (ty, Score::from_counts(c)))
            .collect(),
    })
}

/// Correctness unit for McNemar's test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum McNemarUnit {
    /// Per-token label equality against gold.
    #[default]
    Token,
    /// Per gold entity: exact reproduction by each system.
    Entity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McNemarResult {
    /// Units system A got right and system B got wrong.
    pub b: usize,
    /// Units system A got wrong and system B got right.
    pub c: usize,
    pub chi_square: f64,
    pub significant_at_95: bool,
}

/// Continuity-corrected McNemar statistic over the discordant counts:
/// χ² = (max(|b−c|−1, 0))² / (b+c), zero when b+c = 0.
pub fn mcnemar<A: AsRef<str>, B: AsRef<str>, C: AsRef<str>>(
    gold: &[Vec<A>],
    pred_a: &[Vec<B>],
    pred_b: &[Vec<C>],
    unit: McNemarUnit,
) -> Result<McNemarResult, EvalError> {
    check_shapes(gold, pred_a)?;
    check_shapes(gold, pred_b)?;
    let mut b_count = 0usize;
    let mut c_count = 0usize;
    match unit {
        McNemarUnit::Token => {
            for ((g, a), b) in gold.iter().zip(pred_a).zip(pred_b) {
                for ((gt, at), bt) in g.iter().zip(a).zip(b) {
                    let a_ok = at.as_ref() == gt.as_ref();
                    let b_ok = bt.as_ref() == gt.as_ref();
                    if a_ok && !b_ok {
                        b_count += 1;
                    } else if !a_ok && b_ok {
                        c_count += 1;
                    }
                }
            }
        }
        McNemarUnit::Entity => {
            for ((g, a), b) in gold.iter().zip(pred_a).zip(pred_b) {
                let gs = extract_spans(g)?;
                let as_ = extract_spans(a)?;
                let bs = extract_spans(b)?;
                for span in &gs {
                    let a_ok = as_.contains(span);
                    let b_ok = bs.contains(span);
                    if a_ok && !b_ok {
                        b_count += 1;
                    } else if !a_ok && b_ok {
                        c_count += 1;
                    }
                }
            }
        }
    }
    Ok(mcnemar_from_counts(b_count, c_count))
}

/// The statistic itself, usable when discordant counts come from elsewhere.
pub fn mcnemar_from_counts(b: usize, c: usize) -> McNemarResult {
    let chi_square = if b + c == 0 {
        0.0
    } else {
        let diff = (b as f64 - c as f64).abs();
        let corrected = (diff - 1.0).max(0.0);
        corrected * corrected / (b + c) as f64
    };
    McNemarResult {
        b,
        c,
        chi_square,
        significant_at_95: chi_square > CHI_SQUARE_95,
    }
}

impl EvalResult {
    /// Plain-text table, F1 and friends as percentages with two decimals.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<12} {:>7} {:>7} {:>7} {:>6} {:>6} {:>6}",
            "type", "prec", "rec", "f1", "gold", "pred", "corr"
        );
        for (ty, s) in &self.per_type {
            let _ = writeln!(
                out,
                "{:<12} {:>7.2} {:>7.2} {:>7.2} {:>6} {:>6} {:>6}",
                ty,
                s.precision * 100.0,
                s.recall * 100.0,
                s.f1 * 100.0,
                s.counts.gold,
                s.counts.predicted,
                s.counts.correct
            );
        }
        let s = &self.overall;
        let _ = writeln!(
            out,
            "{:<12} {:>7.2} {:>7.2} {:>7.2} {:>6} {:>6} {:>6}",
            "ALL",
            s.precision * 100.0,
            s.recall * 100.0,
            s.f1 * 100.0,
            s.counts.gold,
            s.counts.predicted,
            s.counts.correct
        );
        out
    }

    /// Line-delimited records for machine consumption.
    pub fn render_records(&self) -> String {
        let mut out = String::new();
        let line = |ty: &str, s: &Score, out: &mut String| {
            let _ = writeln!(
                out,
                "type={} precision={:.2} recall={:.2} f1={:.2} gold={} predicted={} correct={}",
                ty,
                s.precision * 100.0,
                s.recall * 100.0,
                s.f1 * 100.0,
                s.counts.gold,
                s.counts.predicted,
                s.counts.correct
            );
        };
        for (ty, s) in &self.per_type {
            line(ty, s, &mut out);
        }
        line("ALL", &self.overall, &mut out);
        out
    }
}

impl fmt::Display for McNemarResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "b={} c={} chi_square={:.2} {}",
            self.b,
            self.c,
            self.chi_square,
            if self.significant_at_95 {
                "significant at 95%"
            } else {
                "not significant at 95%"
            }
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn labels(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    fn span(ty: &str, start: usize, end: usize) -> EntitySpan {
        EntitySpan { entity_type: ty.to_string(), start, end }
    }

    #[test]
    fn extract_basic_span() {
        let spans = extract_spans(&labels(&["B-PER", "I-PER", "O"])).unwrap();
        assert_eq!(spans, vec![span("PER", 0, 1)]);
    }

    #[test]
    fn extract_nothing_from_outside_only() {
        assert!(extract_spans(&labels(&["O", "O"])).unwrap().is_empty());
    }

    #[test]
    fn adjacent_begins_are_two_spans() {
        let spans = extract_spans(&labels(&["B-PER", "B-PER"])).unwrap();
        assert_eq!(spans, vec![span("PER", 0, 0), span("PER", 1, 1)]);
    }

    #[test]
    fn orphan_inside_opens_a_span() {
        let spans = extract_spans(&labels(&["O", "I-LOC", "I-LOC"])).unwrap();
        assert_eq!(spans, vec![span("LOC", 1, 2)]);
        let spans = extract_spans(&labels(&["B-PER", "I-LOC"])).unwrap();
        assert_eq!(spans, vec![span("PER", 0, 0), span("LOC", 1, 1)]);
    }

    #[test]
    fn span_reaching_the_end_is_closed() {
        let spans = extract_spans(&labels(&["O", "B-ORG", "I-ORG"])).unwrap();
        assert_eq!(spans, vec![span("ORG", 1, 2)]);
    }

    #[test]
    fn malformed_label_is_rejected() {
        assert!(extract_spans(&labels(&["B-PER", "X-PER"])).is_err());
        assert!(extract_spans(&labels(&["B-"])).is_err());
        assert!(extract_spans(&labels(&["o"])).is_err());
    }

    #[test]
    fn spans_to_labels_roundtrip() {
        let original = vec![span("PER", 0, 1), span("LOC", 3, 3)];
        let rendered = spans_to_labels(&original, 5);
        assert_eq!(rendered, labels(&["B-PER", "I-PER", "O", "B-LOC", "O"]));
        assert_eq!(extract_spans(&rendered).unwrap(), original);
    }

    #[test]
    fn perfect_prediction_scores_one() {
        let gold = vec![labels(&["B-PER", "I-PER", "O"])];
        let r = f1_score(&gold, &gold).unwrap();
        assert_eq!(r.overall.precision, 1.0);
        assert_eq!(r.overall.recall, 1.0);
        assert_eq!(r.overall.f1, 1.0);
    }

    #[test]
    fn boundary_mismatch_scores_zero() {
        let gold = vec![labels(&["B-PER", "I-PER", "O"])];
        let pred = vec![labels(&["B-PER", "O", "O"])];
        let r = f1_score(&gold, &pred).unwrap();
        assert_eq!(r.overall.counts.correct, 0);
        assert_eq!(r.overall.precision, 0.0);
        assert_eq!(r.overall.recall, 0.0);
        assert_eq!(r.overall.f1, 0.0);
    }

    #[test]
    fn one_right_one_invented_is_half() {
        // gold two spans; prediction reproduces one exactly and invents one wrong
        let gold = vec![labels(&["B-PER", "O", "B-LOC", "O"])];
        let pred = vec![labels(&["B-PER", "O", "O", "B-LOC"])];
        let r = f1_score(&gold, &pred).unwrap();
        assert_eq!(r.overall.counts, EvalCounts { gold: 2, predicted: 2, correct: 1 });
        assert_eq!(r.overall.precision, 0.5);
        assert_eq!(r.overall.recall, 0.5);
        assert_eq!(r.overall.f1, 0.5);
    }

    #[test]
    fn per_type_breakdown() {
        let gold = vec![labels(&["B-PER", "O", "B-LOC"])];
        let pred = vec![labels(&["B-PER", "O", "B-ORG"])];
        let r = f1_score(&gold, &pred).unwrap();
        assert_eq!(r.per_type["PER"].f1, 1.0);
        assert_eq!(r.per_type["LOC"].counts, EvalCounts { gold: 1, predicted: 0, correct: 0 });
        assert_eq!(r.per_type["ORG"].counts, EvalCounts { gold: 0, predicted: 1, correct: 0 });
    }

    #[test]
    fn empty_everything_scores_zero_not_nan() {
        let gold = vec![labels(&["O", "O"])];
        let r = f1_score(&gold, &gold).unwrap();
        assert_eq!(r.overall.precision, 0.0);
        assert_eq!(r.overall.recall, 0.0);
        assert_eq!(r.overall.f1, 0.0);
    }

    #[test]
    fn shape_mismatch_names_first_divergent_sentence() {
        let gold = vec![labels(&["O"]), labels(&["O", "O"])];
        let pred = vec![labels(&["O"]), labels(&["O"])];
        assert_eq!(
            f1_score(&gold, &pred).unwrap_err(),
            EvalError::ShapeMismatch { sentence: 1 }
        );
    }

    #[test]
    fn reordering_sentences_does_not_change_f1() {
        let gold = vec![labels(&["B-PER", "O"]), labels(&["O", "B-LOC"])];
        let pred = vec![labels(&["B-PER", "O"]), labels(&["B-LOC", "O"])];
        let r1 = f1_score(&gold, &pred).unwrap();
        let gold_r: Vec<_> = gold.iter().rev().cloned().collect();
        let pred_r: Vec<_> = pred.iter().rev().cloned().collect();
        let r2 = f1_score(&gold_r, &pred_r).unwrap();
        assert_eq!(r1.overall, r2.overall);
    }

    #[test]
    fn mcnemar_symmetric_disagreement_is_not_significant() {
        let r = mcnemar_from_counts(5, 5);
        assert_eq!(r.chi_square, 0.0);
        assert!(!r.significant_at_95);
    }

    #[test]
    fn mcnemar_ten_vs_two_is_significant() {
        let r = mcnemar_from_counts(10, 2);
        assert!((r.chi_square - 49.0 / 12.0).abs() < 1e-12);
        assert!(r.significant_at_95);
    }

    #[test]
    fn mcnemar_no_disagreement() {
        let r = mcnemar_from_counts(0, 0);
        assert_eq!(r.chi_square, 0.0);
        assert!(!r.significant_at_95);
    }

    #[test]
    fn mcnemar_token_unit_counts_discordant_tokens() {
        let gold = vec![labels(&["B-PER", "O", "O"])];
        let pa = vec![labels(&["B-PER", "O", "B-LOC"])]; // wrong at 2
        let pb = vec![labels(&["O", "O", "O"])]; // wrong at 0
        let r = mcnemar(&gold, &pa, &pb, McNemarUnit::Token).unwrap();
        assert_eq!((r.b, r.c), (1, 1));
    }

    #[test]
    fn mcnemar_entity_unit_counts_gold_entities() {
        let gold = vec![labels(&["B-PER", "I-PER", "O", "B-LOC"])];
        let pa = vec![labels(&["B-PER", "I-PER", "O", "O"])]; // has PER, misses LOC
        let pb = vec![labels(&["O", "O", "O", "B-LOC"])]; // misses PER, has LOC
        let r = mcnemar(&gold, &pa, &pb, McNemarUnit::Entity).unwrap();
        assert_eq!((r.b, r.c), (1, 1));
    }

    #[test]
    fn mcnemar_against_itself_is_never_significant() {
        let gold = vec![labels(&["B-PER", "O"])];
        let pred = vec![labels(&["O", "B-PER"])];
        let r = mcnemar(&gold, &pred, &pred, McNemarUnit::Token).unwrap();
        assert_eq!((r.b, r.c), (0, 0));
        assert!(!r.significant_at_95);
    }

    #[test]
    fn render_table_has_percentages() {
        let gold = vec![labels(&["B-PER", "O"])];
        let r = f1_score(&gold, &gold).unwrap();
        let table = r.render_table();
        assert!(table.contains("100.00"));
        assert!(table.contains("ALL"));
        let records = r.render_records();
        assert!(records.contains("type=ALL"));
        assert!(records.contains("f1=100.00"));
    }
}

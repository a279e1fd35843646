//! Property tests for span extraction and scoring.

use mner_core::eval::{extract_spans, f1_score, mcnemar, spans_to_labels, McNemarUnit};
use proptest::prelude::*;

fn label() -> impl Strategy<Value = String> {
    prop_oneof![
        3 => Just("O".to_string()),
        2 => prop_oneof![Just("PER"), Just("LOC"), Just("ORG")].prop_map(|t| format!("B-{t}")),
        2 => prop_oneof![Just("PER"), Just("LOC"), Just("ORG")].prop_map(|t| format!("I-{t}")),
    ]
}

fn sentence_labels() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(label(), 1..12)
}

fn corpus_labels() -> impl Strategy<Value = Vec<Vec<String>>> {
    prop::collection::vec(sentence_labels(), 1..5)
}

/// Aligned gold/pred pair.
fn aligned_pair() -> impl Strategy<Value = (Vec<Vec<String>>, Vec<Vec<String>>)> {
    corpus_labels().prop_flat_map(|gold| {
        let shapes: Vec<usize> = gold.iter().map(Vec::len).collect();
        let pred = shapes
            .into_iter()
            .map(|n| prop::collection::vec(label(), n..=n))
            .collect::<Vec<_>>();
        (Just(gold), pred)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn scores_stay_in_unit_interval((gold, pred) in aligned_pair()) {
        let r = f1_score(&gold, &pred).unwrap();
        for s in core::iter::once(&r.overall).chain(r.per_type.values()) {
            prop_assert!((0.0..=1.0).contains(&s.precision));
            prop_assert!((0.0..=1.0).contains(&s.recall));
            prop_assert!((0.0..=1.0).contains(&s.f1));
        }
        prop_assert!(r.overall.counts.correct <= r.overall.counts.gold);
        prop_assert!(r.overall.counts.correct <= r.overall.counts.predicted);
    }

    #[test]
    fn extract_after_render_is_identity(labels in sentence_labels()) {
        // spans extracted from any sequence render to clean IOB2 whose
        // extraction reproduces them exactly
        let spans = extract_spans(&labels).unwrap();
        let rendered = spans_to_labels(&spans, labels.len());
        prop_assert_eq!(extract_spans(&rendered).unwrap(), spans);
    }

    #[test]
    fn f1_is_invariant_under_sentence_reordering((gold, pred) in aligned_pair()) {
        let r1 = f1_score(&gold, &pred).unwrap();
        let mut order: Vec<usize> = (0..gold.len()).collect();
        order.reverse();
        let gold_r: Vec<_> = order.iter().map(|&i| gold[i].clone()).collect();
        let pred_r: Vec<_> = order.iter().map(|&i| pred[i].clone()).collect();
        let r2 = f1_score(&gold_r, &pred_r).unwrap();
        prop_assert_eq!(r1.overall, r2.overall);
    }

    #[test]
    fn self_comparison_is_never_significant((gold, pred) in aligned_pair()) {
        for unit in [McNemarUnit::Token, McNemarUnit::Entity] {
            let r = mcnemar(&gold, &pred, &pred, unit).unwrap();
            prop_assert_eq!((r.b, r.c), (0, 0));
            prop_assert!(!r.significant_at_95);
            prop_assert_eq!(r.chi_square, 0.0);
        }
    }

    #[test]
    fn perfect_prediction_is_perfect_score((gold, _) in aligned_pair()) {
        let r = f1_score(&gold, &gold).unwrap();
        let has_entities = r.overall.counts.gold > 0;
        if has_entities {
            prop_assert_eq!(r.overall.f1, 1.0);
        } else {
            prop_assert_eq!(r.overall.f1, 0.0);
        }
    }
}

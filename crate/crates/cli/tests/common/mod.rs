//! Shared test fixtures: a deterministic synthetic NER corpus.
//!
//! 50 sentences of 5 tokens over a 40-surface vocabulary with three entity
//! types. Labels follow the analyses: a token is an entity iff its first tag
//! group carries `Prop`, and the entity type comes from the root's class.
//! One token per sentence is a derived form (`^DB`), so exactly 20% of all
//! tokens cross a derivation boundary. One template is morphologically
//! ambiguous: the same surface bigram appears with a proper-noun reading
//! (`B-PER I-PER`) in half its rounds and a common-noun reading (`B-PER O`)
//! in the other half, so the label is decidable only from the analysis.

use mner_core::corpus::{Sentence, Token};
use mner_core::morpho::MorphAnalysis;

const PFIRST: [&str; 4] = ["ali", "veli", "ayşe", "fatma"];
const AMB: [&str; 4] = ["demir", "çelik", "kaya", "kurt"];
const LOC: [&str; 4] = ["izmir", "ankara", "bursa", "konya"];
const ORG: [&str; 4] = ["aselsan", "havelsan", "roketsan", "botaş"];
const DERIVED: [(&str, &str); 4] = [
    ("evdeydi", "ev"),
    ("okuldaydı", "okul"),
    ("yoldaydı", "yol"),
    ("sudaydı", "su"),
];
const VERB: [(&str, &str); 4] = [
    ("geldi", "gel"),
    ("gitti", "git"),
    ("aldı", "al"),
    ("verdi", "ver"),
];
const NOUN: [&str; 4] = ["ev", "su", "yol", "okul"];
const ADJ: [&str; 4] = ["büyük", "küçük", "eski", "yeni"];
const TIME: [&str; 4] = ["dün", "bugün", "yarın", "şimdi"];
const MISC: [&str; 4] = ["çok", "az", "sonra", "önce"];

fn tok(surface: &str, analysis: String, label: &str) -> Token {
    Token {
        surface: surface.to_string(),
        analysis: MorphAnalysis::parse(&analysis).unwrap(),
        label: label.to_string(),
    }
}

fn proper(root: &str) -> String {
    format!("{root}+Noun+Prop+A3sg+Pnon+Nom")
}

fn common(root: &str) -> String {
    format!("{root}+Noun+A3sg+Pnon+Nom")
}

fn derived(surface_root: &str) -> String {
    format!("{surface_root}+Noun+A3sg+Pnon+Loc^DB+Verb+Zero+Past+A3sg")
}

fn verb(root: &str) -> String {
    format!("{root}+Verb+Pos+Past+A3sg")
}

fn adj(root: &str) -> String {
    format!("{root}+Adj")
}

fn adv(root: &str) -> String {
    format!("{root}+Adv")
}

/// The full 50-sentence corpus. Purely deterministic.
pub fn synthetic_corpus() -> Vec<Sentence> {
    let mut sentences = Vec::with_capacity(50);
    for round in 0..10usize {
        let r = round % 4;
        let r1 = (round + 1) % 4;
        let der = DERIVED[r];
        let vb = VERB[r];

        // ambiguous template: adjacent rounds repeat the exact same surface
        // sequence, so only the analysis decides the second token's label
        let pair = (round / 2) % 4;
        let name_reading = round % 2 == 0;
        let (amb_analysis, amb_label) = if name_reading {
            (proper(AMB[pair]), "I-PER")
        } else {
            (common(AMB[pair]), "O")
        };
        sentences.push(Sentence::new(vec![
            tok(PFIRST[pair], proper(PFIRST[pair]), "B-PER"),
            tok(AMB[pair], amb_analysis, amb_label),
            tok(TIME[pair], adv(TIME[pair]), "O"),
            tok(DERIVED[pair].0, derived(DERIVED[pair].1), "O"),
            tok(VERB[pair].0, verb(VERB[pair].1), "O"),
        ]));

        sentences.push(Sentence::new(vec![
            tok(AMB[r], common(AMB[r]), "O"),
            tok(ADJ[r], adj(ADJ[r]), "O"),
            tok(LOC[r], proper(LOC[r]), "B-LOC"),
            tok(der.0, derived(der.1), "O"),
            tok(vb.0, verb(vb.1), "O"),
        ]));

        sentences.push(Sentence::new(vec![
            tok(ORG[r], proper(ORG[r]), "B-ORG"),
            tok(NOUN[r], common(NOUN[r]), "O"),
            tok(der.0, derived(der.1), "O"),
            tok(MISC[r], adv(MISC[r]), "O"),
            tok(vb.0, verb(vb.1), "O"),
        ]));

        sentences.push(Sentence::new(vec![
            tok(LOC[r1], proper(LOC[r1]), "B-LOC"),
            tok(der.0, derived(der.1), "O"),
            tok(PFIRST[r], proper(PFIRST[r]), "B-PER"),
            tok(PFIRST[r1], proper(PFIRST[r1]), "I-PER"),
            tok(vb.0, verb(vb.1), "O"),
        ]));

        sentences.push(Sentence::new(vec![
            tok(NOUN[r1], common(NOUN[r1]), "O"),
            tok(AMB[r1], common(AMB[r1]), "O"),
            tok(der.0, derived(der.1), "O"),
            tok(ADJ[r1], adj(ADJ[r1]), "O"),
            tok(MISC[r1], adv(MISC[r1]), "O"),
        ]));
    }
    sentences
}

/// Corpus statistics the fixture guarantees.
#[allow(dead_code)]
pub fn corpus_facts(sentences: &[Sentence]) -> (usize, usize, f64) {
    let mut surfaces = std::collections::BTreeSet::new();
    let mut tokens = 0usize;
    let mut db_tokens = 0usize;
    for s in sentences {
        for t in s.tokens() {
            surfaces.insert(t.surface.clone());
            tokens += 1;
            if t.analysis.groups().len() > 1 {
                db_tokens += 1;
            }
        }
    }
    (surfaces.len(), tokens, db_tokens as f64 / tokens as f64)
}

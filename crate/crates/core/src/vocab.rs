//! Symbol tables with stable first-occurrence ordering.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

/// Reserved symbol for out-of-vocabulary lookups.
pub const UNK: &str = "<unk>";
/// Reserved padding symbol (id 1 in vocabularies that carry specials).
pub const PAD: &str = "<pad>";
/// Reserved stand-in for an empty morphological projection, so sequence
/// encoders always receive at least one symbol.
pub const EMPTY: &str = "<empty>";

/// Bijection between symbols and dense ids, in first-insertion order.
///
/// Vocabularies over words, characters, and morphological symbols carry the
/// `UNK`/`PAD` specials at ids 0 and 1; the label vocabulary does not (every
/// label must be known).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    symbols: Vec<String>,
    index: BTreeMap<String, u32>,
    has_specials: bool,
}

impl Vocab {
    /// Empty vocabulary without reserved symbols.
    pub fn plain() -> Self {
        Vocab {
            symbols: Vec::new(),
            index: BTreeMap::new(),
            has_specials: false,
        }
    }

    /// Vocabulary seeded with `UNK` (id 0) and `PAD` (id 1).
    pub fn with_specials() -> Self {
        let mut v = Vocab::plain();
        v.insert(UNK);
        v.insert(PAD);
        v.has_specials = true;
        v
    }

    /// Rebuild from an ordered symbol list (e.g. read back from a model file).
    pub fn from_symbols<S: AsRef<str>>(symbols: &[S], has_specials: bool) -> Self {
        let mut v = Vocab::plain();
        for s in symbols {
            v.insert(s.as_ref());
        }
        if has_specials {
            assert!(
                v.symbols.len() >= 2 && v.symbols[0] == UNK && v.symbols[1] == PAD,
                "special-carrying vocab must start with {UNK}, {PAD}"
            );
        }
        v.has_specials = has_specials;
        v
    }

    /// Id of `sym`, inserting it if new.
    pub fn insert(&mut self, sym: &str) -> u32 {
        if let Some(&id) = self.index.get(sym) {
            return id;
        }
        let id = u32::try_from(self.symbols.len()).expect("vocabulary exceeds u32 ids");
        self.symbols.push(sym.to_string());
        self.index.insert(sym.to_string(), id);
        id
    }

    pub fn id(&self, sym: &str) -> Option<u32> {
        self.index.get(sym).copied()
    }

    /// Id of `sym`, falling back to `UNK`. Panics on a vocabulary without
    /// specials.
    pub fn id_or_unk(&self, sym: &str) -> u32 {
        self.id(sym).unwrap_or_else(|| {
            self.unk_id()
                .expect("id_or_unk on a vocabulary without UNK")
        })
    }

    pub fn symbol(&self, id: u32) -> &str {
        &self.symbols[id as usize]
    }

    pub fn unk_id(&self) -> Option<u32> {
        self.has_specials.then_some(0)
    }

    pub fn pad_id(&self) -> Option<u32> {
        self.has_specials.then_some(1)
    }

    pub fn has_specials(&self) -> bool {
        self.has_specials
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn contains(&self, sym: &str) -> bool {
        self.index.contains_key(sym)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insert_is_idempotent_and_ordered() {
        let mut v = Vocab::with_specials();
        assert_eq!(v.insert("ev"), 2);
        assert_eq!(v.insert("ev"), 2);
        assert_eq!(v.len(), 3);
        assert_eq!(v.symbols(), &[UNK, PAD, "ev"]);
        assert_eq!(v.unk_id(), Some(0));
        assert_eq!(v.pad_id(), Some(1));
    }

    #[test]
    fn plain_vocab_has_no_specials() {
        let mut v = Vocab::plain();
        v.insert("O");
        v.insert("B-PERSON");
        assert_eq!(v.len(), 2);
        assert_eq!(v.unk_id(), None);
        assert_eq!(v.id("O"), Some(0));
    }

    #[test]
    fn unk_fallback() {
        let mut v = Vocab::with_specials();
        v.insert("ev");
        assert_eq!(v.id_or_unk("ev"), 2);
        assert_eq!(v.id_or_unk("yok"), 0);
    }

    #[test]
    fn from_symbols_roundtrip() {
        let mut v = Vocab::with_specials();
        v.insert("a");
        v.insert("b");
        let back = Vocab::from_symbols(v.symbols(), true);
        assert_eq!(back, v);
    }

    #[test]
    #[should_panic]
    fn from_symbols_rejects_bad_specials() {
        Vocab::from_symbols(&["a", "b"], true);
    }
}

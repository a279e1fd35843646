//! Neural sequence labeling core.
//!
//! Everything needed to build, train, and run a Bi-LSTM-CRF named-entity
//! tagger whose word representations can mix pretrained word vectors,
//! character embeddings, and morphological-analysis embeddings:
//!
//! * [`morpho`] — morphological analysis strings and the four projection
//!   schemes (`WR`, `WOR`, `WR_ADB`, `CHAR`)
//! * [`tensor`] / [`tape`] / [`lstm`] — a small f64 reverse-mode autodiff
//!   engine with embedding lookup, LSTM cells, and SGD with gradient clipping
//! * [`crf`] — linear-chain CRF scoring, exact log-partition, Viterbi
//!   decoding, and the NLL training objective
//! * [`tagger`] — the assembled model
//! * [`corpus`] — token/sentence data model, vocabularies, embedding tables
//! * [`eval`] — entity-level precision/recall/F1 and McNemar's test
//!
//! The crate is `no_std`-compatible (requires `alloc`; enable the `libm`
//! feature when building without `std`). File formats, training-loop IO, and
//! the command line live in the companion `mner-cli` crate.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod corpus;
pub mod crf;
pub mod eval;
pub mod gradcheck;
pub mod lstm;
pub mod math;
pub mod morpho;
pub mod rng;
pub mod serialize;
pub mod tagger;
pub mod tape;
pub mod tensor;
pub mod vocab;

//! IO, training loop, and file plumbing for the `mner` tagger binary.

pub mod files;
pub mod training;

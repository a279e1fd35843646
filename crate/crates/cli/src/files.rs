//! Filesystem wrappers around the core parsers and the model format.

use std::fs;
use std::io;
use std::path::Path;

use anyhow::Context;
use mner_core::corpus::{parse_corpus, CorpusOptions, EmbeddingTable, ParsedCorpus};
use mner_core::serialize::{model_from_bytes, model_to_bytes, RngSnapshot};
use mner_core::tagger::TaggerModel;

/// Read and parse a corpus file.
pub fn load_corpus(path: &Path, opts: CorpusOptions) -> anyhow::Result<ParsedCorpus> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read corpus `{}`", path.display()))?;
    parse_corpus(&text, opts).with_context(|| format!("in corpus `{}`", path.display()))
}

/// Read and parse a pretrained embedding file, checking the dimension.
pub fn load_embeddings(path: &Path, expected_dim: usize) -> anyhow::Result<EmbeddingTable> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read embeddings `{}`", path.display()))?;
    EmbeddingTable::parse(&text, expected_dim)
        .with_context(|| format!("in embeddings `{}`", path.display()))
}

/// Load a model file or checkpoint.
pub fn load_model(path: &Path) -> anyhow::Result<(TaggerModel, Option<RngSnapshot>)> {
    let bytes =
        fs::read(path).with_context(|| format!("cannot read model `{}`", path.display()))?;
    model_from_bytes(&bytes).with_context(|| format!("in model `{}`", path.display()))
}

/// Serialize and write a model atomically.
pub fn save_model(path: &Path, model: &TaggerModel) -> anyhow::Result<()> {
    write_atomic(path, &model_to_bytes(model))
        .with_context(|| format!("cannot write model `{}`", path.display()))
}

/// Write via a temporary sibling file and rename, so a failed write never
/// leaves a partial file at `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = match path.file_name() {
        Some(name) => {
            let mut tmp_name = name.to_os_string();
            tmp_name.push(".tmp");
            path.with_file_name(tmp_name)
        }
        None => return Err(io::Error::new(io::ErrorKind::InvalidInput, "path has no file name")),
    };
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

/// Writer that duplicates everything to two sinks (log file + console).
pub struct Tee<A: io::Write, B: io::Write>(pub A, pub B);

impl<A: io::Write, B: io::Write> io::Write for Tee<A, B> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.0.write_all(buf)?;
        self.1.write_all(buf)?;
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        self.0.flush()?;
        self.1.flush()
    }
}

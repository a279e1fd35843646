//! Binary model format.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic        4 bytes, "MNER"
//! version      u32 (currently 1)
//! config       word_dim u32, char_dim u32, morph_dim u32, hidden_dim u32,
//!              use_char u8, morph_scheme u8 (0=none 1=wr 2=wor 3=wr_adb 4=char),
//!              fine_tune_words u8, constrain_decode u8,
//!              dropout_rate f64, seed u64
//! vocabs       4 blocks in order word, chars, morph, label:
//!              has_specials u8, count u32, then per symbol: len u32 + UTF-8
//! params       count u32, then per tensor in store order:
//!              name (len u32 + UTF-8), requires_grad u8,
//!              ndim u32, dims u32 × ndim, values f64 × prod(dims)
//! rng          present u8; when 1: algorithm (len u32 + UTF-8), state u64 × 4
//! ```
//!
//! Plain model files write `present = 0`; training checkpoints append the
//! generator state so a resumed run continues the exact random stream.
//! Gradient buffers are not stored and come back zeroed.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::corpus::Vocabs;
use crate::morpho::Scheme;
use crate::rng::{Rng, RNG_ALGORITHM};
use crate::tagger::{ModelError, TaggerConfig, TaggerModel};
use crate::tensor::{ParamStore, Tensor};
use crate::vocab::Vocab;

pub const MAGIC: [u8; 4] = *b"MNER";
pub const FORMAT_VERSION: u32 = 1;

/// Saved generator state, for checkpoint resume.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngSnapshot {
    pub algorithm: String,
    pub state: [u64; 4],
}

impl RngSnapshot {
    pub fn of(rng: &Rng) -> Self {
        RngSnapshot { algorithm: RNG_ALGORITHM.to_string(), state: rng.state() }
    }

    pub fn restore(&self) -> Result<Rng, LoadError> {
        if self.algorithm != RNG_ALGORITHM {
            return Err(LoadError::UnknownRngAlgorithm(self.algorithm.clone()));
        }
        Ok(Rng::from_state(self.state))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LoadError {
    UnexpectedEof,
    BadMagic,
    UnsupportedVersion(u32),
    BadUtf8,
    BadScheme(u8),
    BadBool(u8),
    BadVocab(&'static str),
    TrailingBytes,
    UnknownRngAlgorithm(String),
    Model(ModelError),
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadError::UnexpectedEof => write!(f, "model file is truncated"),
            LoadError::BadMagic => write!(f, "not a model file (bad magic)"),
            LoadError::UnsupportedVersion(v) => {
                write!(f, "unsupported model format version {v} (reader supports {FORMAT_VERSION})")
            }
            LoadError::BadUtf8 => write!(f, "malformed UTF-8 string"),
            LoadError::BadScheme(b) => write!(f, "unknown scheme byte {b}"),
            LoadError::BadBool(b) => write!(f, "malformed boolean byte {b}"),
            LoadError::BadVocab(which) => write!(f, "malformed {which} vocabulary"),
            LoadError::TrailingBytes => write!(f, "trailing bytes after model payload"),
            LoadError::UnknownRngAlgorithm(a) => write!(f, "unknown RNG algorithm `{a}`"),
            LoadError::Model(e) => e.fmt(f),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for LoadError {}

impl From<ModelError> for LoadError {
    fn from(e: ModelError) -> Self {
        LoadError::Model(e)
    }
}

fn scheme_byte(s: Option<Scheme>) -> u8 {
    match s {
        None => 0,
        Some(Scheme::Wr) => 1,
        Some(Scheme::Wor) => 2,
        Some(Scheme::WrAdb) => 3,
        Some(Scheme::Char) => 4,
    }
}

fn byte_scheme(b: u8) -> Result<Option<Scheme>, LoadError> {
    Ok(match b {
        0 => None,
        1 => Some(Scheme::Wr),
        2 => Some(Scheme::Wor),
        3 => Some(Scheme::WrAdb),
        4 => Some(Scheme::Char),
        other => return Err(LoadError::BadScheme(other)),
    })
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new() -> Self {
        Writer { buf: Vec::new() }
    }

    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn bool(&mut self, v: bool) {
        self.u8(v as u8);
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }

    fn vocab(&mut self, v: &Vocab) {
        self.bool(v.has_specials());
        self.u32(v.len() as u32);
        for sym in v.symbols() {
            self.str(sym);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], LoadError> {
        if self.pos + n > self.buf.len() {
            return Err(LoadError::UnexpectedEof);
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, LoadError> {
        Ok(self.take(1)?[0])
    }

    fn bool(&mut self) -> Result<bool, LoadError> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(LoadError::BadBool(other)),
        }
    }

    fn u32(&mut self) -> Result<u32, LoadError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, LoadError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64, LoadError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn str(&mut self) -> Result<String, LoadError> {
        let len = self.u32()? as usize;
        let bytes = self.take(len)?;
        core::str::from_utf8(bytes)
            .map(|s| s.to_string())
            .map_err(|_| LoadError::BadUtf8)
    }

    fn vocab(&mut self, which: &'static str) -> Result<Vocab, LoadError> {
        let has_specials = self.bool()?;
        let count = self.u32()? as usize;
        let mut symbols = Vec::with_capacity(count);
        for _ in 0..count {
            symbols.push(self.str()?);
        }
        if has_specials
            && (symbols.len() < 2
                || symbols[0] != crate::vocab::UNK
                || symbols[1] != crate::vocab::PAD)
        {
            return Err(LoadError::BadVocab(which));
        }
        let mut v = Vocab::plain();
        for (i, s) in symbols.iter().enumerate() {
            if v.insert(s) as usize != i {
                return Err(LoadError::BadVocab(which)); // duplicate symbol
            }
        }
        Ok(Vocab::from_symbols(v.symbols(), has_specials))
    }

    fn done(&self) -> bool {
        self.pos == self.buf.len()
    }
}

fn write_payload(model: &TaggerModel, rng: Option<&Rng>) -> Vec<u8> {
    let mut w = Writer::new();
    w.buf.extend_from_slice(&MAGIC);
    w.u32(FORMAT_VERSION);

    let c = &model.config;
    w.u32(c.word_dim as u32);
    w.u32(c.char_dim as u32);
    w.u32(c.morph_dim as u32);
    w.u32(c.hidden_dim as u32);
    w.bool(c.use_char);
    w.u8(scheme_byte(c.morph_scheme));
    w.bool(c.fine_tune_words);
    w.bool(c.constrain_decode);
    w.f64(c.dropout_rate);
    w.u64(c.seed);

    w.vocab(&model.vocabs.word);
    w.vocab(&model.vocabs.chars);
    w.vocab(&model.vocabs.morph);
    w.vocab(&model.vocabs.label);

    w.u32(model.params.len() as u32);
    for (_, name, tensor) in model.params.iter() {
        w.str(name);
        w.bool(tensor.requires_grad());
        w.u32(tensor.shape().len() as u32);
        for &d in tensor.shape() {
            w.u32(d as u32);
        }
        for &v in tensor.values() {
            w.f64(v);
        }
    }

    match rng {
        Some(rng) => {
            w.bool(true);
            w.str(RNG_ALGORITHM);
            for word in rng.state() {
                w.u64(word);
            }
        }
        None => w.bool(false),
    }
    w.buf
}

/// Serialize a model (no RNG record).
pub fn model_to_bytes(model: &TaggerModel) -> Vec<u8> {
    write_payload(model, None)
}

/// Serialize a training checkpoint: the model plus the generator state.
pub fn checkpoint_to_bytes(model: &TaggerModel, rng: &Rng) -> Vec<u8> {
    write_payload(model, Some(rng))
}

/// Deserialize a model file or checkpoint.
pub fn model_from_bytes(bytes: &[u8]) -> Result<(TaggerModel, Option<RngSnapshot>), LoadError> {
    let mut r = Reader::new(bytes);
    if r.take(4)? != MAGIC {
        return Err(LoadError::BadMagic);
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(LoadError::UnsupportedVersion(version));
    }

    let word_dim = r.u32()? as usize;
    let char_dim = r.u32()? as usize;
    let morph_dim = r.u32()? as usize;
    let hidden_dim = r.u32()? as usize;
    let use_char = r.bool()?;
    let morph_scheme = byte_scheme(r.u8()?)?;
    let fine_tune_words = r.bool()?;
    let constrain_decode = r.bool()?;
    let dropout_rate = r.f64()?;
    let seed = r.u64()?;
    let config = TaggerConfig {
        word_dim,
        char_dim,
        morph_dim,
        hidden_dim,
        use_char,
        morph_scheme,
        dropout_rate,
        seed,
        fine_tune_words,
        constrain_decode,
    };

    let vocabs = Vocabs {
        word: r.vocab("word")?,
        chars: r.vocab("character")?,
        morph: r.vocab("morph")?,
        label: r.vocab("label")?,
    };

    let count = r.u32()? as usize;
    let mut params = ParamStore::new();
    for _ in 0..count {
        let name = r.str()?;
        let requires_grad = r.bool()?;
        let ndim = r.u32()? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(r.u32()? as usize);
        }
        let len: usize = shape.iter().product();
        let mut values = Vec::with_capacity(len);
        for _ in 0..len {
            values.push(r.f64()?);
        }
        let mut tensor = Tensor::from_values(&shape, values);
        tensor.set_requires_grad(requires_grad);
        if params.id(&name).is_some() {
            return Err(LoadError::BadVocab("parameter")); // duplicate name
        }
        params.add(&name, tensor);
    }

    let rng = if r.bool()? {
        let algorithm = r.str()?;
        let state = [r.u64()?, r.u64()?, r.u64()?, r.u64()?];
        Some(RngSnapshot { algorithm, state })
    } else {
        None
    };

    if !r.done() {
        return Err(LoadError::TrailingBytes);
    }

    let model = TaggerModel::from_parts(config, vocabs, params)?;
    Ok((model, rng))
}

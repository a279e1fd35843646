//! Morphological analysis strings and their projections to symbol sequences.
//!
//! An analysis string looks like
//! `İstanbul+Noun+Prop+A3sg+Pnon+Loc^DB+Verb+Zero+Past+A3sg`: a surface root,
//! `+`-separated tags, and `^DB` markers wherever a derivation changes the
//! word's part of speech. [`MorphAnalysis::parse`] splits such a string into
//! the root and one tag group per derivation segment, and
//! [`MorphAnalysis::project`] turns the parse into a symbol sequence under one
//! of four schemes ([`Scheme`]) for consumption by a sequence encoder.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

/// Derivation boundary marker, kept verbatim as a vocabulary symbol in the
/// tag-level schemes.
pub const DB: &str = "^DB";

/// How a morphological analysis is projected to a symbol sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Root followed by every tag of every group, `^DB` between groups.
    Wr,
    /// All tags of all groups (with `^DB`), root dropped.
    Wor,
    /// Root, then `^DB` and the tags after the first derivation boundary;
    /// the first group's tags are removed.
    WrAdb,
    /// The raw analysis string split into individual characters.
    Char,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Wr, Scheme::Wor, Scheme::WrAdb, Scheme::Char];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Wr => "wr",
            Scheme::Wor => "wor",
            Scheme::WrAdb => "wr_adb",
            Scheme::Char => "char",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Error for an unrecognized scheme name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownScheme(pub String);

impl fmt::Display for UnknownScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unknown scheme `{}` (expected one of: wr, wor, wr_adb, char)",
            self.0
        )
    }
}

#[cfg(feature = "std")]
impl std::error::Error for UnknownScheme {}

impl FromStr for Scheme {
    type Err = UnknownScheme;

    /// Case-insensitive; round-trips with [`Scheme::name`].
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_lowercase();
        match lower.as_str() {
            "wr" => Ok(Scheme::Wr),
            "wor" => Ok(Scheme::Wor),
            "wr_adb" => Ok(Scheme::WrAdb),
            "char" => Ok(Scheme::Char),
            _ => Err(UnknownScheme(s.to_string())),
        }
    }
}

/// Why an analysis string failed to parse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseError {
    Empty,
    ContainsWhitespace,
    EmptyRoot,
    EmptyTag,
    /// `^DB` appeared before any `+`-separated tag.
    BoundaryBeforeTags,
    /// `^DB` not followed by `+tag`.
    DanglingBoundary,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            ParseError::Empty => "empty analysis string",
            ParseError::ContainsWhitespace => "analysis string contains whitespace",
            ParseError::EmptyRoot => "analysis has an empty root",
            ParseError::EmptyTag => "analysis has an empty tag",
            ParseError::BoundaryBeforeTags => "derivation boundary before any tag",
            ParseError::DanglingBoundary => "derivation boundary not followed by `+tag`",
        };
        f.write_str(msg)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ParseError {}

/// A parsed morphological analysis: root plus one tag group per derivation
/// segment. The original string is retained for the `CHAR` scheme and for
/// loss-free reserialization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MorphAnalysis {
    root: String,
    groups: Vec<Vec<String>>,
    raw: String,
}

impl MorphAnalysis {
    /// Parse `root(+tag)*(^DB(+tag)+)*`.
    ///
    /// A bare root (`"x"`) parses as one group with zero tags. Malformed
    /// strings are rejected rather than repaired.
    pub fn parse(raw: &str) -> Result<Self, ParseError> {
        if raw.is_empty() {
            return Err(ParseError::Empty);
        }
        if raw.chars().any(char::is_whitespace) {
            return Err(ParseError::ContainsWhitespace);
        }

        let mut segments = raw.split(DB);
        let head = segments.next().expect("split yields at least one segment");
        let mut head_parts = head.split('+');
        let root = head_parts.next().expect("split yields at least one part");
        if root.is_empty() {
            return Err(ParseError::EmptyRoot);
        }

        let mut first_group = Vec::new();
        for tag in head_parts {
            if tag.is_empty() {
                return Err(ParseError::EmptyTag);
            }
            first_group.push(tag.to_string());
        }

        let mut groups = Vec::new();
        let has_boundary = raw.contains(DB);
        if has_boundary && first_group.is_empty() {
            return Err(ParseError::BoundaryBeforeTags);
        }
        groups.push(first_group);

        for segment in segments {
            let rest = segment
                .strip_prefix('+')
                .ok_or(ParseError::DanglingBoundary)?;
            let mut tags = Vec::new();
            for tag in rest.split('+') {
                if tag.is_empty() {
                    return Err(ParseError::EmptyTag);
                }
                tags.push(tag.to_string());
            }
            groups.push(tags);
        }

        Ok(MorphAnalysis {
            root: root.to_string(),
            groups,
            raw: raw.to_string(),
        })
    }

    pub fn root(&self) -> &str {
        &self.root
    }

    /// Tag groups in order; `groups().len() == 1 + number of ^DB markers`.
    pub fn groups(&self) -> &[Vec<String>] {
        &self.groups
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    /// Rebuild the analysis string from the parse; equals [`raw`](Self::raw)
    /// for anything produced by [`parse`](Self::parse).
    pub fn serialize(&self) -> String {
        let mut out = self.root.clone();
        for (gi, group) in self.groups.iter().enumerate() {
            if gi > 0 {
                out.push_str(DB);
            }
            for tag in group {
                out.push('+');
                out.push_str(tag);
            }
        }
        out
    }

    /// Project the analysis to a symbol sequence under `scheme`.
    ///
    /// `WOR` on a bare root yields an empty sequence; callers that need a
    /// non-empty input substitute a reserved placeholder symbol.
    pub fn project(&self, scheme: Scheme) -> Vec<String> {
        match scheme {
            Scheme::Wr => {
                let mut out = Vec::new();
                out.push(self.root.clone());
                self.push_tags(&mut out, 0);
                out
            }
            Scheme::Wor => {
                let mut out = Vec::new();
                self.push_tags(&mut out, 0);
                out
            }
            Scheme::WrAdb => {
                let mut out = Vec::new();
                out.push(self.root.clone());
                self.push_tags(&mut out, 1);
                out
            }
            Scheme::Char => self.raw.chars().map(|c| c.to_string()).collect(),
        }
    }

    /// Append tags of groups `from..`, with a `^DB` symbol before each group
    /// after the first one overall.
    fn push_tags(&self, out: &mut Vec<String>, from: usize) {
        for (gi, group) in self.groups.iter().enumerate().skip(from) {
            if gi > 0 {
                out.push(DB.to_string());
            }
            out.extend(group.iter().cloned());
        }
    }
}

//! Blacklist terms and the character normalization shared by every matcher.

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Upper bound on a term's surface length, in Unicode scalar values.
pub const MAX_TERM_CHARS: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("term is empty")]
    Empty,
    #[error("term {0:?} contains only whitespace")]
    WhitespaceOnly(String),
    #[error("term {0:?} contains no word character")]
    NoWordCharacter(String),
    #[error("term is {0} characters long, limit is {MAX_TERM_CHARS}")]
    TooLong(usize),
}

impl TermError {
    /// The offending input, when one is available.
    pub fn term(&self) -> Option<&str> {
        match self {
            TermError::WhitespaceOnly(t) | TermError::NoWordCharacter(t) => Some(t),
            _ => None,
        }
    }
}

/// A word character is a Unicode letter, a Unicode number, or `_`.
#[inline]
pub fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Unicode decimal digit (general category Nd).
pub fn is_decimal_digit(c: char) -> bool {
    if c.is_ascii() {
        return c.is_ascii_digit();
    }
    if !c.is_numeric() {
        return false;
    }
    // Rare path: non-ASCII numerics also include No/Nl ('²', 'Ⅻ').
    static ND: OnceLock<regex::Regex> = OnceLock::new();
    let nd = ND.get_or_init(|| regex::Regex::new(r"^\p{Nd}$").expect("static pattern"));
    let mut buf = [0u8; 4];
    nd.is_match(c.encode_utf8(&mut buf))
}

/// Per-character folding applied to both terms and scanned text.
///
/// Whitespace collapses to a single ASCII space. Case folding maps a character
/// to its lowercase form when that form is a single scalar value; characters
/// whose lowercase expands (e.g. `İ`) are kept as-is so that offsets stay 1:1.
#[inline]
pub fn fold_char(c: char, case_sensitive: bool) -> char {
    if c.is_whitespace() {
        return ' ';
    }
    if case_sensitive || c.is_ascii_lowercase() {
        return c;
    }
    if c.is_ascii() {
        return c.to_ascii_lowercase();
    }
    let mut lower = c.to_lowercase();
    match (lower.next(), lower.next()) {
        (Some(l), None) => l,
        _ => c,
    }
}

/// Fold a whole string and collapse internal whitespace runs; trims the ends.
pub fn normalize(s: &str, case_sensitive: bool) -> String {
    let mut out = String::with_capacity(s.len());
    let mut pending_space = false;
    for c in s.chars() {
        let f = fold_char(c, case_sensitive);
        if f == ' ' {
            pending_space = !out.is_empty();
        } else {
            if pending_space {
                out.push(' ');
                pending_space = false;
            }
            out.push(f);
        }
    }
    out
}

/// A validated blacklist or whitelist entry.
///
/// Cloning is cheap: both strings are reference counted, so matchers can be
/// rebuilt per request without copying term text.
#[derive(Clone)]
pub struct Term {
    surface: Arc<str>,
    normalized: Arc<str>,
}

impl Term {
    pub fn new(surface: impl AsRef<str>) -> Result<Self, TermError> {
        let surface = surface.as_ref();
        if surface.is_empty() {
            return Err(TermError::Empty);
        }
        let len = surface.chars().count();
        if len > MAX_TERM_CHARS {
            return Err(TermError::TooLong(len));
        }
        let normalized = normalize(surface, false);
        if normalized.is_empty() {
            return Err(TermError::WhitespaceOnly(surface.to_owned()));
        }
        if !normalized.chars().any(is_word_char) {
            return Err(TermError::NoWordCharacter(surface.to_owned()));
        }
        Ok(Term {
            surface: surface.into(),
            normalized: normalized.into(),
        })
    }

    pub fn surface(&self) -> &str {
        &self.surface
    }

    /// Case-folded, whitespace-collapsed form; the identity of a term.
    pub fn normalized(&self) -> &str {
        &self.normalized
    }

    /// The form a matcher compiles: `normalized` for case-insensitive
    /// matchers, whitespace-collapsed surface otherwise.
    pub fn match_key(&self, case_sensitive: bool) -> std::borrow::Cow<'_, str> {
        if case_sensitive {
            normalize(&self.surface, true).into()
        } else {
            std::borrow::Cow::Borrowed(&self.normalized)
        }
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        self.normalized == other.normalized
    }
}

impl Eq for Term {}

impl std::hash::Hash for Term {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.normalized.hash(state);
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Term {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.normalized.cmp(&other.normalized)
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Term({:?})", self.surface)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.surface)
    }
}

impl Serialize for Term {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.surface)
    }
}

impl<'de> Deserialize<'de> for Term {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Term::new(s).map_err(serde::de::Error::custom)
    }
}

/// Parse a newline-delimited term file: `#` lines are comments, trailing
/// whitespace is stripped and blank lines are skipped. Errors carry the
/// 1-based line number of the offending entry.
pub fn parse_term_lines(content: &str) -> Result<Vec<Term>, (usize, TermError)> {
    content
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(n, l)| Term::new(l).map_err(|e| (n, e)))
        .collect()
}

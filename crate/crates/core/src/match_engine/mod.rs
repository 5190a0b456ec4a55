//! Word-boundary keyword matching under three interchangeable strategies.
//!
//! Every strategy implements the same contract: given a compiled term set and
//! a text, return all maximal, non-overlapping matches whose edges sit on word
//! boundaries, resolved leftmost-then-longest. Text is scanned through a
//! per-character folded view ([`fold_char`]) so case and whitespace handling
//! is identical across strategies, and offsets are reported as byte offsets
//! into the original text.

mod folded;
mod kmp;
mod mask;
mod oracle;
mod regex_alt;
mod trie;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::term::{Term, TermError};

pub(crate) use folded::FoldedText;
pub use mask::{apply_mask, MaskError, DEFAULT_PLACEHOLDER};
pub use oracle::oracle_matches;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchStrategy {
    /// One alternation regex over all terms.
    #[serde(alias = "regex")]
    RegexAlternation,
    /// A separate Knuth-Morris-Pratt scan per keyword.
    #[serde(alias = "kmp")]
    KmpPerKeyword,
    /// Single pass over the text driven by a character trie.
    #[serde(alias = "trie")]
    #[default]
    TrieKeywordProcessor,
}

impl MatchStrategy {
    pub const ALL: [MatchStrategy; 3] = [
        MatchStrategy::RegexAlternation,
        MatchStrategy::KmpPerKeyword,
        MatchStrategy::TrieKeywordProcessor,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            MatchStrategy::RegexAlternation => "regex",
            MatchStrategy::KmpPerKeyword => "kmp",
            MatchStrategy::TrieKeywordProcessor => "trie",
        }
    }
}


impl fmt::Display for MatchStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown match strategy {0:?} (expected regex, kmp or trie)")]
pub struct UnknownStrategy(pub String);

impl FromStr for MatchStrategy {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "regex" | "regex_alternation" => Ok(MatchStrategy::RegexAlternation),
            "kmp" | "kmp_per_keyword" => Ok(MatchStrategy::KmpPerKeyword),
            "trie" | "flashtext" | "trie_keyword_processor" => {
                Ok(MatchStrategy::TrieKeywordProcessor)
            }
            _ => Err(UnknownStrategy(s.to_owned())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatchError {
    #[error("invalid term: {0}")]
    InvalidTerm(#[from] TermError),
}

/// What a span matched: a blacklist term or a run of decimal digits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum MatchedTerm {
    Term(Term),
    Numeral,
}

impl MatchedTerm {
    pub fn as_term(&self) -> Option<&Term> {
        match self {
            MatchedTerm::Term(t) => Some(t),
            MatchedTerm::Numeral => None,
        }
    }
}

/// A located match. `start..end` are byte offsets on character boundaries.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MatchSpan {
    pub start: usize,
    pub end: usize,
    pub matched: MatchedTerm,
}

impl MatchSpan {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn text<'t>(&self, text: &'t str) -> &'t str {
        &text[self.start..self.end]
    }
}

/// Raw hit in character-index space, before conversion to byte offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct CharHit {
    pub start: usize,
    pub end: usize,
    /// Index into the matcher's term list; `NUMERAL_HIT` for digit runs.
    pub term: u32,
}

pub(crate) const NUMERAL_HIT: u32 = u32::MAX;

/// Greedy leftmost-then-longest selection over candidates.
///
/// Ties on `(start, end)` keep the earliest candidate in input order, so
/// callers list higher-priority candidates first.
pub fn select_leftmost_longest<T>(mut items: Vec<T>, span: impl Fn(&T) -> (usize, usize)) -> Vec<T> {
    items.sort_by(|a, b| {
        let (sa, ea) = span(a);
        let (sb, eb) = span(b);
        sa.cmp(&sb).then(eb.cmp(&ea))
    });
    let mut out = Vec::with_capacity(items.len());
    let mut cursor = 0;
    for item in items {
        let (s, e) = span(&item);
        if s >= cursor {
            cursor = e;
            out.push(item);
        }
    }
    out
}

enum Engine {
    Empty,
    Regex(regex_alt::RegexEngine),
    Kmp(kmp::KmpEngine),
    Trie(trie::TrieEngine),
}

/// An immutable compiled term set.
pub struct Matcher {
    strategy: MatchStrategy,
    case_sensitive: bool,
    numeral_mode: bool,
    terms: Vec<Term>,
    /// Indices into `terms` of the first occurrence of each distinct key.
    distinct: Vec<u32>,
    engine: Engine,
    compile_time: Duration,
}

impl Matcher {
    pub fn compile(
        terms: &[Term],
        strategy: MatchStrategy,
        case_sensitive: bool,
        numeral_mode: bool,
    ) -> Matcher {
        let started = Instant::now();
        let terms = terms.to_vec();
        let (engine, distinct) = if terms.is_empty() {
            (Engine::Empty, Vec::new())
        } else {
            match strategy {
                MatchStrategy::RegexAlternation => {
                    let (e, d) = regex_alt::RegexEngine::build(&terms, case_sensitive);
                    (Engine::Regex(e), d)
                }
                MatchStrategy::KmpPerKeyword => {
                    let (e, d) = kmp::KmpEngine::build(&terms, case_sensitive);
                    (Engine::Kmp(e), d)
                }
                MatchStrategy::TrieKeywordProcessor => {
                    let (e, d) = trie::TrieEngine::build(&terms, case_sensitive);
                    (Engine::Trie(e), d)
                }
            }
        };
        Matcher {
            strategy,
            case_sensitive,
            numeral_mode,
            terms,
            distinct,
            engine,
            compile_time: started.elapsed(),
        }
    }

    /// Validate raw strings into terms, then compile.
    pub fn compile_strs<S: AsRef<str>>(
        terms: &[S],
        strategy: MatchStrategy,
        case_sensitive: bool,
        numeral_mode: bool,
    ) -> Result<Matcher, MatchError> {
        let terms = terms
            .iter()
            .map(Term::new)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::compile(&terms, strategy, case_sensitive, numeral_mode))
    }

    pub fn strategy(&self) -> MatchStrategy {
        self.strategy
    }

    pub fn case_sensitive(&self) -> bool {
        self.case_sensitive
    }

    pub fn numeral_mode(&self) -> bool {
        self.numeral_mode
    }

    /// Number of distinct terms after normalization.
    pub fn len(&self) -> usize {
        self.distinct.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distinct.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = &Term> + '_ {
        self.distinct.iter().map(|&i| &self.terms[i as usize])
    }

    pub fn compile_duration(&self) -> Duration {
        self.compile_time
    }

    pub fn find_matches(&self, text: &str) -> Vec<MatchSpan> {
        if text.is_empty() || (self.distinct.is_empty() && !self.numeral_mode) {
            return Vec::new();
        }
        let folded = FoldedText::new(text, self.case_sensitive);
        let mut hits = match &self.engine {
            Engine::Empty => Vec::new(),
            Engine::Regex(e) => e.find(&folded),
            Engine::Kmp(e) => e.find(&folded),
            Engine::Trie(e) => e.find(&folded),
        };
        if self.numeral_mode {
            hits.extend(folded.numeral_runs());
            // Term hits were pushed first, so they win exact ties.
            hits = select_leftmost_longest(hits, |h| (h.start, h.end));
        }
        hits.into_iter()
            .map(|h| MatchSpan {
                start: folded.byte_offset(h.start),
                end: folded.byte_offset(h.end),
                matched: if h.term == NUMERAL_HIT {
                    MatchedTerm::Numeral
                } else {
                    MatchedTerm::Term(self.terms[h.term as usize].clone())
                },
            })
            .collect()
    }
}

impl fmt::Debug for Matcher {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Matcher")
            .field("strategy", &self.strategy)
            .field("terms", &self.len())
            .field("case_sensitive", &self.case_sensitive)
            .field("numeral_mode", &self.numeral_mode)
            .finish()
    }
}

/// Check the structural span invariants against `text`; returns a description
/// of the first violation.
pub fn check_span_invariants(text: &str, spans: &[MatchSpan], case_sensitive: bool) -> Result<(), String> {
    use crate::term::{is_decimal_digit, is_word_char, normalize};
    let mut cursor = 0;
    for span in spans {
        if span.start >= span.end || span.end > text.len() {
            return Err(format!("span {}..{} out of bounds", span.start, span.end));
        }
        if !text.is_char_boundary(span.start) || !text.is_char_boundary(span.end) {
            return Err(format!("span {}..{} splits a character", span.start, span.end));
        }
        if span.start < cursor {
            return Err(format!("span {}..{} overlaps or is unsorted", span.start, span.end));
        }
        cursor = span.end;
        let slice = &text[span.start..span.end];
        match &span.matched {
            MatchedTerm::Term(t) => {
                if normalize(slice, case_sensitive) != t.match_key(case_sensitive) {
                    return Err(format!("span text {slice:?} does not match {t:?}"));
                }
                let before = text[..span.start].chars().next_back();
                let after = text[span.end..].chars().next();
                if before.is_some_and(is_word_char) || after.is_some_and(is_word_char) {
                    return Err(format!("span {slice:?} is not on word boundaries"));
                }
            }
            MatchedTerm::Numeral => {
                if !slice.chars().all(is_decimal_digit) {
                    return Err(format!("numeral span {slice:?} has non-digits"));
                }
                let before = text[..span.start].chars().next_back();
                let after = text[span.end..].chars().next();
                if before.is_some_and(is_decimal_digit) || after.is_some_and(is_decimal_digit) {
                    return Err(format!("numeral span {slice:?} is not maximal"));
                }
            }
        }
    }
    Ok(())
}

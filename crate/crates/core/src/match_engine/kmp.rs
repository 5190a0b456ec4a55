//! Per-keyword Knuth-Morris-Pratt scanning.
//!
//! Each distinct keyword gets its own failure table and its own pass over the
//! text, so the cost grows with `keywords × text length`.

use std::collections::HashSet;

use crate::term::Term;

use super::{select_leftmost_longest, CharHit, FoldedText};

struct Pattern {
    chars: Vec<char>,
    /// `lps[i]`: length of the longest proper prefix of `chars[..=i]` that is
    /// also a suffix of it.
    lps: Vec<usize>,
    term: u32,
}

impl Pattern {
    fn new(chars: Vec<char>, term: u32) -> Self {
        let lps = failure_table(&chars);
        Pattern { chars, lps, term }
    }

    /// Start indices of every (possibly overlapping) occurrence.
    fn occurrences(&self, text: &[char], mut on_match: impl FnMut(usize)) {
        let m = self.chars.len();
        let mut q = 0;
        for (i, &c) in text.iter().enumerate() {
            while q > 0 && self.chars[q] != c {
                q = self.lps[q - 1];
            }
            if self.chars[q] == c {
                q += 1;
            }
            if q == m {
                on_match(i + 1 - m);
                q = self.lps[q - 1];
            }
        }
    }
}

fn failure_table(pattern: &[char]) -> Vec<usize> {
    let mut lps = vec![0; pattern.len()];
    let mut q = 0;
    for i in 1..pattern.len() {
        while q > 0 && pattern[q] != pattern[i] {
            q = lps[q - 1];
        }
        if pattern[q] == pattern[i] {
            q += 1;
        }
        lps[i] = q;
    }
    lps
}

pub(crate) struct KmpEngine {
    patterns: Vec<Pattern>,
}

impl KmpEngine {
    pub fn build(terms: &[Term], case_sensitive: bool) -> (Self, Vec<u32>) {
        let mut seen = HashSet::with_capacity(terms.len());
        let mut patterns = Vec::with_capacity(terms.len());
        for (idx, term) in terms.iter().enumerate() {
            let key = term.match_key(case_sensitive);
            if seen.insert(key.clone()) {
                patterns.push(Pattern::new(key.chars().collect(), idx as u32));
            }
        }
        let distinct = patterns.iter().map(|p| p.term).collect();
        (KmpEngine { patterns }, distinct)
    }

    pub fn find(&self, text: &FoldedText<'_>) -> Vec<CharHit> {
        let mut candidates = Vec::new();
        for pattern in &self.patterns {
            let m = pattern.chars.len();
            pattern.occurrences(&text.chars, |start| {
                let end = start + m;
                if text.left_boundary(start) && text.right_boundary(end) {
                    candidates.push(CharHit { start, end, term: pattern.term });
                }
            });
        }
        select_leftmost_longest(candidates, |h| (h.start, h.end))
    }
}

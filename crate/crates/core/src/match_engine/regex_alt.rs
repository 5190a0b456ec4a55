//! Alternation-regex strategy.
//!
//! Alternatives are ordered longest first so the leftmost-first semantics of
//! the regex engine yield the longest term at each start. The right boundary
//! is part of the pattern (a shorter term may succeed where a longer one fails
//! its boundary); the left boundary is checked per candidate and the search
//! resumes one character later when it fails.

use std::collections::HashMap;

use regex::{Regex, RegexBuilder};

use crate::term::Term;

use super::{CharHit, FoldedText};

pub(crate) struct RegexEngine {
    regex: Regex,
    by_key: HashMap<String, u32>,
}

impl RegexEngine {
    pub fn build(terms: &[Term], case_sensitive: bool) -> (Self, Vec<u32>) {
        let mut by_key: HashMap<String, u32> = HashMap::with_capacity(terms.len());
        let mut distinct = Vec::with_capacity(terms.len());
        for (idx, term) in terms.iter().enumerate() {
            let key = term.match_key(case_sensitive).into_owned();
            if let std::collections::hash_map::Entry::Vacant(e) = by_key.entry(key) {
                e.insert(idx as u32);
                distinct.push(idx as u32);
            }
        }
        let mut keys: Vec<&str> = by_key.keys().map(String::as_str).collect();
        keys.sort_by(|a, b| b.chars().count().cmp(&a.chars().count()).then(a.cmp(b)));
        let mut pattern = String::with_capacity(keys.iter().map(|k| k.len() + 4).sum::<usize>() + 40);
        pattern.push('(');
        for (i, key) in keys.iter().enumerate() {
            if i > 0 {
                pattern.push('|');
            }
            pattern.push_str(&regex::escape(key));
        }
        pattern.push_str(r")(?:[^\p{Alphabetic}\p{N}_]|\z)");
        let regex = RegexBuilder::new(&pattern)
            .size_limit(1 << 30)
            .dfa_size_limit(1 << 28)
            .build()
            .expect("escaped literal alternation is a valid regex");
        (RegexEngine { regex, by_key }, distinct)
    }

    pub fn find(&self, text: &FoldedText<'_>) -> Vec<CharHit> {
        let folded: String = text.chars.iter().collect();
        // char index of every byte offset that starts a char in `folded`
        let mut char_at = vec![0usize; folded.len() + 1];
        for (ci, (bi, _)) in folded.char_indices().enumerate() {
            char_at[bi] = ci;
        }
        char_at[folded.len()] = text.len();

        let mut hits = Vec::new();
        let mut pos = 0;
        let mut locs = self.regex.capture_locations();
        while pos <= folded.len() {
            if self.regex.captures_read_at(&mut locs, &folded, pos).is_none() {
                break;
            }
            let (mb, me) = locs.get(1).expect("group 1 always participates");
            let start = char_at[mb];
            if !text.left_boundary(start) {
                let step = folded[mb..].chars().next().map_or(1, char::len_utf8);
                pos = mb + step;
                continue;
            }
            let term = self.by_key[&folded[mb..me]];
            hits.push(CharHit { start, end: char_at[me], term });
            pos = me;
        }
        hits
    }
}

//! Brute-force reference matcher.
//!
//! Compares every term against every position with explicit boundary checks.
//! Quadratic and allocation-heavy; meant for cross-checking the strategies on
//! small inputs, not for production use.

use crate::term::{fold_char, is_decimal_digit, Term};

use super::{MatchSpan, MatchedTerm};

pub fn oracle_matches(
    terms: &[Term],
    text: &str,
    case_sensitive: bool,
    numeral_mode: bool,
) -> Vec<MatchSpan> {
    let positions: Vec<(usize, char)> = text.char_indices().collect();
    let n = positions.len();
    let byte_at = |i: usize| if i == n { text.len() } else { positions[i].0 };
    let is_word_at = |i: usize| positions[i].1.is_alphanumeric() || positions[i].1 == '_';

    let mut keys: Vec<(Vec<char>, &Term)> = Vec::new();
    for term in terms {
        let key: Vec<char> = term.match_key(case_sensitive).chars().collect();
        if !keys.iter().any(|(k, _)| *k == key) {
            keys.push((key, term));
        }
    }

    // (start, end, Some(term) | None for a numeral), in char indices
    let mut candidates: Vec<(usize, usize, Option<&Term>)> = Vec::new();
    for start in 0..n {
        for (key, term) in &keys {
            let end = start + key.len();
            if end > n {
                continue;
            }
            let equal = (0..key.len()).all(|i| fold_char(positions[start + i].1, case_sensitive) == key[i]);
            if !equal {
                continue;
            }
            let left_ok = start == 0 || !is_word_at(start - 1);
            let right_ok = end == n || !is_word_at(end);
            if left_ok && right_ok {
                candidates.push((start, end, Some(*term)));
            }
        }
        if numeral_mode && is_decimal_digit(positions[start].1) && (start == 0 || !is_decimal_digit(positions[start - 1].1)) {
            let mut end = start;
            while end < n && is_decimal_digit(positions[end].1) {
                end += 1;
            }
            candidates.push((start, end, None));
        }
    }

    let mut spans = Vec::new();
    let mut pos = 0;
    while pos < n {
        let best = candidates
            .iter()
            .filter(|c| c.0 == pos)
            // longest wins; among equal lengths a term beats a numeral
            .max_by_key(|c| (c.1, c.2.is_some()));
        match best {
            Some(&(start, end, term)) => {
                spans.push(MatchSpan {
                    start: byte_at(start),
                    end: byte_at(end),
                    matched: term.map_or(MatchedTerm::Numeral, |t| MatchedTerm::Term(t.clone())),
                });
                pos = end;
            }
            None => pos += 1,
        }
    }
    spans
}

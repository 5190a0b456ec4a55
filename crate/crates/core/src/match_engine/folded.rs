use crate::term::{fold_char, is_decimal_digit, is_word_char};

use super::{CharHit, NUMERAL_HIT};

/// Character-indexed view of a text: folded characters, word-character flags
/// taken from the original characters, and byte offsets back into the text.
pub(crate) struct FoldedText<'t> {
    text: &'t str,
    pub chars: Vec<char>,
    pub word: Vec<bool>,
    /// `offsets[i]` is the byte offset of char `i`; one extra entry for the end.
    offsets: Vec<usize>,
}

impl<'t> FoldedText<'t> {
    pub fn new(text: &'t str, case_sensitive: bool) -> Self {
        let cap = text.len();
        let mut chars = Vec::with_capacity(cap);
        let mut word = Vec::with_capacity(cap);
        let mut offsets = Vec::with_capacity(cap + 1);
        for (i, c) in text.char_indices() {
            chars.push(fold_char(c, case_sensitive));
            word.push(is_word_char(c));
            offsets.push(i);
        }
        offsets.push(text.len());
        FoldedText {
            text,
            chars,
            word,
            offsets,
        }
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    #[inline]
    pub fn byte_offset(&self, char_idx: usize) -> usize {
        self.offsets[char_idx]
    }

    #[inline]
    pub fn left_boundary(&self, start: usize) -> bool {
        start == 0 || !self.word[start - 1]
    }

    #[inline]
    pub fn right_boundary(&self, end: usize) -> bool {
        end == self.chars.len() || !self.word[end]
    }

    /// Maximal runs of decimal digits in the original text.
    pub fn numeral_runs(&self) -> Vec<CharHit> {
        let mut runs = Vec::new();
        let mut run_start = None;
        for (i, c) in self.text.chars().enumerate() {
            match (is_decimal_digit(c), run_start) {
                (true, None) => run_start = Some(i),
                (false, Some(s)) => {
                    runs.push(CharHit { start: s, end: i, term: NUMERAL_HIT });
                    run_start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = run_start {
            runs.push(CharHit { start: s, end: self.len(), term: NUMERAL_HIT });
        }
        runs
    }
}

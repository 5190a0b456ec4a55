use thiserror::Error;

use super::MatchSpan;

pub const DEFAULT_PLACEHOLDER: &str = "[FILTERED]";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MaskError {
    #[error("span {start}..{end} is outside a text of {len} bytes or splits a character")]
    SpanOutOfBounds { start: usize, end: usize, len: usize },
    #[error("span starting at {start} overlaps the previous span ending at {previous_end}")]
    OverlappingSpans { start: usize, previous_end: usize },
}

/// Replace each span with `placeholder`, copying everything else verbatim.
/// Spans must be sorted by start and pairwise disjoint.
pub fn apply_mask(text: &str, spans: &[MatchSpan], placeholder: &str) -> Result<String, MaskError> {
    let mut out = String::with_capacity(text.len() + spans.len() * placeholder.len());
    let mut cursor = 0;
    for span in spans {
        let (start, end) = (span.start, span.end);
        if start > end
            || end > text.len()
            || !text.is_char_boundary(start)
            || !text.is_char_boundary(end)
        {
            return Err(MaskError::SpanOutOfBounds { start, end, len: text.len() });
        }
        if start < cursor {
            return Err(MaskError::OverlappingSpans { start, previous_end: cursor });
        }
        out.push_str(&text[cursor..start]);
        out.push_str(placeholder);
        cursor = end;
    }
    out.push_str(&text[cursor..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::match_engine::MatchedTerm;

    fn span(start: usize, end: usize) -> MatchSpan {
        MatchSpan { start, end, matched: MatchedTerm::Numeral }
    }

    #[test]
    fn direct_substitution() {
        let out = apply_mask("Call Smith now", &[span(5, 10)], DEFAULT_PLACEHOLDER).unwrap();
        assert_eq!(out, "Call [FILTERED] now");
    }

    #[test]
    fn no_spans() {
        assert_eq!(apply_mask("abc", &[], DEFAULT_PLACEHOLDER).unwrap(), "abc");
    }

    #[test]
    fn numeral_spans() {
        assert_eq!(apply_mask("a1 b2", &[span(1, 2), span(4, 5)], "*").unwrap(), "a* b*");
    }

    #[test]
    fn rejects_bad_spans() {
        assert!(matches!(
            apply_mask("abc", &[span(1, 9)], "*"),
            Err(MaskError::SpanOutOfBounds { .. })
        ));
        assert!(matches!(
            apply_mask("é", &[span(0, 1)], "*"),
            Err(MaskError::SpanOutOfBounds { .. })
        ));
        assert_eq!(
            apply_mask("abcdef", &[span(0, 3), span(2, 4)], "*"),
            Err(MaskError::OverlappingSpans { start: 2, previous_end: 3 })
        );
    }
}

//! One send event end to end: match, attribute, resolve, mask, report.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::match_engine::{apply_mask, select_leftmost_longest, MatchSpan, MatchStrategy, MatchedTerm, Matcher};
use crate::policy::{resolve, AttributedSpan, EffectivePolicy, Owner, Resolution};
use crate::vocab::{find_link_spans, CategoryId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportSpan {
    pub start: usize,
    pub end: usize,
    pub source: Owner,
}

/// Per-invocation feedback. Offsets refer to the original text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub total_masked: usize,
    pub by_source: BTreeMap<String, usize>,
    pub spans: Vec<ReportSpan>,
    pub timestamp: DateTime<Utc>,
}

impl FilterReport {
    pub fn from_masked(masked: &[ReportSpan], timestamp: DateTime<Utc>) -> Self {
        let mut by_source = BTreeMap::new();
        for s in masked {
            *by_source.entry(s.source.to_string()).or_insert(0) += 1;
        }
        FilterReport { total_masked: masked.len(), by_source, spans: masked.to_vec(), timestamp }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterOutcome {
    pub filtered_text: String,
    pub report: FilterReport,
    pub resolution: Resolution,
}

/// Locate every blacklist hit in `text` and attach its owners.
pub fn attributed_matches(policy: &EffectivePolicy, text: &str, strategy: MatchStrategy) -> Vec<AttributedSpan> {
    let matcher = Matcher::compile(&policy.keyword_terms(), strategy, false, policy.scheme.numeral_mode());
    let mut spans = matcher.find_matches(text);
    spans.extend(find_link_spans(text, &policy.link_terms(), false));
    let spans = select_leftmost_longest(spans, |s| (s.start, s.end));
    spans.into_iter().map(|span| attribute(policy, span)).collect()
}

fn attribute(policy: &EffectivePolicy, span: MatchSpan) -> AttributedSpan {
    let owners = match &span.matched {
        MatchedTerm::Term(t) => policy.owners_of(t).into_iter().cloned().collect(),
        MatchedTerm::Numeral => vec![Owner::System(CategoryId::Numerals)],
    };
    AttributedSpan { span, owners }
}

/// Run the whole pipeline against an already compiled policy.
pub fn filter_text(policy: &EffectivePolicy, text: &str, strategy: MatchStrategy) -> FilterOutcome {
    let attributed = attributed_matches(policy, text, strategy);
    let resolution = resolve(policy, text, attributed);
    let masked: Vec<MatchSpan> = resolution.masked.iter().map(|r| r.span.clone()).collect();
    let filtered_text =
        apply_mask(text, &masked, &policy.scheme.placeholder).expect("matcher spans are sorted and in bounds");
    let report_spans: Vec<ReportSpan> = resolution
        .masked
        .iter()
        .map(|r| ReportSpan { start: r.span.start, end: r.span.end, source: r.source.clone() })
        .collect();
    FilterOutcome { filtered_text, report: FilterReport::from_masked(&report_spans, Utc::now()), resolution }
}

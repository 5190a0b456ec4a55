//! Identity-data filtering: multi-strategy keyword matching, per-user and
//! per-app policy lists, category vocabularies, permission audits and the
//! benchmark harness.

pub mod audit;
pub mod bench;
pub mod match_engine;
pub mod pipeline;
pub mod policy;
pub mod term;
pub mod vocab;

pub use match_engine::{oracle_matches, MatchError, MatchSpan, MatchStrategy, MatchedTerm, Matcher};
pub use pipeline::{filter_text, FilterOutcome, FilterReport, ReportSpan};
pub use policy::{
    AppId, EffectivePolicy, FilterScheme, ListKind, Owner, PolicyBook, PolicyError, PolicyList, UserId,
};
pub use term::{Term, TermError};
pub use vocab::{CategoryId, Vocabulary};

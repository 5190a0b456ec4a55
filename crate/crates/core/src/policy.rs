//! Per-(user, app) blacklists and whitelists, and their resolution into the
//! effective policy for one send event.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::match_engine::{MatchSpan, MatchedTerm, DEFAULT_PLACEHOLDER};
use crate::term::{normalize, parse_term_lines, Term, TermError};
use crate::vocab::{CategoryId, Vocabulary};

macro_rules! id_type {
    ($name:ident) => {
        #[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                $name(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_owned())
            }
        }
    };
}

id_type!(UserId);
id_type!(AppId);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ListKind {
    #[serde(rename = "SRB", alias = "srb")]
    Srb,
    #[serde(rename = "ORB", alias = "orb")]
    Orb,
    #[serde(rename = "SRW", alias = "srw")]
    Srw,
}

impl ListKind {
    pub const ALL: [ListKind; 3] = [ListKind::Srb, ListKind::Orb, ListKind::Srw];

    pub fn as_str(self) -> &'static str {
        match self {
            ListKind::Srb => "SRB",
            ListKind::Orb => "ORB",
            ListKind::Srw => "SRW",
        }
    }
}

impl fmt::Display for ListKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown list kind {0:?} (expected SRB, ORB or SRW)")]
pub struct UnknownListKind(pub String);

impl FromStr for ListKind {
    type Err = UnknownListKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "SRB" => Ok(ListKind::Srb),
            "ORB" => Ok(ListKind::Orb),
            "SRW" => Ok(ListKind::Srw),
            _ => Err(UnknownListKind(s.to_owned())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyList {
    pub owner: UserId,
    pub app: AppId,
    pub kind: ListKind,
    pub terms: BTreeSet<Term>,
    pub updated_at: DateTime<Utc>,
}

impl PolicyList {
    pub fn new(owner: UserId, app: AppId, kind: ListKind) -> Self {
        PolicyList { owner, app, kind, terms: BTreeSet::new(), updated_at: DateTime::<Utc>::UNIX_EPOCH }
    }

    /// Advance `updated_at` to now, or by one microsecond if the clock has not moved.
    pub fn touch(&mut self) {
        let now = Utc::now();
        self.updated_at = if now > self.updated_at { now } else { self.updated_at + Duration::microseconds(1) };
    }

    /// Newline-delimited term file with a three-line `#` header.
    pub fn export(&self) -> String {
        let mut out = format!("# owner: {}\n# app: {}\n# kind: {}\n", self.owner, self.app, self.kind);
        for t in &self.terms {
            out.push_str(t.surface().trim());
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImportedList {
    pub owner: UserId,
    pub app: AppId,
    pub kind: ListKind,
    pub terms: Vec<Term>,
}

#[derive(Debug, Error)]
pub enum ImportError {
    #[error("missing or malformed header line {line} (expected `# {field}: ...`)")]
    BadHeader { line: usize, field: &'static str },
    #[error(transparent)]
    Kind(#[from] UnknownListKind),
    #[error("line {line}: {source}")]
    InvalidTerm { line: usize, source: TermError },
}

pub fn import_list(content: &str) -> Result<ImportedList, ImportError> {
    let mut lines = content.lines();
    let mut header = |line: usize, field: &'static str| -> Result<String, ImportError> {
        lines
            .next()
            .and_then(|l| l.strip_prefix('#'))
            .and_then(|l| l.trim().strip_prefix(field))
            .and_then(|l| l.strip_prefix(':'))
            .map(|v| v.trim().to_owned())
            .filter(|v| !v.is_empty())
            .ok_or(ImportError::BadHeader { line, field })
    };
    let owner = UserId(header(1, "owner")?);
    let app = AppId(header(2, "app")?);
    let kind = header(3, "kind")?.parse()?;
    let terms = parse_term_lines(content).map_err(|(line, source)| ImportError::InvalidTerm { line, source })?;
    Ok(ImportedList { owner, app, kind, terms })
}

/// Categories and options selected by the sender for one send event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterScheme {
    pub categories: BTreeSet<CategoryId>,
    pub numerals: bool,
    pub placeholder: String,
}

impl Default for FilterScheme {
    fn default() -> Self {
        FilterScheme { categories: BTreeSet::new(), numerals: false, placeholder: DEFAULT_PLACEHOLDER.to_owned() }
    }
}

impl FilterScheme {
    pub fn with_categories(categories: impl IntoIterator<Item = CategoryId>) -> Self {
        FilterScheme { categories: categories.into_iter().collect(), ..Default::default() }
    }

    pub fn numeral_mode(&self) -> bool {
        self.numerals || self.categories.contains(&CategoryId::Numerals)
    }
}

/// Where a blacklist entry came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Owner {
    /// A user's self-regarding blacklist.
    User(UserId),
    /// The sender's own other-regarding blacklist.
    SenderOrb,
    /// A vocabulary category selected in the scheme.
    System(CategoryId),
}

impl Owner {
    fn priority(&self) -> u8 {
        match self {
            Owner::User(_) => 0,
            Owner::SenderOrb => 1,
            Owner::System(_) => 2,
        }
    }
}

impl fmt::Display for Owner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Owner::User(u) => write!(f, "SRB:{u}"),
            Owner::SenderOrb => f.write_str("ORB"),
            Owner::System(CategoryId::Numerals) => f.write_str("NUMERAL"),
            Owner::System(c) => f.write_str(c.as_str()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unrecognized span source {0:?}")]
pub struct UnknownOwner(pub String);

impl FromStr for Owner {
    type Err = UnknownOwner;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(user) = s.strip_prefix("SRB:") {
            return Ok(Owner::User(UserId::new(user)));
        }
        match s {
            "ORB" => Ok(Owner::SenderOrb),
            "NUMERAL" => Ok(Owner::System(CategoryId::Numerals)),
            _ => s.parse().map(Owner::System).map_err(|_| UnknownOwner(s.to_owned())),
        }
    }
}

impl Serialize for Owner {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Owner {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OwnedEntry {
    pub term: Term,
    pub owner: Owner,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("unknown user {0}")]
    UnknownUser(UserId),
    #[error("unknown app {0}")]
    UnknownApp(AppId),
    #[error(transparent)]
    InvalidTerm(#[from] TermError),
}

/// The compiled, owner-tagged term set governing one filter invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EffectivePolicy {
    pub app: AppId,
    pub sender: UserId,
    /// One group per distinct term, in priority order. Several users may
    /// own the same term; other sources only appear when no user does.
    pub blacklist: Vec<OwnedEntry>,
    pub sender_whitelist: BTreeSet<Term>,
    /// SRW per user; users in strict mode map to an empty set.
    pub per_owner_whitelists: BTreeMap<UserId, BTreeSet<Term>>,
    pub scheme: FilterScheme,
}

impl EffectivePolicy {
    /// Owners attributed to `term`, highest priority first.
    pub fn owners_of(&self, term: &Term) -> Vec<&Owner> {
        self.blacklist.iter().filter(|e| &e.term == term).map(|e| &e.owner).collect()
    }

    /// Distinct terms for the keyword matcher (everything except link prefixes).
    pub fn keyword_terms(&self) -> Vec<Term> {
        let mut seen = BTreeSet::new();
        self.blacklist
            .iter()
            .filter(|e| e.owner != Owner::System(CategoryId::Links))
            .filter(|e| seen.insert(e.term.clone()))
            .map(|e| e.term.clone())
            .collect()
    }

    /// Link prefixes, matched with extended-span semantics.
    pub fn link_terms(&self) -> Vec<Term> {
        self.blacklist
            .iter()
            .filter(|e| e.owner == Owner::System(CategoryId::Links))
            .map(|e| e.term.clone())
            .collect()
    }

    fn owner_whitelists(&self, owner: &UserId, term: &Term) -> bool {
        self.per_owner_whitelists.get(owner).is_some_and(|w| w.contains(term))
    }

    fn sender_whitelists(&self, span: &MatchSpan, text: &str) -> bool {
        if let MatchedTerm::Term(t) = &span.matched {
            if self.sender_whitelist.contains(t) {
                return true;
            }
        }
        // Numerals and link spans can also be whitelisted by their literal text.
        let literal = normalize(span.text(text), false);
        self.sender_whitelist.iter().any(|w| w.normalized() == literal)
    }

    /// Whether `owner`'s claim on `span` lets it through.
    pub fn preserves(&self, owner: &Owner, span: &MatchSpan, text: &str) -> bool {
        match owner {
            Owner::User(u) => span.matched.as_term().is_some_and(|t| self.owner_whitelists(u, t)),
            Owner::SenderOrb | Owner::System(_) => self.sender_whitelists(span, text),
        }
    }
}

/// A match together with every blacklist entry that claims it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributedSpan {
    pub span: MatchSpan,
    pub owners: Vec<Owner>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedSpan {
    pub span: MatchSpan,
    /// For a masked span, the highest-priority owner that did not whitelist
    /// it. For a preserved span, the highest-priority owner (all whitelisted).
    pub source: Owner,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Resolution {
    pub masked: Vec<ResolvedSpan>,
    pub preserved: Vec<ResolvedSpan>,
}

/// Split attributed spans into masked and preserved. A span is masked if any
/// of its owners does not whitelist it.
pub fn resolve(policy: &EffectivePolicy, text: &str, spans: Vec<AttributedSpan>) -> Resolution {
    let mut out = Resolution::default();
    for AttributedSpan { span, owners } in spans {
        let Some(first) = owners.first().cloned() else {
            continue;
        };
        match owners.into_iter().find(|o| !policy.preserves(o, &span, text)) {
            Some(source) => out.masked.push(ResolvedSpan { span, source }),
            None => out.preserved.push(ResolvedSpan { span, source: first }),
        }
    }
    out
}

/// In-memory store of registered users, apps, lists and strict-mode flags.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PolicyBook {
    users: BTreeSet<UserId>,
    apps: BTreeSet<AppId>,
    lists: BTreeMap<(UserId, AppId, ListKind), PolicyList>,
    strict: BTreeSet<(UserId, AppId)>,
}

impl PolicyBook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register_user(&mut self, user: UserId) {
        self.users.insert(user);
    }

    pub fn register_app(&mut self, app: AppId) {
        self.apps.insert(app);
    }

    pub fn has_user(&self, user: &UserId) -> bool {
        self.users.contains(user)
    }

    pub fn has_app(&self, app: &AppId) -> bool {
        self.apps.contains(app)
    }

    fn check(&self, user: &UserId, app: &AppId) -> Result<(), PolicyError> {
        if !self.users.contains(user) {
            return Err(PolicyError::UnknownUser(user.clone()));
        }
        if !self.apps.contains(app) {
            return Err(PolicyError::UnknownApp(app.clone()));
        }
        Ok(())
    }

    /// When set, `user`'s SRW is ignored for `app` and every SRB entry is masked.
    pub fn set_strict(&mut self, user: &UserId, app: &AppId, strict: bool) -> Result<(), PolicyError> {
        self.check(user, app)?;
        if strict {
            self.strict.insert((user.clone(), app.clone()));
        } else {
            self.strict.remove(&(user.clone(), app.clone()));
        }
        Ok(())
    }

    pub fn is_strict(&self, user: &UserId, app: &AppId) -> bool {
        self.strict.contains(&(user.clone(), app.clone()))
    }

    pub fn upsert_entry(&mut self, owner: &UserId, app: &AppId, kind: ListKind, term: Term) -> Result<&PolicyList, PolicyError> {
        self.check(owner, app)?;
        let key = (owner.clone(), app.clone(), kind);
        let list = self
            .lists
            .entry(key)
            .or_insert_with(|| PolicyList::new(owner.clone(), app.clone(), kind));
        list.terms.replace(term);
        list.touch();
        Ok(list)
    }

    pub fn remove_entry(&mut self, owner: &UserId, app: &AppId, kind: ListKind, term: &Term) -> Result<PolicyList, PolicyError> {
        self.check(owner, app)?;
        let key = (owner.clone(), app.clone(), kind);
        match self.lists.get_mut(&key) {
            Some(list) => {
                if list.terms.remove(term) {
                    list.touch();
                }
                Ok(list.clone())
            }
            None => Ok(PolicyList::new(owner.clone(), app.clone(), kind)),
        }
    }

    /// Insert a whole list, as read back from storage or an import.
    pub fn put_list(&mut self, list: PolicyList) -> Result<(), PolicyError> {
        self.check(&list.owner, &list.app)?;
        self.lists.insert((list.owner.clone(), list.app.clone(), list.kind), list);
        Ok(())
    }

    pub fn list(&self, owner: &UserId, app: &AppId, kind: ListKind) -> Result<PolicyList, PolicyError> {
        self.check(owner, app)?;
        Ok(self
            .lists
            .get(&(owner.clone(), app.clone(), kind))
            .cloned()
            .unwrap_or_else(|| PolicyList::new(owner.clone(), app.clone(), kind)))
    }

    fn terms(&self, owner: &UserId, app: &AppId, kind: ListKind) -> impl Iterator<Item = &Term> {
        self.lists.get(&(owner.clone(), app.clone(), kind)).into_iter().flat_map(|l| l.terms.iter())
    }

    pub fn compile_effective(
        &self,
        sender: &UserId,
        app: &AppId,
        scheme: &FilterScheme,
        vocab: &Vocabulary,
    ) -> Result<EffectivePolicy, PolicyError> {
        self.check(sender, app)?;
        let mut entries: Vec<OwnedEntry> = Vec::new();
        for ((owner, list_app, kind), list) in &self.lists {
            if list_app == app && *kind == ListKind::Srb {
                entries.extend(list.terms.iter().map(|t| OwnedEntry { term: t.clone(), owner: Owner::User(owner.clone()) }));
            }
        }
        entries.extend(self.terms(sender, app, ListKind::Orb).map(|t| OwnedEntry { term: t.clone(), owner: Owner::SenderOrb }));
        for &cat in &scheme.categories {
            entries.extend(vocab.get(cat).terms.iter().map(|t| OwnedEntry { term: t.clone(), owner: Owner::System(cat) }));
        }

        // Keep, per term, only the entries from the highest-priority source class.
        let mut best: BTreeMap<&Term, u8> = BTreeMap::new();
        for e in &entries {
            let p = best.entry(&e.term).or_insert(u8::MAX);
            *p = (*p).min(e.owner.priority());
        }
        let best: BTreeMap<Term, u8> = best.into_iter().map(|(t, p)| (t.clone(), p)).collect();
        let mut seen = BTreeSet::new();
        let mut blacklist: Vec<OwnedEntry> = entries
            .into_iter()
            .filter(|e| best[&e.term] == e.owner.priority())
            .filter(|e| seen.insert((e.term.clone(), e.owner.clone())))
            .collect();
        blacklist.sort_by(|a, b| a.term.cmp(&b.term).then(a.owner.cmp(&b.owner)));

        let mut per_owner_whitelists = BTreeMap::new();
        for ((owner, list_app, kind), list) in &self.lists {
            if list_app == app && *kind == ListKind::Srw {
                let terms = if self.is_strict(owner, app) { BTreeSet::new() } else { list.terms.clone() };
                per_owner_whitelists.insert(owner.clone(), terms);
            }
        }
        let sender_whitelist = self.terms(sender, app, ListKind::Srw).cloned().collect();

        Ok(EffectivePolicy {
            app: app.clone(),
            sender: sender.clone(),
            blacklist,
            sender_whitelist,
            per_owner_whitelists,
            scheme: scheme.clone(),
        })
    }
}

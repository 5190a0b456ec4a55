//! Transport-independent service operations. Every method is synchronous and
//! may block (PBKDF2, SQLite); the HTTP layer runs them on blocking threads.

use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;
use std::sync::{Mutex, RwLock};
use std::time::Duration;

use chrono::{DateTime, Utc};
use idpfilter::match_engine::MatchStrategy;
use idpfilter::pipeline::{filter_text, FilterReport};
use idpfilter::policy::{AppId, FilterScheme, ListKind, Owner, PolicyBook, PolicyError, PolicyList, UserId};
use idpfilter::term::{Term, TermError};
use idpfilter::vocab::{CategoryId, Vocabulary};
use serde::Serialize;

use crate::crypto::{self, PasswordRecord};
use crate::store::{AppRow, GrantRow, Store, StoreError, StoredReport, UserRow};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub bind: String,
    /// `None` keeps everything in memory.
    pub db_path: Option<PathBuf>,
    pub pbkdf2_iterations: u32,
    pub default_strategy: MatchStrategy,
    pub max_text_bytes: usize,
    pub session_ttl: Duration,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: "127.0.0.1:8080".to_owned(),
            db_path: None,
            pbkdf2_iterations: crypto::DEFAULT_ITERATIONS,
            default_strategy: MatchStrategy::TrieKeywordProcessor,
            max_text_bytes: 1 << 20,
            session_ttl: Duration::from_secs(24 * 3600),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("username {0:?} is already taken")]
    UsernameTaken(String),
    #[error("password must be at least {min} characters", min = crypto::MIN_PASSWORD_CHARS)]
    WeakPassword,
    #[error("invalid username or password")]
    InvalidCredentials,
    #[error("missing, unknown or expired session token")]
    InvalidSession,
    #[error("unknown app {0}")]
    UnknownApp(String),
    #[error("unknown user {0}")]
    UnknownUser(String),
    #[error("unknown API key")]
    UnknownApiKey,
    #[error("{sender} has not granted filtering for app {app}")]
    PermissionNotGranted { sender: String, app: String },
    #[error("text is {size} bytes; the limit is {limit}")]
    TextTooLarge { size: usize, limit: usize },
    #[error(transparent)]
    InvalidTerm(#[from] TermError),
    #[error("{0}")]
    Validation(String),
    #[error("storage failure: {0}")]
    Store(#[from] StoreError),
    #[error("{0}")]
    Internal(String),
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::UsernameTaken(_) => "username_taken",
            ServiceError::WeakPassword => "weak_password",
            ServiceError::InvalidCredentials => "invalid_credentials",
            ServiceError::InvalidSession => "invalid_session",
            ServiceError::UnknownApp(_) => "unknown_app",
            ServiceError::UnknownUser(_) => "unknown_user",
            ServiceError::UnknownApiKey => "unknown_api_key",
            ServiceError::PermissionNotGranted { .. } => "permission_not_granted",
            ServiceError::TextTooLarge { .. } => "text_too_large",
            ServiceError::InvalidTerm(_) => "invalid_term",
            ServiceError::Validation(_) => "validation_error",
            ServiceError::Store(_) | ServiceError::Internal(_) => "internal",
        }
    }
}

impl From<PolicyError> for ServiceError {
    fn from(e: PolicyError) -> Self {
        match e {
            PolicyError::UnknownUser(u) => ServiceError::UnknownUser(u.0),
            PolicyError::UnknownApp(a) => ServiceError::UnknownApp(a.0),
            PolicyError::InvalidTerm(t) => ServiceError::InvalidTerm(t),
        }
    }
}

pub type Result<T> = std::result::Result<T, ServiceError>;

#[derive(Debug, Clone, Serialize)]
pub struct Session {
    pub token: String,
    pub user_id: UserId,
    pub expires_at: DateTime<Utc>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AppRegistration {
    pub app_id: AppId,
    pub name: String,
    /// Returned once, at registration.
    pub api_key: String,
    pub strategy: MatchStrategy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Grant {
    pub user_id: UserId,
    pub app_id: AppId,
    pub allow_filtering: bool,
    pub allow_others_to_share_me: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FilterResult {
    pub filtered_text: String,
    pub report: FilterReport,
    pub report_id: i64,
}

/// A count-only notice that the caller's SRB masked part of someone else's message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Notification {
    pub report_id: i64,
    pub app_id: AppId,
    pub timestamp: DateTime<Utc>,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportsView {
    pub reports: Vec<StoredReport>,
    pub notifications: Vec<Notification>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ListsView {
    pub app_id: AppId,
    #[serde(rename = "SRB")]
    pub srb: Vec<String>,
    #[serde(rename = "ORB")]
    pub orb: Vec<String>,
    #[serde(rename = "SRW")]
    pub srw: Vec<String>,
    /// Terms in both SRB and SRW; SRW wins for these.
    pub conflicts: Vec<String>,
}

#[derive(Debug, Clone)]
struct AppInfo {
    row: AppRow,
}

#[derive(Default)]
struct State {
    book: PolicyBook,
    apps: HashMap<AppId, AppInfo>,
    by_key: HashMap<[u8; 32], AppId>,
    grants: HashMap<(UserId, AppId), Grant>,
}

pub struct Service {
    config: ServiceConfig,
    vocab: Vocabulary,
    store: Mutex<Store>,
    state: RwLock<State>,
    sessions: Mutex<HashMap<String, (UserId, DateTime<Utc>)>>,
}

fn ttl(config: &ServiceConfig) -> chrono::Duration {
    chrono::Duration::from_std(config.session_ttl).unwrap_or(chrono::Duration::days(1))
}

impl Service {
    pub fn open(config: ServiceConfig) -> Result<Self> {
        Self::open_with_vocab(config, Vocabulary::bundled())
    }

    /// Open the store and load its contents into memory.
    pub fn open_with_vocab(config: ServiceConfig, vocab: Vocabulary) -> Result<Self> {
        let store = match &config.db_path {
            Some(p) => Store::open(p)?,
            None => Store::open_in_memory()?,
        };
        let mut state = State::default();
        for u in store.users()? {
            state.book.register_user(u.id);
        }
        for a in store.apps()? {
            state.book.register_app(a.id.clone());
            state.by_key.insert(a.api_key_hash, a.id.clone());
            state.apps.insert(a.id.clone(), AppInfo { row: a });
        }
        for g in store.grants()? {
            state.book.set_strict(&g.user, &g.app, !g.allow_others_to_share_me)?;
            state.grants.insert(
                (g.user.clone(), g.app.clone()),
                Grant {
                    user_id: g.user,
                    app_id: g.app,
                    allow_filtering: g.allow_filtering,
                    allow_others_to_share_me: g.allow_others_to_share_me,
                },
            );
        }
        for list in store.lists()? {
            state.book.put_list(list)?;
        }
        Ok(Service { config, vocab, store: Mutex::new(store), state: RwLock::new(state), sessions: Mutex::default() })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    fn store(&self) -> std::sync::MutexGuard<'_, Store> {
        self.store.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, State> {
        self.state.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write(&self) -> std::sync::RwLockWriteGuard<'_, State> {
        self.state.write().unwrap_or_else(|e| e.into_inner())
    }

    pub fn register_user(&self, username: &str, password: &str) -> Result<UserId> {
        let username = username.trim();
        if username.is_empty() {
            return Err(ServiceError::Validation("username must not be empty".into()));
        }
        if password.chars().count() < crypto::MIN_PASSWORD_CHARS {
            return Err(ServiceError::WeakPassword);
        }
        let row = UserRow {
            id: UserId(uuid::Uuid::new_v4().to_string()),
            username: username.to_owned(),
            password: PasswordRecord::new(password, self.config.pbkdf2_iterations),
            created_at: Utc::now(),
        };
        let mut state = self.write();
        if !self.store().insert_user(&row)? {
            return Err(ServiceError::UsernameTaken(username.to_owned()));
        }
        state.book.register_user(row.id.clone());
        Ok(row.id)
    }

    pub fn login(&self, username: &str, password: &str) -> Result<Session> {
        let user = self.store().user_by_name(username.trim())?;
        let ok = match &user {
            Some(u) => u.password.verify(password),
            None => crypto::dummy_verify(password, self.config.pbkdf2_iterations),
        };
        let user = match (ok, user) {
            (true, Some(u)) => u,
            _ => return Err(ServiceError::InvalidCredentials),
        };
        let token = crypto::random_hex(16);
        let expires_at = Utc::now() + ttl(&self.config);
        let mut sessions = self.sessions.lock().unwrap_or_else(|e| e.into_inner());
        let now = Utc::now();
        sessions.retain(|_, (_, exp)| *exp > now);
        sessions.insert(token.clone(), (user.id.clone(), expires_at));
        Ok(Session { token, user_id: user.id, expires_at })
    }

    pub fn authenticate(&self, token: &str) -> Result<UserId> {
        let sessions = self.sessions.lock().unwrap_or_else(|e| e.into_inner());
        match sessions.get(token) {
            Some((user, exp)) if *exp > Utc::now() => Ok(user.clone()),
            _ => Err(ServiceError::InvalidSession),
        }
    }

    pub fn register_app(&self, name: &str, strategy: Option<MatchStrategy>) -> Result<AppRegistration> {
        let name = name.trim();
        if name.is_empty() {
            return Err(ServiceError::Validation("app name must not be empty".into()));
        }
        let api_key = crypto::random_hex(32);
        let row = AppRow {
            id: AppId(uuid::Uuid::new_v4().to_string()),
            name: name.to_owned(),
            api_key_hash: crypto::sha256(api_key.as_bytes()),
            strategy: strategy.unwrap_or(self.config.default_strategy),
            created_at: Utc::now(),
        };
        let mut state = self.write();
        self.store().insert_app(&row)?;
        state.book.register_app(row.id.clone());
        state.by_key.insert(row.api_key_hash, row.id.clone());
        state.apps.insert(row.id.clone(), AppInfo { row: row.clone() });
        Ok(AppRegistration { app_id: row.id, name: row.name, api_key, strategy: row.strategy })
    }

    pub fn grant_permission(&self, user: &UserId, app: &AppId, allow_filtering: bool, allow_others_to_share_me: bool) -> Result<Grant> {
        let mut state = self.write();
        if !state.apps.contains_key(app) {
            return Err(ServiceError::UnknownApp(app.0.clone()));
        }
        let row = GrantRow {
            user: user.clone(),
            app: app.clone(),
            allow_filtering,
            allow_others_to_share_me,
            updated_at: Utc::now(),
        };
        self.store().upsert_grant(&row)?;
        state.book.set_strict(user, app, !allow_others_to_share_me)?;
        let grant = Grant { user_id: user.clone(), app_id: app.clone(), allow_filtering, allow_others_to_share_me };
        state.grants.insert((user.clone(), app.clone()), grant.clone());
        Ok(grant)
    }

    pub fn upsert_term(&self, owner: &UserId, app: &AppId, kind: ListKind, term: &str) -> Result<PolicyList> {
        let term = Term::new(term)?;
        let mut state = self.write();
        let mut list = state.book.list(owner, app, kind)?;
        list.terms.replace(term);
        list.touch();
        self.store().save_list(&list)?;
        state.book.put_list(list.clone())?;
        Ok(list)
    }

    pub fn remove_term(&self, owner: &UserId, app: &AppId, kind: ListKind, term: &str) -> Result<PolicyList> {
        let term = Term::new(term)?;
        let mut state = self.write();
        let mut list = state.book.list(owner, app, kind)?;
        if list.terms.remove(&term) {
            list.touch();
            self.store().save_list(&list)?;
            state.book.put_list(list.clone())?;
        }
        Ok(list)
    }

    pub fn list(&self, owner: &UserId, app: &AppId, kind: ListKind) -> Result<PolicyList> {
        Ok(self.read().book.list(owner, app, kind)?)
    }

    pub fn lists(&self, owner: &UserId, app: &AppId) -> Result<ListsView> {
        let state = self.read();
        let get = |k| state.book.list(owner, app, k).map(|l| l.terms);
        let (srb, orb, srw): (BTreeSet<Term>, _, BTreeSet<Term>) = (get(ListKind::Srb)?, get(ListKind::Orb)?, get(ListKind::Srw)?);
        let surfaces = |s: &BTreeSet<Term>| s.iter().map(|t| t.surface().to_owned()).collect::<Vec<_>>();
        Ok(ListsView {
            app_id: app.clone(),
            conflicts: srb.intersection(&srw).map(|t| t.surface().to_owned()).collect(),
            srb: surfaces(&srb),
            orb: surfaces(&orb),
            srw: surfaces(&srw),
        })
    }

    pub fn app_for_key(&self, api_key: &str) -> Result<AppId> {
        let hash = crypto::sha256(api_key.trim().as_bytes());
        self.read().by_key.get(&hash).cloned().ok_or(ServiceError::UnknownApiKey)
    }

    pub fn filter(&self, api_key: &str, sender: &UserId, text: &str, scheme: &FilterScheme) -> Result<FilterResult> {
        let app = self.app_for_key(api_key)?;
        if text.len() > self.config.max_text_bytes {
            return Err(ServiceError::TextTooLarge { size: text.len(), limit: self.config.max_text_bytes });
        }
        let (policy, strategy) = {
            let state = self.read();
            let granted = state.grants.get(&(sender.clone(), app.clone())).is_some_and(|g| g.allow_filtering);
            if !granted {
                return Err(ServiceError::PermissionNotGranted { sender: sender.0.clone(), app: app.0.clone() });
            }
            let strategy = state.apps[&app].row.strategy;
            (state.book.compile_effective(sender, &app, scheme, &self.vocab)?, strategy)
        };
        let outcome = filter_text(&policy, text, strategy);
        let report_id = self.store().insert_report(&app, sender, &outcome.report)?;
        Ok(FilterResult { filtered_text: outcome.filtered_text, report: outcome.report, report_id })
    }

    /// The caller's own reports plus notifications for other senders' messages
    /// in which the caller's SRB entries were masked.
    pub fn reports(&self, user: &UserId, app: Option<&AppId>, since: Option<DateTime<Utc>>) -> Result<ReportsView> {
        if let Some(app) = app {
            if !self.read().apps.contains_key(app) {
                return Err(ServiceError::UnknownApp(app.0.clone()));
            }
        }
        let all = self.store().reports(app, since)?;
        let key = Owner::User(user.clone()).to_string();
        let mut reports = Vec::new();
        let mut notifications = Vec::new();
        for r in all {
            if &r.sender == user {
                reports.push(r);
            } else if let Some(&count) = r.report.by_source.get(&key) {
                notifications.push(Notification { report_id: r.id, app_id: r.app_id, timestamp: r.report.timestamp, count });
            }
        }
        Ok(ReportsView { reports, notifications })
    }

    pub fn categories(&self) -> Vec<(CategoryId, usize)> {
        self.vocab.list_categories()
    }
}

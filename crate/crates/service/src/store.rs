//! SQLite persistence. Request text is never written; reports keep offsets
//! and counts only.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use idpfilter::match_engine::MatchStrategy;
use idpfilter::pipeline::{FilterReport, ReportSpan};
use idpfilter::policy::{AppId, ListKind, PolicyList, UserId};
use idpfilter::term::Term;
use rusqlite::{params, Connection, OptionalExtension};

use crate::crypto::{PasswordRecord, HASH_LEN, SALT_LEN};

pub const SCHEMA: &str = "
CREATE TABLE IF NOT EXISTS users (
    id          TEXT PRIMARY KEY,
    username    TEXT NOT NULL UNIQUE,
    salt        BLOB NOT NULL,
    iterations  INTEGER NOT NULL,
    hash        BLOB NOT NULL,
    created_at  TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS apps (
    id            TEXT PRIMARY KEY,
    name          TEXT NOT NULL,
    api_key_hash  BLOB NOT NULL UNIQUE,
    strategy      TEXT NOT NULL,
    created_at    TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS grants (
    user_id                   TEXT NOT NULL REFERENCES users(id),
    app_id                    TEXT NOT NULL REFERENCES apps(id),
    allow_filtering           INTEGER NOT NULL,
    allow_others_to_share_me  INTEGER NOT NULL,
    updated_at                TEXT NOT NULL,
    PRIMARY KEY (user_id, app_id)
);
CREATE TABLE IF NOT EXISTS lists (
    owner       TEXT NOT NULL REFERENCES users(id),
    app_id      TEXT NOT NULL REFERENCES apps(id),
    kind        TEXT NOT NULL CHECK (kind IN ('SRB', 'ORB', 'SRW')),
    updated_at  TEXT NOT NULL,
    PRIMARY KEY (owner, app_id, kind)
);
CREATE TABLE IF NOT EXISTS list_terms (
    owner       TEXT NOT NULL,
    app_id      TEXT NOT NULL,
    kind        TEXT NOT NULL,
    normalized  TEXT NOT NULL,
    surface     TEXT NOT NULL,
    PRIMARY KEY (owner, app_id, kind, normalized),
    FOREIGN KEY (owner, app_id, kind) REFERENCES lists(owner, app_id, kind)
);
CREATE TABLE IF NOT EXISTS reports (
    id            INTEGER PRIMARY KEY AUTOINCREMENT,
    app_id        TEXT NOT NULL REFERENCES apps(id),
    sender        TEXT NOT NULL REFERENCES users(id),
    created_at    TEXT NOT NULL,
    total_masked  INTEGER NOT NULL,
    by_source     TEXT NOT NULL,
    spans         TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS reports_by_app_time ON reports(app_id, created_at);
";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error(transparent)]
    Sqlite(#[from] rusqlite::Error),
    #[error("corrupt row in {table}: {detail}")]
    Corrupt { table: &'static str, detail: String },
}

type Result<T> = std::result::Result<T, StoreError>;

fn ts(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Nanos, true)
}

fn parse_ts(table: &'static str, s: &str) -> Result<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| StoreError::Corrupt { table, detail: format!("timestamp {s:?}: {e}") })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserRow {
    pub id: UserId,
    pub username: String,
    pub password: PasswordRecord,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppRow {
    pub id: AppId,
    pub name: String,
    pub api_key_hash: [u8; 32],
    pub strategy: MatchStrategy,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrantRow {
    pub user: UserId,
    pub app: AppId,
    pub allow_filtering: bool,
    pub allow_others_to_share_me: bool,
    pub updated_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct StoredReport {
    pub id: i64,
    pub app_id: AppId,
    pub sender: UserId,
    #[serde(flatten)]
    pub report: FilterReport,
}

/// id, username, salt, iterations, hash, created_at
type RawUser = (String, String, Vec<u8>, u32, Vec<u8>, String);

pub struct Store {
    conn: Connection,
}

impl Store {
    pub fn open(path: &Path) -> Result<Self> {
        Self::init(Connection::open(path)?)
    }

    pub fn open_in_memory() -> Result<Self> {
        Self::init(Connection::open_in_memory()?)
    }

    fn init(conn: Connection) -> Result<Self> {
        conn.execute_batch("PRAGMA foreign_keys = ON; PRAGMA journal_mode = DELETE;")?;
        conn.execute_batch(SCHEMA)?;
        Ok(Store { conn })
    }

    pub fn insert_user(&self, user: &UserRow) -> Result<bool> {
        let n = self.conn.execute(
            "INSERT INTO users (id, username, salt, iterations, hash, created_at) VALUES (?1, ?2, ?3, ?4, ?5, ?6)
             ON CONFLICT(username) DO NOTHING",
            params![
                user.id.as_str(),
                user.username,
                &user.password.salt[..],
                user.password.iterations,
                &user.password.hash[..],
                ts(&user.created_at)
            ],
        )?;
        Ok(n == 1)
    }

    fn user_from_row(row: &rusqlite::Row<'_>) -> rusqlite::Result<RawUser> {
        Ok((row.get(0)?, row.get(1)?, row.get(2)?, row.get(3)?, row.get(4)?, row.get(5)?))
    }

    fn build_user(raw: RawUser) -> Result<UserRow> {
        let (id, username, salt, iterations, hash, created) = raw;
        let corrupt = |detail: &str| StoreError::Corrupt { table: "users", detail: format!("{username}: {detail}") };
        let salt: [u8; SALT_LEN] = salt.try_into().map_err(|_| corrupt("salt length"))?;
        let hash: [u8; HASH_LEN] = hash.try_into().map_err(|_| corrupt("hash length"))?;
        Ok(UserRow {
            id: UserId(id),
            username,
            password: PasswordRecord { salt, iterations, hash },
            created_at: parse_ts("users", &created)?,
        })
    }

    pub fn user_by_name(&self, username: &str) -> Result<Option<UserRow>> {
        let raw = self
            .conn
            .query_row(
                "SELECT id, username, salt, iterations, hash, created_at FROM users WHERE username = ?1",
                [username],
                Self::user_from_row,
            )
            .optional()?;
        raw.map(Self::build_user).transpose()
    }

    pub fn users(&self) -> Result<Vec<UserRow>> {
        let mut stmt = self.conn.prepare("SELECT id, username, salt, iterations, hash, created_at FROM users ORDER BY id")?;
        let rows = stmt.query_map([], Self::user_from_row)?.collect::<rusqlite::Result<Vec<_>>>()?;
        rows.into_iter().map(Self::build_user).collect()
    }

    pub fn insert_app(&self, app: &AppRow) -> Result<()> {
        self.conn.execute(
            "INSERT INTO apps (id, name, api_key_hash, strategy, created_at) VALUES (?1, ?2, ?3, ?4, ?5)",
            params![app.id.as_str(), app.name, &app.api_key_hash[..], app.strategy.short_name(), ts(&app.created_at)],
        )?;
        Ok(())
    }

    pub fn apps(&self) -> Result<Vec<AppRow>> {
        let mut stmt = self.conn.prepare("SELECT id, name, api_key_hash, strategy, created_at FROM apps ORDER BY id")?;
        let rows = stmt
            .query_map([], |r| Ok((r.get::<_, String>(0)?, r.get(1)?, r.get::<_, Vec<u8>>(2)?, r.get::<_, String>(3)?, r.get::<_, String>(4)?)))?
            .collect::<rusqlite::Result<Vec<(String, String, Vec<u8>, String, String)>>>()?;
        rows.into_iter()
            .map(|(id, name, key, strategy, created)| {
                let corrupt = |detail: String| StoreError::Corrupt { table: "apps", detail };
                Ok(AppRow {
                    api_key_hash: key.try_into().map_err(|_| corrupt(format!("{id}: api key hash length")))?,
                    strategy: strategy.parse().map_err(|e| corrupt(format!("{id}: {e}")))?,
                    created_at: parse_ts("apps", &created)?,
                    id: AppId(id),
                    name,
                })
            })
            .collect()
    }

    pub fn upsert_grant(&self, g: &GrantRow) -> Result<()> {
        self.conn.execute(
            "INSERT INTO grants (user_id, app_id, allow_filtering, allow_others_to_share_me, updated_at)
             VALUES (?1, ?2, ?3, ?4, ?5)
             ON CONFLICT(user_id, app_id) DO UPDATE SET
                allow_filtering = excluded.allow_filtering,
                allow_others_to_share_me = excluded.allow_others_to_share_me,
                updated_at = excluded.updated_at",
            params![g.user.as_str(), g.app.as_str(), g.allow_filtering, g.allow_others_to_share_me, ts(&g.updated_at)],
        )?;
        Ok(())
    }

    pub fn grants(&self) -> Result<Vec<GrantRow>> {
        let mut stmt = self.conn.prepare(
            "SELECT user_id, app_id, allow_filtering, allow_others_to_share_me, updated_at FROM grants ORDER BY user_id, app_id",
        )?;
        let rows = stmt
            .query_map([], |r| Ok((r.get::<_, String>(0)?, r.get::<_, String>(1)?, r.get(2)?, r.get(3)?, r.get::<_, String>(4)?)))?
            .collect::<rusqlite::Result<Vec<(String, String, bool, bool, String)>>>()?;
        rows.into_iter()
            .map(|(u, a, f, s, t)| {
                Ok(GrantRow { user: UserId(u), app: AppId(a), allow_filtering: f, allow_others_to_share_me: s, updated_at: parse_ts("grants", &t)? })
            })
            .collect()
    }

    /// Replace the stored copy of one list, terms included.
    pub fn save_list(&mut self, list: &PolicyList) -> Result<()> {
        let tx = self.conn.transaction()?;
        let key = params![list.owner.as_str(), list.app.as_str(), list.kind.as_str()];
        tx.execute(
            "INSERT INTO lists (owner, app_id, kind, updated_at) VALUES (?1, ?2, ?3, ?4)
             ON CONFLICT(owner, app_id, kind) DO UPDATE SET updated_at = excluded.updated_at",
            params![list.owner.as_str(), list.app.as_str(), list.kind.as_str(), ts(&list.updated_at)],
        )?;
        tx.execute("DELETE FROM list_terms WHERE owner = ?1 AND app_id = ?2 AND kind = ?3", key)?;
        {
            let mut ins = tx.prepare(
                "INSERT INTO list_terms (owner, app_id, kind, normalized, surface) VALUES (?1, ?2, ?3, ?4, ?5)",
            )?;
            for t in &list.terms {
                ins.execute(params![list.owner.as_str(), list.app.as_str(), list.kind.as_str(), t.normalized(), t.surface()])?;
            }
        }
        tx.commit()?;
        Ok(())
    }

    pub fn lists(&self) -> Result<Vec<PolicyList>> {
        let mut stmt = self.conn.prepare("SELECT owner, app_id, kind, updated_at FROM lists ORDER BY owner, app_id, kind")?;
        let heads = stmt
            .query_map([], |r| Ok((r.get::<_, String>(0)?, r.get::<_, String>(1)?, r.get::<_, String>(2)?, r.get::<_, String>(3)?)))?
            .collect::<rusqlite::Result<Vec<_>>>()?;
        let mut terms_stmt =
            self.conn.prepare("SELECT surface FROM list_terms WHERE owner = ?1 AND app_id = ?2 AND kind = ?3")?;
        let mut out = Vec::with_capacity(heads.len());
        for (owner, app, kind, updated) in heads {
            let corrupt = |detail: String| StoreError::Corrupt { table: "lists", detail };
            let kind: ListKind = kind.parse().map_err(|e: idpfilter::policy::UnknownListKind| corrupt(e.to_string()))?;
            let surfaces = terms_stmt
                .query_map(params![owner, app, kind.as_str()], |r| r.get::<_, String>(0))?
                .collect::<rusqlite::Result<Vec<_>>>()?;
            let terms = surfaces
                .iter()
                .map(|s| Term::new(s).map_err(|e| corrupt(e.to_string())))
                .collect::<Result<_>>()?;
            out.push(PolicyList { owner: UserId(owner), app: AppId(app), kind, terms, updated_at: parse_ts("lists", &updated)? });
        }
        Ok(out)
    }

    pub fn insert_report(&self, app: &AppId, sender: &UserId, report: &FilterReport) -> Result<i64> {
        let by_source = serde_json::to_string(&report.by_source).expect("map serializes");
        let spans = serde_json::to_string(&report.spans).expect("spans serialize");
        self.conn.execute(
            "INSERT INTO reports (app_id, sender, created_at, total_masked, by_source, spans) VALUES (?1, ?2, ?3, ?4, ?5, ?6)",
            params![app.as_str(), sender.as_str(), ts(&report.timestamp), report.total_masked as i64, by_source, spans],
        )?;
        Ok(self.conn.last_insert_rowid())
    }

    /// Reports for `app` (or every app) created at or after `since`, oldest first.
    pub fn reports(&self, app: Option<&AppId>, since: Option<DateTime<Utc>>) -> Result<Vec<StoredReport>> {
        let mut stmt = self.conn.prepare(
            "SELECT id, app_id, sender, created_at, total_masked, by_source, spans FROM reports
             WHERE (?1 IS NULL OR app_id = ?1) ORDER BY id",
        )?;
        let rows = stmt
            .query_map(params![app.map(AppId::as_str)], |r| {
                Ok((
                    r.get::<_, i64>(0)?,
                    r.get::<_, String>(1)?,
                    r.get::<_, String>(2)?,
                    r.get::<_, String>(3)?,
                    r.get::<_, i64>(4)?,
                    r.get::<_, String>(5)?,
                    r.get::<_, String>(6)?,
                ))
            })?
            .collect::<rusqlite::Result<Vec<_>>>()?;
        let mut out = Vec::new();
        for (id, app_id, sender, created, total, by_source, spans) in rows {
            let timestamp = parse_ts("reports", &created)?;
            if since.is_some_and(|s| timestamp < s) {
                continue;
            }
            let corrupt = |e: serde_json::Error| StoreError::Corrupt { table: "reports", detail: format!("report {id}: {e}") };
            let by_source: BTreeMap<String, usize> = serde_json::from_str(&by_source).map_err(corrupt)?;
            let spans: Vec<ReportSpan> = serde_json::from_str(&spans).map_err(corrupt)?;
            out.push(StoredReport {
                id,
                app_id: AppId(app_id),
                sender: UserId(sender),
                report: FilterReport { total_masked: total as usize, by_source, spans, timestamp },
            });
        }
        Ok(out)
    }
}

//! Permission classification and app-store dataset statistics.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const BUNDLED_TABLES: &str = include_str!("../data/permission_tables.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Platform {
    Android,
    Firefox,
    Opera,
    Workspace,
    Zoom,
}

impl Platform {
    pub const ALL: [Platform; 5] =
        [Platform::Android, Platform::Firefox, Platform::Opera, Platform::Workspace, Platform::Zoom];

    pub fn as_str(self) -> &'static str {
        match self {
            Platform::Android => "android",
            Platform::Firefox => "firefox",
            Platform::Opera => "opera",
            Platform::Workspace => "workspace",
            Platform::Zoom => "zoom",
        }
    }
}

impl fmt::Display for Platform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Platform {
    type Err = AuditError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "android" | "google_play" => Ok(Platform::Android),
            "firefox" | "mozilla" => Ok(Platform::Firefox),
            "opera" => Ok(Platform::Opera),
            "workspace" | "google_workspace" | "gsuite" => Ok(Platform::Workspace),
            "zoom" => Ok(Platform::Zoom),
            _ => Err(AuditError::UnknownPlatform(s.to_owned())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PermClass {
    Idp,
    Pidp,
    Nidp,
}

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("{0}: missing required column(s) {1:?}")]
    BadHeader(String, Vec<&'static str>),
    #[error("unknown platform {0:?}")]
    UnknownPlatform(String),
    #[error("invalid mapping config: {0}")]
    Mapping(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlatformTable {
    #[serde(default)]
    idp: Vec<String>,
    #[serde(default)]
    pidp: Vec<String>,
    #[serde(default)]
    nidp: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct TablesFile {
    version: u32,
    #[serde(flatten)]
    platforms: BTreeMap<String, PlatformTable>,
}

/// (platform, permission) → class, loaded from the TOML tables.
#[derive(Debug)]
pub struct PermissionMap {
    version: u32,
    classes: HashMap<(Platform, String), PermClass>,
    warned: Mutex<HashSet<(Platform, String)>>,
}

impl PermissionMap {
    pub fn bundled() -> Self {
        Self::from_toml(BUNDLED_TABLES).expect("bundled permission tables are valid")
    }

    pub fn load(path: &Path) -> Result<Self, AuditError> {
        let content = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => AuditError::FileNotFound(path.display().to_string()),
            _ => AuditError::Io(e),
        })?;
        Self::from_toml(&content)
    }

    pub fn from_toml(content: &str) -> Result<Self, AuditError> {
        let file: TablesFile = toml::from_str(content).map_err(|e| AuditError::Mapping(e.to_string()))?;
        let mut classes = HashMap::new();
        for (name, table) in file.platforms {
            let platform: Platform = name.parse()?;
            for (class, perms) in [(PermClass::Idp, table.idp), (PermClass::Pidp, table.pidp), (PermClass::Nidp, table.nidp)] {
                for p in perms {
                    let key = (platform, p.trim().to_owned());
                    if let Some(prev) = classes.insert(key.clone(), class) {
                        if prev != class {
                            return Err(AuditError::Mapping(format!("{} {:?} listed as both {prev:?} and {class:?}", key.0, key.1)));
                        }
                    }
                }
            }
        }
        Ok(PermissionMap { version: file.version, classes, warned: Mutex::default() })
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    /// Number of distinct (permission, class) entries for a platform.
    pub fn count(&self, platform: Platform, class: PermClass) -> usize {
        self.classes.iter().filter(|((p, _), c)| *p == platform && **c == class).count()
    }

    pub fn classify(&self, platform: Platform, permission: &str) -> PermClass {
        let mut name = permission.trim();
        if platform == Platform::Zoom {
            if let Some(rest) = name.strip_prefix("view:").or_else(|| name.strip_prefix("manage:")) {
                name = rest.trim();
            }
        }
        if let Some(&class) = self.classes.get(&(platform, name.to_owned())) {
            return class;
        }
        let mut warned = self.warned.lock().unwrap_or_else(|e| e.into_inner());
        if warned.insert((platform, name.to_owned())) {
            log::warn!("unmapped {platform} permission {name:?}, classified as NIDP");
        }
        PermClass::Nidp
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppRecord {
    pub platform: Platform,
    pub name: String,
    pub category: String,
    pub permissions: Vec<String>,
    pub users: Option<u64>,
    pub rating: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowError {
    /// 1-based line in the CSV file (the header is line 1).
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub records: Vec<AppRecord>,
    pub errors: Vec<RowError>,
}

const REQUIRED: [&str; 3] = ["name", "category", "permissions"];

pub fn load_dataset(path: &Path, platform: Platform) -> Result<Dataset, AuditError> {
    let file = std::fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => AuditError::FileNotFound(path.display().to_string()),
        _ => AuditError::Io(e),
    })?;
    read_dataset(file, platform, &path.display().to_string())
}

/// Parse CSV with columns name, category, permissions (`;`-separated) and
/// optional users and rating. Malformed rows are reported, not dropped silently.
pub fn read_dataset<R: std::io::Read>(reader: R, platform: Platform, label: &str) -> Result<Dataset, AuditError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name));
    let missing: Vec<&'static str> = REQUIRED.iter().copied().filter(|c| col(c).is_none()).collect();
    if !missing.is_empty() {
        return Err(AuditError::BadHeader(label.to_owned(), missing));
    }
    let (name_i, cat_i, perm_i) = (col("name").unwrap(), col("category").unwrap(), col("permissions").unwrap());
    let (users_i, rating_i) = (col("users"), col("rating"));

    let mut out = Dataset::default();
    for row in rdr.records() {
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                out.errors.push(RowError { line, message: e.to_string() });
                continue;
            }
        };
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != headers.len() {
            out.errors.push(RowError {
                line,
                message: format!("expected {} fields, found {}", headers.len(), row.len()),
            });
            continue;
        }
        let field = |i: usize| row.get(i).unwrap_or("").trim();
        let users = match users_i.map(field).filter(|s| !s.is_empty()) {
            None => None,
            Some(s) => match s.replace([',', '+'], "").parse::<u64>() {
                Ok(n) => Some(n),
                Err(_) => {
                    out.errors.push(RowError { line, message: format!("invalid users value {s:?}") });
                    continue;
                }
            },
        };
        let rating = match rating_i.map(field).filter(|s| !s.is_empty()) {
            None => None,
            Some(s) => match s.parse::<f64>() {
                Ok(r) if r.is_finite() => Some(r),
                _ => {
                    out.errors.push(RowError { line, message: format!("invalid rating value {s:?}") });
                    continue;
                }
            },
        };
        if field(name_i).is_empty() {
            out.errors.push(RowError { line, message: "empty name".to_owned() });
            continue;
        }
        out.records.push(AppRecord {
            platform,
            name: field(name_i).to_owned(),
            category: field(cat_i).to_owned(),
            permissions: field(perm_i)
                .split(';')
                .map(str::trim)
                .filter(|p| !p.is_empty())
                .map(str::to_owned)
                .collect(),
            users,
            rating,
        });
    }
    Ok(out)
}

/// Per-app counts over distinct permissions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AppCounts {
    pub total: usize,
    pub idp: usize,
    pub pidp: usize,
}

impl AppCounts {
    pub fn idp_pidp(&self) -> usize {
        self.idp + self.pidp
    }
}

pub fn count_app(map: &PermissionMap, app: &AppRecord) -> AppCounts {
    let distinct: BTreeSet<&str> = app.permissions.iter().map(|p| p.trim()).collect();
    let mut c = AppCounts { total: distinct.len(), ..Default::default() };
    for p in distinct {
        match map.classify(app.platform, p) {
            PermClass::Idp => c.idp += 1,
            PermClass::Pidp => c.pidp += 1,
            PermClass::Nidp => {}
        }
    }
    c
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformSummary {
    pub total_apps: usize,
    pub apps_with_idp: usize,
    pub apps_with_pidp: usize,
    pub apps_with_either: usize,
    pub ratio_either: f64,
    pub mean_idp_pidp_per_app: f64,
    pub mean_total_per_app: f64,
    pub proportion: f64,
}

pub fn summarize(map: &PermissionMap, records: &[AppRecord]) -> Result<PlatformSummary, AuditError> {
    if records.is_empty() {
        return Err(AuditError::EmptyDataset);
    }
    let (mut idp, mut pidp, mut either, mut sum_ip, mut sum_total) = (0, 0, 0, 0usize, 0usize);
    for app in records {
        let c = count_app(map, app);
        idp += usize::from(c.idp > 0);
        pidp += usize::from(c.pidp > 0);
        either += usize::from(c.idp_pidp() > 0);
        sum_ip += c.idp_pidp();
        sum_total += c.total;
    }
    let n = records.len() as f64;
    let mean_ip = sum_ip as f64 / n;
    let mean_total = sum_total as f64 / n;
    Ok(PlatformSummary {
        total_apps: records.len(),
        apps_with_idp: idp,
        apps_with_pidp: pidp,
        apps_with_either: either,
        ratio_either: either as f64 / n,
        mean_idp_pidp_per_app: mean_ip,
        mean_total_per_app: mean_total,
        proportion: if sum_total == 0 { 0.0 } else { mean_ip / mean_total },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryStats {
    pub apps: usize,
    pub mean_total: f64,
    pub mean_idp_pidp: f64,
    /// IDP/PIDP permission count → number of apps.
    pub histogram: BTreeMap<usize, usize>,
}

/// Statistics per app category, ordered alphabetically.
pub fn category_histogram(map: &PermissionMap, records: &[AppRecord]) -> Result<BTreeMap<String, CategoryStats>, AuditError> {
    if records.is_empty() {
        return Err(AuditError::EmptyDataset);
    }
    let mut groups: BTreeMap<String, Vec<AppCounts>> = BTreeMap::new();
    for app in records {
        groups.entry(app.category.clone()).or_default().push(count_app(map, app));
    }
    Ok(groups
        .into_iter()
        .map(|(cat, counts)| {
            let n = counts.len() as f64;
            let mut histogram = BTreeMap::new();
            for c in &counts {
                *histogram.entry(c.idp_pidp()).or_insert(0) += 1;
            }
            let stats = CategoryStats {
                apps: counts.len(),
                mean_total: counts.iter().map(|c| c.total).sum::<usize>() as f64 / n,
                mean_idp_pidp: counts.iter().map(|c| c.idp_pidp()).sum::<usize>() as f64 / n,
                histogram,
            };
            (cat, stats)
        })
        .collect())
}

/// Long-format CSV: one row per (category, IDP/PIDP count) bucket.
pub fn histogram_csv(stats: &BTreeMap<String, CategoryStats>) -> Result<String, AuditError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["category", "apps", "mean_total", "mean_idp_pidp", "idp_pidp_count", "app_count"])?;
    for (cat, s) in stats {
        for (count, apps) in &s.histogram {
            w.write_record([
                cat.as_str(),
                &s.apps.to_string(),
                &format!("{:.4}", s.mean_total),
                &format!("{:.4}", s.mean_idp_pidp),
                &count.to_string(),
                &apps.to_string(),
            ])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| AuditError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Fixed-width table of per-category means.
pub fn histogram_table(stats: &BTreeMap<String, CategoryStats>) -> String {
    let width = stats.keys().map(|k| k.chars().count()).max().unwrap_or(8).max(8);
    let mut out = format!("{:<width$}  {:>5}  {:>10}  {:>13}\n", "category", "apps", "mean_total", "mean_idp_pidp");
    for (cat, s) in stats {
        out.push_str(&format!("{cat:<width$}  {:>5}  {:>10.2}  {:>13.2}\n", s.apps, s.mean_total, s.mean_idp_pidp));
    }
    out
}

/// Reference recount used to cross-check [`summarize`]. Reads the tables as
/// untyped TOML and walks each app's permissions one at a time.
pub fn recount_summary(tables_toml: &str, records: &[AppRecord]) -> Option<PlatformSummary> {
    let tables: toml::Value = toml::from_str(tables_toml).ok()?;
    let class_of = |platform: Platform, perm: &str| -> Option<&'static str> {
        let mut perm = perm;
        if platform == Platform::Zoom {
            for prefix in ["view:", "manage:"] {
                if let Some(rest) = perm.strip_prefix(prefix) {
                    perm = rest.trim();
                }
            }
        }
        let table = tables.get(platform.as_str())?;
        ["idp", "pidp"].into_iter().find(|class| {
            table
                .get(class)
                .and_then(|v| v.as_array())
                .is_some_and(|list| list.iter().any(|v| v.as_str() == Some(perm)))
        })
    };
    if records.is_empty() {
        return None;
    }
    let (mut with_idp, mut with_pidp, mut with_either) = (0usize, 0usize, 0usize);
    let (mut idp_pidp, mut total) = (0usize, 0usize);
    for app in records {
        let mut seen: Vec<&str> = Vec::new();
        let (mut i, mut p) = (0, 0);
        for perm in &app.permissions {
            let perm = perm.trim();
            if seen.contains(&perm) {
                continue;
            }
            seen.push(perm);
            total += 1;
            match class_of(app.platform, perm) {
                Some("idp") => i += 1,
                Some(_) => p += 1,
                None => {}
            }
        }
        idp_pidp += i + p;
        with_idp += (i > 0) as usize;
        with_pidp += (p > 0) as usize;
        with_either += (i + p > 0) as usize;
    }
    let n = records.len() as f64;
    Some(PlatformSummary {
        total_apps: records.len(),
        apps_with_idp: with_idp,
        apps_with_pidp: with_pidp,
        apps_with_either: with_either,
        ratio_either: with_either as f64 / n,
        mean_idp_pidp_per_app: idp_pidp as f64 / n,
        mean_total_per_app: total as f64 / n,
        proportion: if total == 0 { 0.0 } else { (idp_pidp as f64 / n) / (total as f64 / n) },
    })
}

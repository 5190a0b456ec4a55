//! Built-in category vocabularies and user-supplied term files.
//!
//! Bundled lists are compiled into the binary and pinned by the SHA-256
//! digests in `vocab/MANIFEST.sha256`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::match_engine::{select_leftmost_longest, MatchSpan, MatchedTerm};
use crate::term::{fold_char, is_word_char, parse_term_lines, Term, TermError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CategoryId {
    Names,
    Links,
    Countries,
    Diseases,
    StreetNames,
    /// Pattern-based: maximal digit runs, no term list.
    Numerals,
}

impl CategoryId {
    pub const ALL: [CategoryId; 6] = [
        CategoryId::Names,
        CategoryId::Links,
        CategoryId::Countries,
        CategoryId::Diseases,
        CategoryId::StreetNames,
        CategoryId::Numerals,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CategoryId::Names => "names",
            CategoryId::Links => "links",
            CategoryId::Countries => "countries",
            CategoryId::Diseases => "diseases",
            CategoryId::StreetNames => "street_names",
            CategoryId::Numerals => "numerals",
        }
    }

    fn bundled_file(self) -> Option<(&'static str, &'static str)> {
        match self {
            CategoryId::Names => Some(("names.txt", include_str!("../vocab/names.txt"))),
            CategoryId::Links => Some(("links.txt", include_str!("../vocab/links.txt"))),
            CategoryId::Countries => Some(("countries.txt", include_str!("../vocab/countries.txt"))),
            CategoryId::Diseases => Some(("diseases.txt", include_str!("../vocab/diseases.txt"))),
            CategoryId::StreetNames => Some(("streets.txt", include_str!("../vocab/streets.txt"))),
            CategoryId::Numerals => None,
        }
    }
}

impl fmt::Display for CategoryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CategoryId {
    type Err = VocabError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s.chars().filter(|c| *c != '_' && *c != '-').collect::<String>().to_lowercase();
        match key.as_str() {
            "names" | "surnames" => Ok(CategoryId::Names),
            "links" | "urls" => Ok(CategoryId::Links),
            "countries" => Ok(CategoryId::Countries),
            "diseases" => Ok(CategoryId::Diseases),
            "streetnames" | "streets" => Ok(CategoryId::StreetNames),
            "numerals" | "numbers" => Ok(CategoryId::Numerals),
            _ => Err(VocabError::UnknownCategory(s.to_owned())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VocabSource {
    Builtin,
    File(PathBuf),
}

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("vocabulary file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error("vocabulary file is not valid UTF-8: {}", .0.display())]
    InvalidEncoding(PathBuf),
    #[error("vocabulary for {0} has no terms")]
    EmptyVocabulary(CategoryId),
    #[error("{path}:{line}: {source}")]
    InvalidTerm { path: String, line: usize, source: TermError },
    #[error("category {0} is pattern-based and has no term file")]
    PatternCategory(CategoryId),
    #[error("unknown category {0:?}")]
    UnknownCategory(String),
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabularyCategory {
    pub id: CategoryId,
    /// Deduplicated under normalization, first occurrence kept.
    pub terms: Vec<Term>,
    pub source: VocabSource,
}

impl VocabularyCategory {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

fn dedup(terms: Vec<Term>) -> Vec<Term> {
    let mut seen = HashSet::with_capacity(terms.len());
    terms.into_iter().filter(|t| seen.insert(t.clone())).collect()
}

fn from_content(id: CategoryId, content: &str, source: VocabSource, label: &str) -> Result<VocabularyCategory, VocabError> {
    let terms = parse_term_lines(content).map_err(|(line, source)| VocabError::InvalidTerm {
        path: label.to_owned(),
        line,
        source,
    })?;
    let terms = dedup(terms);
    if terms.is_empty() {
        return Err(VocabError::EmptyVocabulary(id));
    }
    Ok(VocabularyCategory { id, terms, source })
}

/// The bundled default for a category.
pub fn bundled(id: CategoryId) -> VocabularyCategory {
    match id.bundled_file() {
        None => VocabularyCategory { id, terms: Vec::new(), source: VocabSource::Builtin },
        Some((name, content)) => from_content(id, content, VocabSource::Builtin, name)
            .expect("bundled vocabulary files are valid"),
    }
}

/// Load a category from `path`, or the bundled default when `path` is `None`.
pub fn load_category(id: CategoryId, path: Option<&Path>) -> Result<VocabularyCategory, VocabError> {
    let Some(path) = path else {
        return Ok(bundled(id));
    };
    if id == CategoryId::Numerals {
        return Err(VocabError::PatternCategory(id));
    }
    let bytes = std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => VocabError::FileNotFound(path.to_owned()),
        _ => VocabError::Io { path: path.to_owned(), source: e },
    })?;
    let content = String::from_utf8(bytes).map_err(|_| VocabError::InvalidEncoding(path.to_owned()))?;
    from_content(id, &content, VocabSource::File(path.to_owned()), &path.display().to_string())
}

/// The set of active categories, initially the bundled defaults.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    categories: BTreeMap<CategoryId, Arc<VocabularyCategory>>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::bundled()
    }
}

impl Vocabulary {
    pub fn bundled() -> Self {
        let categories = CategoryId::ALL.iter().map(|&id| (id, Arc::new(bundled(id)))).collect();
        Vocabulary { categories }
    }

    /// Replace a category with the contents of `path` (or the bundled default).
    pub fn load(&mut self, id: CategoryId, path: Option<&Path>) -> Result<&VocabularyCategory, VocabError> {
        let cat = Arc::new(load_category(id, path)?);
        self.categories.insert(id, cat);
        Ok(&self.categories[&id])
    }

    pub fn get(&self, id: CategoryId) -> &VocabularyCategory {
        &self.categories[&id]
    }

    pub fn list_categories(&self) -> Vec<(CategoryId, usize)> {
        self.categories.iter().map(|(&id, c)| (id, c.len())).collect()
    }
}

/// Check every bundled file against the pinned SHA-256 manifest.
/// Returns the names of files whose digest does not match.
pub fn verify_manifest() -> Result<(), Vec<String>> {
    let manifest = include_str!("../vocab/MANIFEST.sha256");
    let pinned: BTreeMap<&str, &str> = manifest
        .lines()
        .filter_map(|l| l.split_once("  "))
        .map(|(digest, name)| (name.trim(), digest.trim()))
        .collect();
    let mismatched: Vec<String> = CategoryId::ALL
        .iter()
        .filter_map(|id| id.bundled_file())
        .filter(|(name, content)| {
            let digest = hex::encode(Sha256::digest(content.as_bytes()));
            pinned.get(name) != Some(&digest.as_str())
        })
        .map(|(name, _)| name.to_owned())
        .collect();
    if mismatched.is_empty() {
        Ok(())
    } else {
        Err(mismatched)
    }
}

/// Locate link prefixes: a term matches where it starts on a word boundary,
/// and the span extends through the end of the non-whitespace run it begins.
pub fn find_link_spans(text: &str, prefixes: &[Term], case_sensitive: bool) -> Vec<MatchSpan> {
    if prefixes.is_empty() || text.is_empty() {
        return Vec::new();
    }
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let keys: Vec<Vec<char>> = prefixes
        .iter()
        .map(|t| t.match_key(case_sensitive).chars().collect())
        .collect();
    let mut candidates = Vec::new();
    for p in 0..chars.len() {
        if p > 0 && is_word_char(chars[p - 1].1) {
            continue;
        }
        for (key, term) in keys.iter().zip(prefixes) {
            let end = p + key.len();
            if end > chars.len() {
                continue;
            }
            let hit = key
                .iter()
                .zip(&chars[p..end])
                .all(|(k, &(_, c))| fold_char(c, case_sensitive) == *k);
            if !hit {
                continue;
            }
            let run_end = chars[end..]
                .iter()
                .find(|(_, c)| c.is_whitespace())
                .map_or(text.len(), |&(b, _)| b);
            candidates.push(MatchSpan {
                start: chars[p].0,
                end: run_end,
                matched: MatchedTerm::Term(term.clone()),
            });
        }
    }
    select_leftmost_longest(candidates, |s| (s.start, s.end))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn bundled_names_has_800_surnames() {
        let names = load_category(CategoryId::Names, None).unwrap();
        assert_eq!(names.len(), 800);
        assert_eq!(names.terms[0].normalized(), "smith");
        assert_eq!(names.source, VocabSource::Builtin);
    }

    #[test]
    fn dedup_under_case_folding() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(b"Hungary\nhungary\n").unwrap();
        let cat = load_category(CategoryId::Countries, Some(f.path())).unwrap();
        assert_eq!(cat.len(), 1);
    }

    #[test]
    fn missing_file() {
        let err = load_category(CategoryId::Diseases, Some(Path::new("/nonexistent/diseases.txt"))).unwrap_err();
        assert!(matches!(err, VocabError::FileNotFound(_)));
    }

    #[test]
    fn invalid_encoding_and_empty() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(&[0x66, 0xff, 0xfe, b'\n']).unwrap();
        assert!(matches!(
            load_category(CategoryId::Names, Some(f.path())),
            Err(VocabError::InvalidEncoding(_))
        ));
        let mut g = tempfile::NamedTempFile::new().unwrap();
        g.write_all(b"# only a comment\n\n").unwrap();
        assert!(matches!(
            load_category(CategoryId::Names, Some(g.path())),
            Err(VocabError::EmptyVocabulary(CategoryId::Names))
        ));
        let mut h = tempfile::NamedTempFile::new().unwrap();
        h.write_all(b"Smith\n\n+++\n").unwrap();
        assert!(matches!(
            load_category(CategoryId::Names, Some(h.path())),
            Err(VocabError::InvalidTerm { line: 3, .. })
        ));
    }

    #[test]
    fn load_is_idempotent() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(b"Budapest\nSzeged\n").unwrap();
        let a = load_category(CategoryId::Countries, Some(f.path())).unwrap();
        let b = load_category(CategoryId::Countries, Some(f.path())).unwrap();
        assert_eq!(a.terms, b.terms);
    }

    #[test]
    fn list_reports_six_categories() {
        let vocab = Vocabulary::bundled();
        let list = vocab.list_categories();
        assert_eq!(list.len(), 6);
        assert!(list.contains(&(CategoryId::Names, 800)));
        assert!(list.contains(&(CategoryId::Numerals, 0)));
        assert!(list.iter().filter(|(id, _)| *id != CategoryId::Numerals).all(|(_, n)| *n >= 1));
    }

    #[test]
    fn registry_reflects_loaded_file() {
        let mut vocab = Vocabulary::bundled();
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(b"Kovacs\nNagy\n").unwrap();
        vocab.load(CategoryId::Names, Some(f.path())).unwrap();
        assert!(vocab.list_categories().contains(&(CategoryId::Names, 2)));
        vocab.load(CategoryId::Names, None).unwrap();
        assert!(vocab.list_categories().contains(&(CategoryId::Names, 800)));
    }

    #[test]
    fn manifest_pins_bundled_files() {
        assert_eq!(verify_manifest(), Ok(()));
    }

    #[test]
    fn bundled_terms_satisfy_invariants() {
        for id in CategoryId::ALL {
            for t in &bundled(id).terms {
                let again = Term::new(t.surface()).unwrap();
                assert_eq!(&again, t);
                assert!(t.normalized().chars().any(is_word_char));
                assert_eq!(t.normalized(), t.normalized().trim());
            }
        }
    }

    #[test]
    fn category_names_parse() {
        assert_eq!("street_names".parse::<CategoryId>().unwrap(), CategoryId::StreetNames);
        assert_eq!("Numerals".parse::<CategoryId>().unwrap(), CategoryId::Numerals);
        assert!("planets".parse::<CategoryId>().is_err());
    }

    #[test]
    fn link_prefix_extends_to_run_end() {
        let links = bundled(CategoryId::Links).terms;
        let text = "see https://smith.example/a?b=1, or www.x.org.";
        let spans = find_link_spans(text, &links, false);
        let found: Vec<&str> = spans.iter().map(|s| s.text(text)).collect();
        assert_eq!(found, ["https://smith.example/a?b=1,", "www.x.org."]);
        // prefix must start on a word boundary
        assert!(find_link_spans("xhttps://a", &links, false).is_empty());
        assert_eq!(find_link_spans("HTTP://A", &links, false).len(), 1);
    }
}

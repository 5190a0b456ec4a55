//! Workload generation and timing harness for the matching strategies.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::match_engine::{apply_mask, MatchSpan, MatchStrategy, Matcher, DEFAULT_PLACEHOLDER};
use crate::term::Term;

pub const MAX_SENTENCE_WORDS: usize = 60;
pub const DEFAULT_INJECT_RATE: f64 = 0.015;
pub const INIT_SIZE_RANGE: std::ops::RangeInclusive<usize> = 1_000..=200_000;

const BUNDLED_WORDS: &str = include_str!("../data/words.txt");

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("word source is empty")]
    EmptyWordSource,
    #[error("sentence count must be at least 1")]
    NoSentences,
    #[error("blacklist size {0} outside {min}..={max}", min = INIT_SIZE_RANGE.start(), max = INIT_SIZE_RANGE.end())]
    SizeOutOfRange(usize),
    #[error("injection rate {0} outside [0, 1]")]
    BadRate(f64),
    #[error(
        "strategies disagree on set {set}, sentence {sentence}: {expected_strategy} has {expected:?}, {strategy} has {got:?}"
    )]
    StrategyMismatch {
        set: usize,
        sentence: usize,
        expected_strategy: MatchStrategy,
        strategy: MatchStrategy,
        expected: Option<(usize, usize)>,
        got: Option<(usize, usize)>,
    },
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Target length weights 1.1·L·0.9^L over L = 1..=60, normalized to sum 1.
/// Index 0 holds L = 1.
pub fn length_weights() -> Vec<f64> {
    let raw: Vec<f64> = (1..=MAX_SENTENCE_WORDS).map(|l| 1.1 * l as f64 * 0.9f64.powi(l as i32)).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / sum).collect()
}

pub fn bundled_words() -> Vec<String> {
    BUNDLED_WORDS
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_owned)
        .collect()
}

/// Read a word source: one word per line, or running text such as a tagged
/// corpus (`word/tag` tokens). Keeps distinct alphabetic tokens in first-seen order.
pub fn load_words(path: &Path) -> Result<Vec<String>, BenchError> {
    let content = std::fs::read_to_string(path).map_err(|source| BenchError::Io { path: path.display().to_string(), source })?;
    let mut seen = HashSet::new();
    let words: Vec<String> = content
        .lines()
        .filter(|l| !l.starts_with('#'))
        .flat_map(str::split_whitespace)
        .map(|tok| tok.split('/').next().unwrap_or(tok))
        .filter(|w| w.chars().all(char::is_alphabetic) && !w.is_empty())
        .map(str::to_lowercase)
        .filter(|w| seen.insert(w.clone()))
        .collect();
    if words.is_empty() {
        return Err(BenchError::EmptyWordSource);
    }
    Ok(words)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceSet {
    pub sentences: Vec<String>,
    /// Word slots per sentence, in sentence order.
    pub lengths: Vec<usize>,
    /// Target relative frequency per length.
    pub length_distribution: BTreeMap<usize, f64>,
    pub seed: u64,
}

impl SentenceSet {
    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn empirical_distribution(&self) -> BTreeMap<usize, f64> {
        let mut counts = BTreeMap::new();
        for &l in &self.lengths {
            *counts.entry(l).or_insert(0usize) += 1;
        }
        let n = self.lengths.len().max(1) as f64;
        counts.into_iter().map(|(l, c)| (l, c as f64 / n)).collect()
    }

    /// Most frequent length; the smallest one on ties.
    pub fn mode(&self) -> Option<usize> {
        let mut counts = BTreeMap::new();
        for &l in &self.lengths {
            *counts.entry(l).or_insert(0usize) += 1;
        }
        counts.into_iter().max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0))).map(|(l, _)| l)
    }
}

impl SentenceSet {
    /// One sentence per line after a `# seed: N` header.
    pub fn to_text(&self) -> String {
        let mut out = format!("# seed: {}\n", self.seed);
        for s in &self.sentences {
            out.push_str(s);
            out.push('\n');
        }
        out
    }

    /// Inverse of [`SentenceSet::to_text`]. Plain files without a header are
    /// accepted; lengths are recounted from whitespace-separated words.
    pub fn from_text(content: &str) -> SentenceSet {
        let mut seed = 0;
        let mut sentences = Vec::new();
        for line in content.lines() {
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("seed:") {
                    seed = v.trim().parse().unwrap_or(0);
                }
                continue;
            }
            if !line.trim().is_empty() {
                sentences.push(line.to_owned());
            }
        }
        let lengths = sentences.iter().map(|s| s.split_whitespace().count()).collect();
        SentenceSet { sentences, lengths, length_distribution: target_distribution(), seed }
    }
}

pub fn load_set(path: &Path) -> Result<SentenceSet, BenchError> {
    std::fs::read_to_string(path)
        .map(|c| SentenceSet::from_text(&c))
        .map_err(|source| BenchError::Io { path: path.display().to_string(), source })
}

fn target_distribution() -> BTreeMap<usize, f64> {
    length_weights().into_iter().enumerate().map(|(i, w)| (i + 1, w)).collect()
}

pub fn total_variation(p: &BTreeMap<usize, f64>, q: &BTreeMap<usize, f64>) -> f64 {
    let keys: std::collections::BTreeSet<&usize> = p.keys().chain(q.keys()).collect();
    keys.into_iter()
        .map(|k| (p.get(k).copied().unwrap_or(0.0) - q.get(k).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
        / 2.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenOptions<'a> {
    /// Terms placed into word slots so that filtering has hits.
    pub inject: &'a [String],
    /// Probability that a word slot holds an injected term.
    pub rate: f64,
}

impl Default for GenOptions<'_> {
    fn default() -> Self {
        GenOptions { inject: &[], rate: DEFAULT_INJECT_RATE }
    }
}

pub fn generate_sentences(n: usize, seed: u64, words: &[String], opts: &GenOptions<'_>) -> Result<SentenceSet, BenchError> {
    if words.is_empty() {
        return Err(BenchError::EmptyWordSource);
    }
    if n == 0 {
        return Err(BenchError::NoSentences);
    }
    if !(0.0..=1.0).contains(&opts.rate) {
        return Err(BenchError::BadRate(opts.rate));
    }
    let weights = length_weights();
    let lengths_dist = WeightedIndex::new(&weights).expect("weights are positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sentences = Vec::with_capacity(n);
    let mut lengths = Vec::with_capacity(n);
    for _ in 0..n {
        let len = lengths_dist.sample(&mut rng) + 1;
        let mut s = String::with_capacity(len * 8);
        for i in 0..len {
            if i > 0 {
                s.push(' ');
            }
            let word = if !opts.inject.is_empty() && rng.random_bool(opts.rate) {
                &opts.inject[rng.random_range(0..opts.inject.len())]
            } else {
                &words[rng.random_range(0..words.len())]
            };
            if i == 0 {
                let mut cs = word.chars();
                if let Some(c) = cs.next() {
                    s.extend(c.to_uppercase());
                    s.push_str(cs.as_str());
                }
            } else {
                s.push_str(word);
            }
        }
        s.push('.');
        sentences.push(s);
        lengths.push(len);
    }
    Ok(SentenceSet { sentences, lengths, length_distribution: target_distribution(), seed })
}

/// Generate `count` sets with seeds `base_seed..base_seed + count`, optionally
/// on one thread per set.
pub fn generate_sets(
    count: usize,
    n: usize,
    base_seed: u64,
    words: &[String],
    opts: &GenOptions<'_>,
    parallel: bool,
) -> Result<Vec<SentenceSet>, BenchError> {
    if !parallel {
        return (0..count).map(|i| generate_sentences(n, base_seed + i as u64, words, opts)).collect();
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..count)
            .map(|i| scope.spawn(move || generate_sentences(n, base_seed + i as u64, words, opts)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("generator thread panicked")).collect()
    })
}

/// `n` distinct lowercase pseudo-words, deterministic under `seed`.
pub fn synthetic_terms(n: usize, seed: u64) -> Vec<Term> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::with_capacity(n);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let len = rng.random_range(5..=12);
        let w: String = (0..len).map(|_| rng.random_range(b'a'..=b'z') as char).collect();
        if seen.insert(w.clone()) {
            out.push(Term::new(w).expect("non-empty ascii word"));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InitSample {
    pub size: usize,
    pub init_seconds: f64,
    pub seconds_per_term: f64,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 { xs[m] } else { (xs[m - 1] + xs[m]) / 2.0 }
}

/// Median compile time over `reps` (at least 5) runs per blacklist size.
pub fn measure_init(sizes: &[usize], strategy: MatchStrategy, reps: usize) -> Result<Vec<InitSample>, BenchError> {
    if let Some(&bad) = sizes.iter().find(|s| !INIT_SIZE_RANGE.contains(s)) {
        return Err(BenchError::SizeOutOfRange(bad));
    }
    let reps = reps.max(5);
    let max = sizes.iter().copied().max().unwrap_or(0);
    let pool = synthetic_terms(max, 0x1d9f);
    // One untimed build to fault in the allocator and caches, then every
    // repetition visits all sizes so machine drift hits them alike.
    drop(Matcher::compile(&pool, strategy, false, false));
    let mut times = vec![Vec::with_capacity(reps); sizes.len()];
    for _ in 0..reps {
        for (slot, &size) in times.iter_mut().zip(sizes) {
            let m = Matcher::compile(&pool[..size], strategy, false, false);
            slot.push(m.compile_duration().as_secs_f64());
        }
    }
    Ok(sizes
        .iter()
        .zip(times)
        .map(|(&size, t)| {
            let init_seconds = median(t);
            InitSample { size, init_seconds, seconds_per_term: init_seconds / size as f64 }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchResult {
    pub strategy: MatchStrategy,
    pub blacklist_size: usize,
    pub set_size: usize,
    pub total_seconds: f64,
    pub init_seconds: f64,
    pub per_invocation_reinit: bool,
    /// Total spans masked in one pass over the set.
    pub masked: usize,
}

fn filter_once(strategy: MatchStrategy, terms: &[Term], set: &SentenceSet, reinit: bool) -> (Duration, Duration, usize) {
    let start = Instant::now();
    let mut init = Duration::ZERO;
    let mut masked = 0;
    let mut shared = None;
    if !reinit {
        let m = Matcher::compile(terms, strategy, false, false);
        init = m.compile_duration();
        shared = Some(m);
    }
    for sentence in &set.sentences {
        let local;
        let matcher = match &shared {
            Some(m) => m,
            None => {
                local = Matcher::compile(terms, strategy, false, false);
                init += local.compile_duration();
                &local
            }
        };
        let spans = matcher.find_matches(sentence);
        masked += spans.len();
        std::hint::black_box(apply_mask(sentence, &spans, DEFAULT_PLACEHOLDER).expect("valid spans"));
    }
    (start.elapsed(), init, masked)
}

/// Filter every sentence, `reps` times (at least 1), and average the wall time.
pub fn measure_filter(strategy: MatchStrategy, terms: &[Term], set: &SentenceSet, reinit: bool, reps: usize) -> BenchResult {
    let reps = reps.max(1);
    let (mut total, mut init, mut masked) = (Duration::ZERO, Duration::ZERO, 0);
    for _ in 0..reps {
        let (t, i, m) = filter_once(strategy, terms, set, reinit);
        total += t;
        init += i;
        masked = m;
    }
    BenchResult {
        strategy,
        blacklist_size: terms.len(),
        set_size: set.len(),
        total_seconds: total.as_secs_f64() / reps as f64,
        init_seconds: init.as_secs_f64() / reps as f64,
        per_invocation_reinit: reinit,
        masked,
    }
}

/// Masked-span counts per set (rows) and strategy (columns, in `strategies` order).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountTable {
    pub strategies: Vec<MatchStrategy>,
    pub counts: Vec<Vec<usize>>,
}

impl CountTable {
    pub fn render(&self) -> String {
        let mut out = String::from("strategy");
        for i in 0..self.counts.len() {
            let _ = write!(out, "\tset{}", i + 1);
        }
        out.push('\n');
        for (j, s) in self.strategies.iter().enumerate() {
            out.push_str(s.short_name());
            for row in &self.counts {
                let _ = write!(out, "\t{}", row[j]);
            }
            out.push('\n');
        }
        out
    }

    pub fn per_set(&self) -> Vec<usize> {
        self.counts.iter().map(|row| row[0]).collect()
    }
}

fn span_key(s: Option<&MatchSpan>) -> Option<(usize, usize)> {
    s.map(|s| (s.start, s.end))
}

/// Count masked spans per set under each strategy and require every
/// strategy to produce the same spans as the first one.
pub fn compare_strategies(sets: &[SentenceSet], blacklist: &[Term], strategies: &[MatchStrategy]) -> Result<CountTable, BenchError> {
    let matchers: Vec<Matcher> = strategies.iter().map(|&s| Matcher::compile(blacklist, s, false, false)).collect();
    let mut counts = Vec::with_capacity(sets.len());
    for (si, set) in sets.iter().enumerate() {
        let mut row = vec![0; strategies.len()];
        for (ti, sentence) in set.sentences.iter().enumerate() {
            let results: Vec<Vec<MatchSpan>> = matchers.iter().map(|m| m.find_matches(sentence)).collect();
            for (j, r) in results.iter().enumerate() {
                row[j] += r.len();
                if r != &results[0] {
                    let k = (0..r.len().max(results[0].len()))
                        .find(|&k| r.get(k) != results[0].get(k))
                        .unwrap_or(0);
                    return Err(BenchError::StrategyMismatch {
                        set: si,
                        sentence: ti,
                        expected_strategy: strategies[0],
                        strategy: strategies[j],
                        expected: span_key(results[0].get(k)),
                        got: span_key(r.get(k)),
                    });
                }
            }
        }
        counts.push(row);
    }
    Ok(CountTable { strategies: strategies.to_vec(), counts })
}

pub fn results_csv(results: &[BenchResult]) -> String {
    let mut out = String::from("strategy,size,set_size,reinit,seconds,init_seconds\n");
    for r in results {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.6},{:.6}",
            r.strategy.short_name(),
            r.blacklist_size,
            r.set_size,
            r.per_invocation_reinit,
            r.total_seconds,
            r.init_seconds
        );
    }
    out
}

pub fn results_table(results: &[BenchResult]) -> String {
    let mut out = format!("{:<8} {:>8} {:>8} {:>7} {:>12} {:>12}\n", "strategy", "terms", "sents", "reinit", "total_s", "init_s");
    for r in results {
        let _ = writeln!(
            out,
            "{:<8} {:>8} {:>8} {:>7} {:>12.4} {:>12.4}",
            r.strategy.short_name(),
            r.blacklist_size,
            r.set_size,
            r.per_invocation_reinit,
            r.total_seconds,
            r.init_seconds
        );
    }
    out
}

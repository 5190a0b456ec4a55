//! Sentence-set generation and matcher timing.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use idpfilter::bench::{
    bundled_words, compare_strategies, generate_sentences, generate_sets, load_set, load_words, measure_filter,
    measure_init, results_csv, results_table, GenOptions, DEFAULT_INJECT_RATE,
};
use idpfilter::term::parse_term_lines;
use idpfilter::vocab::{bundled, load_category};
use idpfilter::{CategoryId, MatchStrategy, Term};

#[derive(Parser)]
#[command(name = "idp-bench", version, about = "Generate test sentences and time the matching strategies")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args)]
struct Source {
    /// Word list (one per line, or word/tag tokens); bundled words when omitted
    #[arg(long)]
    words: Option<PathBuf>,
    /// Term file whose entries are injected into sentences; bundled surnames when omitted
    #[arg(long)]
    inject: Option<PathBuf>,
    /// Share of word slots holding an injected term
    #[arg(long, default_value_t = DEFAULT_INJECT_RATE)]
    rate: f64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a sentence set, one sentence per line
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the first SIZE terms of a bundled category as a term file
    Terms {
        #[arg(long, default_value = "names")]
        category: CategoryId,
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Filter every sentence of a set and report wall time
    Time {
        /// Repeat to time several strategies; all three when omitted
        #[arg(long)]
        strategy: Vec<MatchStrategy>,
        /// Term file, one term per line
        #[arg(long)]
        blacklist: PathBuf,
        #[arg(long)]
        set: PathBuf,
        /// Rebuild the matcher for every sentence
        #[arg(long)]
        reinit: bool,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        /// Also write results as CSV
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Matcher build time per term over synthetic blacklists
    Init {
        #[arg(long)]
        strategy: Vec<MatchStrategy>,
        #[arg(long, value_delimiter = ',', default_value = "10000,20000,40000,60000,80000,100000")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        reps: usize,
    },
    /// Masked counts per set and strategy; fails if strategies disagree
    Compare {
        #[arg(long, default_value_t = 10)]
        sets: usize,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        seed: u64,
        #[command(flatten)]
        source: Source,
        /// Term file; the injected terms when omitted
        #[arg(long)]
        blacklist: Option<PathBuf>,
    },
}

fn read_terms(path: &Path) -> Result<Vec<Term>, String> {
    let content = std::fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
    parse_term_lines(&content).map_err(|(line, e)| format!("{}:{line}: {e}", path.display()))
}

fn strategies(given: Vec<MatchStrategy>) -> Vec<MatchStrategy> {
    if given.is_empty() {
        MatchStrategy::ALL.to_vec()
    } else {
        given
    }
}

fn sources(src: &Source) -> Result<(Vec<String>, Vec<Term>), String> {
    let words = match &src.words {
        Some(p) => load_words(p).map_err(|e| e.to_string())?,
        None => bundled_words(),
    };
    let inject = match &src.inject {
        Some(p) => read_terms(p)?,
        None => bundled(CategoryId::Names).terms,
    };
    Ok((words, inject))
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.cmd {
        Cmd::Gen { n, seed, source, out } => {
            let (words, inject) = sources(&source)?;
            let inject: Vec<String> = inject.iter().map(|t| t.surface().to_owned()).collect();
            let opts = GenOptions { inject: &inject, rate: source.rate };
            let set = generate_sentences(n, seed, &words, &opts).map_err(|e| e.to_string())?;
            std::fs::write(&out, set.to_text()).map_err(|e| format!("writing {}: {e}", out.display()))?;
            eprintln!("{} sentences, length mode {}", set.len(), set.mode().unwrap_or(0));
        }
        Cmd::Terms { category, size, out } => {
            let cat = load_category(category, None).map_err(|e| e.to_string())?;
            let n = size.unwrap_or(cat.terms.len());
            if n > cat.terms.len() {
                return Err(format!("{} has only {} terms", category.as_str(), cat.terms.len()));
            }
            let body: String = cat.terms[..n].iter().map(|t| format!("{}\n", t.surface())).collect();
            std::fs::write(&out, body).map_err(|e| format!("writing {}: {e}", out.display()))?;
        }
        Cmd::Time { strategy, blacklist, set, reinit, reps, csv } => {
            let terms = read_terms(&blacklist)?;
            let set = load_set(&set).map_err(|e| e.to_string())?;
            let results: Vec<_> =
                strategies(strategy).into_iter().map(|s| measure_filter(s, &terms, &set, reinit, reps)).collect();
            print!("{}", results_table(&results));
            if let Some(p) = csv {
                std::fs::write(&p, results_csv(&results)).map_err(|e| format!("writing {}: {e}", p.display()))?;
            }
        }
        Cmd::Init { strategy, sizes, reps } => {
            println!("strategy,size,init_seconds,seconds_per_term");
            for s in strategies(strategy) {
                for x in measure_init(&sizes, s, reps).map_err(|e| e.to_string())? {
                    println!("{},{},{:.6},{:.3e}", s.short_name(), x.size, x.init_seconds, x.seconds_per_term);
                }
            }
        }
        Cmd::Compare { sets, n, seed, source, blacklist } => {
            let (words, inject) = sources(&source)?;
            let blacklist = match blacklist {
                Some(p) => read_terms(&p)?,
                None => inject.clone(),
            };
            let inject: Vec<String> = inject.iter().map(|t| t.surface().to_owned()).collect();
            let opts = GenOptions { inject: &inject, rate: source.rate };
            let sets = generate_sets(sets, n, seed, &words, &opts, true).map_err(|e| e.to_string())?;
            let table = compare_strategies(&sets, &blacklist, &MatchStrategy::ALL).map_err(|e| e.to_string())?;
            print!("{}", table.render());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

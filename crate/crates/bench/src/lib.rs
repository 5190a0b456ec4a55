//! Shared workloads for the criterion benches.

use idpfilter::bench::{bundled_words, generate_sentences, GenOptions, SentenceSet, DEFAULT_INJECT_RATE};
use idpfilter::vocab::bundled;
use idpfilter::{CategoryId, Term};

/// The bundled surname list.
pub fn surnames() -> Vec<Term> {
    bundled(CategoryId::Names).terms
}

/// `n` generated sentences with surnames injected at the default rate.
pub fn sentences(n: usize, seed: u64) -> SentenceSet {
    let inject: Vec<String> = surnames().iter().map(|t| t.surface().to_owned()).collect();
    let opts = GenOptions { inject: &inject, rate: DEFAULT_INJECT_RATE };
    generate_sentences(n, seed, &bundled_words(), &opts).expect("bundled words are non-empty")
}

//! Properties of list resolution over random list configurations.
//!
//! Terms are single words and texts are words joined by separators, so the
//! span segmentation of a text does not depend on which terms are listed.

use std::collections::BTreeSet;

use idpfilter::match_engine::MatchStrategy;
use idpfilter::pipeline::{filter_text, FilterOutcome};
use idpfilter::policy::{FilterScheme, ListKind, Owner, PolicyBook, UserId};
use idpfilter::term::Term;
use idpfilter::vocab::{CategoryId, Vocabulary};
use proptest::prelude::*;

const USERS: [&str; 3] = ["alice", "bob", "jack"];
const WORDS: [&str; 10] = ["smith", "jones", "kiwi", "café", "Ωmega", "x1", "hungary", "nick", "foo_bar", "zed"];
const FILLER: [&str; 4] = ["the", "and", "went", "to"];
const APP: &str = "appA";

#[derive(Debug, Clone)]
struct Config {
    entries: Vec<(usize, ListKind, usize)>,
    strict: Vec<bool>,
    categories: BTreeSet<CategoryId>,
    text: String,
}

fn kind() -> impl Strategy<Value = ListKind> {
    prop_oneof![Just(ListKind::Srb), Just(ListKind::Orb), Just(ListKind::Srw)]
}

fn config() -> impl Strategy<Value = Config> {
    let entries = proptest::collection::vec((0..USERS.len(), kind(), 0..WORDS.len()), 0..20);
    let strict = proptest::collection::vec(proptest::bool::weighted(0.2), USERS.len());
    let categories = proptest::sample::subsequence(vec![CategoryId::Names, CategoryId::Countries], 0..=2);
    let token = prop_oneof![
        proptest::sample::select(&WORDS[..]).prop_map(str::to_owned),
        proptest::sample::select(&FILLER[..]).prop_map(str::to_owned),
        proptest::sample::select(&WORDS[..]).prop_map(str::to_uppercase),
    ];
    let sep = proptest::sample::select(vec![" ", ", ", ". ", "\n"]);
    let text = proptest::collection::vec((token, sep), 0..30)
        .prop_map(|parts| parts.into_iter().map(|(t, s)| t + s).collect::<String>());
    (entries, strict, categories, text).prop_map(|(entries, strict, categories, text)| Config {
        entries,
        strict,
        categories: categories.into_iter().collect(),
        text,
    })
}

fn book(cfg: &Config) -> PolicyBook {
    let mut b = PolicyBook::new();
    for u in USERS {
        b.register_user(u.into());
    }
    b.register_app(APP.into());
    for &(u, kind, w) in &cfg.entries {
        b.upsert_entry(&USERS[u].into(), &APP.into(), kind, Term::new(WORDS[w]).unwrap()).unwrap();
    }
    for (u, &s) in cfg.strict.iter().enumerate() {
        b.set_strict(&USERS[u].into(), &APP.into(), s).unwrap();
    }
    b
}

fn run(b: &PolicyBook, sender: &str, cfg: &Config) -> FilterOutcome {
    let vocab = Vocabulary::bundled();
    let scheme = FilterScheme { categories: cfg.categories.clone(), ..Default::default() };
    let policy = b.compile_effective(&sender.into(), &APP.into(), &scheme, &vocab).unwrap();
    filter_text(&policy, &cfg.text, MatchStrategy::TrieKeywordProcessor)
}

fn masked_ranges(out: &FilterOutcome) -> BTreeSet<(usize, usize)> {
    out.resolution.masked.iter().map(|r| (r.span.start, r.span.end)).collect()
}

fn preserved_ranges(out: &FilterOutcome) -> BTreeSet<(usize, usize)> {
    out.resolution.preserved.iter().map(|r| (r.span.start, r.span.end)).collect()
}

fn has(b: &PolicyBook, user: &str, kind: ListKind, term: &Term) -> bool {
    b.list(&user.into(), &APP.into(), kind).unwrap().terms.contains(term)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 300, ..ProptestConfig::default() })]

    #[test]
    fn orb_is_sender_local(cfg in config(), owner in 0..USERS.len()) {
        let b = book(&cfg);
        let owner = USERS[owner];
        let vocab = Vocabulary::bundled();
        for sender in USERS.iter().filter(|&&s| s != owner) {
            let out = run(&b, sender, &cfg);
            for r in &out.resolution.masked {
                let Some(term) = r.span.matched.as_term() else { continue };
                let only_in_orb = has(&b, owner, ListKind::Orb, term)
                    && !has(&b, sender, ListKind::Orb, term)
                    && USERS.iter().all(|u| !has(&b, u, ListKind::Srb, term))
                    && cfg.categories.iter().all(|c| !vocab.get(*c).terms.contains(term));
                prop_assert!(!only_in_orb, "{owner}'s ORB term {term} masked for {sender}");
            }
        }
    }

    #[test]
    fn srb_reaches_every_sender(cfg in config()) {
        let b = book(&cfg);
        for owner in USERS {
            let srb = b.list(&owner.into(), &APP.into(), ListKind::Srb).unwrap().terms;
            let srw = b.list(&owner.into(), &APP.into(), ListKind::Srw).unwrap().terms;
            let strict = b.is_strict(&owner.into(), &APP.into());
            for sender in USERS {
                let out = run(&b, sender, &cfg);
                for r in &out.resolution.preserved {
                    let term = r.span.matched.as_term().unwrap();
                    if srb.contains(term) {
                        prop_assert!(!strict && srw.contains(term), "{owner}'s SRB term {term} preserved for {sender}");
                    }
                }
            }
        }
    }

    #[test]
    fn resolution_follows_owner_whitelists(cfg in config(), sender in 0..USERS.len()) {
        let b = book(&cfg);
        let vocab = Vocabulary::bundled();
        let scheme = FilterScheme { categories: cfg.categories.clone(), ..Default::default() };
        let policy = b.compile_effective(&USERS[sender].into(), &APP.into(), &scheme, &vocab).unwrap();
        let out = filter_text(&policy, &cfg.text, MatchStrategy::KmpPerKeyword);
        for r in &out.resolution.masked {
            prop_assert!(!policy.preserves(&r.source, &r.span, &cfg.text));
            let term = r.span.matched.as_term().unwrap();
            prop_assert!(policy.owners_of(term).contains(&&r.source));
        }
        for r in &out.resolution.preserved {
            let term = r.span.matched.as_term().unwrap();
            for owner in policy.owners_of(term) {
                prop_assert!(policy.preserves(owner, &r.span, &cfg.text));
            }
        }
    }

    #[test]
    fn adding_whitelist_entry_masks_nothing_new(cfg in config(), who in 0..USERS.len(), w in 0..WORDS.len(), sender in 0..USERS.len()) {
        let mut b = book(&cfg);
        let before = run(&b, USERS[sender], &cfg);
        b.upsert_entry(&USERS[who].into(), &APP.into(), ListKind::Srw, Term::new(WORDS[w]).unwrap()).unwrap();
        let after = run(&b, USERS[sender], &cfg);
        prop_assert!(preserved_ranges(&before).is_subset(&preserved_ranges(&after)));
    }

    #[test]
    fn adding_blacklist_entry_unmasks_nothing(cfg in config(), who in 0..USERS.len(), orb in any::<bool>(), w in 0..WORDS.len(), sender in 0..USERS.len()) {
        let mut b = book(&cfg);
        let kind = if orb { ListKind::Orb } else { ListKind::Srb };
        let term = Term::new(WORDS[w]).unwrap();
        let vocab = Vocabulary::bundled();
        let scheme = FilterScheme { categories: cfg.categories.clone(), ..Default::default() };
        let policy = b.compile_effective(&USERS[sender].into(), &APP.into(), &scheme, &vocab).unwrap();
        // A user SRB entry takes over a term from lower-priority sources, so
        // that term's outcome follows the new owner's whitelist instead.
        let takes_over = kind == ListKind::Srb
            && policy.owners_of(&term).iter().all(|o| !matches!(o, Owner::User(_)));
        let before = run(&b, USERS[sender], &cfg);
        b.upsert_entry(&USERS[who].into(), &APP.into(), kind, term.clone()).unwrap();
        let after = run(&b, USERS[sender], &cfg);
        let after_masked = masked_ranges(&after);
        for r in &before.resolution.masked {
            if takes_over && r.span.matched.as_term() == Some(&term) {
                continue;
            }
            prop_assert!(after_masked.contains(&(r.span.start, r.span.end)), "{:?} un-masked", r.span);
        }
    }

    #[test]
    fn mutations_are_seen_by_the_next_invocation(cfg in config(), w in 0..WORDS.len()) {
        let mut b = book(&cfg);
        let word = WORDS[w];
        let padded = format!(" {word} ");
        let mut cfg = cfg;
        cfg.text.push_str(&padded);
        let jack = UserId::from("jack");
        b.set_strict(&jack, &APP.into(), true).unwrap();
        b.upsert_entry(&jack, &APP.into(), ListKind::Srb, Term::new(word).unwrap()).unwrap();
        let out = run(&b, "alice", &cfg);
        prop_assert!(!out.filtered_text.contains(&padded));
        for u in USERS {
            for kind in [ListKind::Srb, ListKind::Orb] {
                b.remove_entry(&u.into(), &APP.into(), kind, &Term::new(word).unwrap()).unwrap();
            }
        }
        cfg.categories.clear();
        let out = run(&b, "alice", &cfg);
        prop_assert!(out.filtered_text.ends_with(&padded));
    }
}

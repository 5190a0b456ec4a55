use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use idpfilter::bench::synthetic_terms;
use idpfilter::{MatchStrategy, Matcher};

fn compile(c: &mut Criterion) {
    let pool = synthetic_terms(20_000, 0x1d9f);
    let mut group = c.benchmark_group("compile");
    group.sample_size(10);
    for size in [1_000, 5_000, 20_000] {
        group.throughput(Throughput::Elements(size as u64));
        for strategy in MatchStrategy::ALL {
            group.bench_with_input(BenchmarkId::new(strategy.short_name(), size), &pool[..size], |b, terms| {
                b.iter(|| black_box(Matcher::compile(terms, strategy, false, false)))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, compile);
criterion_main!(benches);

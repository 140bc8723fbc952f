use criterion::{criterion_group, criterion_main, Criterion};
use ghd_bench::starters;
use ghd_core::starter::{expand_intransitive, expand_transitive, StarterAdder};
use std::hint::black_box;

fn bench_expand(c: &mut Criterion) {
    let (t, i) = starters();
    let StarterAdder::Transitive(t) = t else { panic!("transitive") };
    let StarterAdder::Intransitive(i) = i else { panic!("intransitive") };
    c.bench_function("expand_transitive n=44", |b| {
        b.iter(|| expand_transitive(black_box(&t)).unwrap())
    });
    c.bench_function("expand_intransitive n=11", |b| {
        b.iter(|| expand_intransitive(black_box(&i)).unwrap())
    });
    c.bench_function("catalog load full", |b| {
        b.iter(|| ghd_core::catalog::load_catalog().unwrap().len())
    });
}

criterion_group!(benches, bench_expand);
criterion_main!(benches);

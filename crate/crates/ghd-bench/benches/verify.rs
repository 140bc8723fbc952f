use criterion::{criterion_group, criterion_main, Criterion};
use ghd_bench::{large_design, small_design};
use ghd_core::design::{find_pairwise_hole, to_dcw_code, to_permutation_array, verify_ghd};
use std::hint::black_box;

fn bench_verify(c: &mut Criterion) {
    let small = small_design();
    let large = large_design();
    c.bench_function("verify_ghd 8x18", |b| {
        b.iter(|| verify_ghd(black_box(&small)).ok())
    });
    c.bench_function("verify_ghd 35x99", |b| {
        b.iter(|| verify_ghd(black_box(&large)).ok())
    });
    let hole = large.v() - 2 * large.side;
    c.bench_function("find_pairwise_hole 35x99", |b| {
        b.iter(|| find_pairwise_hole(black_box(&large), hole))
    });
    c.bench_function("to_permutation_array 35x99", |b| {
        b.iter(|| to_permutation_array(black_box(&large)).unwrap())
    });
    c.bench_function("to_dcw_code min_distance 35x99", |b| {
        b.iter(|| to_dcw_code(black_box(&large)).unwrap().min_distance())
    });
}

criterion_group!(benches, bench_verify);
criterion_main!(benches);

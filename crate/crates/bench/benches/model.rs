use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use encrep_core::encgen::encoded_pair;
use encrep_core::encswap::swap_success_prob;
use encrep_core::rates::{
    optimize_over_stations, threshold_beta, z_n, LinkParams, NestingRange, RateModel,
    SwapExponent,
};

fn encoding(c: &mut Criterion) {
    c.bench_function("encoded_pair", |b| {
        b.iter(|| encoded_pair(black_box(0.005), black_box(0.99)).unwrap())
    });
    let enc = encoded_pair(0.005, 0.99).unwrap();
    c.bench_function("swap_success_prob", |b| {
        b.iter(|| swap_success_prob(black_box(&enc.state)).unwrap())
    });
}

fn rates(c: &mut Criterion) {
    let mut g = c.benchmark_group("z_n");
    for (n, p0) in [(8u64, 0.3), (1024, 0.01), (1024, 1e-4)] {
        g.bench_function(format!("N={n},P0={p0}"), |b| {
            b.iter(|| z_n(black_box(n), black_box(p0)).unwrap())
        });
    }
    g.finish();

    let model = RateModel::new(0.002, 0.995).unwrap();
    let link = LinkParams::default();
    c.bench_function("optimize_over_stations", |b| {
        b.iter(|| optimize_over_stations(&model, black_box(800.0), NestingRange::default(), &link).unwrap())
    });

    let mut g = c.benchmark_group("threshold");
    g.sample_size(10);
    g.bench_function("beta N=3", |b| {
        b.iter(|| threshold_beta(black_box(3), SwapExponent::Stations, 1e-4).unwrap())
    });
    g.finish();
}

criterion_group!(benches, encoding, rates);
criterion_main!(benches);

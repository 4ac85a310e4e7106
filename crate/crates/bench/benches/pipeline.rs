use std::hint::black_box;

use cplx_bench::{posteriors, weld_counts};
use cplx_core::{
    agglomerate, analyze, beta_quantile, build_matrix, hellinger_beta, hellinger_numeric,
    AnalysisOptions, BetaDist,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn special(c: &mut Criterion) {
    c.bench_function("beta_quantile median Beta(249.5, 7226.5)", |b| {
        b.iter(|| beta_quantile(black_box(0.5), black_box(249.5), black_box(7226.5)))
    });
    let x = BetaDist::new(5.5, 195.5).unwrap();
    let y = BetaDist::new(2.5, 46.5).unwrap();
    c.bench_function("hellinger closed form", |b| {
        b.iter(|| hellinger_beta(black_box(&x), black_box(&y)))
    });
    c.bench_function("hellinger quadrature", |b| {
        b.iter(|| hellinger_numeric(black_box(&x), black_box(&y), 1e-10))
    });
}

fn matrix_and_tree(c: &mut Criterion) {
    let mut group = c.benchmark_group("distance matrix");
    for n in [35, 100, 200] {
        let posts = posteriors(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &posts, |b, posts| {
            b.iter(|| build_matrix(posts).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("complete linkage");
    for n in [35, 100, 200] {
        let m = build_matrix(&posteriors(n)).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &m, |b, m| {
            b.iter(|| agglomerate(m).unwrap())
        });
    }
    group.finish();
}

fn full_run(c: &mut Criterion) {
    let opts = AnalysisOptions {
        k: Some(7),
        ..Default::default()
    };
    c.bench_function("analyze 35 weld types", |b| {
        b.iter(|| analyze(weld_counts(), &opts).unwrap())
    });
}

criterion_group!(benches, special, matrix_and_tree, full_run);
criterion_main!(benches);

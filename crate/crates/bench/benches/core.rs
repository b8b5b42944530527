use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ncfree_bench::{atoms, derive_all, perturbed_moments, sample_poly, semicircular_moments, sweep_instance};
use ncfree_core::analysis::InequalityFamily;

fn bench_derive(c: &mut Criterion) {
    let mut g = c.benchmark_group("derive");
    for degree in [4, 8, 12] {
        let p = sample_poly(3, degree, 20, 1);
        g.bench_with_input(BenchmarkId::from_parameter(degree), &p, |b, p| {
            b.iter(|| derive_all(black_box(p)).unwrap())
        });
    }
    g.finish();
}

fn bench_moments(c: &mut Criterion) {
    let mut g = c.benchmark_group("moments");
    for len in [6, 8] {
        g.bench_with_input(BenchmarkId::new("semicircular", len), &len, |b, &len| {
            b.iter(|| semicircular_moments(black_box(len)).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("perturbed", len), &len, |b, &len| {
            b.iter(|| perturbed_moments(black_box(len), 0.5).unwrap())
        });
    }
    g.finish();
}

fn bench_sweep(c: &mut Criterion) {
    let mut g = c.benchmark_group("sweep_instance");
    g.sample_size(10);
    for family in [InequalityFamily::Dabrowski, InequalityFamily::KeyEstimates, InequalityFamily::FisherBound] {
        g.bench_function(format!("{family:?}/N=100"), |b| {
            b.iter(|| sweep_instance(family, 100, black_box(3)).unwrap())
        });
    }
    g.finish();
}

fn bench_atoms(c: &mut Criterion) {
    let mut g = c.benchmark_group("atom_scan");
    g.sample_size(10);
    g.bench_function("N=100,200", |b| b.iter(|| atoms(black_box(&[100, 200])).unwrap()));
    g.finish();
}

criterion_group!(benches, bench_derive, bench_moments, bench_sweep, bench_atoms);
criterion_main!(benches);

//! Sequential versus parallel execution of the main kernels.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use prony_core::{
    build_toeplitz_with, decompose, grid_scan_with, prony_reconstruct, random_separated_model,
    sample_moments, signal_basis, CoeffLaw, DecomposeOptions, Execution, ReconstructOptions,
};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn toeplitz(c: &mut Criterion) {
    let model = random_separated_model(2, 6, 0.1, CoeffLaw::Default, 1).unwrap();
    let n = 20;
    let grid = sample_moments(&model, n);
    let mut group = c.benchmark_group("toeplitz_d2_n20");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| build_toeplitz_with(&grid, n, exec).unwrap())
        });
    }
    group.finish();
}

fn scan(c: &mut Criterion) {
    let model = random_separated_model(2, 6, 0.1, CoeffLaw::Default, 2).unwrap();
    let n = 20;
    let t = build_toeplitz_with(&sample_moments(&model, n), n, Execution::Parallel).unwrap();
    let basis = signal_basis(&decompose(&t, &DecomposeOptions::default()).unwrap());
    let mut group = c.benchmark_group("grid_scan_d2_n20_g81");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| grid_scan_with(&basis, 4 * n + 1, exec).unwrap())
        });
    }
    group.finish();
}

fn reconstruct(c: &mut Criterion) {
    let model = random_separated_model(2, 4, 0.2, CoeffLaw::Default, 3).unwrap();
    let grid = sample_moments(&model, 10);
    let mut group = c.benchmark_group("reconstruct_d2_n10");
    group.sample_size(20);
    for (name, exec) in MODES {
        let opts = ReconstructOptions {
            exec,
            ..Default::default()
        };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| prony_reconstruct(&grid, &opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, toeplitz, scan, reconstruct);
criterion_main!(benches);

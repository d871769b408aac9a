use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use noisypu::alphamax::{alphamax_n_samples, bin_counts, AlphaMaxConfig, CurveProblem};
use noisypu::measures::{amax, DiscreteMeasure};
use noisypu::msgmm::{fit, MsGmmConfig};
use noisypu::transform::{fit_nontraditional, TransformConfig};
use noisypu_bench::gaussian;

fn alphamax(c: &mut Criterion) {
    let mut group = c.benchmark_group("alphamax_n");
    group.sample_size(10);
    for n in [1000usize, 10_000] {
        let data = gaussian(n, n / 10, 1, 1);
        let config = AlphaMaxConfig::default();
        group.bench_with_input(BenchmarkId::from_parameter(n), &data, |b, data| {
            b.iter(|| alphamax_n_samples(black_box(data.unlabeled.view()), data.labeled.view(), &config).unwrap())
        });
    }
    group.finish();
}

fn dual_solve(c: &mut Criterion) {
    let data = gaussian(10_000, 1000, 1, 2);
    let bins = bin_counts(data.unlabeled.view(), data.labeled.view()).unwrap();
    let problem = CurveProblem::new(&bins, 0.5).unwrap();
    c.bench_function("dual_solve_one_r", |b| b.iter(|| problem.solve_dual(black_box(0.3))));
}

fn msgmm(c: &mut Criterion) {
    let mut group = c.benchmark_group("msgmm_fit");
    group.sample_size(10);
    for dims in [1usize, 2] {
        let data = gaussian(10_000, 1000, dims, 3);
        let config = MsGmmConfig::default();
        group.bench_with_input(BenchmarkId::from_parameter(dims), &data, |b, data| {
            b.iter(|| fit(black_box(data), &config, 0).unwrap())
        });
    }
    group.finish();
}

fn network(c: &mut Criterion) {
    let data = gaussian(2000, 200, 2, 4);
    let config = TransformConfig {
        members: 4,
        ..TransformConfig::default()
    };
    let mut group = c.benchmark_group("ensemble");
    group.sample_size(10);
    group.bench_function("fit_4_members", |b| {
        b.iter(|| fit_nontraditional(black_box(&data), &config, 0).unwrap())
    });
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let mu = DiscreteMeasure::from_weights(&[3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, 5.0, 3.0, 5.0, 8.0]).unwrap();
    let nu = DiscreteMeasure::from_weights(&[2.0, 7.0, 1.0, 8.0, 2.0, 8.0, 1.0, 8.0, 2.0, 8.0, 4.0, 5.0]).unwrap();
    c.bench_function("amax_12_atoms", |b| b.iter(|| amax(black_box(&mu), black_box(&nu)).unwrap()));
}

criterion_group!(benches, alphamax, dual_solve, msgmm, network, oracle);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spheregp::gp::{assemble_covariance, build_model, log_likelihood, simulate, JitterPolicy};
use spheregp_bench::{bench_dataset, bench_kernel, bench_sites};
use std::hint::black_box;

fn covariance_assembly(c: &mut Criterion) {
    let kernel = bench_kernel();
    let mut group = c.benchmark_group("assemble_covariance");
    for n in [100usize, 300] {
        let sites = bench_sites(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &sites, |b, sites| {
            b.iter(|| assemble_covariance(black_box(&kernel), sites, sites).unwrap());
        });
    }
    group.finish();
}

fn model_build(c: &mut Criterion) {
    let kernel = bench_kernel();
    let mut group = c.benchmark_group("build_model");
    for n in [100usize, 300] {
        let data = bench_dataset(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &data, |b, data| {
            b.iter(|| build_model(black_box(&kernel), data, &JitterPolicy::default()).unwrap());
        });
    }
    group.finish();
}

fn likelihood(c: &mut Criterion) {
    let kernel = bench_kernel();
    let data = bench_dataset(200);
    c.bench_function("log_likelihood_200", |b| {
        b.iter(|| log_likelihood(black_box(&kernel), &data).unwrap());
    });
}

fn kriging(c: &mut Criterion) {
    let kernel = bench_kernel();
    let data = bench_dataset(200);
    let model = build_model(&kernel, &data, &JitterPolicy::default()).unwrap();
    let targets = bench_sites(100);
    c.bench_function("krige_200_sites_100_targets", |b| {
        b.iter(|| model.krige(black_box(&targets)).unwrap());
    });
}

fn simulation(c: &mut Criterion) {
    let kernel = bench_kernel();
    let sites = bench_sites(100);
    c.bench_function("simulate_100_sites_500_draws", |b| {
        b.iter(|| simulate(black_box(&kernel), &sites, 7, 500).unwrap());
    });
}

criterion_group!(
    benches,
    covariance_assembly,
    model_build,
    likelihood,
    kriging,
    simulation
);
criterion_main!(benches);

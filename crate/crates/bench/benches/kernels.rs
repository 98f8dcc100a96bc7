use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;

use chaos_bermudan::regression::conditional_expectations;
use chaos_bermudan::{
    estimate_coefficients, run_parallel_induction, ExerciseRule, InductionConfig, WorkerPool,
};
use chaos_bermudan_bench::{batch, moving_average_request, smooth_targets};

const PATHS: usize = 20_000;

fn coefficients(c: &mut Criterion) {
    let mut group = c.benchmark_group("estimate_coefficients");
    group.sample_size(10);
    group.throughput(Throughput::Elements(PATHS as u64));
    for order in [2, 3] {
        let req = moving_average_request(order, PATHS);
        let b = batch(&req);
        let cat = req.catalog().unwrap();
        let targets = smooth_targets(&b);
        // Cutoff 30 of 50 increments: a mid-induction date.
        group.bench_with_input(BenchmarkId::from_parameter(order), &order, |bench, _| {
            bench.iter(|| estimate_coefficients(&cat, &b, black_box(&targets), 30, None).unwrap())
        });
    }
    group.finish();
}

fn evaluation(c: &mut Criterion) {
    let mut group = c.benchmark_group("conditional_expectations");
    group.sample_size(10);
    group.throughput(Throughput::Elements(PATHS as u64));
    for order in [2, 3] {
        let req = moving_average_request(order, PATHS);
        let b = batch(&req);
        let cat = req.catalog().unwrap();
        let lam = estimate_coefficients(&cat, &b, &smooth_targets(&b), 30, None).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(order), &order, |bench, _| {
            bench.iter(|| conditional_expectations(&cat, black_box(&lam), &b).unwrap())
        });
    }
    group.finish();
}

fn simulation(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulation");
    group.sample_size(10);
    group.throughput(Throughput::Elements(PATHS as u64));
    let req = moving_average_request(2, PATHS);
    group.bench_function("black_scholes_50_dates", |bench| {
        bench.iter(|| batch(black_box(&req)))
    });
    group.finish();
}

fn induction(c: &mut Criterion) {
    let mut group = c.benchmark_group("backward_induction");
    group.sample_size(10);
    let req = moving_average_request(2, 10_000);
    let b = batch(&req);
    let cat = req.catalog().unwrap();
    let config = InductionConfig {
        rule: ExerciseRule::InTheMoney,
        ..Default::default()
    };
    for workers in [1, 2, 4] {
        let pool = WorkerPool::new(workers).unwrap();
        group.bench_with_input(
            BenchmarkId::new("workers", workers),
            &workers,
            |bench, _| bench.iter(|| run_parallel_induction(&cat, &b, &config, &pool).unwrap()),
        );
    }
    group.finish();
}

criterion_group!(benches, coefficients, evaluation, simulation, induction);
criterion_main!(benches);

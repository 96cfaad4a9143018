//! Parallel-vs-sequential throughput comparison for the data-parallel
//! kernels: per-sample depth scans, K-Means restarts, and the CORS inner
//! search. With the default `parallel` feature the sequential side runs the
//! same code on a single-threaded pool; without it only the sequential
//! fallback exists.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use spillover_core::{
    cors_minimize, kmeans, synth_gaussians, DepthReport, GaussianSpec, OptimBudget,
    PerturbationBox,
};
use spillover_core::{cluster, parallel, Backend};

fn depth_scan_input() -> (spillover_core::Dataset, spillover_core::ClusterAssignment) {
    let specs = vec![
        GaussianSpec::new(vec![0.0; 16], 1.0, 1000).unwrap(),
        GaussianSpec::new(vec![3.0; 16], 1.0, 1000).unwrap(),
    ];
    let data = synth_gaussians(&specs, 17).unwrap();
    let model = cluster(&data, Backend::KMeans, 17).unwrap();
    (data, model.assignment)
}

fn bench_depth_scan(c: &mut Criterion) {
    let (data, assignment) = depth_scan_input();
    let mut group = c.benchmark_group("comd_depth_scan");
    group.bench_function(BenchmarkId::new("mode", "parallel"), |b| {
        b.iter(|| black_box(DepthReport::compute(&data, &assignment).unwrap()))
    });
    group.bench_function(BenchmarkId::new("mode", "sequential"), |b| {
        b.iter(|| {
            parallel::run_single_threaded(|| {
                black_box(DepthReport::compute(&data, &assignment).unwrap())
            })
        })
    });
    group.finish();
}

fn bench_kmeans_restarts(c: &mut Criterion) {
    let specs = vec![
        GaussianSpec::new(vec![0.0; 8], 1.2, 500).unwrap(),
        GaussianSpec::new(vec![2.5; 8], 1.2, 500).unwrap(),
    ];
    let data = synth_gaussians(&specs, 5).unwrap();
    let mut group = c.benchmark_group("kmeans_restarts");
    group.bench_function(BenchmarkId::new("mode", "parallel"), |b| {
        b.iter(|| black_box(kmeans(&data, 7, 100).unwrap()))
    });
    group.bench_function(BenchmarkId::new("mode", "sequential"), |b| {
        b.iter(|| parallel::run_single_threaded(|| black_box(kmeans(&data, 7, 100).unwrap())))
    });
    group.finish();
}

fn bench_cors_inner_search(c: &mut Criterion) {
    let sphere = |x: &[f64]| -> f64 { x.iter().map(|v| v * v).sum() };
    let bounds = PerturbationBox::uniform(8, 1.0).unwrap();
    let budget = OptimBudget::new(60, 20, 3);
    let mut group = c.benchmark_group("cors_sphere_8d");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("mode", "parallel"), |b| {
        b.iter(|| black_box(cors_minimize(sphere, &bounds, &budget).unwrap()))
    });
    group.bench_function(BenchmarkId::new("mode", "sequential"), |b| {
        b.iter(|| {
            parallel::run_single_threaded(|| {
                black_box(cors_minimize(sphere, &bounds, &budget).unwrap())
            })
        })
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_depth_scan,
    bench_kmeans_restarts,
    bench_cors_inner_search
);
criterion_main!(benches);

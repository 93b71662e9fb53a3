//! Parallel pool against a single worker on the hot paths. Build with
//! `--no-default-features` to time the sequential fallback instead.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use sgraph_core::presets::preset;
use sgraph_core::regions::{rasterize, Window};
use sgraph_core::sim::{sample_cloud, InputRanges};
use sgraph_core::solve::{sweep, BarrierBackend};

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    let all = rayon::ThreadPoolBuilder::new().build().expect("pool");
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().expect("pool");
    vec![("pool", all), ("one_thread", one)]
}

fn bench(c: &mut Criterion) {
    let backend = BarrierBackend::default();
    let ex1 = preset("ex1").unwrap();
    let ex2 = preset("ex2").unwrap();
    let approx = sweep(&ex1.system, &ex1.config, &backend).unwrap().approximation;
    let window = Window::square(0.0, 1.6).unwrap();

    let mut g = c.benchmark_group("sweep_ex1");
    g.sample_size(10);
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| sweep(&ex1.system, &ex1.config, &backend).unwrap()))
        });
    }
    g.finish();

    let mut g = c.benchmark_group("rasterize_512");
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| rasterize(&approx, &window, 512).unwrap()))
        });
    }
    g.finish();

    let mut g = c.benchmark_group("sample_ex2_64");
    g.sample_size(10);
    let ranges = InputRanges::default();
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| sample_cloud(&ex2.system, 64, 1, &ranges).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);

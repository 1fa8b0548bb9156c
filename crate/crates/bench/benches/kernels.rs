use bgsub_bench::Fixture;
use bgsub_core::lowrank::{dense_top_pair, partial_svd, svt, PowerIteration};
use bgsub_core::FwConfig;
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn kernels(c: &mut Criterion) {
    let fx = Fixture::timing();
    let cfg = FwConfig::default();
    let power = PowerIteration::new(cfg.power_tol, cfg.power_max_iter);
    let sigma1 = partial_svd(&fx.v, 0.0).singular_values()[0];

    let mut g = c.benchmark_group("kernels_4096x200");
    g.sample_size(20);
    g.bench_function("top_singular_pair", |b| b.iter(|| dense_top_pair(&power, black_box(&fx.v))));
    g.bench_function("partial_svd", |b| b.iter(|| partial_svd(black_box(&fx.v), 0.0)));
    g.bench_function("svt", |b| b.iter(|| svt(black_box(&fx.v), 0.05 * sigma1)));
    g.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);

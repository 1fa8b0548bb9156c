use bgsub_bench::Fixture;
use bgsub_core::metrics::distance_transform;
use bgsub_core::video::extract_foreground;
use bgsub_core::{evaluate, solve_frmc, Cleanup, FwConfig};
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn metrics(c: &mut Criterion) {
    let fx = Fixture::timing();
    let (w, h) = (fx.spec.width, fx.spec.height);
    let fw = FwConfig {
        delta: Some(fx.delta),
        ..FwConfig::default()
    };
    let (b, _) = solve_frmc(&fx.v, &fw, None).unwrap();

    let mut g = c.benchmark_group("masks_and_metrics_64x64x200");
    g.bench_function("extract_foreground", |bn| {
        bn.iter(|| extract_foreground(black_box(&fx.v), &b, w, h, 0.1, Cleanup::Median3).unwrap())
    });
    let detected = extract_foreground(&fx.v, &b, w, h, 0.1, Cleanup::Median3).unwrap();
    g.bench_function("evaluate", |bn| bn.iter(|| evaluate(black_box(&detected), &fx.truth).unwrap()));
    g.bench_function("distance_transform_frame", |bn| {
        bn.iter(|| distance_transform(black_box(&fx.truth.masks()[0]), w, h))
    });
    g.finish();
}

criterion_group!(benches, metrics);
criterion_main!(benches);

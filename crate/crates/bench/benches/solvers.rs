use bgsub_bench::Fixture;
use bgsub_core::{solve_frmc, solve_rmc, solve_rpca, FwConfig, IalmConfig};
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn solvers(c: &mut Criterion) {
    for (name, fx) in [("32x32x60", Fixture::accuracy()), ("64x64x200", Fixture::timing())] {
        let fw = FwConfig {
            delta: Some(fx.delta),
            ..FwConfig::default()
        };
        let ialm = IalmConfig::default();

        let mut g = c.benchmark_group(format!("solve_{name}"));
        g.sample_size(10);
        g.bench_function("frmc", |b| b.iter(|| solve_frmc(black_box(&fx.v), &fw, None).unwrap()));
        g.bench_function("rpca_ialm", |b| b.iter(|| solve_rpca(black_box(&fx.v), &ialm).unwrap()));
        g.bench_function("rmc_ialm", |b| b.iter(|| solve_rmc(black_box(&fx.v), &ialm).unwrap()));
        g.finish();
    }
}

criterion_group!(benches, solvers);
criterion_main!(benches);

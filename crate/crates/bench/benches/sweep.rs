use std::hint::black_box;

use confound_core::fixtures::{self, Process, ProcessParams};
use confound_core::scm::{run_sweep, SweepConfig};
use confound_core::stats::ols_fit;
use criterion::{criterion_group, criterion_main, Criterion};

fn small_sweep() -> SweepConfig {
    let text = fixtures::TABLE5_CONF
        .replace("grid.t_e = 0.1, 0.3, 0.5", "param.t_e = 0.3")
        .replace("grid.gamma_e = -0.5, -0.3, -0.1, 0.1, 0.3, 0.5", "grid.gamma_e = -0.5, 0.5")
        .replace("grid.gamma_t = -0.5, -0.3, -0.1, 0.1, 0.3, 0.5", "grid.gamma_t = -0.5, 0.5");
    SweepConfig::parse(&text).unwrap()
}

fn sweep(c: &mut Criterion) {
    let cfg = small_sweep();
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    group.bench_function("4_points_x_3_sizes", |b| b.iter(|| run_sweep(black_box(&cfg)).unwrap()));
    group.finish();

    let data = fixtures::process_scm(Process::P3, ProcessParams::default()).sample(10_000, 1);
    c.bench_function("ols/10k_rows_2_predictors", |b| {
        b.iter(|| ols_fit(black_box(&data), "Y", &["X", "Z"]).unwrap())
    });
}

criterion_group!(benches, sweep);
criterion_main!(benches);

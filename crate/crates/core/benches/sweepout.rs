use conegeo::minmax::{explicit_sweepout, minimize_sweepout, two_minimizers, MinMaxConfig};
use conegeo::{Exec, SurfaceMetric};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::f64::consts::FRAC_PI_6;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn bench_rounds(c: &mut Criterion) {
    let m = SurfaceMetric::profile(FRAC_PI_6, 1.0).unwrap();
    let r0 = 10.0;
    let base = MinMaxConfig { n_nodes: 64, rounds: 2, stage_slices: 6, ..MinMaxConfig::default() };
    let mins = two_minimizers(&m, r0, 0.0, &base).unwrap();
    let (h, _) =
        explicit_sweepout(&m, &mins.gamma1.curve, &mins.gamma2.curve, r0, base.rho_minus_rel * r0, 0.0, &base).unwrap();
    let mut group = c.benchmark_group("minimize_sweepout");
    group.sample_size(10);
    for (name, exec) in MODES {
        let cfg = MinMaxConfig { exec, ..base };
        group.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| minimize_sweepout(&m, &h, r0, cfg).unwrap())
        });
    }
    group.finish();
}

fn bench_minimizers(c: &mut Criterion) {
    let m = SurfaceMetric::profile(FRAC_PI_6, 1.0).unwrap();
    let mut group = c.benchmark_group("two_minimizers");
    group.sample_size(10);
    for (name, exec) in MODES {
        let cfg = MinMaxConfig { n_nodes: 128, exec, ..MinMaxConfig::default() };
        group.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| two_minimizers(&m, 10.0, 0.0, cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_rounds, bench_minimizers);
criterion_main!(benches);

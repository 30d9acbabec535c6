use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use leakscope_core::isolation::isolate_by_consistency_with;
use leakscope_core::{sweep_with, DataPoint, Execution, HeadLoss, LeakFn, LeakSpec, PipeSet};

fn network() -> (PipeSet, LeakSpec) {
    let pipes = PipeSet::new(vec![
        HeadLoss::signed_quadratic(0.05),
        HeadLoss::quadratic_plus_linear(0.8),
        HeadLoss::power_law(0.3, 1.85),
        HeadLoss::signed_quadratic(0.2),
        HeadLoss::quadratic_plus_linear(2.5),
    ])
    .unwrap();
    (
        pipes,
        LeakSpec::new(2, 0.3, LeakFn::power_law(1.2, 0.5, 0.0)),
    )
}

fn boundary(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| (1.5 + 4.5 * i as f64 / n as f64, 1.0))
        .collect()
}

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn bench_sweep(c: &mut Criterion) {
    let (pipes, leak) = network();
    let mut group = c.benchmark_group("sweep");
    for n in [100, 10_000] {
        let b = boundary(n);
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &b, |bench, b| {
                bench.iter(|| sweep_with(exec, &pipes, &leak, black_box(b)).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_isolation(c: &mut Criterion) {
    let (pipes, leak) = network();
    let mut group = c.benchmark_group("isolate_by_consistency");
    for n in [100, 10_000] {
        let data: Vec<DataPoint> = sweep_with(Execution::Sequential, &pipes, &leak, &boundary(n))
            .unwrap()
            .data_points()
            .into_iter()
            .map(|(_, d)| d)
            .collect();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &data, |bench, data| {
                bench.iter(|| {
                    isolate_by_consistency_with(exec, &pipes, black_box(data), 1e-6).unwrap()
                })
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_sweep, bench_isolation);
criterion_main!(benches);

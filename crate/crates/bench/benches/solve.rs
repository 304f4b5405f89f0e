use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rbcbs_bench::synthetic;
use rbcbs_core::protocol::{calibrate_interval, delta_at, solve_with, Method, MethodConfig};

fn solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    let timeout = Duration::from_secs(10);
    for (vertices, agents) in [(10, 2), (20, 3), (40, 4)] {
        let inst = synthetic(7, vertices, agents);
        let Ok(interval) = calibrate_interval(&inst, timeout) else {
            continue;
        };
        let delta = delta_at(&interval, 0.5);
        for method in Method::ALL {
            let id = BenchmarkId::new(method.name(), format!("{vertices}v{agents}a"));
            group.bench_with_input(id, &delta, |b, &delta| {
                b.iter(|| solve_with(method, &inst, delta, timeout, &MethodConfig::default()))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, solve);
criterion_main!(benches);

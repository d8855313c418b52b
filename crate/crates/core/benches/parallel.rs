use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use privmarket::efficiency::{audit_many, poa_sweep_with};
use privmarket::{Execution, MarketScenario};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn scenarios(count: usize) -> Vec<MarketScenario> {
    let mut rng = StdRng::seed_from_u64(7);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(3..=8);
            let coefficients: Vec<(f64, f64)> = (0..n)
                .map(|_| (rng.gen_range(0.0..=1.0), rng.gen_range(0.001..=1.0)))
                .collect();
            MarketScenario::quadratic(rng.gen_range(0.5..=10.0), &coefficients).unwrap()
        })
        .collect()
}

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn bench_audit(c: &mut Criterion) {
    let mut group = c.benchmark_group("audit_many");
    for count in [64, 512] {
        let batch = scenarios(count);
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, count), &batch, |b, batch| {
                b.iter(|| audit_many(black_box(batch), exec))
            });
        }
    }
    group.finish();
}

fn bench_sweep(c: &mut Criterion) {
    let r: Vec<f64> = (0..256).map(|k| 10f64.powf(k as f64 / 32.0)).collect();
    let mut group = c.benchmark_group("poa_sweep");
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| poa_sweep_with(black_box(&r), 1.0, 1.0, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_audit, bench_sweep);
criterion_main!(benches);

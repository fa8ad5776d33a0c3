//! Sequential vs rayon execution of the Monte Carlo estimators.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use radcom_core::simulator::{echo_window_ensemble, estimate_throughput, SimConfig};
use radcom_core::tradeoff::optimize_throughput;
use radcom_core::{Execution, SystemParams};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn echo_window(c: &mut Criterion) {
    let p = SystemParams::defaults();
    let mut group = c.benchmark_group("echo_window_ensemble");
    group.sample_size(10);
    for trials in [200u64, 1000] {
        for (name, exec) in MODES {
            let cfg = SimConfig::new(trials, 1).with_execution(exec);
            group.bench_with_input(BenchmarkId::new(name, trials), &cfg, |b, cfg| {
                b.iter(|| echo_window_ensemble(&p, black_box(1e-4), cfg).unwrap())
            });
        }
    }
    group.finish();
}

fn throughput(c: &mut Criterion) {
    let p = SystemParams::defaults();
    let mut group = c.benchmark_group("estimate_throughput");
    group.sample_size(10);
    for trials in [1000u64, 10_000] {
        for (name, exec) in MODES {
            let cfg = SimConfig::new(trials, 1).with_execution(exec);
            group.bench_with_input(BenchmarkId::new(name, trials), &cfg, |b, cfg| {
                b.iter(|| estimate_throughput(&p, black_box(1e-2), cfg).unwrap())
            });
        }
    }
    group.finish();
}

fn density_sweep(c: &mut Criterion) {
    let p = SystemParams::defaults();
    let lambdas: Vec<f64> = (0..40)
        .map(|i| 10f64.powf(-6.0 + 0.15 * f64::from(i)))
        .collect();
    let mut group = c.benchmark_group("optimize_throughput_sweep");
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| {
                exec.map_slice(&lambdas, |&l| {
                    optimize_throughput(&p, l, Some(10.0)).unwrap()
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, echo_window, throughput, density_sweep);
criterion_main!(benches);

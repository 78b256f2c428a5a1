//! Sequential vs rayon execution of the two data-parallel loops.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mfglht::bootstrap::{bootstrap_test_with, BootstrapOptions};
use mfglht::harness::{run_experiment, Contrast, Experiment, Generator, Method};
use mfglht::simgen::{sim1_generate, Sim1Config};
use mfglht::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn bootstrap(c: &mut Criterion) {
    let cfg = Sim1Config { sizes: vec![30, 40, 40], m: 30, rho: 0.5, seed: 1, ..Default::default() };
    let set = sim1_generate(&cfg).unwrap();
    let g = Contrast::G5.matrix();
    let mut group = c.benchmark_group("bootstrap_B100");
    group.sample_size(10);
    for (name, execution) in MODES {
        let opts = BootstrapOptions { replicates: 100, seed: 7, execution, ..Default::default() };
        group.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, opts| {
            b.iter(|| black_box(bootstrap_test_with(&set, &g, opts).unwrap()))
        });
    }
    group.finish();
}

fn experiment(c: &mut Criterion) {
    let mut group = c.benchmark_group("experiment_reps50");
    group.sample_size(10);
    for (name, execution) in MODES {
        let exp = Experiment {
            generator: Generator::Sim1(Sim1Config { sizes: vec![30, 40, 40], m: 30, ..Default::default() }),
            methods: vec![Method::New],
            reps: 50,
            seed: 3,
            execution,
            ..Default::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &exp, |b, exp| {
            b.iter(|| black_box(run_experiment(exp).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, bootstrap, experiment);
criterion_main!(benches);

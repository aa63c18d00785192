//! Sequential against rayon execution of the batch kernels.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use hyplab::conefield::{cone_invariance_report, sample_cone_vectors, ConeSpec};
use hyplab::covermeasure::{build_fat_cantor, density_experiment, trapped_measure_decay, DensityConfig, RemovalSchedule};
use hyplab::diskflow::{CurveDisk, Seed};
use hyplab::dynkernel::{ConstantSplitting, PowerSplitting, SystemSpec};
use hyplab::rng::stream;
use hyplab::{Exec, Point2};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn cone_report(c: &mut Criterion) {
    let sys = SystemSpec::perturbed_cat(0.01).unwrap();
    let field = PowerSplitting::new(sys, 30);
    let cone = ConeSpec::new(0.1, &field).unwrap();
    let sample = sample_cone_vectors(&sys, &cone, 20_000, &mut stream(1, 0)).unwrap();
    let mut g = c.benchmark_group("cone_invariance_report");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| cone_invariance_report(&sys, &cone, black_box(&sample), exec))
        });
    }
    g.finish();
}

fn trapped(c: &mut Criterion) {
    let mut g = c.benchmark_group("trapped_measure_decay");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| trapped_measure_decay(3.0, 12, black_box(1.0 / 2187.0), exec).unwrap())
        });
    }
    g.finish();
}

fn density(c: &mut Criterion) {
    let e_u = ConstantSplitting::cat().0.e_cu;
    let host = CurveDisk::from_seed(Seed::segment(Point2::new(0.1, 0.2), e_u, 1.0).unwrap(), 1e-3).unwrap();
    let set = build_fat_cantor(1.0, 18, RemovalSchedule::Svc).unwrap();
    let mut g = c.benchmark_group("density_experiment");
    g.sample_size(10);
    for (name, exec) in MODES {
        let cfg = DensityConfig {
            centers: 60,
            max_time: 15,
            exec,
            ..DensityConfig::default()
        };
        g.bench_function(name, |b| {
            b.iter(|| density_experiment(&SystemSpec::CatMap, &host, &set, black_box(&cfg)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, cone_report, trapped, density);
criterion_main!(benches);

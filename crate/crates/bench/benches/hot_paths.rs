//! Benchmarks for the paths that dominate experiment wall time.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use thermoclock_core::clock::{simulate_phases, ClockProcess, FrequencyModel};
use thermoclock_core::fluctuation::{run_exchange, ExchangeConfig};
use thermoclock_core::inference::{fisher_information_quadrature, mle_theta_from_mean};
use thermoclock_core::{EnsembleModel, Theta};

fn models() -> [(&'static str, EnsembleModel); 4] {
    [
        ("ideal-gas", EnsembleModel::IdealGas { n: 10, d: 3 }),
        ("harmonic", EnsembleModel::HarmonicOscillators { n: 6 }),
        ("two-level", EnsembleModel::TwoLevel { n: 20, gap: 1.0 }),
        ("ising", EnsembleModel::IsingChain { n: 8, coupling: 1.0, field: 0.3 }),
    ]
}

fn bench_log_partition(c: &mut Criterion) {
    let mut group = c.benchmark_group("log_partition");
    for (name, model) in models() {
        group.bench_function(name, |b| {
            b.iter(|| model.log_partition(Theta(std::hint::black_box(0.7))).unwrap())
        });
    }
    group.finish();
}

fn bench_sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("sample_energies_1k");
    group.sample_size(20);
    for (name, model) in models() {
        group.bench_function(name, |b| {
            b.iter(|| model.sample_energies(Theta(0.7), 1_000, 42, 0).unwrap())
        });
    }
    group.finish();
}

fn bench_estimation(c: &mut Criterion) {
    let model = EnsembleModel::IdealGas { n: 10, d: 3 };
    let theta = Theta(0.7);
    c.bench_function("mle_from_mean", |b| {
        let mean = model.mean_energy(theta).unwrap();
        b.iter(|| mle_theta_from_mean(&model, std::hint::black_box(mean)).unwrap())
    });
    c.bench_function("fisher_quadrature", |b| {
        b.iter(|| fisher_information_quadrature(&model, theta).unwrap())
    });
}

fn bench_phase_propagation(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate_phases");
    group.sample_size(10);
    for (name, model) in [
        ("static", FrequencyModel::StaticDisorder),
        ("mean-reverting", FrequencyModel::MeanReverting { correlation_time: 5.0 }),
    ] {
        let process =
            ClockProcess::new(1.0, 0.1, model, 0.01, 10.0, 500, 7).unwrap();
        group.bench_function(name, |b| {
            b.iter_batched(
                || process.clone(),
                |p| simulate_phases(&p).unwrap(),
                BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

fn bench_exchange(c: &mut Criterion) {
    let config = ExchangeConfig {
        m: 4,
        n: 64,
        e_total: 256.0,
        steps: 100_000,
        exchange_rate: 0.5,
        seed: 7,
        record_stride: 0,
    };
    let mut group = c.benchmark_group("exchange_100k_steps");
    group.sample_size(10);
    group.bench_function("m4_n64", |b| b.iter(|| run_exchange(&config).unwrap()));
    group.finish();
}

criterion_group!(
    benches,
    bench_log_partition,
    bench_sampling,
    bench_estimation,
    bench_phase_propagation,
    bench_exchange
);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use syncflow::batch::{integrate_gains, integrate_initial_states, ExecMode};
use syncflow::graphs::{topology, SwitchingSignal};
use syncflow::simulator::{IntegratorConfig, Network};
use syncflow::PotentialSpec;

fn ring_network(n: usize) -> Network {
    let pots = (0..n)
        .map(|i| {
            let c = i as f64 / n as f64;
            if i % 2 == 0 {
                PotentialSpec::quadratic(vec![c, -c], 1.0).unwrap()
            } else {
                PotentialSpec::quartic(vec![c, c]).unwrap()
            }
        })
        .collect();
    let order: Vec<usize> = (0..n).collect();
    let sig = SwitchingSignal::periodic(
        vec![
            (topology::ring(n, 1.0).unwrap(), 1.0),
            (topology::directed_chain(n, &order, 2.0).unwrap(), 1.0),
        ],
        1.0,
    )
    .unwrap();
    Network::new(pots, sig).unwrap()
}

const MODES: [(&str, ExecMode); 2] = [("sequential", ExecMode::Sequential), ("parallel", ExecMode::Parallel)];

fn k_sweep(c: &mut Criterion) {
    let net = ring_network(16);
    let x0: Vec<f64> = (0..32).map(|k| (k as f64 * 0.37).sin() * 2.0).collect();
    let gains: Vec<f64> = (1..=16).map(|k| 0.25 * k as f64).collect();
    let cfg = IntegratorConfig::new(0.01, 10.0, 0.1);
    let mut group = c.benchmark_group("k_sweep");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| integrate_gains(mode, &net, black_box(&gains), &x0, &cfg))
        });
    }
    group.finish();
}

fn x0_batch(c: &mut Criterion) {
    let net = ring_network(16);
    let x0s: Vec<Vec<f64>> = (0..16)
        .map(|r| (0..32).map(|k| ((r * 32 + k) as f64 * 0.61).cos() * 3.0).collect())
        .collect();
    let cfg = IntegratorConfig::new(0.01, 10.0, 0.1);
    let mut group = c.benchmark_group("x0_batch");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| integrate_initial_states(mode, &net, 1.0, black_box(&x0s), &cfg))
        });
    }
    group.finish();
}

criterion_group!(benches, k_sweep, x0_batch);
criterion_main!(benches);

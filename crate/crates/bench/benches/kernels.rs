use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use nvscope::dynamics::{evolve_lindblad, linspace, Eigensystem};
use nvscope::protocols::{direction_scan, DirectionGrid, PositionScenario, RadicalConfig};
use nvscope::State;
use nvscope_bench::{bath_hamiltonian, h3po4_hamiltonian};

fn eigensolve(c: &mut Criterion) {
    let mut g = c.benchmark_group("eigensolve");
    let h = h3po4_hamiltonian();
    g.bench_function("h3po4", |b| b.iter(|| Eigensystem::new(&h).unwrap()));
    for n in [4, 6, 8] {
        let h = bath_hamiltonian(n);
        g.bench_with_input(BenchmarkId::new("bath", n), &h, |b, h| {
            b.iter(|| Eigensystem::new(h).unwrap())
        });
    }
    g.finish();
}

fn scan(c: &mut Criterion) {
    let scn = PositionScenario::reference();
    let grid = DirectionGrid::new(5, 8).unwrap();
    c.bench_function("direction_scan_5x8", |b| {
        b.iter(|| direction_scan(&scn, &grid, 3.0).unwrap())
    });
}

fn lindblad(c: &mut Criterion) {
    let cfg = RadicalConfig::default();
    let model = cfg.model(cfg.omega3().unwrap()).unwrap().model;
    let dim = model.dim();
    let rho = State::maximally_mixed(dim);
    let times = linspace(0.0, 2e-3, 11);
    c.bench_function("radical_lindblad_11pts", |b| {
        b.iter(|| evolve_lindblad(&model, &rho, &times).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10).measurement_time(Duration::from_secs(3));
    targets = eigensolve, scan, lindblad
}
criterion_main!(benches);

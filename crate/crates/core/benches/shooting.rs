use std::hint::black_box;

use ccbound::par::Execution;
use ccbound::problems::coupled_poschl_teller;
use ccbound::shooting::{Solver, SolverOptions};
use criterion::{criterion_group, criterion_main, Criterion};

fn solver(execution: Execution) -> Solver {
    Solver::new(coupled_poschl_teller(), SolverOptions { tol: 1e-4, execution, ..Default::default() }).unwrap()
}

fn spectrum(c: &mut Criterion) {
    let ks: Vec<usize> = (0..10).collect();
    let mut group = c.benchmark_group("poschl_teller_k0_9");
    group.sample_size(10);
    for (label, mode) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        let s = solver(mode);
        group.bench_function(label, |b| b.iter(|| black_box(s.solve_many(&ks))));
    }
    group.finish();
}

fn index_sweep(c: &mut Criterion) {
    let grid: Vec<f64> = (0..64).map(|i| -70.0 + 70.0 * i as f64 / 63.0).collect();
    let mut group = c.benchmark_group("index_sweep_64");
    group.sample_size(10);
    for (label, mode) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        let s = solver(mode);
        group.bench_function(label, |b| b.iter(|| black_box(s.index_sweep(&grid))));
    }
    group.finish();
}

criterion_group!(benches, spectrum, index_sweep);
criterion_main!(benches);

use std::hint::black_box;

use atlas_core::{run_ensemble, Execution, ModelParams, PortfolioRule, Registrations, SimConfig};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn ensemble(c: &mut Criterion) {
    let params = ModelParams::atlas(10, 1.0, 1.0).unwrap();
    let config = SimConfig::new(100.0, 0.01);
    let regs = Registrations::default().with_rules([PortfolioRule::Market, PortfolioRule::Diversity(0.5)]);
    let seeds: Vec<u64> = (0..8).collect();

    let mut group = c.benchmark_group("ensemble_8_paths");
    group.sample_size(10);
    for (label, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        group.bench_with_input(BenchmarkId::from_parameter(label), &exec, |b, &exec| {
            b.iter(|| run_ensemble(black_box(&params), &config, &regs, &seeds, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, ensemble);
criterion_main!(benches);

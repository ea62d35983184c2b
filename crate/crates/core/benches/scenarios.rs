//! Parallel versus single-threaded timings of the heavy workloads.
//!
//! `cargo bench -p ransomgame-core` compares a rayon pool with all cores to a
//! one-thread pool; add `--no-default-features` to time the plain sequential
//! build instead.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ransomgame_core::montecarlo::{
    draw_victim, evaluate_victim, run_scenario, ReputationMode, ScenarioConfig, ValueDistribution,
};
use ransomgame_core::{grid_search_reputation, optimal_reputation, Decay, GameInstance, RansomSchedule};

fn scenario() -> ScenarioConfig {
    ScenarioConfig {
        rounds: 8,
        total_ransom: 1000.0,
        first_round_fraction: 0.25,
        victim_count: 200,
        value_distribution: ValueDistribution { lo: 200.0, hi: 1200.0 },
        decay_mix: Decay::BUILT_IN.to_vec(),
        sale_ratio: 0.7,
        recovery_cost: 0.0,
        reputation_mode: ReputationMode::OptimalMulti,
        seed: 1,
        detection_lag: 0,
        epsilon_margin: None,
        notes: Vec::new(),
    }
}

fn pools() -> Vec<(String, rayon::ThreadPool)> {
    let all = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut sizes = vec![1];
    if all > 1 {
        sizes.push(all);
    }
    sizes
        .into_iter()
        .map(|n| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
            (format!("{n}-threads"), pool)
        })
        .collect()
}

fn bench_scenario(c: &mut Criterion) {
    let cfg = scenario();
    let mut g = c.benchmark_group("optimal_multi_200_victims");
    g.sample_size(10);
    g.bench_function("plain-loop", |b| {
        b.iter(|| {
            (0..cfg.victim_count)
                .map(|i| evaluate_victim(&cfg, &draw_victim(&cfg, i)).unwrap().profit)
                .sum::<f64>()
        })
    });
    for (name, pool) in pools() {
        g.bench_with_input(BenchmarkId::new("run_scenario", &name), &cfg, |b, cfg| {
            b.iter(|| pool.install(|| run_scenario(cfg).unwrap().total_profit))
        });
    }
    g.finish();
}

fn bench_grid(c: &mut Criterion) {
    let ransoms = RansomSchedule::FirstFraction(0.5).amounts(800.0, 3, 500.0).unwrap();
    let inst = GameInstance::from_decay(ransoms, 500.0, 0.0, &Decay::Linear, 0.7).unwrap();
    let mut g = c.benchmark_group("grid_search_n3_res0.05");
    g.sample_size(10);
    for (name, pool) in pools() {
        g.bench_function(&name, |b| {
            b.iter(|| pool.install(|| grid_search_reputation(&inst, 0.05).unwrap().profit))
        });
    }
    g.finish();
}

fn bench_optimizer(c: &mut Criterion) {
    let ransoms = RansomSchedule::FirstFraction(0.5).amounts(1000.0, 24, 500.0).unwrap();
    let inst = GameInstance::from_decay(ransoms, 500.0, 0.0, &Decay::Circular, 0.7).unwrap();
    let mut g = c.benchmark_group("optimal_reputation_n24");
    for (name, pool) in pools() {
        g.bench_function(&name, |b| {
            b.iter(|| pool.install(|| optimal_reputation(&inst, None).unwrap().expected_profit))
        });
    }
    g.finish();
}

criterion_group!(benches, bench_scenario, bench_grid, bench_optimizer);
criterion_main!(benches);

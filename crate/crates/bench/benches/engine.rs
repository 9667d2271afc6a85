use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hpbranch_core::bundled;
use hpbranch_core::mc::{run_mc, Condition, McConfig};
use hpbranch_core::model::bpre_environment;
use hpbranch_core::oracle::{
    brute_force_tree, exact_bpre_distribution, exact_cell_line_distribution,
};
use hpbranch_core::sim::{
    replicate_rng, simulate_bpre_a, BTracking, SimCaps, Start, TreeSimulator,
};

fn tree(c: &mut Criterion) {
    let m = bundled::m1();
    let mut g = c.benchmark_group("tree");
    for n in [8u32, 12, 16] {
        let sim = TreeSimulator::new(&m, SimCaps::default(), BTracking::Cells, 10);
        g.bench_with_input(BenchmarkId::new("cells", n), &n, |b, &n| {
            let mut r = 0;
            b.iter(|| {
                r += 1;
                sim.run(Start::default(), n, &mut replicate_rng(1, r))
                    .unwrap()
            })
        });
        let sim = TreeSimulator::new(&m, SimCaps::default(), BTracking::ParasiteTotal, 10);
        g.bench_with_input(BenchmarkId::new("parasite_total", n), &n, |b, &n| {
            let mut r = 0;
            b.iter(|| {
                r += 1;
                sim.run(Start::default(), n, &mut replicate_rng(1, r))
                    .unwrap()
            })
        });
    }
    g.finish();
}

fn reduced(c: &mut Criterion) {
    let m = bundled::m1();
    c.bench_function("bpre_a_path_20", |b| {
        let mut r = 0;
        b.iter(|| {
            r += 1;
            simulate_bpre_a(&m, 20, &mut replicate_rng(2, r), SimCaps::default()).unwrap()
        })
    });
}

fn oracles(c: &mut Criterion) {
    let m = bundled::m1();
    let env = bpre_environment(&m).unwrap();
    let mut g = c.benchmark_group("exact");
    for k_max in [64usize, 256] {
        g.bench_with_input(BenchmarkId::new("bpre_n10", k_max), &k_max, |b, &k| {
            b.iter(|| exact_bpre_distribution(black_box(&env), 10, k).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("cell_line_n10", k_max), &k_max, |b, &k| {
            b.iter(|| exact_cell_line_distribution(black_box(&m), 10, k).unwrap())
        });
    }
    g.sample_size(10);
    g.bench_function("brute_force_n3", |b| {
        b.iter(|| brute_force_tree(black_box(&m), 3).unwrap())
    });
    g.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let m = bundled::m1();
    let mut g = c.benchmark_group("mc");
    g.sample_size(10);
    for workers in [1usize, 4] {
        let cfg = McConfig::new(2_000, 10, 3)
            .with_condition(Condition::SurvivalAAtN)
            .with_workers(workers);
        g.bench_with_input(BenchmarkId::new("m1_2000x10", workers), &cfg, |b, cfg| {
            b.iter(|| run_mc(&m, cfg).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, tree, reduced, oracles, monte_carlo);
criterion_main!(benches);

use std::hint::black_box;

use bubblekit_bench::{anisotropic, bubble_ring, scenario};
use bubblekit_core::bubbles::{InteractionMatrix, DEFAULT_TAU};
use bubblekit_core::constants::{compute_constants, constants};
use bubblekit_core::predictor::{balancing_residual, predict};
use bubblekit_core::vortex::{find_critical_points, newton_solve, random_start, NewtonOptions};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn bench_constants(c: &mut Criterion) {
    let mut g = c.benchmark_group("constants");
    for n in [5, 8, 10] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| compute_constants(black_box(n), 1e-10).unwrap())
        });
    }
    g.finish();
}

fn bench_interactions(c: &mut Criterion) {
    let mut g = c.benchmark_group("interaction_matrix");
    for count in [4, 16, 64] {
        let ring = bubble_ring(8, count);
        g.bench_with_input(BenchmarkId::from_parameter(count), &ring, |b, ring| {
            b.iter(|| InteractionMatrix::assemble(black_box(ring)))
        });
    }
    g.finish();
}

fn bench_vortex(c: &mut Criterion) {
    let kr = anisotropic(6);
    let start = random_start(kr.d(), 3, kr.length_scale(3), 1, 0);
    c.bench_function("newton_m3", |b| b.iter(|| newton_solve(&kr, black_box(&start), &NewtonOptions::default())));
    let mut g = c.benchmark_group("vortex_search");
    g.sample_size(10);
    g.bench_function("m3_50_starts", |b| b.iter(|| find_critical_points(&kr, 3, 50, 7).unwrap()));
    g.finish();
}

fn bench_residual(c: &mut Criterion) {
    let s = scenario("cluster");
    let k = constants(s.dim()).unwrap();
    let p = predict(&s, 1e-4, &k, DEFAULT_TAU).unwrap();
    c.bench_function("balancing_residual_cluster", |b| b.iter(|| balancing_residual(&s, black_box(&p), &k).unwrap()));
}

criterion_group!(kernels, bench_constants, bench_interactions, bench_vortex, bench_residual);
criterion_main!(kernels);

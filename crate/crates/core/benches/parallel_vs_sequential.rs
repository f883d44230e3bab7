//! Default rayon pool against a one-thread pool on the hot paths.
//! Build with `--no-default-features` to time the rayon-free code instead.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use wcl_core::experiments::velocity_study;
use wcl_core::par::with_threads;
use wcl_core::routing::{enumerate_all_routes, random_od_routes};
use wcl_core::solvers::{branch_and_bound, brute_force, centrality_scores, Limits, Measure};
use wcl_core::{synthetic, Installation, Route, SegmentGraph, SocParams, WeightScheme};

fn modes() -> [(&'static str, usize); 2] {
    [("parallel", 0), ("sequential", 1)]
}

fn small_instance() -> (SegmentGraph, Vec<Route>, SocParams, f64) {
    let g = synthetic::random_road_graph(9, 7, 4).scale_lengths(10.0).unwrap();
    let routes = enumerate_all_routes(&g, 3, 2000).unwrap().routes;
    let p = SocParams {
        alpha: 0.8,
        ..SocParams::default()
    };
    let budget = g.budget_from_fraction(0.2).unwrap();
    (g, routes, p, budget)
}

fn bench_brute_force(c: &mut Criterion) {
    let (g, routes, p, budget) = small_instance();
    let mut group = c.benchmark_group("brute_force");
    group.sample_size(10);
    for (name, threads) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| with_threads(threads, || brute_force(black_box(&routes), &g, &p, budget, WeightScheme::Binary)))
        });
    }
    group.finish();
}

fn bench_bnb(c: &mut Criterion) {
    let g = synthetic::random_road_graph(30, 30, 0).scale_lengths(10.0).unwrap();
    let routes = random_od_routes(&g, 40, 1, 3).unwrap();
    let p = SocParams {
        alpha: 0.8,
        ..SocParams::default()
    };
    let budget = g.budget_from_fraction(0.1).unwrap();
    let mut group = c.benchmark_group("branch_and_bound_200_nodes");
    group.sample_size(10);
    for (name, threads) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                with_threads(threads, || {
                    branch_and_bound(&routes, &g, &p, budget, WeightScheme::Binary, None, Limits::nodes(200))
                })
            })
        });
    }
    group.finish();
}

fn bench_betweenness(c: &mut Criterion) {
    let g = synthetic::random_grid(20, 20, 2);
    let mut group = c.benchmark_group("betweenness_grid_20x20");
    group.sample_size(10);
    for (name, threads) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| with_threads(threads, || centrality_scores(black_box(&g), Measure::Betweenness)))
        });
    }
    group.finish();
}

fn bench_velocity(c: &mut Criterion) {
    let g = synthetic::random_road_graph(30, 30, 0).scale_lengths(10.0).unwrap();
    let routes = random_od_routes(&g, 30, 1, 3).unwrap();
    let p = SocParams::default();
    let eps = [0.0, 0.1, 0.2, 0.3];
    let mut group = c.benchmark_group("velocity_study_4x50");
    group.sample_size(10);
    for (name, threads) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| with_threads(threads, || velocity_study(&routes, &eps, 50, 0, &Installation::empty(), &p, &g)))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_brute_force, bench_bnb, bench_betweenness, bench_velocity);
criterion_main!(benches);

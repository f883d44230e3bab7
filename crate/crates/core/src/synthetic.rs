//! Small synthetic networks for tests, benches and experiments.
//!
//! Ids are zero-padded so that id order equals construction order.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::road_network::{RoadSegment, SegmentGraph, Setting};

fn seg(id: String, length: f64, category: u8, start: String, end: String) -> RoadSegment {
    let speed = Setting::Urban
        .category_speed(category)
        .expect("valid category");
    RoadSegment {
        id,
        length,
        category,
        speed,
        cost: length,
        start,
        end,
    }
}

/// `s0000 -> s0001 -> ... -> s{n-1}`, category 3.
pub fn directed_line(n: usize, length: f64) -> SegmentGraph {
    let segs = (0..n)
        .map(|i| seg(format!("s{i:04}"), length, 3, format!("n{i}"), format!("n{}", i + 1)))
        .collect();
    SegmentGraph::new(Setting::Urban, segs).expect("valid line")
}

/// Directed cycle on `n` identical segments.
pub fn directed_cycle(n: usize, length: f64) -> SegmentGraph {
    let segs = (0..n)
        .map(|i| {
            seg(
                format!("s{i:04}"),
                length,
                3,
                format!("n{i}"),
                format!("n{}", (i + 1) % n),
            )
        })
        .collect();
    SegmentGraph::new(Setting::Urban, segs).expect("valid cycle")
}

/// `n` segments sharing no intersections.
pub fn isolated_segments(n: usize) -> SegmentGraph {
    let segs = (0..n)
        .map(|i| seg(format!("s{i:04}"), 0.2, 3, format!("a{i}"), format!("b{i}")))
        .collect();
    SegmentGraph::new(Setting::Urban, segs).expect("valid")
}

/// Hub segment `s0000` feeding `leaves` leaf segments.
pub fn star_out(leaves: usize) -> SegmentGraph {
    let mut segs = vec![seg("s0000".into(), 0.2, 3, "src".into(), "hub".into())];
    for i in 1..=leaves {
        segs.push(seg(format!("s{i:04}"), 0.2, 3, "hub".into(), format!("leaf{i}")));
    }
    SegmentGraph::new(Setting::Urban, segs).expect("valid star")
}

/// Two-way street grid of `rows x cols` intersections; every block face is
/// a pair of one-way segments. Has `2 * (rows * (cols - 1) + cols * (rows - 1))`
/// segments.
pub fn grid(rows: usize, cols: usize, length: f64, category: u8) -> SegmentGraph {
    let node = |r: usize, c: usize| format!("x{r}_{c}");
    let mut segs = Vec::new();
    let mut push = |a: String, b: String| {
        let id = format!("g{:06}", segs.len());
        segs.push(seg(id, length, category, a, b));
    };
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                push(node(r, c), node(r, c + 1));
                push(node(r, c + 1), node(r, c));
            }
            if r + 1 < rows {
                push(node(r, c), node(r + 1, c));
                push(node(r + 1, c), node(r, c));
            }
        }
    }
    SegmentGraph::new(Setting::Urban, segs).expect("valid grid")
}

/// Grid with per-segment lengths drawn from `[0.1, 0.5]` miles and
/// categories from 1..=5.
pub fn random_grid(rows: usize, cols: usize, seed: u64) -> SegmentGraph {
    let g = grid(rows, cols, 0.25, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let segs = g
        .segments()
        .iter()
        .map(|s| {
            let category = rng.gen_range(1..=5u8);
            seg(
                s.id.clone(),
                rng.gen_range(0.1..0.5),
                category,
                s.start.clone(),
                s.end.clone(),
            )
        })
        .collect();
    SegmentGraph::new(Setting::Urban, segs).expect("valid grid")
}

/// Strongly connected road-like network: a random Hamiltonian circuit over
/// `intersections` junctions plus `extra` random one-way streets. Each
/// street becomes one segment, length in `[0.1, 0.5]`, category in 1..=5.
pub fn random_road_graph(intersections: usize, extra: usize, seed: u64) -> SegmentGraph {
    assert!(intersections >= 2, "need two intersections");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..intersections).collect();
    order.shuffle(&mut rng);
    let mut arcs = BTreeSet::new();
    for i in 0..intersections {
        arcs.insert((order[i], order[(i + 1) % intersections]));
    }
    let max_arcs = intersections * (intersections - 1);
    let target = (intersections + extra).min(max_arcs);
    while arcs.len() < target {
        let a = rng.gen_range(0..intersections);
        let b = rng.gen_range(0..intersections);
        if a != b {
            arcs.insert((a, b));
        }
    }
    let segs = arcs
        .into_iter()
        .enumerate()
        .map(|(i, (a, b))| {
            let category = rng.gen_range(1..=5u8);
            seg(
                format!("r{i:04}"),
                rng.gen_range(0.1..0.5),
                category,
                format!("j{a}"),
                format!("j{b}"),
            )
        })
        .collect();
    SegmentGraph::new(Setting::Urban, segs).expect("valid random graph")
}

/// Same topology as [`random_road_graph`] but every segment identical, the
/// setting used with the simplistic SOC function.
pub fn uniform_road_graph(intersections: usize, extra: usize, seed: u64) -> SegmentGraph {
    let g = random_road_graph(intersections, extra, seed);
    let segs = g
        .segments()
        .iter()
        .map(|s| seg(s.id.clone(), 0.25, 3, s.start.clone(), s.end.clone()))
        .collect();
    SegmentGraph::new(Setting::Urban, segs).expect("valid")
}

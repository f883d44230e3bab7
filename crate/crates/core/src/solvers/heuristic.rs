//! Ranking-prefix placement heuristics.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::road_network::SegmentGraph;
use crate::soc_model::Installation;

use super::within_budget;

/// Takes segments in ranking order while the running cost fits `budget`,
/// stopping at the first one that does not. With `candidates` (ascending),
/// segments outside it are passed over.
pub fn heuristic_fill(
    ranking: &[usize],
    g: &SegmentGraph,
    budget: f64,
    candidates: Option<&[usize]>,
) -> Installation {
    let mut chosen = Vec::new();
    let mut cost = 0.0;
    for &s in ranking {
        if candidates.is_some_and(|c| c.binary_search(&s).is_err()) {
            continue;
        }
        let c = g.segment(s).cost;
        if !within_budget(cost + c, budget) {
            break;
        }
        cost += c;
        chosen.push(s);
    }
    Installation::from_indices(g, chosen)
}

/// Uniformly random ordering of all segments.
pub fn random_ranking(g: &SegmentGraph, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..g.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order
}

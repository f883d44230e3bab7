use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::road_network::SegmentGraph;
use crate::routing::Route;
use crate::soc_model::{Installation, SocParams};
use crate::state_graph::WeightScheme;

use super::{
    better, candidate_segments, installation_from, relative_gap, within_budget, Evaluator,
    SolveResult, SolveStatus,
};

/// Search limits; `None` means unlimited.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    pub nodes: Option<usize>,
    pub time: Option<Duration>,
}

impl Limits {
    pub fn unlimited() -> Self {
        Self::default()
    }

    pub fn nodes(n: usize) -> Self {
        Self {
            nodes: Some(n),
            time: None,
        }
    }
}

/// Nodes expanded per round. Fixed so that the sequence of explored nodes
/// does not depend on the number of threads.
const BATCH: usize = 16;

#[derive(Debug, Clone)]
struct Node {
    /// Decisions fixed for `order[..depth]`.
    depth: usize,
    /// Installed segment indices, ascending.
    set: Vec<usize>,
    cost: f64,
    bound: f64,
    seq: usize,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // max-heap: highest bound, then deepest, then oldest
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

struct Search<'a> {
    eval: &'a Evaluator,
    order: Vec<usize>,
    costs: Vec<f64>,
    budget: f64,
}

impl Search<'_> {
    fn mask_of(&self, set: &[usize]) -> Vec<bool> {
        let mut m = vec![false; self.eval.n_segments()];
        for &s in set {
            m[s] = true;
        }
        m
    }

    /// (objective of `set`, optimistic bound over completions).
    fn score(&self, depth: usize, set: &[usize], cost: f64) -> (f64, f64) {
        let mut mask = self.mask_of(set);
        let obj = self.eval.objective_mask(&mask);
        let mut extra = false;
        for k in depth..self.order.len() {
            if within_budget(cost + self.costs[k], self.budget) {
                mask[self.order[k]] = true;
                extra = true;
            }
        }
        let bound = if extra { self.eval.objective_mask(&mask) } else { obj };
        (obj, bound.max(obj))
    }

    /// Children of a node; undecided segments that no longer fit are skipped.
    fn children(&self, n: &Node) -> Vec<(usize, Vec<usize>, f64)> {
        let mut k = n.depth;
        while k < self.order.len() && !within_budget(n.cost + self.costs[k], self.budget) {
            k += 1;
        }
        if k == self.order.len() {
            return Vec::new();
        }
        let mut with = n.set.clone();
        let pos = with.binary_search(&self.order[k]).unwrap_err();
        with.insert(pos, self.order[k]);
        vec![
            (k + 1, with, n.cost + self.costs[k]),
            (k + 1, n.set.clone(), n.cost),
        ]
    }
}

/// Best-first branch and bound over install decisions.
///
/// Segments are decided in order of how many routes use them. A node's
/// bound installs every undecided segment that still fits the remaining
/// budget on its own; charging never hurts a route, so this is admissible.
/// Each node's own install set is also a candidate incumbent. An optional
/// warm-start incumbent is never discarded unless strictly beaten.
pub fn branch_and_bound(
    routes: &[Route],
    g: &SegmentGraph,
    p: &SocParams,
    budget: f64,
    scheme: WeightScheme,
    incumbent: Option<&Installation>,
    limits: Limits,
) -> Result<SolveResult> {
    if budget.is_nan() || budget < 0.0 {
        return Err(Error::InvalidParams(format!("budget {budget}")));
    }
    let eval = Evaluator::new(routes, p, g, scheme)?;
    let cands = candidate_segments(routes);
    let mut coverage = vec![0usize; g.len()];
    for r in routes {
        let mut segs = r.segments.clone();
        segs.sort_unstable();
        segs.dedup();
        for s in segs {
            coverage[s] += 1;
        }
    }
    let mut order = cands.clone();
    order.sort_by(|&a, &b| coverage[b].cmp(&coverage[a]).then(a.cmp(&b)));
    let costs: Vec<f64> = order.iter().map(|&s| g.segment(s).cost).collect();
    let search = Search {
        eval: &eval,
        order,
        costs,
        budget,
    };

    let start = Instant::now();
    let out_of_time = || limits.time.is_some_and(|t| start.elapsed() >= t);

    // incumbent: the warm start, else the empty installation
    let (mut best_obj, mut best_set, mut best_inst) = match incumbent {
        Some(inst) => {
            if !within_budget(inst.total_cost, budget) {
                return Err(Error::IncumbentOverBudget {
                    cost: inst.total_cost,
                    budget,
                });
            }
            let set: Vec<usize> = inst.installed.iter().copied().collect();
            let obj = eval.objective_mask(&inst.mask(g.len()));
            (obj, set, Some(inst.clone()))
        }
        None => (eval.objective_mask(&vec![false; g.len()]), Vec::new(), None),
    };

    let (root_obj, root_bound) = search.score(0, &[], 0.0);
    let mut nodes = 0usize;
    let mut seq = 0usize;
    let mut heap = BinaryHeap::new();
    let node_cap = limits.nodes.unwrap_or(usize::MAX);

    if node_cap > 0 {
        nodes += 1;
        if better(root_obj, &[], best_obj, &best_set) {
            best_obj = root_obj;
            best_set = Vec::new();
            best_inst = None;
        }
        if root_bound > best_obj {
            heap.push(Node {
                depth: 0,
                set: Vec::new(),
                cost: 0.0,
                bound: root_bound,
                seq,
            });
            seq += 1;
        }
    } else {
        heap.push(Node {
            depth: 0,
            set: Vec::new(),
            cost: 0.0,
            bound: root_bound,
            seq,
        });
    }

    while nodes < node_cap && !out_of_time() {
        let mut batch = Vec::with_capacity(BATCH);
        while batch.len() < BATCH {
            match heap.pop() {
                Some(n) if n.bound > best_obj => batch.push(n),
                Some(_) => heap.clear(),
                None => break,
            }
        }
        if batch.is_empty() {
            break;
        }
        let mut kids: Vec<(usize, Vec<usize>, f64)> =
            batch.iter().flat_map(|n| search.children(n)).collect();
        let room = node_cap - nodes;
        if kids.len() > room {
            // put back the parents whose children will not be evaluated
            let mut used = 0;
            let mut kept = 0;
            for n in &batch {
                let c = search.children(n).len();
                if used + c > room {
                    break;
                }
                used += c;
                kept += 1;
            }
            for n in batch.drain(kept..) {
                heap.push(n);
            }
            kids.truncate(used);
            if batch.is_empty() {
                break;
            }
        }
        let scored = par::map(&kids, |(d, set, cost)| search.score(*d, set, *cost));
        nodes += kids.len();
        for ((depth, set, cost), (obj, bound)) in kids.into_iter().zip(scored) {
            if better(obj, &set, best_obj, &best_set) {
                best_obj = obj;
                best_set = set.clone();
                best_inst = None;
            }
            if bound > best_obj && bound > obj && depth < search.order.len() {
                heap.push(Node {
                    depth,
                    set,
                    cost,
                    bound,
                    seq,
                });
                seq += 1;
            }
        }
    }

    let open_bound = heap
        .iter()
        .map(|n| n.bound)
        .filter(|&b| b > best_obj)
        .fold(f64::NEG_INFINITY, f64::max);
    let (status, bound) = if open_bound == f64::NEG_INFINITY {
        (SolveStatus::Optimal, best_obj)
    } else {
        (
            SolveStatus::Feasible {
                gap: relative_gap(open_bound, best_obj),
            },
            open_bound,
        )
    };
    let installation = best_inst.unwrap_or_else(|| installation_from(g, &best_set));
    let ev = eval.evaluate(&installation);
    Ok(SolveResult {
        installation,
        objective: best_obj,
        per_route: ev.outcomes,
        status,
        bound,
        nodes,
    })
}

use std::time::Instant;

use crate::error::{Error, Result};
use crate::road_network::SegmentGraph;
use crate::routing::Route;
use crate::soc_model::SocParams;
use crate::state_graph::{build_state_graph, min_cost_path, Variant, WeightScheme};

use super::{candidate_segments, installation_from, Evaluator, Limits, SolveResult, SolveStatus};

struct Dfs<'a> {
    eval: &'a Evaluator,
    g: &'a SegmentGraph,
    installed: Vec<bool>,
    excluded: Vec<bool>,
    best_cost: f64,
    best_set: Vec<usize>,
    nodes: usize,
    limits: Limits,
    start: Instant,
    stopped: bool,
}

impl Dfs<'_> {
    fn undecided<'b>(&'b self, r: usize) -> impl Iterator<Item = usize> + 'b {
        self.eval
            .route_segments(r)
            .iter()
            .copied()
            .filter(|&s| !self.installed[s] && !self.excluded[s])
    }

    /// Lower bound on the extra cost: every violated route needs one more
    /// lane, so a set of violated routes with pairwise disjoint undecided
    /// segments needs at least the sum of their cheapest options.
    fn packing_bound(&self, violated: &[usize]) -> f64 {
        let mut used = vec![false; self.installed.len()];
        let mut lb = 0.0;
        for &r in violated {
            let segs: Vec<usize> = self.undecided(r).collect();
            if segs.is_empty() {
                return f64::INFINITY;
            }
            if segs.iter().any(|&s| used[s]) {
                continue;
            }
            let cheapest = segs
                .iter()
                .map(|&s| self.g.segment(s).cost)
                .fold(f64::INFINITY, f64::min);
            for s in segs {
                used[s] = true;
            }
            lb += cheapest;
        }
        lb
    }

    fn run(&mut self, cost: f64, set: &mut Vec<usize>) {
        if self.stopped {
            return;
        }
        if self.limits.nodes.is_some_and(|n| self.nodes >= n)
            || self.limits.time.is_some_and(|t| self.start.elapsed() >= t)
        {
            self.stopped = true;
            return;
        }
        self.nodes += 1;
        let violated = self.eval.infeasible_routes(&self.installed);
        if violated.is_empty() {
            let mut sorted = set.clone();
            sorted.sort_unstable();
            if cost < self.best_cost || (cost == self.best_cost && sorted < self.best_set) {
                self.best_cost = cost;
                self.best_set = sorted;
            }
            return;
        }
        if cost + self.packing_bound(&violated) >= self.best_cost {
            return;
        }
        // branch on the first violated route; prefer segments shared by
        // many violated routes
        let mut hits = vec![0usize; self.installed.len()];
        for &r in &violated {
            let mut segs: Vec<usize> = self.undecided(r).collect();
            segs.sort_unstable();
            segs.dedup();
            for s in segs {
                hits[s] += 1;
            }
        }
        let mut branch: Vec<usize> = self.undecided(violated[0]).collect();
        branch.sort_unstable();
        branch.dedup();
        branch.sort_by(|&a, &b| hits[b].cmp(&hits[a]).then(a.cmp(&b)));
        for (i, &s) in branch.iter().enumerate() {
            self.installed[s] = true;
            set.push(s);
            self.run(cost + self.g.segment(s).cost, set);
            set.pop();
            self.installed[s] = false;
            self.excluded[s] = true;
            if self.stopped {
                for &t in &branch[..=i] {
                    self.excluded[t] = false;
                }
                return;
            }
        }
        for &t in &branch {
            self.excluded[t] = false;
        }
    }
}

/// Cheapest installation that makes every route feasible.
///
/// Depth-first search over lane sets: take the first infeasible route and
/// branch on which of its remaining segments gets the next lane. The
/// incumbent starts from the union of each route's own cheapest lane set
/// (from its state graph) when that union is feasible.
pub fn min_budget(
    routes: &[Route],
    g: &SegmentGraph,
    p: &SocParams,
    limits: Limits,
) -> Result<SolveResult> {
    if routes.is_empty() {
        return Err(Error::EmptyRoutes);
    }
    let eval = Evaluator::new(routes, p, g, WeightScheme::Binary)?;
    let cands = candidate_segments(routes);
    let mut full = vec![false; g.len()];
    for &s in &cands {
        full[s] = true;
    }
    if let Some(&r) = eval.infeasible_routes(&full).first() {
        return Err(Error::InsufficientCharging { route: r });
    }

    let mut seed: Vec<usize> = Vec::new();
    for (i, r) in routes.iter().enumerate() {
        if let Ok(sg) = build_state_graph(i, r, p, g, Variant::MinBudget) {
            if let Ok(path) = min_cost_path(&sg) {
                seed.extend(path.install_segments);
            }
        }
    }
    seed.sort_unstable();
    seed.dedup();
    let mut seed_mask = vec![false; g.len()];
    for &s in &seed {
        seed_mask[s] = true;
    }
    let (best_cost, best_set) = if eval.infeasible_routes(&seed_mask).is_empty() {
        (seed.iter().map(|&s| g.segment(s).cost).sum(), seed)
    } else {
        (cands.iter().map(|&s| g.segment(s).cost).sum(), cands.clone())
    };

    let mut dfs = Dfs {
        eval: &eval,
        g,
        installed: vec![false; g.len()],
        excluded: vec![false; g.len()],
        best_cost,
        best_set,
        nodes: 0,
        limits,
        start: Instant::now(),
        stopped: false,
    };
    let root_violated = eval.infeasible_routes(&dfs.installed);
    let root_lb = dfs.packing_bound(&root_violated);
    dfs.run(0.0, &mut Vec::new());

    let installation = installation_from(g, &dfs.best_set);
    let cost = installation.total_cost;
    let (status, bound) = if dfs.stopped {
        let lb = root_lb.min(cost);
        (
            SolveStatus::Feasible {
                gap: ((cost - lb) / cost.abs().max(1e-12)).max(0.0),
            },
            lb,
        )
    } else {
        (SolveStatus::Optimal, cost)
    };
    let ev = eval.evaluate(&installation);
    Ok(SolveResult {
        installation,
        objective: cost,
        per_route: ev.outcomes,
        status,
        bound,
        nodes: dfs.nodes,
    })
}

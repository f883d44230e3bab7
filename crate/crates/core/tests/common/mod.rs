//! Test-side oracle: a plain re-implementation of the SOC rules and an
//! exhaustive subset search, sharing no code with the library's evaluator.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wcl_core::routing::enumerate_all_routes;
use wcl_core::{Route, SegmentGraph, SocFunction, SocParams, WeightScheme};

pub struct Instance {
    pub g: SegmentGraph,
    pub routes: Vec<Route>,
    pub p: SocParams,
    pub budget: f64,
    pub scheme: WeightScheme,
}

/// (final SOC, completed, distance driven).
pub fn oracle_run(route: &Route, installed: &dyn Fn(usize) -> bool, p: &SocParams, g: &SegmentGraph) -> (f64, bool, f64) {
    let top = (p.n_layers - 1) as f64;
    let mut driven = 0.0;
    match p.soc_function {
        SocFunction::Realistic => {
            let mut soc = route.initial_soc;
            for &s in &route.segments {
                if soc <= 0.0 {
                    return (0.0, false, driven);
                }
                let seg = g.segment(s);
                let hours = seg.length / seg.speed;
                let gain = if installed(s) { p.p2 * p.eta } else { 0.0 };
                soc += (gain - p.p1) * hours / p.e_cap;
                soc = soc.clamp(0.0, 1.0);
                driven += seg.length;
            }
            (soc, true, driven)
        }
        SocFunction::Simplistic => {
            // nearest level, halves rounded down
            let x = route.initial_soc * top;
            let mut level = if x - x.floor() > 0.5 { x.floor() + 1.0 } else { x.floor() };
            for &s in &route.segments {
                if level == 0.0 {
                    return (0.0, false, driven);
                }
                level = if installed(s) { (level + 1.0).min(top) } else { level - 1.0 };
                driven += g.segment(s).length;
            }
            (level / top, true, driven)
        }
    }
}

pub fn oracle_weight(route: &Route, soc: f64, completed: bool, driven: f64, p: &SocParams, scheme: WeightScheme) -> f64 {
    let soc = if completed { soc } else { 0.0 };
    let pen = (driven - route.distance) / route.distance;
    let w = match scheme {
        WeightScheme::Binary => f64::from(u8::from(soc > p.alpha)),
        WeightScheme::Penalty => {
            if soc > p.alpha {
                1.0
            } else {
                pen
            }
        }
        WeightScheme::Tolerance => {
            if soc > p.alpha && soc >= p.alpha + p.eps_tol {
                1.0
            } else if (soc - p.alpha).abs() < p.eps_tol {
                0.0
            } else {
                pen
            }
        }
    };
    route.demand * w
}

pub fn oracle_objective(inst: &Instance, set: &[usize]) -> f64 {
    let on = |s: usize| set.contains(&s);
    inst.routes
        .iter()
        .map(|r| {
            let (soc, done, d) = oracle_run(r, &on, &inst.p, &inst.g);
            oracle_weight(r, soc, done, d, &inst.p, inst.scheme)
        })
        .sum()
}

pub fn oracle_infeasible(routes: &[Route], set: &[usize], p: &SocParams, g: &SegmentGraph) -> usize {
    let on = |s: usize| set.contains(&s);
    routes
        .iter()
        .filter(|r| {
            let (soc, done, _) = oracle_run(r, &on, p, g);
            !(done && soc > p.alpha)
        })
        .count()
}

pub fn candidates(routes: &[Route]) -> Vec<usize> {
    let mut c: Vec<usize> = routes.iter().flat_map(|r| r.segments.clone()).collect();
    c.sort_unstable();
    c.dedup();
    c
}

/// Every budget-feasible subset of the candidates.
pub fn feasible_subsets(inst: &Instance) -> Vec<Vec<usize>> {
    let cands = candidates(&inst.routes);
    let mut out = Vec::new();
    for bits in 0u64..(1 << cands.len()) {
        let set: Vec<usize> = (0..cands.len()).filter(|k| bits >> k & 1 == 1).map(|k| cands[k]).collect();
        let cost: f64 = set.iter().map(|&s| inst.g.segment(s).cost).sum();
        if cost <= inst.budget + 1e-9 * inst.budget.max(1.0) {
            out.push(set);
        }
    }
    out
}

/// Best objective over all budget-feasible subsets.
pub fn oracle_best(inst: &Instance) -> f64 {
    feasible_subsets(inst)
        .iter()
        .map(|s| oracle_objective(inst, s))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Small random instance: at most 12 segments, up to `max_routes` routes,
/// realistic SOC with random thresholds, initial SOC and demands.
pub fn small_instance(seed: u64, scheme: WeightScheme, max_routes: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inter = rng.gen_range(5..=7);
    let extra = rng.gen_range(2..=12 - inter);
    let g = wcl_core::synthetic::random_road_graph(inter, extra, seed)
        .scale_lengths(8.0)
        .unwrap();
    let pop = enumerate_all_routes(&g, 2, 2000).unwrap();
    let n = rng.gen_range(3..=max_routes).min(pop.len());
    let picks = rand::seq::index::sample(&mut rng, pop.len(), n);
    let routes = picks
        .into_iter()
        .map(|k| {
            let mut r = pop.routes[k].clone();
            r.initial_soc = rng.gen_range(0.3..1.0);
            r.demand = rng.gen_range(0.5..2.0);
            r
        })
        .collect();
    let p = SocParams {
        alpha: rng.gen_range(0.1..0.7),
        eps_tol: 0.05,
        ..SocParams::default()
    };
    let budget = rng.gen_range(0.05..0.6) * g.total_cost();
    Instance {
        g,
        routes,
        p,
        budget,
        scheme,
    }
}

/// The level walk the state graph encodes: continuous step from the level
/// value, clamp, snap to the nearest level. Returns (final SOC, completed,
/// distance driven).
pub fn oracle_discrete_run(route: &Route, installed: &dyn Fn(usize) -> bool, p: &SocParams, g: &SegmentGraph) -> (f64, bool, f64) {
    let top = (p.n_layers - 1) as f64;
    let snap = |x: f64| {
        let y = x.clamp(0.0, 1.0) * top;
        if y - y.floor() > 0.5 {
            y.floor() + 1.0
        } else {
            y.floor()
        }
    };
    let mut level = snap(route.initial_soc);
    let mut driven = 0.0;
    for &s in &route.segments {
        if level == 0.0 {
            return (0.0, false, driven);
        }
        level = match p.soc_function {
            SocFunction::Simplistic => {
                if installed(s) {
                    (level + 1.0).min(top)
                } else {
                    level - 1.0
                }
            }
            SocFunction::Realistic => {
                let seg = g.segment(s);
                let gain = if installed(s) { p.p2 * p.eta } else { 0.0 };
                snap(level / top + (gain - p.p1) * (seg.length / seg.speed) / p.e_cap)
            }
        };
        driven += g.segment(s).length;
    }
    (level / top, true, driven)
}

/// Objective of the discretized model.
pub fn oracle_discrete_objective(inst: &Instance, set: &[usize]) -> f64 {
    let on = |s: usize| set.contains(&s);
    inst.routes
        .iter()
        .map(|r| {
            let (soc, done, d) = oracle_discrete_run(r, &on, &inst.p, &inst.g);
            oracle_weight(r, soc, done, d, &inst.p, inst.scheme)
        })
        .sum()
}

use crate::error::{Error, Result};
use crate::par;
use crate::road_network::SegmentGraph;
use crate::routing::Route;
use crate::soc_model::SocParams;
use crate::state_graph::WeightScheme;

use super::{better, candidate_segments, installation_from, within_budget, Evaluator, SolveResult, SolveStatus};

/// Largest candidate count brute force accepts.
pub const BRUTE_FORCE_CAP: usize = 20;

const CHUNK: u64 = 1 << 10;

/// Exhaustive search over every budget-feasible subset of the candidate
/// segments. Ties go to the lexicographically smallest index set.
pub fn brute_force(
    routes: &[Route],
    g: &SegmentGraph,
    p: &SocParams,
    budget: f64,
    scheme: WeightScheme,
) -> Result<SolveResult> {
    let cands = candidate_segments(routes);
    if cands.len() > BRUTE_FORCE_CAP {
        return Err(Error::CandidateCap {
            candidates: cands.len(),
            cap: BRUTE_FORCE_CAP,
        });
    }
    let eval = Evaluator::new(routes, p, g, scheme)?;
    let costs: Vec<f64> = cands.iter().map(|&s| g.segment(s).cost).collect();
    let total: u64 = 1 << cands.len();
    let n_chunks = total.div_ceil(CHUNK) as usize;

    let best_in_chunk = |c: usize| -> Option<(f64, Vec<usize>)> {
        let mut mask = vec![false; g.len()];
        let mut best: Option<(f64, Vec<usize>)> = None;
        let lo = c as u64 * CHUNK;
        let hi = (lo + CHUNK).min(total);
        for bits in lo..hi {
            let mut cost = 0.0;
            for (k, &c) in costs.iter().enumerate() {
                if bits >> k & 1 == 1 {
                    cost += c;
                }
            }
            if !within_budget(cost, budget) {
                continue;
            }
            let mut set = Vec::new();
            for (k, &s) in cands.iter().enumerate() {
                let on = bits >> k & 1 == 1;
                mask[s] = on;
                if on {
                    set.push(s);
                }
            }
            let obj = (0..eval.route_count()).map(|r| eval.route_score(r, &mask)).sum::<f64>();
            let take = match &best {
                None => true,
                Some((b, bs)) => better(obj, &set, *b, bs),
            };
            if take {
                best = Some((obj, set));
            }
        }
        best
    };

    let mut best: Option<(f64, Vec<usize>)> = None;
    for cand in par::map_range(n_chunks, best_in_chunk).into_iter().flatten() {
        let take = match &best {
            None => true,
            Some((b, bs)) => better(cand.0, &cand.1, *b, bs),
        };
        if take {
            best = Some(cand);
        }
    }
    // the empty set always fits a nonnegative budget
    let (objective, set) = best.ok_or_else(|| Error::InvalidParams(format!("budget {budget}")))?;
    let installation = installation_from(g, &set);
    let ev = eval.evaluate(&installation);
    Ok(SolveResult {
        installation,
        objective,
        per_route: ev.outcomes,
        status: SolveStatus::Optimal,
        bound: objective,
        nodes: total as usize,
    })
}

//! Exact and heuristic solvers for lane placement.
//!
//! The exact solvers search over install decisions `R` directly and score
//! each candidate installation by simulating every route. With `R` fixed a
//! route's path through its state graph is determined, so this explores the
//! same solution space as the integer program.

mod bnb;
mod brute;
pub mod centrality;
mod eval;
pub mod heuristic;
mod min_budget;

use serde::{Deserialize, Serialize};

use crate::road_network::SegmentGraph;
use crate::routing::Route;
use crate::soc_model::{Installation, RouteOutcome};

pub use crate::state_graph::WeightScheme;
pub use bnb::{branch_and_bound, Limits};
pub use brute::{brute_force, BRUTE_FORCE_CAP};
pub use centrality::{centrality_scores, CentralityScores, Measure};
pub use eval::{evaluate_installation, Evaluation, Evaluator};
pub use heuristic::{heuristic_fill, random_ranking};
pub use min_budget::min_budget;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Feasible { gap: f64 },
    Infeasible,
}

impl SolveStatus {
    pub fn gap(&self) -> f64 {
        match self {
            SolveStatus::Optimal => 0.0,
            SolveStatus::Feasible { gap } => *gap,
            SolveStatus::Infeasible => f64::INFINITY,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Feasible { .. } => "feasible",
            SolveStatus::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub installation: Installation,
    pub objective: f64,
    pub per_route: Vec<RouteOutcome>,
    pub status: SolveStatus,
    /// Best known bound on the objective (upper for maximisation, lower for
    /// minimum budget).
    pub bound: f64,
    /// Search nodes evaluated.
    pub nodes: usize,
}

impl SolveResult {
    pub fn infeasible_count(&self) -> usize {
        self.per_route.iter().filter(|o| !o.feasible).count()
    }
}

/// `cost <= budget` up to rounding in summed costs.
pub fn within_budget(cost: f64, budget: f64) -> bool {
    cost <= budget + 1e-9 * budget.abs().max(1.0)
}

/// Relative gap between a bound and an objective, never negative.
pub fn relative_gap(bound: f64, objective: f64) -> f64 {
    ((bound - objective) / bound.abs().max(1e-12)).max(0.0)
}

/// Segments used by at least one route, ascending.
pub fn candidate_segments(routes: &[Route]) -> Vec<usize> {
    let mut c: Vec<usize> = routes
        .iter()
        .flat_map(|r| r.segments.iter().copied())
        .collect();
    c.sort_unstable();
    c.dedup();
    c
}

/// Is `(a_obj, a)` preferred over `(b_obj, b)`: higher objective, then the
/// lexicographically smaller index set.
pub(crate) fn better(a_obj: f64, a: &[usize], b_obj: f64, b: &[usize]) -> bool {
    a_obj > b_obj || (a_obj == b_obj && a < b)
}

pub(crate) fn installation_from(g: &SegmentGraph, set: &[usize]) -> Installation {
    Installation::from_indices(g, set.iter().copied())
}

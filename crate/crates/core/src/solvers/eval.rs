use crate::error::Result;
use crate::par;
use crate::road_network::SegmentGraph;
use crate::routing::Route;
use crate::soc_model::{Installation, RouteOutcome, RouteProfile, SocParams, Terminal};
use crate::state_graph::{outcome_weight, WeightScheme};

/// Objective oracle: precomputed route profiles scored under a weight scheme.
#[derive(Debug, Clone)]
pub struct Evaluator {
    profiles: Vec<RouteProfile>,
    demands: Vec<f64>,
    n_segments: usize,
    pub scheme: WeightScheme,
    pub alpha: f64,
    pub eps_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub objective: f64,
    pub infeasible_count: usize,
    pub outcomes: Vec<RouteOutcome>,
}

impl Evaluator {
    pub fn new(routes: &[Route], p: &SocParams, g: &SegmentGraph, scheme: WeightScheme) -> Result<Self> {
        p.validate()?;
        let profiles = routes
            .iter()
            .map(|r| RouteProfile::new(r, p, g))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            profiles,
            demands: routes.iter().map(|r| r.demand).collect(),
            n_segments: g.len(),
            scheme,
            alpha: p.alpha,
            eps_tol: p.eps_tol,
        })
    }

    pub fn route_count(&self) -> usize {
        self.profiles.len()
    }

    pub fn n_segments(&self) -> usize {
        self.n_segments
    }

    fn weight(&self, r: usize, t: Terminal) -> f64 {
        let soc = if t.completed { t.final_soc } else { 0.0 };
        let prof = &self.profiles[r];
        self.demands[r]
            * outcome_weight(soc, t.stall_distance, prof.distance, self.scheme, self.alpha, self.eps_tol)
    }

    fn feasible(&self, t: Terminal) -> bool {
        t.completed && t.final_soc > self.alpha
    }

    /// Route `r`'s weighted score under an install mask indexed by segment.
    pub fn route_score(&self, r: usize, mask: &[bool]) -> f64 {
        let t = self.profiles[r].terminal(|s| mask[s]);
        self.weight(r, t)
    }

    /// Objective under an install mask. Route scores are summed in route
    /// order so the result does not depend on the thread count.
    pub fn objective_mask(&self, mask: &[bool]) -> f64 {
        par::map_range(self.profiles.len(), |r| self.route_score(r, mask))
            .into_iter()
            .sum()
    }

    /// Objective and number of infeasible routes under a mask.
    pub fn score_mask(&self, mask: &[bool]) -> (f64, usize) {
        let per = par::map_range(self.profiles.len(), |r| {
            let t = self.profiles[r].terminal(|s| mask[s]);
            (self.weight(r, t), !self.feasible(t))
        });
        per.into_iter()
            .fold((0.0, 0), |(o, c), (w, bad)| (o + w, c + usize::from(bad)))
    }

    /// Indices of routes that are infeasible under the mask.
    pub fn infeasible_routes(&self, mask: &[bool]) -> Vec<usize> {
        (0..self.profiles.len())
            .filter(|&r| !self.feasible(self.profiles[r].terminal(|s| mask[s])))
            .collect()
    }

    pub fn is_feasible(&self, r: usize, mask: &[bool]) -> bool {
        self.feasible(self.profiles[r].terminal(|s| mask[s]))
    }

    pub fn route_segments(&self, r: usize) -> &[usize] {
        &self.profiles[r].segments
    }

    pub fn evaluate(&self, inst: &Installation) -> Evaluation {
        let mask = inst.mask(self.n_segments);
        let outcomes = par::map_range(self.profiles.len(), |r| {
            self.profiles[r].outcome(|s| mask[s], self.alpha)
        });
        let mut objective = 0.0;
        for (r, o) in outcomes.iter().enumerate() {
            let t = Terminal {
                final_soc: o.final_soc,
                completed: o.completed,
                stall_distance: o.stall_distance,
            };
            objective += self.weight(r, t);
        }
        Evaluation {
            objective,
            infeasible_count: outcomes.iter().filter(|o| !o.feasible).count(),
            outcomes,
        }
    }
}

/// Weighted objective, infeasible-route count and per-route outcomes of an
/// installation.
pub fn evaluate_installation(
    inst: &Installation,
    routes: &[Route],
    p: &SocParams,
    g: &SegmentGraph,
    scheme: WeightScheme,
) -> Result<Evaluation> {
    Ok(Evaluator::new(routes, p, g, scheme)?.evaluate(inst))
}

//! State-of-charge transitions along road segments.
//!
//! Two transition functions are supported. The realistic one charges or
//! discharges by `((installed ? p2 * eta : 0) - p1) * t / e_cap` over the
//! segment's traversal time `t`. The simplistic one moves exactly one
//! discrete level up (charged) or down (not charged).
//!
//! Levels count up from `0 = empty` to `n_layers - 1 = full` and are spread
//! uniformly over [0, 1]. The state graph labels rows the other way round
//! (`j = 1` is full); [`level_to_row`] and [`row_to_level`] convert.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::road_network::{RoadSegment, SegmentGraph};
use crate::routing::Route;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SocFunction {
    #[default]
    Realistic,
    Simplistic,
}

/// Battery and charging parameters. Defaults are placeholders; every field
/// can be overridden from config or the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SocParams {
    /// Battery capacity, kWh.
    pub e_cap: f64,
    /// Consumption while driving, kW.
    pub p1: f64,
    /// Power delivered by a charging lane, kW.
    pub p2: f64,
    /// Charging efficiency.
    pub eta: f64,
    pub n_layers: usize,
    /// Feasibility threshold on the final SOC.
    pub alpha: f64,
    pub eps_tol: f64,
    pub soc_function: SocFunction,
}

impl Default for SocParams {
    fn default() -> Self {
        Self {
            e_cap: 30.0,
            p1: 10.0,
            p2: 40.0,
            eta: 0.8,
            n_layers: 101,
            alpha: 0.0,
            eps_tol: 0.0,
            soc_function: SocFunction::Realistic,
        }
    }
}

impl SocParams {
    /// Simplistic one-level-per-segment function with `n_layers` levels.
    pub fn simplistic(n_layers: usize, alpha: f64) -> Self {
        Self {
            n_layers,
            alpha,
            soc_function: SocFunction::Simplistic,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if !(self.e_cap > 0.0 && self.e_cap.is_finite()) {
            return bad(format!("e_cap must be positive, got {}", self.e_cap));
        }
        if !(self.p1 > 0.0 && self.p1.is_finite()) {
            return bad(format!("p1 must be positive, got {}", self.p1));
        }
        if !(self.p2 >= 0.0 && self.p2.is_finite()) {
            return bad(format!("p2 must be nonnegative, got {}", self.p2));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return bad(format!("eta must lie in (0, 1], got {}", self.eta));
        }
        if self.n_layers < 2 {
            return bad(format!("n_layers must be at least 2, got {}", self.n_layers));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha must lie in [0, 1], got {}", self.alpha));
        }
        if !(self.eps_tol >= 0.0 && self.eps_tol.is_finite()) {
            return bad(format!("eps_tol must be nonnegative, got {}", self.eps_tol));
        }
        Ok(())
    }

    /// Width of one discrete level.
    pub fn level_width(&self) -> f64 {
        1.0 / (self.n_layers - 1) as f64
    }

    pub fn full_level(&self) -> usize {
        self.n_layers - 1
    }
}

/// Change in SOC over one segment under the realistic function.
pub fn delta_soc(seg: &RoadSegment, installed: bool, p: &SocParams) -> f64 {
    delta_soc_for_time(seg.traversal_time(), installed, p)
}

pub fn delta_soc_for_time(t: f64, installed: bool, p: &SocParams) -> f64 {
    let charge = if installed { p.p2 * p.eta } else { 0.0 };
    (charge - p.p1) * t / p.e_cap
}

pub fn simplistic_step(level: usize, installed: bool, n_layers: usize) -> usize {
    if installed {
        (level + 1).min(n_layers - 1)
    } else {
        level.saturating_sub(1)
    }
}

/// Nearest level to `soc`; exact midpoints go to the lower level.
pub fn discretize(soc: f64, n_layers: usize) -> usize {
    let top = n_layers - 1;
    let x = soc.clamp(0.0, 1.0) * top as f64;
    let lower = x.floor();
    let level = if x - lower > 0.5 { lower + 1.0 } else { lower };
    (level as usize).min(top)
}

pub fn level_value(level: usize, n_layers: usize) -> f64 {
    level as f64 / (n_layers - 1) as f64
}

/// State-graph row label `j` (1 = full, `n_layers` = empty) of a level.
pub fn level_to_row(level: usize, n_layers: usize) -> usize {
    n_layers - level
}

pub fn row_to_level(row: usize, n_layers: usize) -> usize {
    n_layers - row
}

/// Set of segments carrying a charging lane.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Installation {
    /// Segment indices into the graph (id order).
    pub installed: BTreeSet<usize>,
    pub total_cost: f64,
}

impl Installation {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_indices(g: &SegmentGraph, idx: impl IntoIterator<Item = usize>) -> Self {
        let installed: BTreeSet<usize> = idx.into_iter().collect();
        let total_cost = installed.iter().map(|&i| g.segment(i).cost).sum();
        Self {
            installed,
            total_cost,
        }
    }

    pub fn from_ids<S: AsRef<str>>(g: &SegmentGraph, ids: &[S]) -> Result<Self> {
        let idx = ids
            .iter()
            .map(|id| g.require(id.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_indices(g, idx))
    }

    pub fn all(g: &SegmentGraph) -> Self {
        Self::from_indices(g, 0..g.len())
    }

    pub fn contains(&self, seg: usize) -> bool {
        self.installed.contains(&seg)
    }

    pub fn len(&self) -> usize {
        self.installed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.installed.is_empty()
    }

    pub fn mask(&self, n_segments: usize) -> Vec<bool> {
        let mut m = vec![false; n_segments];
        for &i in &self.installed {
            m[i] = true;
        }
        m
    }

    pub fn ids(&self, g: &SegmentGraph) -> Vec<String> {
        self.installed
            .iter()
            .map(|&i| g.segment(i).id.clone())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteOutcome {
    pub final_soc: f64,
    /// SOC after each traversed segment.
    pub trajectory: Vec<f64>,
    pub completed: bool,
    /// Distance driven before the battery emptied; the route distance when completed.
    pub stall_distance: f64,
    pub feasible: bool,
}

/// End state of a route without the per-segment trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Terminal {
    pub final_soc: f64,
    pub completed: bool,
    pub stall_distance: f64,
}

/// Per-route data precomputed for repeated simulation under different
/// installations.
#[derive(Debug, Clone)]
pub struct RouteProfile {
    pub segments: Vec<usize>,
    /// Cumulative distance through each position; `cum[i]` covers segments `0..=i`.
    pub cum_distance: Vec<f64>,
    pub distance: f64,
    delta_off: Vec<f64>,
    delta_on: Vec<f64>,
    initial_soc: f64,
    initial_level: usize,
    function: SocFunction,
    n_layers: usize,
}

impl RouteProfile {
    pub fn new(route: &Route, p: &SocParams, g: &SegmentGraph) -> Result<Self> {
        let mut cum_distance = Vec::with_capacity(route.segments.len());
        let mut acc = 0.0;
        let mut delta_off = Vec::with_capacity(route.segments.len());
        let mut delta_on = Vec::with_capacity(route.segments.len());
        for &s in &route.segments {
            if s >= g.len() {
                return Err(Error::UnknownSegment(format!("#{s}")));
            }
            let seg = g.segment(s);
            acc += seg.length;
            cum_distance.push(acc);
            delta_off.push(delta_soc(seg, false, p));
            delta_on.push(delta_soc(seg, true, p));
        }
        Ok(Self {
            segments: route.segments.clone(),
            cum_distance,
            distance: acc,
            delta_off,
            delta_on,
            initial_soc: route.initial_soc,
            initial_level: discretize(route.initial_soc, p.n_layers),
            function: p.soc_function,
            n_layers: p.n_layers,
        })
    }

    /// Distance through the first `k` segments.
    pub fn distance_through(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.cum_distance[k - 1]
        }
    }

    /// Runs the route, calling `on_step` with the SOC after each segment.
    fn run(&self, installed: impl Fn(usize) -> bool, mut on_step: impl FnMut(f64)) -> Terminal {
        match self.function {
            SocFunction::Realistic => {
                let mut soc = self.initial_soc;
                for i in 0..self.segments.len() {
                    if soc <= 0.0 {
                        return self.stalled(i);
                    }
                    let d = if installed(self.segments[i]) {
                        self.delta_on[i]
                    } else {
                        self.delta_off[i]
                    };
                    soc = (soc + d).clamp(0.0, 1.0);
                    on_step(soc);
                }
                Terminal {
                    final_soc: soc,
                    completed: true,
                    stall_distance: self.distance,
                }
            }
            SocFunction::Simplistic => {
                let mut level = self.initial_level;
                for i in 0..self.segments.len() {
                    if level == 0 {
                        return self.stalled(i);
                    }
                    level = simplistic_step(level, installed(self.segments[i]), self.n_layers);
                    on_step(level_value(level, self.n_layers));
                }
                Terminal {
                    final_soc: level_value(level, self.n_layers),
                    completed: true,
                    stall_distance: self.distance,
                }
            }
        }
    }

    fn stalled(&self, done: usize) -> Terminal {
        Terminal {
            final_soc: 0.0,
            completed: false,
            stall_distance: self.distance_through(done),
        }
    }

    pub fn terminal(&self, installed: impl Fn(usize) -> bool) -> Terminal {
        self.run(installed, |_| {})
    }

    pub fn outcome(&self, installed: impl Fn(usize) -> bool, alpha: f64) -> RouteOutcome {
        let mut trajectory = Vec::with_capacity(self.segments.len());
        let t = self.run(installed, |s| trajectory.push(s));
        RouteOutcome {
            final_soc: t.final_soc,
            trajectory,
            completed: t.completed,
            stall_distance: t.stall_distance,
            feasible: t.completed && t.final_soc > alpha,
        }
    }
}

/// Simulates one route under an installation.
pub fn simulate_route(
    route: &Route,
    inst: &Installation,
    p: &SocParams,
    g: &SegmentGraph,
) -> Result<RouteOutcome> {
    p.validate()?;
    let profile = RouteProfile::new(route, p, g)?;
    Ok(profile.outcome(|s| inst.contains(s), p.alpha))
}

//! Per-route SOC-state graph.
//!
//! For a route `u_1 .. u_m` the graph has a node `mu(i, j)` for every
//! position `i in 1..=m+1` (position `m+1` is the artificial segment that
//! holds the final SOC) and every row `j in 1..=n_layers`, where row 1 is a
//! full battery and row `n_layers` an empty one. A dummy source `s` feeds the
//! row of the initial SOC and a dummy sink `t` collects the boundary nodes.
//!
//! Each non-empty `mu(i, j)` with `i <= m` has two out-edges into layer
//! `i + 1`: weight 0 (no lane on `u_i`) and weight 1 (lane on `u_i`). Empty
//! nodes before the last layer are stalls and have no onward edges; in the
//! fixed-budget variant they drain straight into `t`.
//!
//! Node ids run `s = 0`, then layers in order with rows ascending, then `t`,
//! so every edge goes from a smaller id to a larger one.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::road_network::SegmentGraph;
use crate::routing::Route;
use crate::soc_model::{
    discretize, level_to_row, level_value, row_to_level, simplistic_step, RouteProfile,
    SocFunction, SocParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Only final-layer nodes above the threshold reach `t`.
    MinBudget,
    /// Every final-layer node and every empty node reaches `t`.
    FixedBudget,
}

/// How a route outcome (boundary node) is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightScheme {
    /// 1 if feasible, else 0.
    #[default]
    Binary,
    /// 1 if feasible, else `(d - |r|) / |r|`.
    Penalty,
    /// Like penalty, with an open band of width `eps_tol` around alpha scored 0.
    Tolerance,
}

impl std::str::FromStr for WeightScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(Self::Binary),
            "penalty" => Ok(Self::Penalty),
            "tolerance" => Ok(Self::Tolerance),
            other => Err(Error::InvalidParams(format!("unknown weight scheme `{other}`"))),
        }
    }
}

/// Score of a route that ends with SOC `soc` after driving `driven` of its
/// `total` miles. Feasibility is strict: `soc > alpha`.
pub fn outcome_weight(
    soc: f64,
    driven: f64,
    total: f64,
    scheme: WeightScheme,
    alpha: f64,
    eps_tol: f64,
) -> f64 {
    let penalty = (driven - total) / total;
    match scheme {
        WeightScheme::Binary => {
            if soc > alpha {
                1.0
            } else {
                0.0
            }
        }
        WeightScheme::Penalty => {
            if soc > alpha {
                1.0
            } else {
                penalty
            }
        }
        WeightScheme::Tolerance => {
            if soc > alpha && soc >= alpha + eps_tol {
                1.0
            } else if soc > alpha - eps_tol && soc < alpha + eps_tol {
                0.0
            } else {
                penalty
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateNode {
    Source,
    Sink,
    /// `layer` in `1..=m+1`, `row` in `1..=n_layers` (1 = full).
    Soc { layer: usize, row: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateEdge {
    pub from: usize,
    pub to: usize,
    /// Weight-1 edge: a lane on the segment being traversed.
    pub install: bool,
}

impl StateEdge {
    pub fn weight(&self) -> u8 {
        u8::from(self.install)
    }
}

#[derive(Debug, Clone)]
pub struct SocStateGraph {
    pub route_id: usize,
    pub variant: Variant,
    pub n_layers: usize,
    /// Segment indices of the route, `u_1 .. u_m`.
    pub segments: Vec<usize>,
    pub edges: Vec<StateEdge>,
    /// Nodes adjacent to `t`, ascending.
    pub boundary: Vec<usize>,
    out: Vec<Vec<usize>>,
    /// `reach[k]`: distance through the first `k` segments.
    reach: Vec<f64>,
    alpha: f64,
}

impl SocStateGraph {
    pub fn m(&self) -> usize {
        self.segments.len()
    }

    pub fn node_count(&self) -> usize {
        (self.m() + 1) * self.n_layers + 2
    }

    pub fn source(&self) -> usize {
        0
    }

    pub fn sink(&self) -> usize {
        self.node_count() - 1
    }

    pub fn node_id(&self, layer: usize, row: usize) -> usize {
        debug_assert!((1..=self.m() + 1).contains(&layer) && (1..=self.n_layers).contains(&row));
        1 + (layer - 1) * self.n_layers + (row - 1)
    }

    pub fn node(&self, id: usize) -> StateNode {
        if id == 0 {
            StateNode::Source
        } else if id == self.sink() {
            StateNode::Sink
        } else {
            let k = id - 1;
            StateNode::Soc {
                layer: k / self.n_layers + 1,
                row: k % self.n_layers + 1,
            }
        }
    }

    /// Discretised SOC a node stands for.
    pub fn soc_of(&self, id: usize) -> Option<f64> {
        match self.node(id) {
            StateNode::Soc { row, .. } => {
                Some(level_value(row_to_level(row, self.n_layers), self.n_layers))
            }
            _ => None,
        }
    }

    /// Edge indices leaving `node`, no-install edge first.
    pub fn out_edges(&self, node: usize) -> &[usize] {
        &self.out[node]
    }

    pub fn route_distance(&self) -> f64 {
        *self.reach.last().expect("reach has m + 1 entries")
    }

    /// `d(r, u)` for a boundary node at `layer`: distance through `u_{layer-1}`.
    pub fn distance_at_layer(&self, layer: usize) -> f64 {
        self.reach[layer - 1]
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary.binary_search(&node).is_ok()
    }

    /// Weight `w(mu)` of a boundary node.
    pub fn boundary_weight(&self, node: usize, scheme: WeightScheme, eps_tol: f64) -> Result<f64> {
        if !self.is_boundary(node) {
            return Err(Error::NotBoundary);
        }
        let StateNode::Soc { layer, .. } = self.node(node) else {
            return Err(Error::NotBoundary);
        };
        let soc = self.soc_of(node).expect("soc node");
        Ok(outcome_weight(
            soc,
            self.distance_at_layer(layer),
            self.route_distance(),
            scheme,
            self.alpha,
            eps_tol,
        ))
    }

    /// Follows the unique path selected by an installation, given as a
    /// predicate on route positions (0-based). Returns the edge indices, or
    /// `None` when the path dead-ends (min-budget variant only).
    pub fn walk(&self, installed_at: impl Fn(usize) -> bool) -> Option<Vec<usize>> {
        let mut path = Vec::with_capacity(self.m() + 2);
        let mut node = self.source();
        while node != self.sink() {
            let outs = &self.out[node];
            let pick = match self.node(node) {
                StateNode::Soc { layer, row }
                    if layer <= self.m() && row_to_level(row, self.n_layers) > 0 =>
                {
                    let want = installed_at(layer - 1);
                    outs.iter().copied().find(|&e| self.edges[e].install == want)
                }
                _ => outs.first().copied(),
            };
            let e = pick?;
            path.push(e);
            node = self.edges[e].to;
        }
        Some(path)
    }

    /// Graphviz rendering; node labels are `(i, j, soc)`, edge labels the weight.
    pub fn to_dot(&self, g: &SegmentGraph) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "digraph route_{} {{", self.route_id);
        let _ = writeln!(s, "  rankdir=LR;");
        let _ = writeln!(s, "  n0 [label=\"s\"];");
        for layer in 1..=self.m() + 1 {
            let seg = if layer <= self.m() {
                g.segment(self.segments[layer - 1]).id.as_str()
            } else {
                "end"
            };
            let _ = writeln!(s, "  subgraph cluster_{layer} {{ label=\"{seg}\";");
            for row in 1..=self.n_layers {
                let id = self.node_id(layer, row);
                let soc = self.soc_of(id).expect("soc node");
                let _ = writeln!(s, "    n{id} [label=\"({layer}, {row}, {soc:.3})\"];");
            }
            let _ = writeln!(s, "  }}");
        }
        let _ = writeln!(s, "  n{} [label=\"t\"];", self.sink());
        for e in &self.edges {
            let _ = writeln!(s, "  n{} -> n{} [label=\"{}\"];", e.from, e.to, e.weight());
        }
        s.push_str("}\n");
        s
    }
}

/// Builds the state graph of `route`.
pub fn build_state_graph(
    route_id: usize,
    route: &Route,
    p: &SocParams,
    g: &SegmentGraph,
    variant: Variant,
) -> Result<SocStateGraph> {
    p.validate()?;
    let profile = RouteProfile::new(route, p, g)?;
    let n = p.n_layers;
    let m = route.segments.len();
    let seg_deltas: Vec<(f64, f64)> = route
        .segments
        .iter()
        .map(|&s| {
            let seg = g.segment(s);
            (
                crate::soc_model::delta_soc(seg, false, p),
                crate::soc_model::delta_soc(seg, true, p),
            )
        })
        .collect();
    let next_level = |layer: usize, level: usize, install: bool| -> usize {
        match p.soc_function {
            SocFunction::Simplistic => simplistic_step(level, install, n),
            SocFunction::Realistic => {
                let (off, on) = seg_deltas[layer - 1];
                let d = if install { on } else { off };
                discretize((level_value(level, n) + d).clamp(0.0, 1.0), n)
            }
        }
    };

    let mut reach = Vec::with_capacity(m + 1);
    reach.push(0.0);
    for k in 1..=m {
        reach.push(profile.distance_through(k));
    }

    let mut sg = SocStateGraph {
        route_id,
        variant,
        n_layers: n,
        segments: route.segments.clone(),
        edges: Vec::new(),
        boundary: Vec::new(),
        out: Vec::new(),
        reach,
        alpha: p.alpha,
    };
    let node_count = sg.node_count();
    let sink = sg.sink();
    let mut edges = Vec::with_capacity(2 * m * n + n + 1);
    let mut boundary = Vec::new();

    let start_row = level_to_row(discretize(route.initial_soc, n), n);
    edges.push(StateEdge {
        from: 0,
        to: sg.node_id(1, start_row),
        install: false,
    });
    for layer in 1..=m {
        for row in 1..=n {
            let id = sg.node_id(layer, row);
            let level = row_to_level(row, n);
            if level == 0 {
                if variant == Variant::FixedBudget {
                    edges.push(StateEdge {
                        from: id,
                        to: sink,
                        install: false,
                    });
                    boundary.push(id);
                }
                continue;
            }
            for install in [false, true] {
                let to_level = next_level(layer, level, install);
                edges.push(StateEdge {
                    from: id,
                    to: sg.node_id(layer + 1, level_to_row(to_level, n)),
                    install,
                });
            }
        }
    }
    for row in 1..=n {
        let id = sg.node_id(m + 1, row);
        let soc = level_value(row_to_level(row, n), n);
        if variant == Variant::FixedBudget || soc > p.alpha {
            edges.push(StateEdge {
                from: id,
                to: sink,
                install: false,
            });
            boundary.push(id);
        }
    }

    let mut out = vec![Vec::new(); node_count];
    for (k, e) in edges.iter().enumerate() {
        out[e.from].push(k);
    }
    boundary.sort_unstable();
    sg.edges = edges;
    sg.boundary = boundary;
    sg.out = out;

    if variant == Variant::MinBudget && !sink_reachable(&sg) {
        return Err(Error::InsufficientCharging { route: route_id });
    }
    Ok(sg)
}

fn sink_reachable(sg: &SocStateGraph) -> bool {
    let mut seen = vec![false; sg.node_count()];
    seen[0] = true;
    // ids are topologically ordered
    for v in 0..sg.node_count() {
        if !seen[v] {
            continue;
        }
        for &e in &sg.out[v] {
            seen[sg.edges[e].to] = true;
        }
    }
    seen[sg.sink()]
}

/// Cheapest `s`-`t` path: fewest lanes needed to finish the route above the
/// threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct MinCostPath {
    /// Edge indices from `s` to `t`.
    pub edges: Vec<usize>,
    /// Route positions (0-based) that get a lane.
    pub install_positions: Vec<usize>,
    /// Segment indices that get a lane, in route order.
    pub install_segments: Vec<usize>,
    pub cost: usize,
}

/// Minimum-weight `s`-`t` path over the DAG. Among equally cheap paths the
/// lanes go as late along the route as possible.
pub fn min_cost_path(sg: &SocStateGraph) -> Result<MinCostPath> {
    const UNREACHABLE: usize = usize::MAX;
    let n = sg.node_count();
    let mut to_go = vec![UNREACHABLE; n];
    to_go[sg.sink()] = 0;
    for v in (0..n).rev() {
        for &e in &sg.out[v] {
            let edge = sg.edges[e];
            if to_go[edge.to] != UNREACHABLE {
                let c = to_go[edge.to] + usize::from(edge.weight());
                to_go[v] = to_go[v].min(c);
            }
        }
    }
    if to_go[0] == UNREACHABLE {
        return Err(Error::NoPath);
    }

    let mut path = Vec::new();
    let mut positions = Vec::new();
    let mut node = 0;
    while node != sg.sink() {
        // out-edges list the no-install edge first, so ties defer installing
        let e = sg.out[node]
            .iter()
            .copied()
            .find(|&e| {
                let edge = sg.edges[e];
                to_go[edge.to] != UNREACHABLE
                    && to_go[edge.to] + usize::from(edge.weight()) == to_go[node]
            })
            .expect("an optimal edge exists on every finite-cost node");
        let edge = sg.edges[e];
        if edge.install {
            if let StateNode::Soc { layer, .. } = sg.node(edge.from) {
                positions.push(layer - 1);
            }
        }
        path.push(e);
        node = edge.to;
    }
    Ok(MinCostPath {
        edges: path,
        install_segments: positions.iter().map(|&i| sg.segments[i]).collect(),
        install_positions: positions,
        cost: to_go[0],
    })
}

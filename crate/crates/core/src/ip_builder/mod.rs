//! Integer programs over all routes' state graphs.
//!
//! Variables are `R_k` (one per candidate segment, i.e. every segment used by
//! some route) followed by `x_{r,v,w}` (one per state-graph edge). Rows are
//! the optional budget row, one flow-conservation row per state-graph node,
//! and two linking rows per candidate segment, `R_k - p(u_k) <= 0` and
//! `M * R_k - p(u_k) >= 0`, where `p(u_k)` sums the weight-1 edges leaving
//! any layer that traverses `u_k`.

pub mod mps;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::road_network::SegmentGraph;
use crate::routing::Route;
use crate::soc_model::{Installation, SocParams};
use crate::state_graph::{build_state_graph, SocStateGraph, StateNode, Variant, WeightScheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowKind {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub kind: RowKind,
    /// (variable, coefficient), variables ascending.
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl Row {
    pub fn satisfied_by(&self, x: &[f64], tol: f64) -> bool {
        let lhs: f64 = self.coeffs.iter().map(|&(v, c)| c * x[v]).sum();
        match self.kind {
            RowKind::Le => lhs <= self.rhs + tol,
            RowKind::Ge => lhs >= self.rhs - tol,
            RowKind::Eq => (lhs - self.rhs).abs() <= tol,
        }
    }
}

/// An all-binary integer program.
#[derive(Debug, Clone)]
pub struct IpInstance {
    pub name: String,
    pub sense: Sense,
    pub var_names: Vec<String>,
    /// Dense objective coefficients, one per variable.
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    pub big_m: f64,
    pub budget: Option<f64>,
    /// Candidate segment of each `R` variable; `R` variables come first.
    pub install_segments: Vec<usize>,
    /// Index of each route's first edge variable.
    pub edge_offsets: Vec<usize>,
    pub graphs: Vec<SocStateGraph>,
}

/// Shape of an instance, written next to exported MPS files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub vars: usize,
    pub cons: usize,
    pub budget: Option<f64>,
    pub routes: usize,
}

impl IpInstance {
    /// An instance with no variables and no constraints.
    pub fn empty(name: &str) -> Self {
        Self {
            name: name.to_owned(),
            sense: Sense::Minimize,
            var_names: Vec::new(),
            objective: Vec::new(),
            rows: Vec::new(),
            big_m: 0.0,
            budget: None,
            install_segments: Vec::new(),
            edge_offsets: Vec::new(),
            graphs: Vec::new(),
        }
    }

    pub fn var_count(&self) -> usize {
        self.var_names.len()
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn summary(&self) -> InstanceSummary {
        InstanceSummary {
            vars: self.var_count(),
            cons: self.row_count(),
            budget: self.budget,
            routes: self.graphs.len(),
        }
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Names of rows violated by `x`.
    pub fn violated_rows(&self, x: &[f64], tol: f64) -> Vec<&str> {
        self.rows
            .iter()
            .filter(|r| !r.satisfied_by(x, tol))
            .map(|r| r.name.as_str())
            .collect()
    }

    /// 0/1 assignment induced by an installation: each route follows the
    /// path its lanes dictate, and `R_k = 1` for installed candidates that
    /// some route actually charges on. Installed segments that no path uses
    /// are left at 0, which only lowers the budget row. `None` if a route
    /// dead-ends (min-budget variant with an insufficient installation).
    pub fn assignment_for(&self, inst: &Installation) -> Option<Vec<f64>> {
        let mut x = vec![0.0; self.var_count()];
        let mut used = vec![false; self.install_segments.len()];
        for (r, sg) in self.graphs.iter().enumerate() {
            let path = sg.walk(|pos| inst.contains(sg.segments[pos]))?;
            for e in path {
                x[self.edge_offsets[r] + e] = 1.0;
                let edge = sg.edges[e];
                if edge.install {
                    if let StateNode::Soc { layer, .. } = sg.node(edge.from) {
                        let seg = sg.segments[layer - 1];
                        let k = self
                            .install_segments
                            .binary_search(&seg)
                            .expect("route segments are candidates");
                        used[k] = true;
                    }
                }
            }
        }
        for (k, &seg) in self.install_segments.iter().enumerate() {
            if used[k] && inst.contains(seg) {
                x[k] = 1.0;
            }
        }
        Some(x)
    }
}

fn candidate_segments(routes: &[Route]) -> Vec<usize> {
    let mut c: Vec<usize> = routes.iter().flat_map(|r| r.segments.iter().copied()).collect();
    c.sort_unstable();
    c.dedup();
    c
}

fn coord(sg: &SocStateGraph, node: usize) -> (usize, usize) {
    match sg.node(node) {
        StateNode::Source => (0, 0),
        StateNode::Sink => (sg.m() + 2, 0),
        StateNode::Soc { layer, row } => (layer, row),
    }
}

fn build_graphs(
    routes: &[Route],
    p: &SocParams,
    g: &SegmentGraph,
    variant: Variant,
) -> Result<Vec<SocStateGraph>> {
    let indexed: Vec<(usize, &Route)> = routes.iter().enumerate().collect();
    par::map(&indexed, |&(i, r)| build_state_graph(i, r, p, g, variant))
        .into_iter()
        .collect()
}

struct Assembly {
    var_names: Vec<String>,
    rows: Vec<Row>,
    install_segments: Vec<usize>,
    edge_offsets: Vec<usize>,
    big_m: f64,
}

fn assemble(graphs: &[SocStateGraph], routes: &[Route], g: &SegmentGraph) -> Assembly {
    let install_segments = candidate_segments(routes);
    let mut var_names: Vec<String> = install_segments
        .iter()
        .map(|&s| format!("R_{}", g.segment(s).id))
        .collect();
    let mut edge_offsets = Vec::with_capacity(graphs.len());
    for (r, sg) in graphs.iter().enumerate() {
        edge_offsets.push(var_names.len());
        for e in &sg.edges {
            let (i, j) = coord(sg, e.from);
            let (i2, j2) = coord(sg, e.to);
            var_names.push(format!("X_{r}_{i}_{j}_{i2}_{j2}_{}", e.weight()));
        }
    }

    let mut rows = Vec::new();
    for (r, sg) in graphs.iter().enumerate() {
        let off = edge_offsets[r];
        let mut coeffs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); sg.node_count()];
        for (k, e) in sg.edges.iter().enumerate() {
            coeffs[e.from].push((off + k, 1.0));
            coeffs[e.to].push((off + k, -1.0));
        }
        for (node, mut c) in coeffs.into_iter().enumerate() {
            c.sort_unstable_by_key(|&(v, _)| v);
            let (i, j) = coord(sg, node);
            let rhs = if node == sg.source() {
                1.0
            } else if node == sg.sink() {
                -1.0
            } else {
                0.0
            };
            rows.push(Row {
                name: format!("F_{r}_{i}_{j}"),
                kind: RowKind::Eq,
                coeffs: c,
                rhs,
            });
        }
    }

    // p(u_k): weight-1 edges leaving layers that traverse u_k
    let mut p_terms: Vec<Vec<usize>> = vec![Vec::new(); install_segments.len()];
    for (r, sg) in graphs.iter().enumerate() {
        for (k, e) in sg.edges.iter().enumerate() {
            if !e.install {
                continue;
            }
            if let StateNode::Soc { layer, .. } = sg.node(e.from) {
                let seg = sg.segments[layer - 1];
                let c = install_segments.binary_search(&seg).expect("candidate");
                p_terms[c].push(edge_offsets[r] + k);
            }
        }
    }
    // M bounds p(u_k): one unit per route pass over u_k
    let mut passes = vec![0usize; install_segments.len()];
    for r in routes {
        for &s in &r.segments {
            passes[install_segments.binary_search(&s).expect("candidate")] += 1;
        }
    }
    let big_m = (routes.len().max(passes.iter().copied().max().unwrap_or(0))) as f64;

    for (k, &seg) in install_segments.iter().enumerate() {
        let id = &g.segment(seg).id;
        let mut upper = vec![(k, 1.0)];
        upper.extend(p_terms[k].iter().map(|&v| (v, -1.0)));
        rows.push(Row {
            name: format!("LU_{id}"),
            kind: RowKind::Le,
            coeffs: upper,
            rhs: 0.0,
        });
        let mut lower = vec![(k, big_m)];
        lower.extend(p_terms[k].iter().map(|&v| (v, -1.0)));
        rows.push(Row {
            name: format!("LM_{id}"),
            kind: RowKind::Ge,
            coeffs: lower,
            rhs: 0.0,
        });
    }

    Assembly {
        var_names,
        rows,
        install_segments,
        edge_offsets,
        big_m,
    }
}

/// Fixed budget: maximise the demand-weighted boundary score of all routes
/// with installation cost at most `budget`.
pub fn build_fixed_budget_ip(
    routes: &[Route],
    g: &SegmentGraph,
    p: &SocParams,
    budget: f64,
    scheme: WeightScheme,
) -> Result<IpInstance> {
    if routes.is_empty() {
        return Err(Error::EmptyRoutes);
    }
    if !(budget >= 0.0 && budget.is_finite()) {
        return Err(Error::InvalidParams(format!("budget {budget}")));
    }
    let graphs = build_graphs(routes, p, g, Variant::FixedBudget)?;
    let a = assemble(&graphs, routes, g);

    let mut objective = vec![0.0; a.var_names.len()];
    for (r, sg) in graphs.iter().enumerate() {
        for (k, e) in sg.edges.iter().enumerate() {
            if e.to == sg.sink() {
                let w = sg.boundary_weight(e.from, scheme, p.eps_tol)?;
                objective[a.edge_offsets[r] + k] = routes[r].demand * w;
            }
        }
    }

    let mut budget_coeffs: Vec<(usize, f64)> = a
        .install_segments
        .iter()
        .enumerate()
        .map(|(k, &s)| (k, g.segment(s).cost))
        .collect();
    budget_coeffs.retain(|&(_, c)| c != 0.0);
    let mut rows = Vec::with_capacity(a.rows.len() + 1);
    rows.push(Row {
        name: "BUDGET".into(),
        kind: RowKind::Le,
        coeffs: budget_coeffs,
        rhs: budget,
    });
    rows.extend(a.rows);

    Ok(IpInstance {
        name: "WCLFIXED".into(),
        sense: Sense::Maximize,
        var_names: a.var_names,
        objective,
        rows,
        big_m: a.big_m,
        budget: Some(budget),
        install_segments: a.install_segments,
        edge_offsets: a.edge_offsets,
        graphs,
    })
}

/// Minimum budget: cheapest installation that makes every route feasible.
pub fn build_min_budget_ip(routes: &[Route], g: &SegmentGraph, p: &SocParams) -> Result<IpInstance> {
    if routes.is_empty() {
        return Err(Error::EmptyRoutes);
    }
    let graphs = build_graphs(routes, p, g, Variant::MinBudget)?;
    let a = assemble(&graphs, routes, g);
    let mut objective = vec![0.0; a.var_names.len()];
    for (k, &s) in a.install_segments.iter().enumerate() {
        objective[k] = g.segment(s).cost;
    }
    Ok(IpInstance {
        name: "WCLMIN".into(),
        sense: Sense::Minimize,
        var_names: a.var_names,
        objective,
        rows: a.rows,
        big_m: a.big_m,
        budget: None,
        install_segments: a.install_segments,
        edge_offsets: a.edge_offsets,
        graphs,
    })
}

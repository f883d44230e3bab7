//! Travel-time shortest routes, route enumeration and sampling.
//!
//! Shortest paths minimise total traversal time. Among equally fast paths
//! the one whose id sequence is lexicographically smallest wins; segment
//! indices follow id order, so comparing index sequences is enough.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::road_network::SegmentGraph;
use crate::soc_model::{Installation, RouteProfile, SocParams};

pub const DEFAULT_MIN_SEGMENTS: usize = 2;
pub const DEFAULT_ENUMERATION_CAP: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    /// Segment indices in travel order.
    pub segments: Vec<usize>,
    /// Miles.
    pub distance: f64,
    /// Normalised travel demand.
    pub demand: f64,
    pub initial_soc: f64,
}

impl Route {
    /// Builds a route with demand 1 and a full battery, checking adjacency.
    pub fn from_indices(g: &SegmentGraph, segments: Vec<usize>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidRoute {
                route: 0,
                reason: "route has no segments".into(),
            });
        }
        for &s in &segments {
            if s >= g.len() {
                return Err(Error::UnknownSegment(format!("#{s}")));
            }
        }
        for w in segments.windows(2) {
            if !g.has_edge(w[0], w[1]) {
                return Err(Error::NotAdjacent {
                    route: 0,
                    from: g.segment(w[0]).id.clone(),
                    to: g.segment(w[1]).id.clone(),
                });
            }
        }
        let distance = segments.iter().map(|&s| g.segment(s).length).sum();
        Ok(Self {
            segments,
            distance,
            demand: 1.0,
            initial_soc: 1.0,
        })
    }

    pub fn from_ids<S: AsRef<str>>(g: &SegmentGraph, ids: &[S]) -> Result<Self> {
        let idx = ids
            .iter()
            .map(|id| g.require(id.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Self::from_indices(g, idx)
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn origin(&self) -> usize {
        self.segments[0]
    }

    pub fn destination(&self) -> usize {
        *self.segments.last().expect("routes are nonempty")
    }

    pub fn ids(&self, g: &SegmentGraph) -> Vec<String> {
        self.segments.iter().map(|&s| g.segment(s).id.clone()).collect()
    }

    /// Total traversal time along the route's edges (excludes the last segment).
    pub fn edge_time(&self, g: &SegmentGraph) -> f64 {
        self.segments[..self.segments.len() - 1]
            .iter()
            .map(|&s| g.segment(s).traversal_time())
            .sum()
    }
}

/// Routes plus the mean and population standard deviation of their distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutePopulation {
    pub routes: Vec<Route>,
    pub tau: f64,
    pub sigma: f64,
}

impl RoutePopulation {
    pub fn new(routes: Vec<Route>) -> Self {
        let (tau, sigma) = mean_and_std(routes.iter().map(|r| r.distance));
        Self { routes, tau, sigma }
    }

    pub fn len(&self) -> usize {
        self.routes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.routes.is_empty()
    }
}

/// Mean and population standard deviation (divides by N).
pub fn mean_and_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    (mean, var.sqrt())
}

#[derive(Clone, Copy, PartialEq)]
struct QueueItem {
    dist: f64,
    node: usize,
}

impl Eq for QueueItem {}

impl Ord for QueueItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (dist, node)
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for QueueItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn is_tie(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Single-source travel-time shortest-path tree with lexicographic tie-breaking.
#[derive(Debug, Clone)]
pub struct ShortestPathTree {
    pub source: usize,
    pub dist: Vec<f64>,
    pub parent: Vec<Option<usize>>,
    /// Reachable nodes in the order they were settled (source first).
    pub settled: Vec<usize>,
    depth: Vec<usize>,
}

impl ShortestPathTree {
    pub fn new(g: &SegmentGraph, source: usize) -> Self {
        let n = g.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut parent: Vec<Option<usize>> = vec![None; n];
        let mut depth = vec![0usize; n];
        let mut done = vec![false; n];
        let mut settled = Vec::new();
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(QueueItem {
            dist: 0.0,
            node: source,
        });
        while let Some(QueueItem { dist: d, node: u }) = heap.pop() {
            if done[u] || d > dist[u] {
                continue;
            }
            done[u] = true;
            settled.push(u);
            let w = g.segment(u).traversal_time();
            for &v in g.successors(u) {
                if done[v] {
                    continue;
                }
                let nd = d + w;
                if dist[v].is_infinite() || (nd < dist[v] && !is_tie(nd, dist[v])) {
                    dist[v] = nd;
                    parent[v] = Some(u);
                    depth[v] = depth[u] + 1;
                    heap.push(QueueItem { dist: nd, node: v });
                } else if is_tie(nd, dist[v]) {
                    let current = parent[v].expect("finite distance implies a parent");
                    if lex_less(&parent, u, current) {
                        // v is still unsettled, so it has no children to fix up
                        parent[v] = Some(u);
                        depth[v] = depth[u] + 1;
                    }
                }
            }
        }
        Self {
            source,
            dist,
            parent,
            settled,
            depth,
        }
    }

    pub fn reachable(&self, v: usize) -> bool {
        self.dist[v].is_finite()
    }

    /// Number of segments on the tree path to `v` (the source alone counts 1).
    pub fn hops(&self, v: usize) -> usize {
        self.depth[v] + 1
    }

    pub fn path_to(&self, v: usize) -> Option<Vec<usize>> {
        if !self.reachable(v) {
            return None;
        }
        let mut path = vec![v];
        let mut cur = v;
        while let Some(p) = self.parent[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        Some(path)
    }

    /// Size of each node's subtree (0 for unreachable nodes).
    pub fn subtree_sizes(&self) -> Vec<usize> {
        let mut size = vec![0usize; self.dist.len()];
        for &v in self.settled.iter().rev() {
            size[v] += 1;
            if let Some(p) = self.parent[v] {
                size[p] += size[v];
            }
        }
        size
    }
}

/// Is the tree path to `a` lexicographically smaller than the one to `b`?
fn lex_less(parent: &[Option<usize>], a: usize, b: usize) -> bool {
    let walk = |mut v: usize| {
        let mut p = vec![v];
        while let Some(u) = parent[v] {
            p.push(u);
            v = u;
        }
        p.reverse();
        p
    };
    walk(a) < walk(b)
}

/// Fastest route from `origin` to `dest`, both included.
pub fn shortest_route(g: &SegmentGraph, origin: usize, dest: usize) -> Result<Option<Route>> {
    if origin >= g.len() {
        return Err(Error::UnknownSegment(format!("#{origin}")));
    }
    if dest >= g.len() {
        return Err(Error::UnknownSegment(format!("#{dest}")));
    }
    let tree = ShortestPathTree::new(g, origin);
    tree.path_to(dest)
        .map(|p| Route::from_indices(g, p))
        .transpose()
}

/// One shortest route per reachable ordered pair with at least
/// `min_segments` segments, ordered by (origin, destination).
pub fn enumerate_all_routes(
    g: &SegmentGraph,
    min_segments: usize,
    cap: usize,
) -> Result<RoutePopulation> {
    if g.len() > cap {
        return Err(Error::EnumerationCap {
            nodes: g.len(),
            cap,
        });
    }
    let per_origin = par::map_range(g.len(), |o| {
        let tree = ShortestPathTree::new(g, o);
        (0..g.len())
            .filter(|&d| tree.reachable(d) && tree.hops(d) >= min_segments)
            .map(|d| {
                let path = tree.path_to(d).expect("reachable");
                Route::from_indices(g, path).expect("tree paths follow edges")
            })
            .collect::<Vec<_>>()
    });
    Ok(RoutePopulation::new(per_origin.into_iter().flatten().collect()))
}

/// Indices of routes longer than `tau + l * sigma`.
pub fn omega_l(pop: &RoutePopulation, l: f64) -> Vec<usize> {
    let bound = pop.tau + l * pop.sigma;
    pop.routes
        .iter()
        .enumerate()
        .filter(|(_, r)| r.distance > bound)
        .map(|(i, _)| i)
        .collect()
}

/// Candidate filters for [`sample_routes`]; all given filters must pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteFilter {
    MinSegments(usize),
    MinDistance(f64),
    /// Final SOC `<= alpha` (or a stall) with nothing installed.
    InfeasibleWithoutInstall(SocParams),
    /// Membership in Omega_l.
    Omega(f64),
}

impl RouteFilter {
    fn accepts(&self, pop: &RoutePopulation, r: &Route, g: &SegmentGraph) -> Result<bool> {
        Ok(match self {
            RouteFilter::MinSegments(k) => r.len() >= *k,
            RouteFilter::MinDistance(d) => r.distance >= *d,
            RouteFilter::InfeasibleWithoutInstall(p) => {
                let out = RouteProfile::new(r, p, g)?.outcome(|_| false, p.alpha);
                !out.feasible
            }
            RouteFilter::Omega(l) => r.distance > pop.tau + l * pop.sigma,
        })
    }
}

/// Indices of routes passing every filter.
pub fn filter_routes(
    pop: &RoutePopulation,
    filters: &[RouteFilter],
    g: &SegmentGraph,
) -> Result<Vec<usize>> {
    let mut keep = Vec::new();
    for (i, r) in pop.routes.iter().enumerate() {
        let mut ok = true;
        for f in filters {
            if !f.accepts(pop, r, g)? {
                ok = false;
                break;
            }
        }
        if ok {
            keep.push(i);
        }
    }
    Ok(keep)
}

/// `n` distinct routes drawn uniformly from those passing `filters`.
pub fn sample_routes(
    pop: &RoutePopulation,
    n: usize,
    seed: u64,
    filters: &[RouteFilter],
    g: &SegmentGraph,
) -> Result<Vec<Route>> {
    let candidates = filter_routes(pop, filters, g)?;
    if candidates.len() < n {
        return Err(Error::NotEnoughRoutes {
            available: candidates.len(),
            requested: n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample(&mut rng, candidates.len(), n)
        .into_iter()
        .map(|k| pop.routes[candidates[k]].clone())
        .collect())
}

/// Draws shortest routes between random origin/destination pairs, for graphs
/// too large to enumerate. Pairs are distinct; gives up after `10 * n`
/// fruitless origin draws.
pub fn random_od_routes(
    g: &SegmentGraph,
    n: usize,
    seed: u64,
    min_segments: usize,
) -> Result<Vec<Route>> {
    if g.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut routes = Vec::with_capacity(n);
    let mut misses = 0usize;
    while routes.len() < n {
        let o = rng.gen_range(0..g.len());
        let tree = ShortestPathTree::new(g, o);
        let targets: Vec<usize> = tree
            .settled
            .iter()
            .copied()
            .filter(|&d| tree.hops(d) >= min_segments && !seen.contains(&(o, d)))
            .collect();
        if targets.is_empty() {
            misses += 1;
            if misses > 10 * n.max(1) {
                return Err(Error::NotEnoughRoutes {
                    available: routes.len(),
                    requested: n,
                });
            }
            continue;
        }
        let d = targets[rng.gen_range(0..targets.len())];
        seen.insert((o, d));
        routes.push(Route::from_indices(g, tree.path_to(d).expect("settled"))?);
    }
    Ok(routes)
}

/// Routes that are infeasible under a given installation.
pub fn infeasible_under(
    routes: &[Route],
    inst: &Installation,
    p: &SocParams,
    g: &SegmentGraph,
) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (i, r) in routes.iter().enumerate() {
        let o = RouteProfile::new(r, p, g)?.outcome(|s| inst.contains(s), p.alpha);
        if !o.feasible {
            out.push(i);
        }
    }
    Ok(out)
}

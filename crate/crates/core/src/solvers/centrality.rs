//! Centrality measures on the segment graph, used as placement heuristics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::road_network::SegmentGraph;
use crate::routing::ShortestPathTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Betweenness,
    Closeness,
    Eigenvector,
}

impl Measure {
    pub const ALL: [Measure; 3] = [Measure::Betweenness, Measure::Closeness, Measure::Eigenvector];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Betweenness => "betweenness",
            Measure::Closeness => "closeness",
            Measure::Eigenvector => "eigenvector",
        }
    }
}

impl std::str::FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "betweenness" => Ok(Self::Betweenness),
            "closeness" => Ok(Self::Closeness),
            "eigenvector" => Ok(Self::Eigenvector),
            other => Err(Error::InvalidParams(format!("unknown centrality `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralityScores {
    pub measure: Measure,
    pub scores: Vec<f64>,
    /// Segment indices, most central first; ties by index.
    pub ranking: Vec<usize>,
}

pub const EIGEN_TOL: f64 = 1e-10;
pub const EIGEN_MAX_ITER: usize = 10_000;

pub fn centrality_scores(g: &SegmentGraph, measure: Measure) -> Result<CentralityScores> {
    if g.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let scores = match measure {
        Measure::Betweenness => betweenness(g),
        Measure::Closeness => closeness(g),
        Measure::Eigenvector => eigenvector(g)?,
    };
    let mut ranking: Vec<usize> = (0..g.len()).collect();
    match measure {
        Measure::Closeness => {
            ranking.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)))
        }
        _ => ranking.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b))),
    }
    Ok(CentralityScores {
        measure,
        scores,
        ranking,
    })
}

/// Number of ordered pairs whose unique fastest path passes through each
/// segment strictly between its ends.
fn betweenness(g: &SegmentGraph) -> Vec<f64> {
    let per_source = par::map_range(g.len(), |s| {
        let tree = ShortestPathTree::new(g, s);
        let sizes = tree.subtree_sizes();
        tree.settled
            .iter()
            .filter(|&&v| v != s)
            .map(|&v| (v, sizes[v] - 1))
            .filter(|&(_, c)| c > 0)
            .collect::<Vec<_>>()
    });
    let mut counts = vec![0usize; g.len()];
    for contrib in per_source {
        for (v, c) in contrib {
            counts[v] += c;
        }
    }
    counts.into_iter().map(|c| c as f64).collect()
}

/// Sum of travel times to every reachable segment.
fn closeness(g: &SegmentGraph) -> Vec<f64> {
    par::map_range(g.len(), |s| {
        let tree = ShortestPathTree::new(g, s);
        tree.settled.iter().map(|&v| tree.dist[v]).sum()
    })
}

/// Power iteration on `A + A^T + I`, scaled so the largest entry is 1.
///
/// Symmetrising keeps the dominant eigenvalue real and the shift by the
/// identity rules out oscillation on bipartite structures such as cycles of
/// even length.
fn eigenvector(g: &SegmentGraph) -> Result<Vec<f64>> {
    if g.edge_count() == 0 {
        return Err(Error::NoEdges);
    }
    let n = g.len();
    let mut x = vec![1.0; n];
    for _ in 0..EIGEN_MAX_ITER {
        let mut y = x.clone();
        for u in 0..n {
            for &v in g.successors(u) {
                y[u] += x[v];
                y[v] += x[u];
            }
        }
        let max = y.iter().copied().fold(0.0, f64::max);
        for v in &mut y {
            *v /= max;
        }
        let delta = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        x = y;
        if delta < EIGEN_TOL {
            return Ok(x);
        }
    }
    Err(Error::NoConvergence {
        iterations: EIGEN_MAX_ITER,
    })
}

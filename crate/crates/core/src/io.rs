//! Route files, solution files and JSON helpers.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::road_network::SegmentGraph;
use crate::routing::Route;
use crate::soc_model::Installation;
use crate::solvers::SolveResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteRecord {
    pub segments: Vec<String>,
    #[serde(default = "one")]
    pub demand: f64,
    #[serde(default = "one")]
    pub initial_soc: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RoutesFile {
    pub routes: Vec<RouteRecord>,
}

impl RoutesFile {
    pub fn from_routes(routes: &[Route], g: &SegmentGraph) -> Self {
        Self {
            routes: routes
                .iter()
                .map(|r| RouteRecord {
                    segments: r.ids(g),
                    demand: r.demand,
                    initial_soc: r.initial_soc,
                })
                .collect(),
        }
    }

    pub fn into_routes(self, g: &SegmentGraph) -> Result<Vec<Route>> {
        self.routes
            .into_iter()
            .enumerate()
            .map(|(i, rec)| {
                let mut r = Route::from_ids(g, &rec.segments).map_err(|e| match e {
                    Error::NotAdjacent { from, to, .. } => Error::NotAdjacent { route: i, from, to },
                    Error::InvalidRoute { reason, .. } => Error::InvalidRoute { route: i, reason },
                    other => other,
                })?;
                if !(rec.demand >= 0.0 && rec.demand.is_finite()) {
                    return Err(Error::InvalidRoute {
                        route: i,
                        reason: format!("demand {}", rec.demand),
                    });
                }
                if !(0.0..=1.0).contains(&rec.initial_soc) {
                    return Err(Error::InvalidRoute {
                        route: i,
                        reason: format!("initial SOC {}", rec.initial_soc),
                    });
                }
                r.demand = rec.demand;
                r.initial_soc = rec.initial_soc;
                Ok(r)
            })
            .collect()
    }
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_routes(path: impl AsRef<Path>, g: &SegmentGraph) -> Result<Vec<Route>> {
    read_json::<RoutesFile>(path)?.into_routes(g)
}

pub fn save_routes(path: impl AsRef<Path>, routes: &[Route], g: &SegmentGraph) -> Result<()> {
    write_json(path, &RoutesFile::from_routes(routes, g))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteSummary {
    pub route: usize,
    pub final_soc: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    #[serde(default)]
    pub solver: String,
    pub installed: Vec<String>,
    pub cost: f64,
    pub objective: f64,
    pub status: String,
    /// `None` when no bound is known.
    pub gap: Option<f64>,
    pub per_route: Vec<RouteSummary>,
}

impl SolutionFile {
    pub fn from_result(solver: &str, res: &SolveResult, g: &SegmentGraph) -> Self {
        let gap = res.status.gap();
        Self {
            solver: solver.to_owned(),
            installed: res.installation.ids(g),
            cost: res.installation.total_cost,
            objective: res.objective,
            status: res.status.label().to_owned(),
            gap: gap.is_finite().then_some(gap),
            per_route: res
                .per_route
                .iter()
                .enumerate()
                .map(|(i, o)| RouteSummary {
                    route: i,
                    final_soc: o.final_soc,
                    feasible: o.feasible,
                })
                .collect(),
        }
    }

    pub fn installation(&self, g: &SegmentGraph) -> Result<Installation> {
        Installation::from_ids(g, &self.installed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;

    #[test]
    fn routes_round_trip() {
        let g = synthetic::directed_line(4, 0.3);
        let mut r = Route::from_indices(&g, vec![1, 2, 3]).unwrap();
        r.demand = 2.5;
        r.initial_soc = 0.7;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("routes.json");
        save_routes(&path, std::slice::from_ref(&r), &g).unwrap();
        assert_eq!(load_routes(&path, &g).unwrap(), vec![r]);
    }

    #[test]
    fn non_adjacent_route_names_index() {
        let g = synthetic::directed_line(4, 0.3);
        let file = RoutesFile {
            routes: vec![
                RouteRecord { segments: vec!["s0000".into(), "s0001".into()], demand: 1.0, initial_soc: 1.0 },
                RouteRecord { segments: vec!["s0000".into(), "s0002".into()], demand: 1.0, initial_soc: 1.0 },
            ],
        };
        assert!(matches!(file.into_routes(&g), Err(Error::NotAdjacent { route: 1, .. })));
    }
}

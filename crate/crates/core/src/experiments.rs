//! Sensitivity studies: final-SOC distributions, random initial SOC,
//! velocity perturbation and warm starts.
//!
//! Every study is driven by an [`ExperimentConfig`] that carries all seeds,
//! so a report can be regenerated from the JSON sidecar written next to it.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::par;
use crate::road_network::{load_network, SegmentGraph, Setting};
use crate::routing::{
    enumerate_all_routes, filter_routes, omega_l, random_od_routes, Route, RouteFilter,
    RoutePopulation, DEFAULT_ENUMERATION_CAP, DEFAULT_MIN_SEGMENTS,
};
use crate::soc_model::{Installation, RouteProfile, SocParams};
use crate::solvers::{
    branch_and_bound, candidate_segments, centrality_scores, heuristic_fill, random_ranking,
    Limits, Measure, WeightScheme,
};
use crate::synthetic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Distribution,
    RandomIsoc,
    Velocity,
    Warmstart,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Distribution => "distribution",
            ExperimentKind::RandomIsoc => "random-isoc",
            ExperimentKind::Velocity => "velocity",
            ExperimentKind::Warmstart => "warmstart",
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "distribution" => Ok(Self::Distribution),
            "random-isoc" | "random_isoc" => Ok(Self::RandomIsoc),
            "velocity" => Ok(Self::Velocity),
            "warmstart" => Ok(Self::Warmstart),
            other => Err(Error::UnknownExperiment(other.to_owned())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Num(v) => write!(f, "{v}"),
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

/// A table with named columns; rows all have one cell per column.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Series {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_owned(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[k]).collect())
    }

    /// Numeric column; text cells are skipped.
    pub fn numbers(&self, name: &str) -> Vec<f64> {
        self.column(name)
            .unwrap_or_default()
            .into_iter()
            .filter_map(|c| match c {
                Cell::Num(v) => Some(*v),
                Cell::Int(v) => Some(*v as f64),
                Cell::Text(_) => None,
            })
            .collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|c| c.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::io("<csv>", e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub config: Option<ExperimentConfig>,
    pub series: Vec<Series>,
    pub summary: BTreeMap<String, f64>,
}

impl ExperimentReport {
    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    /// Writes one CSV per series, a summary CSV and the config sidecar.
    /// Returns the paths written.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let stem = match &self.config {
            Some(c) => c.file_stem(),
            None => self.kind.name().to_owned(),
        };
        let mut written = Vec::new();
        for s in &self.series {
            let path = dir.join(format!("{stem}_{}.csv", s.name));
            std::fs::write(&path, s.to_csv()?).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
        let mut summary = Series::new("summary", &["key", "value"]);
        for (k, v) in &self.summary {
            summary.push(vec![k.as_str().into(), (*v).into()]);
        }
        let path = dir.join(format!("{stem}_summary.csv"));
        std::fs::write(&path, summary.to_csv()?).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        if let Some(c) = &self.config {
            let path = dir.join(format!("{stem}.config.json"));
            io::write_json(&path, c)?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Where the road network of an experiment comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum NetworkSpec {
    File {
        path: PathBuf,
        #[serde(default)]
        setting: Setting,
    },
    RandomRoad {
        intersections: usize,
        extra: usize,
        seed: u64,
    },
    UniformRoad {
        intersections: usize,
        extra: usize,
        seed: u64,
    },
    Grid {
        rows: usize,
        cols: usize,
        seed: u64,
    },
}

impl NetworkSpec {
    pub fn build(&self) -> Result<SegmentGraph> {
        Ok(match self {
            NetworkSpec::File { path, setting } => load_network(path, *setting)?,
            NetworkSpec::RandomRoad {
                intersections,
                extra,
                seed,
            } => synthetic::random_road_graph(*intersections, *extra, *seed),
            NetworkSpec::UniformRoad {
                intersections,
                extra,
                seed,
            } => synthetic::uniform_road_graph(*intersections, *extra, *seed),
            NetworkSpec::Grid { rows, cols, seed } => synthetic::random_grid(*rows, *cols, *seed),
        })
    }
}

/// Study-specific parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StudyParams {
    Distribution {
        n_routes: usize,
        beta: f64,
        /// Sample only routes that are infeasible with nothing installed.
        #[serde(default)]
        infeasible_only: bool,
    },
    RandomIsoc {
        l: f64,
        n_routes: usize,
        a: f64,
        beta: f64,
    },
    Velocity {
        n_routes: usize,
        eps_v: Vec<f64>,
        trials: usize,
        beta: f64,
    },
    Warmstart {
        ks: Vec<usize>,
        repeats: usize,
        beta: f64,
    },
}

impl StudyParams {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            StudyParams::Distribution { .. } => ExperimentKind::Distribution,
            StudyParams::RandomIsoc { .. } => ExperimentKind::RandomIsoc,
            StudyParams::Velocity { .. } => ExperimentKind::Velocity,
            StudyParams::Warmstart { .. } => ExperimentKind::Warmstart,
        }
    }
}

/// Everything needed to regenerate a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub network: NetworkSpec,
    /// Multiplies every segment length (and length-based cost).
    #[serde(default = "unit")]
    pub length_scale: f64,
    /// Optional route file used as the route pool.
    #[serde(default)]
    pub routes: Option<PathBuf>,
    /// Pool size when routes are drawn between random O/D pairs.
    #[serde(default = "default_pool")]
    pub pool_size: usize,
    pub soc: SocParams,
    #[serde(default)]
    pub scheme: WeightScheme,
    #[serde(default)]
    pub seed: u64,
    /// Branch-and-bound node limit for the model solution; `None` solves exactly.
    #[serde(default)]
    pub node_limit: Option<usize>,
    pub study: StudyParams,
}

fn unit() -> f64 {
    1.0
}

fn default_pool() -> usize {
    2000
}

impl ExperimentConfig {
    /// A small self-contained configuration for each study.
    pub fn default_for(kind: ExperimentKind) -> Self {
        let study = match kind {
            ExperimentKind::Distribution => StudyParams::Distribution {
                n_routes: 30,
                beta: 0.1,
                infeasible_only: false,
            },
            ExperimentKind::RandomIsoc => StudyParams::RandomIsoc {
                l: 0.0,
                n_routes: 20,
                a: 0.4,
                beta: 0.2,
            },
            ExperimentKind::Velocity => StudyParams::Velocity {
                n_routes: 30,
                eps_v: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
                trials: 50,
                beta: 0.1,
            },
            ExperimentKind::Warmstart => StudyParams::Warmstart {
                ks: vec![10, 20, 40],
                repeats: 30,
                beta: 0.1,
            },
        };
        Self {
            network: NetworkSpec::RandomRoad {
                intersections: 30,
                extra: 30,
                seed: 0,
            },
            length_scale: 10.0,
            routes: None,
            pool_size: default_pool(),
            soc: SocParams {
                alpha: 0.8,
                ..SocParams::default()
            },
            scheme: WeightScheme::Binary,
            seed: 0,
            node_limit: Some(200),
            study,
        }
    }

    pub fn kind(&self) -> ExperimentKind {
        self.study.kind()
    }

    /// File name stem: kind, seed and the main parameters.
    pub fn file_stem(&self) -> String {
        let params = match &self.study {
            StudyParams::Distribution { n_routes, beta, .. } => format!("n{n_routes}_b{beta}"),
            StudyParams::RandomIsoc {
                l, n_routes, a, beta,
            } => format!("l{l}_n{n_routes}_a{a}_b{beta}"),
            StudyParams::Velocity {
                n_routes, trials, beta, ..
            } => format!("n{n_routes}_t{trials}_b{beta}"),
            StudyParams::Warmstart { repeats, beta, .. } => format!("r{repeats}_b{beta}"),
        };
        format!("{}_seed{}_{}", self.kind().name(), self.seed, params)
    }

    pub fn network(&self) -> Result<SegmentGraph> {
        let g = self.network.build()?;
        if self.length_scale == 1.0 {
            Ok(g)
        } else {
            g.scale_lengths(self.length_scale)
        }
    }

    /// Route pool: the route file if given, otherwise every fastest route
    /// on small graphs and random O/D routes on large ones.
    pub fn pool(&self, g: &SegmentGraph) -> Result<RoutePopulation> {
        if let Some(path) = &self.routes {
            return Ok(RoutePopulation::new(io::load_routes(path, g)?));
        }
        if g.len() <= DEFAULT_ENUMERATION_CAP {
            enumerate_all_routes(g, DEFAULT_MIN_SEGMENTS, DEFAULT_ENUMERATION_CAP)
        } else {
            Ok(RoutePopulation::new(random_od_routes(
                g,
                self.pool_size,
                self.seed,
                DEFAULT_MIN_SEGMENTS,
            )?))
        }
    }

    fn limits(&self) -> Limits {
        Limits {
            nodes: self.node_limit,
            time: None,
        }
    }

    pub fn run(&self) -> Result<ExperimentReport> {
        self.soc.validate()?;
        let g = self.network()?;
        let pool = self.pool(&g)?;
        let limits = self.limits();
        let mut report = match &self.study {
            StudyParams::Distribution {
                n_routes,
                beta,
                infeasible_only,
            } => {
                let filters = if *infeasible_only {
                    vec![RouteFilter::InfeasibleWithoutInstall(self.soc.clone())]
                } else {
                    Vec::new()
                };
                let routes = sample_up_to(&pool, *n_routes, self.seed, &filters, &g)?;
                let budget = g.budget_from_fraction(*beta)?;
                let labeled =
                    comparison_installations(&routes, &g, &self.soc, budget, self.scheme, self.seed, limits)?;
                let mut rep = soc_distribution(&routes, &labeled, &self.soc, &g)?;
                rep.summary.insert("budget".into(), budget);
                rep
            }
            StudyParams::RandomIsoc {
                l,
                n_routes,
                a,
                beta,
            } => {
                let budget = g.budget_from_fraction(*beta)?;
                random_isoc_study(
                    &pool, *l, *n_routes, *a, self.seed, budget, &self.soc, &g, self.scheme, limits,
                )?
            }
            StudyParams::Velocity {
                n_routes,
                eps_v,
                trials,
                beta,
            } => {
                let threshold = pool.tau + 2.0 * pool.sigma;
                let filters = [
                    RouteFilter::MinDistance(threshold),
                    RouteFilter::InfeasibleWithoutInstall(self.soc.clone()),
                ];
                let routes = sample_up_to(&pool, *n_routes, self.seed, &filters, &g)?;
                let budget = g.budget_from_fraction(*beta)?;
                let inst = branch_and_bound(&routes, &g, &self.soc, budget, self.scheme, None, limits)?
                    .installation;
                velocity_study(&routes, eps_v, *trials, self.seed, &inst, &self.soc, &g)?
            }
            StudyParams::Warmstart { ks, repeats, beta } => {
                let budget = g.budget_from_fraction(*beta)?;
                warmstart_study(
                    &pool, ks, *repeats, self.seed, &self.soc, &g, budget, self.scheme, limits,
                )?
            }
        };
        report.config = Some(self.clone());
        Ok(report)
    }
}

/// Up to `n` distinct routes passing `filters`, drawn by `seed`.
fn sample_up_to(
    pool: &RoutePopulation,
    n: usize,
    seed: u64,
    filters: &[RouteFilter],
    g: &SegmentGraph,
) -> Result<Vec<Route>> {
    let keep = filter_routes(pool, filters, g)?;
    if keep.is_empty() {
        return Err(Error::NotEnoughRoutes {
            available: 0,
            requested: n,
        });
    }
    let take = n.min(keep.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = sample(&mut rng, keep.len(), take).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|k| pool.routes[keep[k]].clone()).collect())
}

/// The installations compared in distribution plots: none, the model, the
/// three centrality rankings and a random ranking, all at one budget.
/// Heuristic rankings are restricted to segments the routes use.
pub fn comparison_installations(
    routes: &[Route],
    g: &SegmentGraph,
    p: &SocParams,
    budget: f64,
    scheme: WeightScheme,
    seed: u64,
    limits: Limits,
) -> Result<Vec<(String, Installation)>> {
    let cands = candidate_segments(routes);
    let mut out = vec![("none".to_owned(), Installation::empty())];
    let model = branch_and_bound(routes, g, p, budget, scheme, None, limits)?;
    out.push(("model".to_owned(), model.installation));
    for m in Measure::ALL {
        let c = centrality_scores(g, m)?;
        out.push((m.name().to_owned(), heuristic_fill(&c.ranking, g, budget, Some(&cands))));
    }
    out.push((
        "random".to_owned(),
        heuristic_fill(&random_ranking(g, seed), g, budget, Some(&cands)),
    ));
    Ok(out)
}

/// Grid used by the cumulative final-SOC curves.
pub fn soc_grid() -> Vec<f64> {
    (0..=100).map(|i| i as f64 / 100.0).collect()
}

fn final_socs(routes: &[Route], inst: &Installation, p: &SocParams, g: &SegmentGraph) -> Result<Vec<f64>> {
    let mask = inst.mask(g.len());
    let profiles = routes
        .iter()
        .map(|r| RouteProfile::new(r, p, g))
        .collect::<Result<Vec<_>>>()?;
    Ok(par::map(&profiles, |prof| {
        let t = prof.terminal(|s| mask[s]);
        if t.completed {
            t.final_soc
        } else {
            0.0
        }
    }))
}

/// For each labeled installation, the number of routes whose final SOC is at
/// most `x` for every `x` on [`soc_grid`]. Stalled routes count as SOC 0, so
/// the value at `x = alpha` is the infeasible-route count.
pub fn soc_distribution(
    routes: &[Route],
    installations: &[(String, Installation)],
    p: &SocParams,
    g: &SegmentGraph,
) -> Result<ExperimentReport> {
    if routes.is_empty() {
        return Err(Error::EmptyRoutes);
    }
    p.validate()?;
    let grid = soc_grid();
    let mut cols = vec!["soc"];
    cols.extend(installations.iter().map(|(l, _)| l.as_str()));
    let mut curves = Series::new("curves", &cols);
    let mut finals = Series::new("final_soc", &cols[1..].iter().copied().chain(["route"]).collect::<Vec<_>>());
    let mut summary = BTreeMap::new();
    let per_inst = installations
        .iter()
        .map(|(_, inst)| final_socs(routes, inst, p, g))
        .collect::<Result<Vec<_>>>()?;
    for &x in &grid {
        let mut row: Vec<Cell> = vec![x.into()];
        for socs in &per_inst {
            row.push(socs.iter().filter(|&&s| s <= x).count().into());
        }
        curves.push(row);
    }
    for r in 0..routes.len() {
        let mut row: Vec<Cell> = per_inst.iter().map(|s| s[r].into()).collect();
        row.push(r.into());
        finals.push(row);
    }
    for ((label, inst), socs) in installations.iter().zip(&per_inst) {
        let infeasible = socs.iter().filter(|&&s| s <= p.alpha).count();
        summary.insert(format!("infeasible.{label}"), infeasible as f64);
        summary.insert(format!("cost.{label}"), inst.total_cost);
        summary.insert(format!("mean_soc.{label}"), mean(socs));
    }
    summary.insert("routes".into(), routes.len() as f64);
    Ok(ExperimentReport {
        kind: ExperimentKind::Distribution,
        config: None,
        series: vec![curves, finals],
        summary,
    })
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Average final SOC over routes in Omega_l whose initial SOC is drawn
/// uniformly from `(a, 1)`: before installation, with the model's
/// installation and with the betweenness installation at the same budget.
#[allow(clippy::too_many_arguments)]
pub fn random_isoc_study(
    pop: &RoutePopulation,
    l: f64,
    n_routes: usize,
    a: f64,
    seed: u64,
    budget: f64,
    p: &SocParams,
    g: &SegmentGraph,
    scheme: WeightScheme,
    limits: Limits,
) -> Result<ExperimentReport> {
    if !(0.0..1.0).contains(&a) {
        return Err(Error::InvalidParams(format!("a = {a} outside [0, 1)")));
    }
    let omega = omega_l(pop, l);
    if omega.is_empty() {
        return Err(Error::EmptyOmega);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let take = n_routes.min(omega.len());
    let mut picked = sample(&mut rng, omega.len(), take).into_vec();
    picked.sort_unstable();
    let mut routes: Vec<Route> = picked.iter().map(|&k| pop.routes[omega[k]].clone()).collect();
    for r in &mut routes {
        // open interval (a, 1)
        let mut v = rng.gen_range(a..1.0);
        while v <= a {
            v = rng.gen_range(a..1.0);
        }
        r.initial_soc = v;
    }

    let model = branch_and_bound(&routes, g, p, budget, scheme, None, limits)?.installation;
    let cands = candidate_segments(&routes);
    let betw = heuristic_fill(
        &centrality_scores(g, Measure::Betweenness)?.ranking,
        g,
        budget,
        Some(&cands),
    );
    let before = final_socs(&routes, &Installation::empty(), p, g)?;
    let after_model = final_socs(&routes, &model, p, g)?;
    let after_betw = final_socs(&routes, &betw, p, g)?;

    let mut s = Series::new(
        "routes",
        &["route", "distance", "initial_soc", "final_none", "final_model", "final_betweenness"],
    );
    for (i, r) in routes.iter().enumerate() {
        s.push(vec![
            i.into(),
            r.distance.into(),
            r.initial_soc.into(),
            before[i].into(),
            after_model[i].into(),
            after_betw[i].into(),
        ]);
    }
    let mut summary = BTreeMap::new();
    summary.insert("omega_size".into(), omega.len() as f64);
    summary.insert("routes".into(), routes.len() as f64);
    summary.insert("budget".into(), budget);
    summary.insert("lambda.none".into(), mean(&before));
    summary.insert("lambda.model".into(), mean(&after_model));
    summary.insert("lambda.betweenness".into(), mean(&after_betw));
    summary.insert("cost.model".into(), model.total_cost);
    summary.insert("cost.betweenness".into(), betw.total_cost);
    Ok(ExperimentReport {
        kind: ExperimentKind::RandomIsoc,
        config: None,
        series: vec![s],
        summary,
    })
}

/// Type-7 quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Random stream for trial `trial` of grid point `point`.
fn trial_rng(seed: u64, point: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((point as u64) << 32) | trial as u64);
    rng
}

/// For each `eps` and trial, every segment speed is multiplied by `1 + u`
/// with `u` uniform on `(-eps, eps)` (nonpositive speeds are redrawn), and
/// the average final SOC of the routes under `inst` is recorded.
pub fn velocity_study(
    routes: &[Route],
    eps_v: &[f64],
    trials: usize,
    seed: u64,
    inst: &Installation,
    p: &SocParams,
    g: &SegmentGraph,
) -> Result<ExperimentReport> {
    if routes.is_empty() {
        return Err(Error::EmptyRoutes);
    }
    for &e in eps_v {
        if !(0.0..1.0).contains(&e.abs()) {
            return Err(Error::InvalidParams(format!("eps_v = {e} outside (-1, 1)")));
        }
    }
    let jobs: Vec<(usize, usize)> = (0..eps_v.len())
        .flat_map(|i| (0..trials).map(move |t| (i, t)))
        .collect();
    let results = par::map(&jobs, |&(i, t)| -> Result<f64> {
        let eps = eps_v[i].abs();
        let mut rng = trial_rng(seed, i, t);
        let speeds: Vec<f64> = g
            .segments()
            .iter()
            .map(|s| {
                if eps == 0.0 {
                    return s.speed;
                }
                loop {
                    let v = s.speed * (1.0 + rng.gen_range(-eps..eps));
                    if v > 0.0 {
                        return v;
                    }
                }
            })
            .collect();
        let gp = g.with_speeds(&speeds)?;
        Ok(mean(&final_socs(routes, inst, p, &gp)?))
    });
    let mut trials_s = Series::new("trials", &["eps_v", "trial", "avg_final_soc"]);
    let mut per_eps: Vec<Vec<f64>> = vec![Vec::new(); eps_v.len()];
    for (&(i, t), r) in jobs.iter().zip(results) {
        let v = r?;
        trials_s.push(vec![eps_v[i].into(), t.into(), v.into()]);
        per_eps[i].push(v);
    }
    let mut q = Series::new("quartiles", &["eps_v", "min", "q1", "median", "q3", "max", "spread"]);
    let mut summary = BTreeMap::new();
    for (i, vals) in per_eps.iter_mut().enumerate() {
        vals.sort_by(f64::total_cmp);
        let min = vals.first().copied().unwrap_or(f64::NAN);
        let max = vals.last().copied().unwrap_or(f64::NAN);
        q.push(vec![
            eps_v[i].into(),
            min.into(),
            quantile(vals, 0.25).into(),
            quantile(vals, 0.5).into(),
            quantile(vals, 0.75).into(),
            max.into(),
            (max - min).into(),
        ]);
    }
    let medians = q.numbers("median");
    summary.insert("routes".into(), routes.len() as f64);
    summary.insert("trials".into(), trials as f64);
    summary.insert("cost".into(), inst.total_cost);
    summary.insert("spearman_median_vs_eps".into(), spearman(&q.numbers("eps_v"), &medians));
    Ok(ExperimentReport {
        kind: ExperimentKind::Velocity,
        config: None,
        series: vec![trials_s, q],
        summary,
    })
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties; 0 when either
/// side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let (rx, ry) = (ranks(x), ranks(y));
    let (mx, my) = (mean(&rx), mean(&ry));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Outcome of comparing a warm-started search with a cold one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ratio {
    Value(f64),
    /// Cold objective is zero while the warm one is positive.
    Dominant,
}

impl Ratio {
    /// `obj_warm / obj_cold` with the zero cases guarded.
    pub fn of(warm: f64, cold: f64) -> Self {
        if cold == 0.0 {
            if warm == 0.0 {
                Ratio::Value(1.0)
            } else if warm > 0.0 {
                Ratio::Dominant
            } else {
                Ratio::Value(f64::NEG_INFINITY)
            }
        } else {
            Ratio::Value(warm / cold)
        }
    }

    pub fn at_least_one(self) -> bool {
        match self {
            Ratio::Value(v) => v >= 1.0,
            Ratio::Dominant => true,
        }
    }

    fn cell(self) -> Cell {
        match self {
            Ratio::Value(v) => Cell::Num(v),
            Ratio::Dominant => Cell::Text("dominant".into()),
        }
    }
}

/// For each route count `k` and repeat, samples `k` routes and runs branch
/// and bound under `limits` twice: seeded with the betweenness installation
/// and unseeded. Records `obj_warm / obj_cold`.
#[allow(clippy::too_many_arguments)]
pub fn warmstart_study(
    pop: &RoutePopulation,
    ks: &[usize],
    repeats: usize,
    seed: u64,
    p: &SocParams,
    g: &SegmentGraph,
    budget: f64,
    scheme: WeightScheme,
    limits: Limits,
) -> Result<ExperimentReport> {
    if pop.is_empty() {
        return Err(Error::EmptyRoutes);
    }
    let ranking = centrality_scores(g, Measure::Betweenness)?.ranking;
    let jobs: Vec<(usize, usize)> = (0..ks.len())
        .flat_map(|i| (0..repeats).map(move |r| (i, r)))
        .collect();
    let results = par::map(&jobs, |&(i, rep)| -> Result<(f64, f64)> {
        let mut rng = trial_rng(seed, i, rep);
        let k = ks[i].min(pop.len());
        let mut picked = sample(&mut rng, pop.len(), k).into_vec();
        picked.sort_unstable();
        let routes: Vec<Route> = picked.iter().map(|&j| pop.routes[j].clone()).collect();
        let cands = candidate_segments(&routes);
        let inc = heuristic_fill(&ranking, g, budget, Some(&cands));
        let warm = branch_and_bound(&routes, g, p, budget, scheme, Some(&inc), limits)?;
        let cold = branch_and_bound(&routes, g, p, budget, scheme, None, limits)?;
        Ok((warm.objective, cold.objective))
    });
    let mut s = Series::new("ratios", &["k", "repeat", "obj_warm", "obj_cold", "ratio"]);
    let mut by_k: Vec<Vec<f64>> = vec![Vec::new(); ks.len()];
    let mut dominant = 0usize;
    let mut below_one = 0usize;
    for (&(i, rep), r) in jobs.iter().zip(results) {
        let (w, c) = r?;
        let ratio = Ratio::of(w, c);
        match ratio {
            Ratio::Value(v) => by_k[i].push(v),
            Ratio::Dominant => dominant += 1,
        }
        if !ratio.at_least_one() {
            below_one += 1;
        }
        s.push(vec![ks[i].into(), rep.into(), w.into(), c.into(), ratio.cell()]);
    }
    let mut summary = BTreeMap::new();
    for (i, vals) in by_k.iter_mut().enumerate() {
        vals.sort_by(f64::total_cmp);
        if !vals.is_empty() {
            summary.insert(format!("median_ratio.k{}", ks[i]), quantile(vals, 0.5));
        }
    }
    summary.insert("dominant".into(), dominant as f64);
    summary.insert("below_one".into(), below_one as f64);
    summary.insert("budget".into(), budget);
    Ok(ExperimentReport {
        kind: ExperimentKind::Warmstart,
        config: None,
        series: vec![s],
        summary,
    })
}

//! `wcl`: build networks, sample routes, place charging lanes, export IPs
//! and run the sensitivity experiments.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use config::{resolve_budget, BatteryArgs, FileConfig, Mode, Solver};
use log::info;
use serde::Serialize;
use wcl_core::experiments::{ExperimentConfig, ExperimentKind};
use wcl_core::io::{load_routes, read_json, save_routes, write_json, SolutionFile};
use wcl_core::ip_builder::mps::write_mps;
use wcl_core::ip_builder::{build_fixed_budget_ip, build_min_budget_ip};
use wcl_core::road_network::{category_histogram, load_network};
use wcl_core::routing::{
    enumerate_all_routes, filter_routes, random_od_routes, sample_routes, RouteFilter, RoutePopulation,
    DEFAULT_ENUMERATION_CAP,
};
use wcl_core::solvers::{
    branch_and_bound, candidate_segments, centrality_scores, evaluate_installation, heuristic_fill, min_budget,
    random_ranking, Limits, Measure,
};
use wcl_core::{synthetic, Error, Installation, Route, SegmentGraph, Setting, SolveResult, SolveStatus, WeightScheme};

#[derive(Parser)]
#[command(name = "wcl", version, about = "Wireless charging lane placement on road-segment graphs")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load or generate a road network and write it as JSON
    BuildGraph(BuildGraphArgs),
    /// Sample routes from a network
    SampleRoutes(SampleArgs),
    /// Choose lanes at a fixed budget or find the minimum budget
    Solve(SolveArgs),
    /// Write the integer program as an MPS file
    Export(ExportArgs),
    /// Simulate routes under a given installation
    Evaluate(EvaluateArgs),
    /// Run one of the sensitivity studies
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct NetworkArgs {
    /// Network file (.json, or .csv with the same field names)
    #[arg(long)]
    network: Option<PathBuf>,
    /// Speed table for CSV networks without a speed column
    #[arg(long, default_value = "urban", value_parser = parse_setting)]
    setting: Setting,
}

#[derive(Args)]
struct BuildGraphArgs {
    #[command(flatten)]
    net: NetworkArgs,
    /// Generate instead of loading: random-road, uniform-road, grid, random-grid, cycle
    #[arg(long, conflicts_with = "network")]
    generate: Option<String>,
    #[arg(long, default_value_t = 30)]
    intersections: usize,
    #[arg(long, default_value_t = 30)]
    extra: usize,
    #[arg(long, default_value_t = 10)]
    rows: usize,
    #[arg(long, default_value_t = 10)]
    cols: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Multiply every length (and length-derived cost) by this factor
    #[arg(long)]
    length_scale: Option<f64>,
    /// Keep only segments of category <= this
    #[arg(long)]
    max_category: Option<u8>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    net: NetworkArgs,
    #[command(flatten)]
    battery: BatteryArgs,
    /// Routes to draw; all matching routes when omitted
    #[arg(long)]
    count: Option<usize>,
    #[arg(long, default_value_t = 2)]
    min_segments: usize,
    /// Keep routes at least this long (miles)
    #[arg(long)]
    min_distance: Option<f64>,
    /// Keep routes longer than tau + L * sigma
    #[arg(long)]
    omega: Option<f64>,
    /// Keep routes that are infeasible with no lanes
    #[arg(long)]
    infeasible_only: bool,
    /// Random O/D pairs drawn on networks too large to enumerate
    #[arg(long, default_value_t = 500)]
    pool: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ModelArgs {
    /// TOML or JSON file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    net: NetworkArgs,
    /// Routes file; every fastest route of the network when omitted
    #[arg(long)]
    routes: Option<PathBuf>,
    /// Fixed budget (default) or minimum budget
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Budget as a fraction of the total installation cost
    #[arg(long, conflicts_with = "budget")]
    beta: Option<f64>,
    /// Absolute budget
    #[arg(long)]
    budget: Option<f64>,
    /// Route scoring: binary, penalty or tolerance
    #[arg(long, value_parser = parse_scheme)]
    scheme: Option<WeightScheme>,
    #[command(flatten)]
    battery: BatteryArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Exact search, limited branch and bound, or a ranking heuristic (default: bb)
    #[arg(long, value_enum)]
    solver: Option<Solver>,
    /// Seed of the random ranking
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    node_limit: Option<usize>,
    #[arg(long)]
    time_limit_s: Option<f64>,
    /// Solution file whose installation seeds branch and bound
    #[arg(long)]
    warmstart: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Solution file to evaluate
    #[arg(long, conflicts_with = "install")]
    solution: Option<PathBuf>,
    /// Comma-separated segment ids
    #[arg(long, value_delimiter = ',')]
    install: Vec<String>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// distribution, random-isoc, velocity or warmstart
    kind: Option<String>,
    /// Experiment config (JSON or TOML); a written `.config.json` sidecar re-runs a report
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    node_limit: Option<usize>,
    /// Network file replacing the synthetic default
    #[arg(long)]
    network: Option<PathBuf>,
    #[arg(long)]
    routes: Option<PathBuf>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

fn parse_setting(s: &str) -> Result<Setting, String> {
    match s {
        "urban" => Ok(Setting::Urban),
        "rural" => Ok(Setting::Rural),
        _ => Err(format!("unknown setting `{s}` (urban, rural)")),
    }
}

fn parse_scheme(s: &str) -> Result<WeightScheme, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Failure that maps to exit code 2.
#[derive(Debug)]
struct ModelInfeasible(String);

impl std::fmt::Display for ModelInfeasible {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ModelInfeasible {}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let res = match cli.command {
        Command::BuildGraph(a) => build_graph(a),
        Command::SampleRoutes(a) => sample(a),
        Command::Solve(a) => solve(a),
        Command::Export(a) => export(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Experiment(a) => experiment(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let infeasible = e.downcast_ref::<ModelInfeasible>().is_some()
                || matches!(e.downcast_ref::<Error>(), Some(Error::InsufficientCharging { .. }));
            ExitCode::from(if infeasible { 2 } else { 1 })
        }
    }
}

fn load_graph(net: &NetworkArgs) -> Result<SegmentGraph> {
    let path = net.network.as_ref().ok_or_else(|| anyhow!("--network is required"))?;
    let g = load_network(path, net.setting).with_context(|| format!("loading {}", path.display()))?;
    info!("network {}: {} segments, {} edges", path.display(), g.len(), g.edge_count());
    Ok(g)
}

fn write_or_print<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    match out {
        Some(p) => write_json(p, value)?,
        None => print_stdout(&serde_json::to_string_pretty(value)?)?,
    }
    Ok(())
}

/// Prints a line, treating a closed pipe as success.
fn print_stdout(text: &str) -> Result<()> {
    use std::io::Write;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn build_graph(a: BuildGraphArgs) -> Result<()> {
    let mut g = match a.generate.as_deref() {
        None => load_graph(&a.net)?,
        Some("random-road") => synthetic::random_road_graph(a.intersections, a.extra, a.seed),
        Some("uniform-road") => synthetic::uniform_road_graph(a.intersections, a.extra, a.seed),
        Some("grid") => synthetic::grid(a.rows, a.cols, 0.25, 3),
        Some("random-grid") => synthetic::random_grid(a.rows, a.cols, a.seed),
        Some("cycle") => synthetic::directed_cycle(a.intersections, 0.25),
        Some(other) => bail!("unknown generator `{other}`"),
    };
    if let Some(c) = a.max_category {
        g = g.filter_categories(c)?;
    }
    if let Some(s) = a.length_scale {
        g = g.scale_lengths(s)?;
    }
    eprintln!(
        "{} segments, {} edges, total length {:.3} mi, total cost {:.3}",
        g.len(),
        g.edge_count(),
        g.total_length(),
        g.total_cost()
    );
    for (cat, n) in category_histogram(&g) {
        eprintln!("  category {cat}: {n}");
    }
    write_or_print(a.out.as_deref(), &g.to_network_file())
}

/// Every fastest route on small networks, random O/D routes on large ones.
fn route_pool(g: &SegmentGraph, min_segments: usize, pool: usize, seed: u64) -> Result<RoutePopulation> {
    if g.len() <= DEFAULT_ENUMERATION_CAP {
        Ok(enumerate_all_routes(g, min_segments, DEFAULT_ENUMERATION_CAP)?)
    } else {
        Ok(RoutePopulation::new(random_od_routes(g, pool, seed, min_segments)?))
    }
}

fn sample(a: SampleArgs) -> Result<()> {
    let g = load_graph(&a.net)?;
    let pop = route_pool(&g, a.min_segments, a.pool, a.seed)?;
    let mut filters = Vec::new();
    if let Some(d) = a.min_distance {
        filters.push(RouteFilter::MinDistance(d));
    }
    if let Some(l) = a.omega {
        filters.push(RouteFilter::Omega(l));
    }
    if a.infeasible_only {
        filters.push(RouteFilter::InfeasibleWithoutInstall(a.battery.apply(None)?));
    }
    let routes: Vec<Route> = match a.count {
        Some(n) => sample_routes(&pop, n, a.seed, &filters, &g)?,
        None => filter_routes(&pop, &filters, &g)?
            .into_iter()
            .map(|k| pop.routes[k].clone())
            .collect(),
    };
    eprintln!(
        "{} of {} routes (tau {:.3} mi, sigma {:.3} mi)",
        routes.len(),
        pop.len(),
        pop.tau,
        pop.sigma
    );
    match &a.out {
        Some(p) => save_routes(p, &routes, &g)?,
        None => print_stdout(&serde_json::to_string_pretty(&wcl_core::io::RoutesFile::from_routes(
            &routes, &g,
        ))?)?,
    }
    Ok(())
}

/// Flags merged over the optional config file.
struct Model {
    g: SegmentGraph,
    routes: Vec<Route>,
    p: wcl_core::SocParams,
    mode: Mode,
    scheme: WeightScheme,
    beta: Option<f64>,
    budget: Option<f64>,
    out: Option<PathBuf>,
}

impl Model {
    fn budget(&self) -> Result<f64> {
        resolve_budget(self.beta, self.budget, &self.g)
    }
}

fn load_model(a: &ModelArgs) -> Result<(Model, FileConfig)> {
    let mut file = match &a.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let net = NetworkArgs {
        network: a.net.network.clone().or_else(|| file.network.take()),
        setting: a.net.setting,
    };
    let g = load_graph(&net)?;
    let routes = match a.routes.clone().or_else(|| file.routes.take()) {
        Some(p) => load_routes(&p, &g).with_context(|| format!("loading {}", p.display()))?,
        None => {
            info!("no routes file, using every fastest route");
            enumerate_all_routes(&g, 1, DEFAULT_ENUMERATION_CAP)?.routes
        }
    };
    let (beta, budget) = if a.beta.is_some() || a.budget.is_some() {
        (a.beta, a.budget)
    } else {
        (file.beta, file.budget)
    };
    let model = Model {
        p: a.battery.apply(file.battery.take())?,
        mode: a.mode.or(file.mode).unwrap_or(Mode::FixedBudget),
        scheme: a.scheme.or(file.scheme).unwrap_or_default(),
        out: a.out.clone().or_else(|| file.out.take()),
        g,
        routes,
        beta,
        budget,
    };
    Ok((model, file))
}

fn ranking_for(solver: Solver, g: &SegmentGraph, seed: u64) -> Result<Vec<usize>> {
    let measure = match solver {
        Solver::Betweenness => Measure::Betweenness,
        Solver::Closeness => Measure::Closeness,
        Solver::Eigenvector => Measure::Eigenvector,
        Solver::Random => return Ok(random_ranking(g, seed)),
        Solver::Exact | Solver::Bb => unreachable!("not a ranking solver"),
    };
    Ok(centrality_scores(g, measure)?.ranking)
}

fn heuristic_result(m: &Model, inst: Installation) -> Result<SolveResult> {
    let ev = evaluate_installation(&inst, &m.routes, &m.p, &m.g, m.scheme)?;
    Ok(SolveResult {
        installation: inst,
        objective: ev.objective,
        per_route: ev.outcomes,
        status: SolveStatus::Feasible { gap: f64::INFINITY },
        bound: f64::INFINITY,
        nodes: 0,
    })
}

fn solve(a: SolveArgs) -> Result<()> {
    let (m, file) = load_model(&a.model)?;
    let solver = a.solver.or(file.solver).unwrap_or(Solver::Bb);
    let seed = a.seed.or(file.seed).unwrap_or(0);
    let limits = Limits {
        nodes: a.node_limit.or(file.node_limit),
        time: a.time_limit_s.or(file.time_limit_s).map(Duration::from_secs_f64),
    };
    let warm = match a.warmstart.clone().or(file.warmstart) {
        Some(p) => Some(read_json::<SolutionFile>(&p)?.installation(&m.g)?),
        None => None,
    };
    let cands = candidate_segments(&m.routes);
    let res = match (m.mode, solver) {
        (Mode::FixedBudget, Solver::Exact | Solver::Bb) => {
            let lim = if solver == Solver::Exact { Limits::unlimited() } else { limits };
            branch_and_bound(&m.routes, &m.g, &m.p, m.budget()?, m.scheme, warm.as_ref(), lim)?
        }
        (Mode::FixedBudget, s) => {
            let rank = ranking_for(s, &m.g, seed)?;
            heuristic_result(&m, heuristic_fill(&rank, &m.g, m.budget()?, Some(&cands)))?
        }
        (Mode::MinBudget, Solver::Exact | Solver::Bb) => {
            let lim = if solver == Solver::Exact { Limits::unlimited() } else { limits };
            min_budget(&m.routes, &m.g, &m.p, lim)?
        }
        (Mode::MinBudget, s) => {
            let rank = ranking_for(s, &m.g, seed)?;
            let mut res = prefix_until_feasible(&m, &rank, &cands)?;
            res.objective = res.installation.total_cost;
            res
        }
    };
    if res.status == SolveStatus::Infeasible {
        return Err(ModelInfeasible("no installation satisfies the model".into()).into());
    }
    let sol = SolutionFile::from_result(solver.name(), &res, &m.g);
    eprintln!(
        "{} ({}): {} lanes, cost {:.4}, objective {:.4}, {} of {} routes infeasible, status {}{}",
        solver.name(),
        match m.mode {
            Mode::FixedBudget => "fixed budget",
            Mode::MinBudget => "min budget",
        },
        sol.installed.len(),
        sol.cost,
        sol.objective,
        res.infeasible_count(),
        m.routes.len(),
        sol.status,
        sol.gap.map(|g| format!(", gap {:.2}%", g * 100.0)).unwrap_or_default()
    );
    write_or_print(m.out.as_deref(), &sol)
}

/// Shortest prefix of the ranking (over route segments) leaving no
/// infeasible route.
fn prefix_until_feasible(m: &Model, rank: &[usize], cands: &[usize]) -> Result<SolveResult> {
    let order: Vec<usize> = rank.iter().copied().filter(|s| cands.binary_search(s).is_ok()).collect();
    let mut chosen = Vec::new();
    for k in 0..=order.len() {
        let res = heuristic_result(m, Installation::from_indices(&m.g, chosen.iter().copied()))?;
        if res.infeasible_count() == 0 {
            return Ok(res);
        }
        if k < order.len() {
            chosen.push(order[k]);
        }
    }
    Err(ModelInfeasible("routes stay infeasible with every ranked segment charged".into()).into())
}

fn export(a: ExportArgs) -> Result<()> {
    let (m, _) = load_model(&a.model)?;
    let out = m.out.clone().ok_or_else(|| anyhow!("--out is required"))?;
    let ip = match m.mode {
        Mode::FixedBudget => build_fixed_budget_ip(&m.routes, &m.g, &m.p, m.budget()?, m.scheme)?,
        Mode::MinBudget => build_min_budget_ip(&m.routes, &m.g, &m.p)?,
    };
    let file = std::fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?;
    write_mps(&ip, std::io::BufWriter::new(file))?;
    let summary = ip.summary();
    let side = out.with_extension("summary.json");
    write_json(&side, &summary)?;
    eprintln!(
        "{}: {} variables, {} constraints, {} routes",
        out.display(),
        summary.vars,
        summary.cons,
        summary.routes
    );
    Ok(())
}

#[derive(Serialize)]
struct EvaluationFile {
    installed: Vec<String>,
    cost: f64,
    objective: f64,
    infeasible: usize,
    routes: Vec<wcl_core::RouteOutcome>,
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let (m, _) = load_model(&a.model)?;
    let inst = match &a.solution {
        Some(p) => read_json::<SolutionFile>(p)?.installation(&m.g)?,
        None => Installation::from_ids(&m.g, &a.install)?,
    };
    let ev = evaluate_installation(&inst, &m.routes, &m.p, &m.g, m.scheme)?;
    eprintln!(
        "{} lanes, cost {:.4}, objective {:.4}, {} of {} routes infeasible",
        inst.len(),
        inst.total_cost,
        ev.objective,
        ev.infeasible_count,
        m.routes.len()
    );
    let file = EvaluationFile {
        installed: inst.ids(&m.g),
        cost: inst.total_cost,
        objective: ev.objective,
        infeasible: ev.infeasible_count,
        routes: ev.outcomes,
    };
    write_or_print(m.out.as_deref(), &file)
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let kind: Option<ExperimentKind> = a.kind.as_deref().map(str::parse).transpose()?;
    let mut cfg = match (&a.config, kind) {
        (Some(p), k) => {
            let is_toml = p.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
            let c: ExperimentConfig = if is_toml {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
            } else {
                read_json(p)?
            };
            if let Some(k) = k {
                if k != c.kind() {
                    bail!("config describes `{}`, not `{}`", c.kind().name(), k.name());
                }
            }
            c
        }
        (None, Some(k)) => ExperimentConfig::default_for(k),
        (None, None) => bail!("give an experiment kind or --config"),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(n) = a.node_limit {
        cfg.node_limit = Some(n);
    }
    if let Some(p) = a.network {
        cfg.network = wcl_core::experiments::NetworkSpec::File {
            path: p,
            setting: Setting::Urban,
        };
        cfg.length_scale = 1.0;
    }
    if let Some(p) = a.routes {
        cfg.routes = Some(p);
    }
    let report = cfg.run()?;
    for (k, v) in &report.summary {
        eprintln!("  {k} = {v}");
    }
    for p in report.write(&a.out)? {
        print_stdout(&p.display().to_string())?;
    }
    Ok(())
}

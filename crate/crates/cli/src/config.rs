//! Run configuration: an optional TOML/JSON file merged under command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use wcl_core::{SegmentGraph, SocFunction, SocParams, WeightScheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    FixedBudget,
    MinBudget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    /// Branch and bound without limits.
    Exact,
    /// Branch and bound under --node-limit / --time-limit-s.
    Bb,
    Betweenness,
    Closeness,
    Eigenvector,
    Random,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::Exact => "exact",
            Solver::Bb => "bb",
            Solver::Betweenness => "betweenness",
            Solver::Closeness => "closeness",
            Solver::Eigenvector => "eigenvector",
            Solver::Random => "random",
        }
    }
}

/// Everything a config file may set. All keys are optional.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub network: Option<PathBuf>,
    pub routes: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub mode: Option<Mode>,
    pub beta: Option<f64>,
    pub budget: Option<f64>,
    pub scheme: Option<WeightScheme>,
    pub solver: Option<Solver>,
    pub seed: Option<u64>,
    pub node_limit: Option<usize>,
    pub time_limit_s: Option<f64>,
    pub warmstart: Option<PathBuf>,
    pub battery: Option<SocParams>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        let cfg = if is_toml {
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        } else {
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        };
        Ok(cfg)
    }
}

/// Battery flags shared by every subcommand that simulates routes.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct BatteryArgs {
    /// Feasibility threshold on the final SOC.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Number of discrete SOC levels.
    #[arg(long)]
    pub layers: Option<usize>,
    /// Half-width of the tolerance band around alpha.
    #[arg(long)]
    pub eps_tol: Option<f64>,
    /// SOC update rule.
    #[arg(long, value_parser = ["realistic", "simplistic"])]
    pub soc_function: Option<String>,
    /// Battery capacity, kWh.
    #[arg(long)]
    pub e_cap: Option<f64>,
    /// Driving consumption, kW.
    #[arg(long)]
    pub p1: Option<f64>,
    /// Lane power, kW.
    #[arg(long)]
    pub p2: Option<f64>,
    /// Charging efficiency.
    #[arg(long)]
    pub eta: Option<f64>,
}

impl BatteryArgs {
    pub fn apply(&self, base: Option<SocParams>) -> Result<SocParams> {
        let mut p = base.unwrap_or_default();
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { p.$f = v; })* };
        }
        set!(alpha, eps_tol, e_cap, p1, p2, eta);
        if let Some(n) = self.layers {
            p.n_layers = n;
        }
        if let Some(f) = &self.soc_function {
            p.soc_function = if f == "simplistic" {
                SocFunction::Simplistic
            } else {
                SocFunction::Realistic
            };
        }
        p.validate()?;
        Ok(p)
    }
}

/// Picks the absolute budget from exactly one of beta or B.
pub fn resolve_budget(beta: Option<f64>, budget: Option<f64>, g: &SegmentGraph) -> Result<f64> {
    match (beta, budget) {
        (Some(_), Some(_)) => bail!("give either --beta or --budget, not both"),
        (None, None) => bail!("fixed-budget mode needs --beta or --budget"),
        (Some(b), None) => Ok(g.budget_from_fraction(b)?),
        (None, Some(b)) => {
            if b.is_nan() || b < 0.0 {
                bail!("--budget {b} must be nonnegative");
            }
            Ok(b)
        }
    }
}

//! TOML run and sweep configurations.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use relperf_core::sweeps::{SweepAxis, SweepConfig, SweepReference};
use relperf_core::{Game, Market, Preference, RegimeThresholds, SolverOptions, WealthVector};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("{field}: {message}")]
    Field { field: String, message: String },
}

fn field(field: impl Into<String>, message: impl ToString) -> ConfigError {
    ConfigError::Field {
        field: field.into(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MarketSpec {
    Lognormal { theta: f64, horizon: f64, nodes: usize },
    Csv { path: PathBuf },
}

/// A numeric bound that may be written as `"inf"`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum Bound {
    Number(f64),
    Text(BoundText),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundText {
    Inf,
}

impl Bound {
    fn value(self) -> f64 {
        match self {
            Bound::Number(v) => v,
            Bound::Text(BoundText::Inf) => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentEntry {
    pub family: String,
    pub r: Option<f64>,
    pub eps: Option<f64>,
    pub r_mean: Option<f64>,
    pub delta: Option<f64>,
    pub lambda: f64,
    pub x0: f64,
    pub rra_lo: Option<f64>,
    pub rra_hi: Option<Bound>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeSection {
    pub rra_spread: Option<f64>,
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub report: Option<PathBuf>,
    pub wealth: Option<PathBuf>,
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    pub market: MarketSpec,
    pub agents: Vec<AgentEntry>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub regime: RegimeSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub axis: SweepAxis,
    pub reference: SweepReference,
    pub grid: Vec<f64>,
    pub output: Option<PathBuf>,
    pub market: MarketSpec,
    pub agents: Vec<AgentEntry>,
    #[serde(default)]
    pub solver: SolverSection,
}

/// Command-line values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub theta: Option<f64>,
    pub horizon: Option<f64>,
    pub nodes: Option<usize>,
}

/// A validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub market: Market,
    pub game: Game,
    pub x0: WealthVector,
    pub solver: SolverOptions,
    pub thresholds: RegimeThresholds,
    pub report: Option<PathBuf>,
    pub wealth: Option<PathBuf>,
    pub trace: Option<PathBuf>,
}

fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    toml::from_str(&text).map_err(|source| ConfigError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn build_market(spec: &MarketSpec, base: &Path, ov: &Overrides) -> Result<Market, ConfigError> {
    match spec {
        MarketSpec::Lognormal { theta, horizon, nodes } => Market::lognormal(
            ov.theta.unwrap_or(*theta),
            ov.horizon.unwrap_or(*horizon),
            ov.nodes.unwrap_or(*nodes),
        )
        .map_err(|e| field("market", e)),
        MarketSpec::Csv { path } => {
            let full = resolve(base, path);
            let file = fs::File::open(&full).map_err(|source| ConfigError::Io { path: full.clone(), source })?;
            Market::read_csv(file).map_err(|e| field("market.path", e))
        }
    }
}

fn require(v: Option<f64>, name: &str, i: usize, family: &str) -> Result<f64, ConfigError> {
    v.ok_or_else(|| field(format!("agents[{i}].{name}"), format!("required for family {family}")))
}

fn build_preference(i: usize, a: &AgentEntry) -> Result<Preference, ConfigError> {
    let at = |name: &str| format!("agents[{i}].{name}");
    let pref = match a.family.as_str() {
        "crra" => Preference::crra(require(a.r, "r", i, "crra")?),
        "sine" => Preference::sine_perturbed(require(a.r, "r", i, "sine")?, require(a.eps, "eps", i, "sine")?),
        "tanh" => Preference::tanh_blend(
            require(a.r_mean, "r_mean", i, "tanh")?,
            require(a.delta, "delta", i, "tanh")?,
        ),
        other => return Err(field(at("family"), format!("unknown family {other:?}; expected crra, sine or tanh"))),
    }
    .map_err(|e| field(at("family"), e))?;
    if a.rra_lo.is_some() || a.rra_hi.is_some() {
        pref.with_declared_bounds(a.rra_lo, a.rra_hi.map(Bound::value))
            .map_err(|e| field(at("rra_lo/rra_hi"), e))
    } else {
        Ok(pref)
    }
}

fn build_game(agents: &[AgentEntry]) -> Result<(Game, WealthVector), ConfigError> {
    let players = agents
        .iter()
        .enumerate()
        .map(|(i, a)| Ok((build_preference(i, a)?, a.lambda)))
        .collect::<Result<Vec<_>, ConfigError>>()?;
    let game = Game::new(&players).map_err(|e| field("agents", e))?;
    let x0 = WealthVector::new(agents.iter().map(|a| a.x0).collect()).map_err(|e| field("agents.x0", e))?;
    Ok((game, x0))
}

fn build_solver(s: &SolverSection, ov: &Overrides) -> Result<SolverOptions, ConfigError> {
    let mut opts = SolverOptions::default();
    if let Some(t) = ov.tol.or(s.tol) {
        if !(t.is_finite() && t > 0.0) {
            return Err(field("solver.tol", format!("must be positive, got {t}")));
        }
        opts.tol = t;
    }
    if let Some(m) = ov.max_iter.or(s.max_iter) {
        opts.max_iter = m;
    }
    Ok(opts)
}

impl RunConfig {
    pub fn load(path: &Path, ov: &Overrides) -> Result<Self, ConfigError> {
        let file: RunFile = read_toml(path)?;
        let base = base_dir(path);
        let market = build_market(&file.market, &base, ov)?;
        let (game, x0) = build_game(&file.agents)?;
        let mut thresholds = RegimeThresholds::default();
        if let Some(v) = file.regime.rra_spread {
            thresholds.rra_spread = v;
        }
        if let Some(v) = file.regime.lambda {
            thresholds.lambda = v;
        }
        Ok(RunConfig {
            market,
            game,
            x0,
            solver: build_solver(&file.solver, ov)?,
            thresholds,
            report: file.output.report.map(|p| resolve(&base, &p)),
            wealth: file.output.wealth.map(|p| resolve(&base, &p)),
            trace: file.output.trace.map(|p| resolve(&base, &p)),
        })
    }
}

/// A validated sweep together with its output path.
pub struct LoadedSweep {
    pub config: SweepConfig,
    pub output: Option<PathBuf>,
}

pub fn load_sweep(path: &Path, ov: &Overrides) -> Result<LoadedSweep, ConfigError> {
    let file: SweepFile = read_toml(path)?;
    let base = base_dir(path);
    let market = build_market(&file.market, &base, ov)?;
    let (game, x0) = build_game(&file.agents)?;
    let solver = build_solver(&file.solver, ov)?;
    let config = SweepConfig::new(game, market, x0, file.axis, file.grid, file.reference)
        .map_err(|e| field("grid/axis/reference", e))?
        .with_solver(solver);
    Ok(LoadedSweep {
        config,
        output: file.output.map(|p| resolve(&base, &p)),
    })
}

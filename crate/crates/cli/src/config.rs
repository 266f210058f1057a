//! Scenario files.
//!
//! A scenario is a JSON object:
//!
//! ```json
//! {
//!   "name": "figure1",
//!   "market": {
//!     "regimes": [{"r": 0.06, "b": 0.15, "sigma": 0.12}, {"r": 0.06, "b": -0.22, "sigma": 0.26}],
//!     "generator": [[-0.5, 0.5], [5.0, -5.0]],
//!     "initial_price": 100.0,
//!     "initial_regimes": [1, 2]
//!   },
//!   "claim": {"kind": "european_call", "strike": 100.0, "maturity": 1.0},
//!   "grid": {"dt": 0.01, "ds": 0.5, "s_min": 0.0, "s_max": 200.0},
//!   "sweep": {"initial_price": [60.0, 65.0]},
//!   "bound": 1.2,
//!   "output": "figure1.csv"
//! }
//! ```
//!
//! `sweep` holds exactly one of `initial_price`, `good_deal_bound` or
//! `generator_models` (a list of `{"name", "generator"}`). `bound` is a
//! number, or a list of numbers for a `generator_models` sweep; it is not
//! allowed when sweeping `good_deal_bound`.

use std::path::{Path, PathBuf};

use gooddeal_core::{Claim, Generator, Grid, MarketModel, Regime, RegimeParams};
use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub market: MarketConfig,
    pub claim: ClaimConfig,
    pub grid: GridConfig,
    pub sweep: Sweep,
    #[serde(default)]
    pub bound: Option<BoundConfig>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketConfig {
    pub regimes: Vec<RegimeConfig>,
    /// Ignored for `generator_models` sweeps, where each model brings its own.
    #[serde(default)]
    pub generator: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_price")]
    pub initial_price: f64,
    /// 1-based; defaults to every regime.
    #[serde(default)]
    pub initial_regimes: Option<Vec<usize>>,
}

fn default_price() -> f64 {
    100.0
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeConfig {
    pub r: f64,
    pub b: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClaimConfig {
    EuropeanCall { strike: f64, maturity: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dt: f64,
    pub ds: f64,
    #[serde(default)]
    pub s_min: f64,
    pub s_max: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Sweep {
    InitialPrice(Vec<f64>),
    GoodDealBound(Vec<f64>),
    GeneratorModels(Vec<ModelConfig>),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    pub generator: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum BoundConfig {
    Single(f64),
    List(Vec<f64>),
}

impl BoundConfig {
    fn values(&self) -> Vec<f64> {
        match self {
            BoundConfig::Single(b) => vec![*b],
            BoundConfig::List(v) => v.clone(),
        }
    }
}

/// A named market of the scenario. Plain sweeps have one, named after the scenario.
#[derive(Debug, Clone)]
pub struct NamedModel {
    pub name: String,
    pub model: MarketModel,
}

fn parse_error(origin: &str, e: serde_json::Error) -> CliError {
    CliError::Parse {
        origin: origin.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

fn config_error(e: gooddeal_core::Error) -> CliError {
    CliError::Config(e.to_string())
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Self::parse(text, "<input>")
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    fn parse(text: &str, origin: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| parse_error(origin, e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Structural checks plus `B >= B0` for every model and bound.
    pub fn validate(&self) -> Result<()> {
        let models = self.models()?;
        let d = self.market.regimes.len();

        let regimes = self.initial_regimes();
        if regimes.is_empty() {
            return Err(CliError::Config("initial_regimes is empty".into()));
        }
        if let Some(&bad) = regimes.iter().find(|&&i| i == 0 || i > d) {
            return Err(CliError::Config(format!(
                "initial regime {bad} outside 1..={d}"
            )));
        }

        let grid = self.grid()?;
        for &x in &self.initial_prices() {
            if !(x.is_finite() && x >= grid.s_min && x <= grid.s_max) {
                return Err(CliError::Config(format!(
                    "initial price {x} outside the grid [{}, {}]",
                    grid.s_min, grid.s_max
                )));
            }
        }

        let bounds = self.bounds()?;
        if bounds.is_empty() {
            return Err(CliError::Config("no good-deal bound given".into()));
        }
        for m in &models {
            let minimum = m.model.min_good_deal_bound();
            for &bound in &bounds {
                if !bound.is_finite() {
                    return Err(CliError::Config(format!(
                        "good-deal bound {bound} is not finite"
                    )));
                }
                if bound < minimum - gooddeal_core::solver::BOUND_SLACK {
                    return Err(CliError::InfeasibleBound {
                        context: format!("scenario {}, model {}", self.name, m.name),
                        bound,
                        minimum,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn regime_params(&self) -> Result<Vec<RegimeParams>> {
        self.market
            .regimes
            .iter()
            .map(|p| RegimeParams::new(p.r, p.b, p.sigma).map_err(config_error))
            .collect()
    }

    /// The markets to solve, in sweep order.
    pub fn models(&self) -> Result<Vec<NamedModel>> {
        let params = self.regime_params()?;
        let build = |name: &str, rows: &[Vec<f64>]| -> Result<NamedModel> {
            let generator = Generator::new(rows.to_vec())
                .map_err(|e| CliError::Config(format!("model {name}: {e}")))?;
            let model = MarketModel::new(
                params.clone(),
                generator,
                Regime::new(1).map_err(config_error)?,
                self.market.initial_price,
            )
            .map_err(|e| CliError::Config(format!("model {name}: {e}")))?;
            Ok(NamedModel {
                name: name.to_string(),
                model,
            })
        };
        match &self.sweep {
            Sweep::GeneratorModels(list) => {
                if list.is_empty() {
                    return Err(CliError::Config("generator_models sweep is empty".into()));
                }
                for (k, m) in list.iter().enumerate() {
                    if list[..k].iter().any(|o| o.name == m.name) {
                        return Err(CliError::Config(format!("duplicate model name {}", m.name)));
                    }
                }
                list.iter().map(|m| build(&m.name, &m.generator)).collect()
            }
            _ => {
                let rows = self
                    .market
                    .generator
                    .as_ref()
                    .ok_or_else(|| CliError::Config("market.generator is required".into()))?;
                Ok(vec![build(&self.name, rows)?])
            }
        }
    }

    pub fn claim(&self) -> Claim {
        match self.claim {
            ClaimConfig::EuropeanCall { strike, maturity } => {
                Claim::european_call(strike, maturity)
            }
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        let ClaimConfig::EuropeanCall { strike, maturity } = self.claim;
        if !(strike > 0.0 && strike.is_finite()) {
            return Err(CliError::Config(format!(
                "strike must be positive, got {strike}"
            )));
        }
        if !(maturity > 0.0 && maturity.is_finite()) {
            return Err(CliError::Config(format!(
                "maturity must be positive, got {maturity}"
            )));
        }
        let g = &self.grid;
        Grid::from_step_sizes(maturity, g.dt, g.s_min, g.s_max, g.ds).map_err(config_error)
    }

    /// Good-deal bounds to solve for.
    pub fn bounds(&self) -> Result<Vec<f64>> {
        match (&self.sweep, &self.bound) {
            (Sweep::GoodDealBound(_), Some(_)) => Err(CliError::Config(
                "`bound` must be omitted when sweeping good_deal_bound".into(),
            )),
            (Sweep::GoodDealBound(list), None) => Ok(list.clone()),
            (_, None) => Err(CliError::Config("`bound` is required".into())),
            (Sweep::InitialPrice(_), Some(BoundConfig::List(_))) => Err(CliError::Config(
                "`bound` must be a single number for an initial_price sweep".into(),
            )),
            (_, Some(b)) => Ok(b.values()),
        }
    }

    pub fn initial_prices(&self) -> Vec<f64> {
        match &self.sweep {
            Sweep::InitialPrice(list) => list.clone(),
            _ => vec![self.market.initial_price],
        }
    }

    pub fn initial_regimes(&self) -> Vec<usize> {
        self.market
            .initial_regimes
            .clone()
            .unwrap_or_else(|| (1..=self.market.regimes.len()).collect())
    }
}

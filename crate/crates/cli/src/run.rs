//! Sweep execution and the human-readable summary.

use std::fmt;

use gooddeal_core::{solve_bounds, Regime, SolveReport};
use rayon::prelude::*;

use crate::config::{ScenarioConfig, Sweep};
use crate::error::{CliError, Result};

/// One CSV line: the three prices for one sweep point and starting regime.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    /// Set for `generator_models` sweeps only.
    pub model: Option<String>,
    pub sweep_value: f64,
    pub regime: usize,
    pub lower: f64,
    pub mmm: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSummary {
    pub name: String,
    pub min_bound: f64,
    pub kernels: Vec<f64>,
    pub holding_times: Vec<f64>,
}

/// Policy-iteration counts over every solve of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IterationStats {
    pub solves: usize,
    pub time_steps: usize,
    pub total_iterations: usize,
    pub max_iterations: usize,
    pub max_residual: f64,
}

impl IterationStats {
    fn add(&mut self, report: &SolveReport) {
        self.solves += 1;
        self.time_steps += report.policy_iterations.len();
        self.total_iterations += report.total_iterations();
        self.max_iterations = self
            .max_iterations
            .max(report.policy_iterations.iter().copied().max().unwrap_or(0));
        self.max_residual = self.max_residual.max(report.max_policy_residual);
    }

    fn merge(&mut self, other: &IterationStats) {
        self.solves += other.solves;
        self.time_steps += other.time_steps;
        self.total_iterations += other.total_iterations;
        self.max_iterations = self.max_iterations.max(other.max_iterations);
        self.max_residual = self.max_residual.max(other.max_residual);
    }

    pub fn mean_iterations(&self) -> f64 {
        if self.time_steps == 0 {
            0.0
        } else {
            self.total_iterations as f64 / self.time_steps as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub scenario: String,
    pub sweep_axis: &'static str,
    pub models: Vec<ModelSummary>,
    pub iterations: Option<IterationStats>,
}

#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub rows: Vec<Row>,
    pub summary: Summary,
}

fn axis(sweep: &Sweep) -> &'static str {
    match sweep {
        Sweep::InitialPrice(_) => "initial_price",
        Sweep::GoodDealBound(_) => "good_deal_bound",
        Sweep::GeneratorModels(_) => "generator_models",
    }
}

/// B0, h(i) and holding times, without solving anything.
pub fn describe(cfg: &ScenarioConfig) -> Result<Summary> {
    let models = cfg
        .models()?
        .into_iter()
        .map(|m| {
            let d = m.model.dim();
            let regimes: Vec<Regime> = (0..d).map(Regime::from_index).collect();
            ModelSummary {
                min_bound: m.model.min_good_deal_bound(),
                kernels: regimes
                    .iter()
                    .map(|&i| m.model.diffusion_kernel(i))
                    .collect(),
                holding_times: regimes
                    .iter()
                    .map(|&i| m.model.generator().mean_holding_time(i))
                    .collect(),
                name: m.name,
            }
        })
        .collect();
    Ok(Summary {
        scenario: cfg.name.clone(),
        sweep_axis: axis(&cfg.sweep),
        models,
        iterations: None,
    })
}

/// Solves every (model, bound) pair of the scenario and reads the prices
/// off at the configured initial prices and regimes.
///
/// Solves run in parallel; rows come back ordered by model, sweep value and
/// regime.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    cfg.validate()?;
    let mut summary = describe(cfg)?;
    let models = cfg.models()?;
    let bounds = cfg.bounds()?;
    let grid = cfg.grid()?;
    let claim = cfg.claim();
    let prices = cfg.initial_prices();
    let regimes = cfg.initial_regimes();
    let by_model = matches!(cfg.sweep, Sweep::GeneratorModels(_));
    let by_price = matches!(cfg.sweep, Sweep::InitialPrice(_));

    let jobs: Vec<(usize, f64)> = (0..models.len())
        .flat_map(|m| bounds.iter().map(move |&b| (m, b)))
        .collect();

    let results: Vec<Result<(Vec<Row>, IterationStats)>> =
        jobs.par_iter()
            .map(|&(m, bound)| {
                let named = &models[m];
                let context = format!("scenario {}, model {}, B = {bound}", cfg.name, named.name);
                let surfaces = solve_bounds(&named.model, &claim, &grid, bound).map_err(
                    |source| match source {
                        gooddeal_core::Error::InfeasibleBound { bound, minimum } => {
                            CliError::InfeasibleBound {
                                context: context.clone(),
                                bound,
                                minimum,
                            }
                        }
                        source => CliError::Solver {
                            context: context.clone(),
                            source,
                        },
                    },
                )?;
                let mut stats = IterationStats::default();
                for report in surfaces.reports() {
                    stats.add(report);
                }
                let mut rows = Vec::with_capacity(prices.len() * regimes.len());
                for &x in &prices {
                    for &i in &regimes {
                        let regime = Regime::new(i).map_err(|e| CliError::Config(e.to_string()))?;
                        let p = surfaces.at(x, regime).map_err(|source| CliError::Solver {
                            context: context.clone(),
                            source,
                        })?;
                        rows.push(Row {
                            model: by_model.then(|| named.name.clone()),
                            sweep_value: if by_price { x } else { bound },
                            regime: i,
                            lower: p.lower,
                            mmm: p.mmm,
                            upper: p.upper,
                        });
                    }
                }
                Ok((rows, stats))
            })
            .collect();

    let mut rows = Vec::new();
    let mut stats = IterationStats::default();
    for r in results {
        let (mut part, s) = r?;
        rows.append(&mut part);
        stats.merge(&s);
    }

    let model_rank = |row: &Row| {
        row.model
            .as_ref()
            .and_then(|name| models.iter().position(|m| &m.name == name))
            .unwrap_or(0)
    };
    rows.sort_by(|a, b| {
        model_rank(a)
            .cmp(&model_rank(b))
            .then(a.sweep_value.total_cmp(&b.sweep_value))
            .then(a.regime.cmp(&b.regime))
    });
    summary.iterations = Some(stats);
    Ok(ScenarioOutput { rows, summary })
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "scenario {} (sweep over {})",
            self.scenario, self.sweep_axis
        )?;
        for m in &self.models {
            writeln!(f, "  model {}", m.name)?;
            writeln!(f, "    B0 = {:.6}", m.min_bound)?;
            for (i, (h, t)) in m.kernels.iter().zip(&m.holding_times).enumerate() {
                writeln!(
                    f,
                    "    regime {}: h = {h:.6}, mean holding time = {t:.3}",
                    i + 1
                )?;
            }
        }
        if let Some(s) = &self.iterations {
            writeln!(
                f,
                "  policy iteration: {} solves, {} time steps, {:.2} iterations/step on average, at most {}, final residual <= {:.1e}",
                s.solves,
                s.time_steps,
                s.mean_iterations(),
                s.max_iterations,
                s.max_residual
            )?;
        }
        Ok(())
    }
}

//! Regime-switching market model.
//!
//! One risk-free asset and one risky asset whose coefficients `(r, b, sigma)`
//! are constant within each regime of a continuous-time Markov chain. The
//! chain is described by its generator; the market price of diffusion risk
//! is fixed by the traded asset, which in turn fixes the smallest admissible
//! good-deal bound.

use std::fmt;

use crate::error::{Error, Result};

/// Absolute tolerance on generator row sums.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// A regime label. Displayed and parsed 1-based; stored 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Regime(usize);

impl Regime {
    /// Builds a regime from its 1-based label.
    pub fn new(label: usize) -> Result<Self> {
        if label == 0 {
            return Err(Error::InvalidParameter(
                "regime labels start at 1".to_string(),
            ));
        }
        Ok(Self(label - 1))
    }

    pub fn from_index(index: usize) -> Self {
        Self(index)
    }

    /// 0-based storage index.
    pub fn index(self) -> usize {
        self.0
    }

    /// 1-based label.
    pub fn label(self) -> usize {
        self.0 + 1
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// Market coefficients in one regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeParams {
    /// Risk-free rate per year.
    pub r: f64,
    /// Mean rate of return of the risky asset per year.
    pub b: f64,
    /// Volatility per sqrt-year, strictly positive.
    pub sigma: f64,
}

impl RegimeParams {
    pub fn new(r: f64, b: f64, sigma: f64) -> Result<Self> {
        if !(r.is_finite() && b.is_finite() && sigma.is_finite()) {
            return Err(Error::InvalidParameter(
                "regime parameters must be finite".to_string(),
            ));
        }
        if sigma <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "volatility must be positive, got {sigma}"
            )));
        }
        Ok(Self { r, b, sigma })
    }

    /// Diffusion kernel `h = -(b - r) / sigma`.
    pub fn diffusion_kernel(&self) -> f64 {
        -(self.b - self.r) / self.sigma
    }
}

/// Validated generator of a continuous-time Markov chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    rates: Vec<Vec<f64>>,
}

impl Generator {
    /// Validates a square rate matrix.
    ///
    /// Off-diagonal rates must be nonnegative, every row must sum to zero
    /// within [`ROW_SUM_TOLERANCE`], and every diagonal entry must be
    /// strictly negative. Rows are never renormalized.
    pub fn new(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let dim = matrix.len();
        if dim < 2 {
            return Err(Error::Dimension(format!(
                "generator must have at least 2 regimes, got {dim}"
            )));
        }
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Dimension(format!(
                    "generator is not square: row {} has {} entries, expected {dim}",
                    i + 1,
                    row.len()
                )));
            }
        }
        for (i, row) in matrix.iter().enumerate() {
            let mut sum = 0.0;
            for (j, &g) in row.iter().enumerate() {
                if !g.is_finite() {
                    return Err(Error::GeneratorConstraint {
                        row: i + 1,
                        col: j + 1,
                        reason: "entry is not finite".to_string(),
                    });
                }
                if i != j && g < 0.0 {
                    return Err(Error::GeneratorConstraint {
                        row: i + 1,
                        col: j + 1,
                        reason: format!("off-diagonal rate {g} is negative"),
                    });
                }
                sum += g;
            }
            if row[i] >= 0.0 {
                return Err(Error::GeneratorConstraint {
                    row: i + 1,
                    col: i + 1,
                    reason: format!(
                        "diagonal entry g_{0}{0} = {1} must be strictly negative",
                        i + 1,
                        row[i]
                    ),
                });
            }
            if sum.abs() > ROW_SUM_TOLERANCE {
                return Err(Error::GeneratorConstraint {
                    row: i + 1,
                    col: i + 1,
                    reason: format!("row sums to {sum:e}, expected 0"),
                });
            }
        }
        Ok(Self { rates: matrix })
    }

    /// Two-regime generator from the exit rates `-g_11` and `-g_22`.
    pub fn two_state(exit_1: f64, exit_2: f64) -> Result<Self> {
        Self::new(vec![vec![-exit_1, exit_1], vec![exit_2, -exit_2]])
    }

    pub fn dim(&self) -> usize {
        self.rates.len()
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.rates[from][to]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rates[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rates
    }

    /// Total exit rate `-g_ii` of regime `i` (0-based).
    pub fn exit_rate(&self, i: usize) -> f64 {
        -self.rates[i][i]
    }

    /// Expected sojourn time in `regime`, in years.
    pub fn mean_holding_time(&self, regime: Regime) -> f64 {
        1.0 / self.exit_rate(regime.index())
    }
}

/// Free-function form of [`Generator::new`].
pub fn validate_generator(matrix: Vec<Vec<f64>>) -> Result<Generator> {
    Generator::new(matrix)
}

pub fn mean_holding_time(generator: &Generator, regime: Regime) -> f64 {
    generator.mean_holding_time(regime)
}

/// Regime-switching market with a single risky asset.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketModel {
    regimes: Vec<RegimeParams>,
    generator: Generator,
    initial_regime: Regime,
    initial_price: f64,
}

impl MarketModel {
    pub fn new(
        regimes: Vec<RegimeParams>,
        generator: Generator,
        initial_regime: Regime,
        initial_price: f64,
    ) -> Result<Self> {
        if regimes.len() != generator.dim() {
            return Err(Error::Dimension(format!(
                "{} regime parameter sets for a {}-state generator",
                regimes.len(),
                generator.dim()
            )));
        }
        if initial_regime.index() >= regimes.len() {
            return Err(Error::InvalidParameter(format!(
                "initial regime {initial_regime} outside 1..={}",
                regimes.len()
            )));
        }
        if !(initial_price > 0.0 && initial_price.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "initial price must be positive, got {initial_price}"
            )));
        }
        Ok(Self {
            regimes,
            generator,
            initial_regime,
            initial_price,
        })
    }

    pub fn regimes(&self) -> &[RegimeParams] {
        &self.regimes
    }

    pub fn regime(&self, regime: Regime) -> &RegimeParams {
        &self.regimes[regime.index()]
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn dim(&self) -> usize {
        self.regimes.len()
    }

    pub fn initial_regime(&self) -> Regime {
        self.initial_regime
    }

    pub fn initial_price(&self) -> f64 {
        self.initial_price
    }

    /// Same market with a different starting point.
    pub fn with_start(&self, initial_regime: Regime, initial_price: f64) -> Result<Self> {
        Self::new(
            self.regimes.clone(),
            self.generator.clone(),
            initial_regime,
            initial_price,
        )
    }

    /// Same coefficients driven by another generator.
    pub fn with_generator(&self, generator: Generator) -> Result<Self> {
        Self::new(
            self.regimes.clone(),
            generator,
            self.initial_regime,
            self.initial_price,
        )
    }

    pub fn diffusion_kernel(&self, regime: Regime) -> f64 {
        self.regime(regime).diffusion_kernel()
    }

    /// Smallest admissible good-deal bound, `max_i h(i)^2`.
    pub fn min_good_deal_bound(&self) -> f64 {
        self.regimes
            .iter()
            .map(|p| p.diffusion_kernel().powi(2))
            .fold(0.0, f64::max)
    }
}

pub fn diffusion_kernel(model: &MarketModel, regime: Regime) -> f64 {
    model.diffusion_kernel(regime)
}

pub fn min_good_deal_bound(model: &MarketModel) -> f64 {
    model.min_good_deal_bound()
}

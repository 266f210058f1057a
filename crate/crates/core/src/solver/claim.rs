use std::fmt;
use std::sync::Arc;

/// Terminal payoff of a European claim, together with the Dirichlet data the
/// PDE engine needs at the ends of the price range.
///
/// `tau` is the time to maturity and `rate` the risk-free rate of the regime
/// whose value is being computed.
pub trait Payoff: Send + Sync + fmt::Debug {
    fn value(&self, x: f64, regime: usize) -> f64;

    fn lower_boundary(&self, s_min: f64, tau: f64, rate: f64, regime: usize) -> f64;

    fn upper_boundary(&self, s_max: f64, tau: f64, rate: f64, regime: usize) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EuropeanCall {
    pub strike: f64,
}

impl Payoff for EuropeanCall {
    fn value(&self, x: f64, _regime: usize) -> f64 {
        (x - self.strike).max(0.0)
    }

    fn lower_boundary(&self, s_min: f64, tau: f64, rate: f64, _regime: usize) -> f64 {
        (s_min - self.strike * (-rate * tau).exp()).max(0.0)
    }

    fn upper_boundary(&self, s_max: f64, tau: f64, rate: f64, _regime: usize) -> f64 {
        s_max - self.strike * (-rate * tau).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EuropeanPut {
    pub strike: f64,
}

impl Payoff for EuropeanPut {
    fn value(&self, x: f64, _regime: usize) -> f64 {
        (self.strike - x).max(0.0)
    }

    fn lower_boundary(&self, s_min: f64, tau: f64, rate: f64, _regime: usize) -> f64 {
        self.strike * (-rate * tau).exp() - s_min
    }

    fn upper_boundary(&self, s_max: f64, tau: f64, rate: f64, _regime: usize) -> f64 {
        (self.strike * (-rate * tau).exp() - s_max).max(0.0)
    }
}

/// Pays the terminal stock price.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Underlying;

impl Payoff for Underlying {
    fn value(&self, x: f64, _regime: usize) -> f64 {
        x
    }

    fn lower_boundary(&self, s_min: f64, _tau: f64, _rate: f64, _regime: usize) -> f64 {
        s_min
    }

    fn upper_boundary(&self, s_max: f64, _tau: f64, _rate: f64, _regime: usize) -> f64 {
        s_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroPayoff;

impl Payoff for ZeroPayoff {
    fn value(&self, _x: f64, _regime: usize) -> f64 {
        0.0
    }

    fn lower_boundary(&self, _s_min: f64, _tau: f64, _rate: f64, _regime: usize) -> f64 {
        0.0
    }

    fn upper_boundary(&self, _s_max: f64, _tau: f64, _rate: f64, _regime: usize) -> f64 {
        0.0
    }
}

/// A European claim `Phi(S(T), alpha(T))` maturing at `maturity` years.
#[derive(Debug, Clone)]
pub struct Claim {
    pub payoff: Arc<dyn Payoff>,
    pub maturity: f64,
    pub label: String,
}

impl Claim {
    pub fn new(payoff: Arc<dyn Payoff>, maturity: f64, label: impl Into<String>) -> Self {
        Self {
            payoff,
            maturity,
            label: label.into(),
        }
    }

    pub fn european_call(strike: f64, maturity: f64) -> Self {
        Self::new(
            Arc::new(EuropeanCall { strike }),
            maturity,
            format!("european_call(K={strike}, T={maturity})"),
        )
    }

    pub fn european_put(strike: f64, maturity: f64) -> Self {
        Self::new(
            Arc::new(EuropeanPut { strike }),
            maturity,
            format!("european_put(K={strike}, T={maturity})"),
        )
    }

    pub fn underlying(maturity: f64) -> Self {
        Self::new(Arc::new(Underlying), maturity, "underlying")
    }

    pub fn zero(maturity: f64) -> Self {
        Self::new(Arc::new(ZeroPayoff), maturity, "zero")
    }

    pub fn payoff(&self, x: f64, regime: usize) -> f64 {
        self.payoff.value(x, regime)
    }
}

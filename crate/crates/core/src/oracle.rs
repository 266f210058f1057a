//! Reference prices that do not go through the PDE engine: the closed-form
//! Black-Scholes call and Monte-Carlo simulation of the regime-switching
//! market under a constant jump kernel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::market::{Generator, MarketModel, Regime};
use crate::solver::Claim;

/// Number of independently seeded shards a Monte-Carlo run is split into.
/// Fixed so results do not depend on the thread count.
const SHARDS: u64 = 64;

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive, got {v}")))
    }
}

/// Black-Scholes price of a European call.
pub fn black_scholes_call(s0: f64, strike: f64, r: f64, sigma: f64, maturity: f64) -> Result<f64> {
    check_positive("spot", s0)?;
    check_positive("strike", strike)?;
    check_positive("volatility", sigma)?;
    check_positive("maturity", maturity)?;
    let sd = sigma * maturity.sqrt();
    let d1 = ((s0 / strike).ln() + (r + 0.5 * sigma * sigma) * maturity) / sd;
    let d2 = d1 - sd;
    Ok(s0 * normal_cdf(d1) - strike * (-r * maturity).exp() * normal_cdf(d2))
}

/// Black-Scholes price of a European put.
pub fn black_scholes_put(s0: f64, strike: f64, r: f64, sigma: f64, maturity: f64) -> Result<f64> {
    check_positive("spot", s0)?;
    check_positive("strike", strike)?;
    check_positive("volatility", sigma)?;
    check_positive("maturity", maturity)?;
    let sd = sigma * maturity.sqrt();
    let d1 = ((s0 / strike).ln() + (r + 0.5 * sigma * sigma) * maturity) / sd;
    let d2 = d1 - sd;
    Ok(strike * (-r * maturity).exp() * normal_cdf(-d2) - s0 * normal_cdf(-d1))
}

/// One realization of the chain on `[0, horizon]`.
///
/// `times[n]` is the time the chain entered `regimes[n]`; `times[0] = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainPath {
    pub times: Vec<f64>,
    pub regimes: Vec<usize>,
    pub horizon: f64,
}

impl ChainPath {
    fn exit_time(&self, n: usize) -> f64 {
        self.times.get(n + 1).copied().unwrap_or(self.horizon)
    }

    /// Total time spent in `regime` (0-based).
    pub fn occupation(&self, regime: usize) -> f64 {
        (0..self.regimes.len())
            .filter(|&n| self.regimes[n] == regime)
            .map(|n| self.exit_time(n) - self.times[n])
            .sum()
    }

    /// Number of jumps `from -> to` (0-based).
    pub fn transitions(&self, from: usize, to: usize) -> usize {
        self.regimes
            .windows(2)
            .filter(|w| w[0] == from && w[1] == to)
            .count()
    }

    /// Lengths of the sojourns in `regime` that ended before the horizon.
    pub fn completed_sojourns(&self, regime: usize) -> Vec<f64> {
        (0..self.regimes.len().saturating_sub(1))
            .filter(|&n| self.regimes[n] == regime)
            .map(|n| self.times[n + 1] - self.times[n])
            .collect()
    }

    pub fn final_regime(&self) -> usize {
        *self.regimes.last().expect("path has an initial regime")
    }
}

fn uniform_open<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Sojourn length in a state with total exit rate `rate`; infinite if absorbing.
fn holding_time<R: Rng>(rng: &mut R, rate: f64) -> f64 {
    if rate > 0.0 {
        -uniform_open(rng).ln() / rate
    } else {
        f64::INFINITY
    }
}

fn next_state<R: Rng>(rng: &mut R, row: &[f64], from: usize, total: f64) -> usize {
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = from;
    for (j, &g) in row.iter().enumerate() {
        if j == from || g <= 0.0 {
            continue;
        }
        acc += g;
        last = j;
        if target < acc {
            return j;
        }
    }
    last
}

fn exit_rate(row: &[f64], from: usize) -> f64 {
    row.iter()
        .enumerate()
        .filter(|&(j, _)| j != from)
        .map(|(_, &g)| g)
        .sum()
}

fn simulate_rates<R: Rng>(
    rates: &[Vec<f64>],
    start: usize,
    horizon: f64,
    rng: &mut R,
) -> ChainPath {
    let mut times = vec![0.0];
    let mut regimes = vec![start];
    let mut t = 0.0;
    let mut state = start;
    loop {
        let total = exit_rate(&rates[state], state);
        t += holding_time(rng, total);
        if t >= horizon {
            break;
        }
        state = next_state(rng, &rates[state], state, total);
        times.push(t);
        regimes.push(state);
    }
    ChainPath {
        times,
        regimes,
        horizon,
    }
}

/// Exact simulation of the chain: exponential sojourns with rate `-g_ii`,
/// then a jump to `j` with probability `g_ij / (-g_ii)`.
pub fn simulate_chain(generator: &Generator, start: Regime, horizon: f64, seed: u64) -> ChainPath {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_chain_with(generator, start, horizon, &mut rng)
}

/// As [`simulate_chain`], drawing from a caller-supplied generator.
pub fn simulate_chain_with<R: Rng>(
    generator: &Generator,
    start: Regime,
    horizon: f64,
    rng: &mut R,
) -> ChainPath {
    simulate_rates(generator.rows(), start.index(), horizon, rng)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub paths: usize,
    /// Longest stock segment simulated in one draw, in years.
    pub time_step: f64,
    pub seed: u64,
    pub antithetic: bool,
}

impl McConfig {
    pub fn new(paths: usize, time_step: f64, seed: u64) -> Self {
        Self {
            paths,
            time_step,
            seed,
            antithetic: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub price: f64,
    pub std_error: f64,
    pub paths_used: usize,
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        Moments {
            n,
            mean: self.mean + delta * other.n as f64 / n as f64,
            m2: self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64,
        }
    }

    fn std_error(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
        }
    }
}

/// Monte-Carlo price of `claim` under the measure with constant jump kernel
/// `eta[i][j]` (diagonal ignored).
///
/// The chain runs with intensities `g_ij (1 + eta_ij)`. Between switches
/// the log-price advances exactly with drift `r(i) - sigma(i)^2 / 2`, in
/// pieces no longer than `cfg.time_step`, and the payoff is discounted with
/// the path's accumulated short rate.
pub fn mc_price_fixed_kernel(
    model: &MarketModel,
    claim: &Claim,
    eta: &[Vec<f64>],
    cfg: &McConfig,
) -> Result<McEstimate> {
    let d = model.dim();
    if eta.len() != d || eta.iter().any(|row| row.len() != d) {
        return Err(Error::Dimension(format!("kernel must be {d}x{d}")));
    }
    let maturity = claim.maturity;
    check_positive("maturity", maturity)?;
    if cfg.paths < 1 {
        return Err(Error::InvalidParameter(
            "at least one path is required".to_string(),
        ));
    }
    if !(cfg.time_step > 0.0 && cfg.time_step <= maturity * (1.0 + 1e-12)) {
        return Err(Error::InvalidParameter(format!(
            "time step {} must lie in (0, {maturity}]",
            cfg.time_step
        )));
    }

    let mut q_rates = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..d {
            if i == j {
                continue;
            }
            let e = eta[i][j];
            if !(e >= -1.0 && e.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "kernel eta_{}{} = {e} must be finite and >= -1",
                    i + 1,
                    j + 1
                )));
            }
            q_rates[i][j] = model.generator().rate(i, j) * (1.0 + e);
        }
        q_rates[i][i] = -exit_rate(&q_rates[i], i);
    }

    let shards = SHARDS.min(cfg.paths as u64).max(1);
    let base = cfg.paths as u64 / shards;
    let extra = cfg.paths as u64 % shards;
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let moments: Vec<Moments> = (0..shards)
        .into_par_iter()
        .map(|shard| {
            let count = base + u64::from(shard < extra);
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(shard);
            let mut acc = Moments::default();
            let mut draws = Vec::new();
            for _ in 0..count {
                let chain =
                    simulate_rates(&q_rates, model.initial_regime().index(), maturity, &mut rng);
                draws.clear();
                let sample = if cfg.antithetic {
                    let a = discounted_payoff(
                        model,
                        claim,
                        &chain,
                        cfg.time_step,
                        &normal,
                        &mut rng,
                        &mut draws,
                        false,
                    );
                    let b = discounted_payoff(
                        model,
                        claim,
                        &chain,
                        cfg.time_step,
                        &normal,
                        &mut rng,
                        &mut draws,
                        true,
                    );
                    0.5 * (a + b)
                } else {
                    discounted_payoff(
                        model,
                        claim,
                        &chain,
                        cfg.time_step,
                        &normal,
                        &mut rng,
                        &mut draws,
                        false,
                    )
                };
                acc.push(sample);
            }
            acc
        })
        .collect();
    let total = moments.into_iter().fold(Moments::default(), Moments::merge);
    Ok(McEstimate {
        price: total.mean,
        std_error: total.std_error(),
        paths_used: cfg.paths * if cfg.antithetic { 2 } else { 1 },
    })
}

/// Evaluates one stock path along `chain`. When `mirror` is set the normal
/// draws recorded in `draws` by the previous call are reused with flipped sign.
#[allow(clippy::too_many_arguments)]
fn discounted_payoff<R: Rng>(
    model: &MarketModel,
    claim: &Claim,
    chain: &ChainPath,
    max_step: f64,
    normal: &Normal,
    rng: &mut R,
    draws: &mut Vec<f64>,
    mirror: bool,
) -> f64 {
    let mut log_s = model.initial_price().ln();
    let mut discount = 0.0;
    let mut used = 0;
    for (n, &regime) in chain.regimes.iter().enumerate() {
        let p = &model.regimes()[regime];
        let mut t = chain.times[n];
        let end = chain.exit_time(n);
        while t < end {
            let tau = (end - t).min(max_step);
            let z = if mirror {
                let z = -draws[used];
                used += 1;
                z
            } else {
                let z = normal.inverse_cdf(uniform_open(rng));
                draws.push(z);
                z
            };
            log_s += (p.r - 0.5 * p.sigma * p.sigma) * tau + p.sigma * tau.sqrt() * z;
            discount += p.r * tau;
            t += tau;
        }
    }
    (-discount).exp() * claim.payoff(log_s.exp(), chain.final_regime())
}

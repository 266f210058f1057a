//! Nodewise static optimization of the jump kernel.
//!
//! At a fixed `(t, x, i)` the only part of the generator that depends on the
//! jump kernel is the regime-coupling term
//!
//! ```text
//!     sum_{j != i} g_ij (1 + eta_ij) (V_j - V_i)
//! ```
//!
//! which is maximized (upper bound) or minimized (lower bound) over
//! `eta_ij >= -1` and `sum_{j != i} g_ij eta_ij^2 <= B - h(i)^2`. The objective
//! is linear and the feasible set convex, so the optimum sits at one of the
//! KKT points obtained by pinning a subset of components at `-1` and spending
//! the remaining budget along the gap direction on the others.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::market::Regime;

/// Slack allowed on the quadratic budget constraint.
pub const QUADRATIC_SLACK: f64 = 1e-9;

/// Relative tolerance under which two candidate objectives count as tied.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Upper,
    Lower,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Upper => 1.0,
            Direction::Lower => -1.0,
        }
    }

    /// True when `a` is strictly better than `b` for this direction.
    fn prefers(self, a: f64, b: f64) -> bool {
        match self {
            Direction::Upper => a > b,
            Direction::Lower => a < b,
        }
    }
}

/// Static problem at one node for regime `i`.
///
/// `rates[n]` and `gaps[n]` refer to the same target regime `j != i`, listed
/// in increasing order of `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticProblem {
    pub direction: Direction,
    pub regime: Regime,
    /// Remaining quadratic budget `B - h(i)^2`.
    pub budget: f64,
    pub rates: Vec<f64>,
    pub gaps: Vec<f64>,
}

impl StaticProblem {
    pub fn new(
        direction: Direction,
        regime: Regime,
        budget: f64,
        rates: Vec<f64>,
        gaps: Vec<f64>,
    ) -> Result<Self> {
        let p = Self {
            direction,
            regime,
            budget,
            rates,
            gaps,
        };
        p.check()?;
        Ok(p)
    }

    fn check(&self) -> Result<()> {
        if self.rates.len() != self.gaps.len() {
            return Err(Error::Dimension(format!(
                "{} rates but {} value gaps",
                self.rates.len(),
                self.gaps.len()
            )));
        }
        if self.rates.iter().any(|&g| !(g >= 0.0 && g.is_finite())) {
            return Err(Error::InvalidParameter(
                "transition rates must be finite and nonnegative".to_string(),
            ));
        }
        if self.gaps.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidParameter(
                "value gaps must be finite".to_string(),
            ));
        }
        if self.budget.is_nan() || self.budget < 0.0 {
            return Err(Error::InfeasibleBudget {
                regime: self.regime.label(),
                budget: self.budget,
            });
        }
        Ok(())
    }

    fn expect_targets(&self, n: usize) -> Result<()> {
        if self.rates.len() != n {
            return Err(Error::Dimension(format!(
                "expected {n} target regimes, got {}",
                self.rates.len()
            )));
        }
        Ok(())
    }

    /// Regime-coupling term evaluated at `eta`.
    pub fn objective(&self, eta: &[f64]) -> f64 {
        self.rates
            .iter()
            .zip(&self.gaps)
            .zip(eta)
            .map(|((g, dv), e)| g * (1.0 + e) * dv)
            .sum()
    }

    /// `sum g_ij eta_ij^2`.
    pub fn distortion(&self, eta: &[f64]) -> f64 {
        self.rates.iter().zip(eta).map(|(g, e)| g * e * e).sum()
    }

    pub fn is_feasible(&self, eta: &[f64]) -> bool {
        eta.iter().all(|&e| e >= -1.0) && self.distortion(eta) <= self.budget + QUADRATIC_SLACK
    }

    fn solution(&self, eta: Vec<f64>) -> KernelSolution {
        let objective = self.objective(&eta);
        KernelSolution { eta, objective }
    }

    /// Scale used when comparing objectives of different candidates.
    fn objective_scale(&self, eta: &[f64]) -> f64 {
        self.rates
            .iter()
            .zip(&self.gaps)
            .zip(eta)
            .map(|((g, dv), e)| g * dv.abs() * (1.0 + e.abs()))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSolution {
    /// Optimal `eta_ij`, aligned with the problem's target regimes.
    pub eta: Vec<f64>,
    /// Coupling term at the optimum.
    pub objective: f64,
}

/// Closed-form solution for a two-regime chain.
pub fn solve_two_state(p: &StaticProblem) -> Result<KernelSolution> {
    p.check()?;
    p.expect_targets(1)?;
    let (rate, gap) = (p.rates[0], p.gaps[0]);
    if gap == 0.0 || rate == 0.0 {
        return Ok(p.solution(vec![0.0]));
    }
    let reach = (p.budget / rate).sqrt();
    let pinned = -reach.min(1.0);
    let eta = match (p.direction, gap > 0.0) {
        (Direction::Upper, true) | (Direction::Lower, false) => reach,
        (Direction::Upper, false) | (Direction::Lower, true) => pinned,
    };
    Ok(p.solution(vec![eta]))
}

/// Candidate enumeration for a three-regime chain.
///
/// The four candidates are: both components pinned at `-1`; one component
/// pinned with the other spending the residual budget in the direction of
/// its gap (two candidates); and both interior, proportional to the gaps.
/// Candidates whose radicand is negative do not exist; candidates violating
/// a constraint are dropped. A zero rate removes its component, which is
/// then reported as `0`.
pub fn solve_three_state(p: &StaticProblem) -> Result<KernelSolution> {
    p.check()?;
    p.expect_targets(2)?;
    if p.gaps.iter().all(|&g| g == 0.0) {
        return Ok(p.solution(vec![0.0, 0.0]));
    }
    match (p.rates[0] > 0.0, p.rates[1] > 0.0) {
        (true, true) => {}
        (false, false) => return Ok(p.solution(vec![0.0, 0.0])),
        (active0, _) => {
            let keep = if active0 { 0 } else { 1 };
            let reduced = StaticProblem {
                rates: vec![p.rates[keep]],
                gaps: vec![p.gaps[keep]],
                ..p.clone()
            };
            let sub = solve_two_state(&reduced)?;
            let mut eta = vec![0.0, 0.0];
            eta[keep] = sub.eta[0];
            return Ok(p.solution(eta));
        }
    }

    let s = p.direction.sign();
    let (gj, gk) = (p.rates[0], p.rates[1]);
    let (ej, ek) = (s * p.gaps[0], s * p.gaps[1]);
    let signum = |x: f64| {
        if x > 0.0 {
            1.0
        } else if x < 0.0 {
            -1.0
        } else {
            0.0
        }
    };

    let mut candidates: Vec<Vec<f64>> = vec![vec![-1.0, -1.0]];
    let rem_j = p.budget - gk;
    if rem_j >= 0.0 {
        candidates.push(vec![signum(ej) * (rem_j / gj).sqrt(), -1.0]);
    }
    let rem_k = p.budget - gj;
    if rem_k >= 0.0 {
        candidates.push(vec![-1.0, signum(ek) * (rem_k / gk).sqrt()]);
    }
    let weight = gj * ej * ej + gk * ek * ek;
    let c = (p.budget / weight).sqrt();
    candidates.push(vec![ej * c, ek * c]);

    pick_best(p, candidates)
}

/// Enumerates every pinned subset of the active components.
///
/// Components with a zero rate are irrelevant and fixed at `0`. For each
/// subset pinned at `-1`, the remaining components take `eta_j = c * s * dV_j`
/// with `c` making the quadratic constraint tight against the residual
/// budget (`s = +1` upper, `-1` lower).
pub fn solve_general(p: &StaticProblem) -> Result<KernelSolution> {
    p.check()?;
    let n = p.rates.len();
    if n == 0 {
        return Ok(p.solution(Vec::new()));
    }
    if p.gaps.iter().all(|&g| g == 0.0) {
        return Ok(p.solution(vec![0.0; n]));
    }
    let active: Vec<usize> = (0..n).filter(|&j| p.rates[j] > 0.0).collect();
    if active.len() > 24 {
        return Err(Error::Dimension(format!(
            "{} active target regimes is too many to enumerate",
            active.len()
        )));
    }
    let s = p.direction.sign();

    let mut candidates = Vec::with_capacity(1 << active.len());
    for mask in 0u32..(1u32 << active.len()) {
        let mut eta = vec![0.0; n];
        let mut residual = p.budget;
        let mut weight = 0.0;
        let mut free = 0;
        for (bit, &j) in active.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                eta[j] = -1.0;
                residual -= p.rates[j];
            } else {
                weight += p.rates[j] * p.gaps[j] * p.gaps[j];
                free += 1;
            }
        }
        if free > 0 {
            if residual < 0.0 {
                continue;
            }
            if weight > 0.0 {
                let c = (residual / weight).sqrt();
                for (bit, &j) in active.iter().enumerate() {
                    if mask & (1 << bit) == 0 {
                        eta[j] = s * p.gaps[j] * c;
                    }
                }
            }
        }
        candidates.push(eta);
    }
    pick_best(p, candidates)
}

/// Dispatches to the closed forms for two and three regimes.
pub fn solve(p: &StaticProblem) -> Result<KernelSolution> {
    match p.rates.len() {
        1 => solve_two_state(p),
        2 => solve_three_state(p),
        _ => solve_general(p),
    }
}

fn pick_best(p: &StaticProblem, candidates: Vec<Vec<f64>>) -> Result<KernelSolution> {
    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    for eta in candidates {
        if eta.iter().any(|e| !e.is_finite()) || !p.is_feasible(&eta) {
            continue;
        }
        let objective = p.objective(&eta);
        let distortion = p.distortion(&eta);
        let better = match &best {
            None => true,
            Some((best_eta, best_obj, best_dist)) => {
                let tol = TIE_TOLERANCE
                    * p.objective_scale(&eta)
                        .max(p.objective_scale(best_eta))
                        .max(1e-300);
                if (objective - best_obj).abs() > tol {
                    p.direction.prefers(objective, *best_obj)
                } else if distortion != *best_dist {
                    distortion < *best_dist
                } else {
                    lexicographic(&eta, best_eta) == Ordering::Less
                }
            }
        };
        if better {
            best = Some((eta, objective, distortion));
        }
    }
    match best {
        Some((eta, objective, _)) => Ok(KernelSolution { eta, objective }),
        None => Err(Error::NoFeasibleCandidate {
            regime: p.regime.label(),
        }),
    }
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

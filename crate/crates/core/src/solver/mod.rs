//! Fully implicit finite-difference engine for the regime-switching pricing
//! PIDE.
//!
//! For each regime `i` the engine solves, backward from the terminal payoff,
//!
//! ```text
//!   dV/dt + r x dV/dx + 1/2 sigma^2 x^2 d2V/dx2 - r V
//!         + sum_{j != i} g_ij (1 + eta_ij) (V_j - V_i) = 0
//! ```
//!
//! with backward Euler in time and central differences in price. When the
//! jump kernel is chosen by the static optimizer the coupling is nonlinear;
//! each time step then runs a policy iteration: the kernel is re-optimized at
//! every node from the current iterate, and the regimes are re-solved one
//! after another (Gauss-Seidel, freshest values of the other regimes) until
//! the sup-norm change drops below the tolerance.

pub mod claim;
pub mod grid;
pub mod tridiag;

pub use claim::{Claim, EuropeanCall, EuropeanPut, Payoff, Underlying, ZeroPayoff};
pub use grid::Grid;

use crate::control::{self, Direction, StaticProblem};
use crate::error::{Error, Result};
use crate::market::{MarketModel, Regime, RegimeParams};

/// Sup-norm tolerance of the per-step policy iteration.
pub const POLICY_TOLERANCE: f64 = 1e-10;
pub const MAX_POLICY_ITERATIONS: usize = 200;
/// Slack on the `B >= B0` feasibility test.
pub const BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: POLICY_TOLERANCE,
            max_iterations: MAX_POLICY_ITERATIONS,
        }
    }
}

/// Values at one time level, indexed `[regime][node]`.
pub type Slice = Vec<Vec<f64>>;

/// `V(t_k, x_m, i)` on the whole grid.
#[derive(Debug, Clone)]
pub struct ValueSurface {
    grid: Grid,
    regimes: usize,
    slices: Vec<Slice>,
}

impl ValueSurface {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn regimes(&self) -> usize {
        self.regimes
    }

    pub fn value(&self, k: usize, m: usize, regime: usize) -> f64 {
        self.slices[k][regime][m]
    }

    pub fn slice(&self, k: usize) -> &Slice {
        &self.slices[k]
    }

    /// Linear interpolation in price at time level `k`.
    pub fn interpolate(&self, k: usize, x: f64, regime: Regime) -> Result<f64> {
        if regime.index() >= self.regimes {
            return Err(Error::InvalidParameter(format!(
                "regime {regime} outside 1..={}",
                self.regimes
            )));
        }
        let (m, w) = self.grid.locate(x)?;
        let row = &self.slices[k][regime.index()];
        Ok(if w == 0.0 {
            row[m]
        } else {
            (1.0 - w) * row[m] + w * row[m + 1]
        })
    }

    /// Every stored value, in `(k, m, i)` order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, usize, f64)> + '_ {
        self.slices.iter().enumerate().flat_map(move |(k, s)| {
            (0..self.grid.nodes())
                .flat_map(move |m| (0..self.regimes).map(move |i| (k, m, i, s[i][m])))
        })
    }
}

/// Jump kernels used at each time step, node and regime pair.
///
/// Entry `(k, m, i, j)` is the kernel applied when stepping from level
/// `k + 1` to level `k`; diagonal entries are zero.
#[derive(Debug, Clone)]
pub struct KernelField {
    steps: usize,
    nodes: usize,
    regimes: usize,
    eta: Vec<f64>,
}

impl KernelField {
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn get(&self, k: usize, m: usize, i: usize, j: usize) -> f64 {
        self.eta[((k * self.nodes + m) * self.regimes + i) * self.regimes + j]
    }

    pub fn min(&self) -> f64 {
        self.eta.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub surface: ValueSurface,
    pub kernels: KernelField,
    /// Iterations used at each time level `k = 0..t_steps`.
    pub policy_iterations: Vec<usize>,
    /// Sup-norm change after every iteration, per time level.
    pub residual_history: Vec<Vec<f64>>,
    pub max_policy_residual: f64,
}

impl SolveReport {
    /// Time-0 value at price `x` in `regime`.
    pub fn price(&self, x: f64, regime: Regime) -> Result<f64> {
        self.surface.interpolate(0, x, regime)
    }

    pub fn total_iterations(&self) -> usize {
        self.policy_iterations.iter().sum()
    }
}

/// Output of one policy-iteration sweep at a single time level.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub values: Slice,
    /// Kernels used for this sweep, flattened `[node][regime][target]`.
    pub eta: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone)]
enum Policy {
    Optimal(Direction),
    Fixed(Vec<Vec<f64>>),
}

/// A fully specified PIDE: market coefficients, kernel policy, claim and grid.
#[derive(Debug, Clone)]
pub struct PdeProblem<'a> {
    regimes: Vec<RegimeParams>,
    rates: Vec<Vec<f64>>,
    budgets: Vec<f64>,
    policy: Policy,
    claim: &'a Claim,
    grid: &'a Grid,
    config: SolverConfig,
    // per regime, per node: weights of V_{m-1} and V_{m+1}
    weights: Vec<Vec<(f64, f64)>>,
}

impl<'a> PdeProblem<'a> {
    /// Upper or lower good-deal function for bound `bound`.
    pub fn good_deal(
        model: &MarketModel,
        claim: &'a Claim,
        grid: &'a Grid,
        bound: f64,
        direction: Direction,
    ) -> Result<Self> {
        let minimum = model.min_good_deal_bound();
        if bound.is_nan() || bound < minimum - BOUND_SLACK {
            return Err(Error::InfeasibleBound { bound, minimum });
        }
        let budgets = model
            .regimes()
            .iter()
            .map(|p| (bound - p.diffusion_kernel().powi(2)).max(0.0))
            .collect();
        Self::build(model, claim, grid, budgets, Policy::Optimal(direction))
    }

    /// Linear PIDE with a constant kernel `eta[i][j]`; the diagonal is ignored.
    pub fn fixed_kernel(
        model: &MarketModel,
        claim: &'a Claim,
        grid: &'a Grid,
        eta: &[Vec<f64>],
    ) -> Result<Self> {
        let d = model.dim();
        let eta = check_fixed_kernel(eta, d)?;
        Self::build(model, claim, grid, vec![0.0; d], Policy::Fixed(eta))
    }

    /// Plain Black-Scholes PDE for one set of coefficients.
    pub fn single_regime(params: RegimeParams, claim: &'a Claim, grid: &'a Grid) -> Result<Self> {
        check_claim(claim, grid)?;
        Ok(Self {
            weights: vec![spatial_weights(&params, grid)],
            regimes: vec![params],
            rates: vec![vec![0.0]],
            budgets: vec![0.0],
            policy: Policy::Fixed(vec![vec![0.0]]),
            claim,
            grid,
            config: SolverConfig::default(),
        })
    }

    fn build(
        model: &MarketModel,
        claim: &'a Claim,
        grid: &'a Grid,
        budgets: Vec<f64>,
        policy: Policy,
    ) -> Result<Self> {
        check_claim(claim, grid)?;
        let regimes = model.regimes().to_vec();
        let weights = regimes.iter().map(|p| spatial_weights(p, grid)).collect();
        Ok(Self {
            regimes,
            rates: model.generator().rows().to_vec(),
            budgets,
            policy,
            claim,
            grid,
            config: SolverConfig::default(),
            weights,
        })
    }

    pub fn with_config(mut self, config: SolverConfig) -> Self {
        self.config = config;
        self
    }

    pub fn dim(&self) -> usize {
        self.regimes.len()
    }

    /// Payoff at every node, bit-exact.
    pub fn terminal_slice(&self) -> Slice {
        let xs = self.grid.prices();
        (0..self.dim())
            .map(|i| xs.iter().map(|&x| self.claim.payoff(x, i)).collect())
            .collect()
    }

    fn kernels(&self, guess: &Slice) -> Result<Vec<f64>> {
        let d = self.dim();
        let n = self.grid.nodes();
        let mut eta = vec![0.0; n * d * d];
        match &self.policy {
            Policy::Fixed(fixed) => {
                for m in 0..n {
                    for i in 0..d {
                        for j in 0..d {
                            if i != j {
                                eta[(m * d + i) * d + j] = fixed[i][j];
                            }
                        }
                    }
                }
            }
            Policy::Optimal(direction) => {
                for i in 0..d {
                    let targets: Vec<usize> = (0..d).filter(|&j| j != i).collect();
                    let rates: Vec<f64> = targets.iter().map(|&j| self.rates[i][j]).collect();
                    let mut problem = StaticProblem {
                        direction: *direction,
                        regime: Regime::from_index(i),
                        budget: self.budgets[i],
                        rates,
                        gaps: vec![0.0; targets.len()],
                    };
                    for m in 0..n {
                        for (slot, &j) in targets.iter().enumerate() {
                            problem.gaps[slot] = guess[j][m] - guess[i][m];
                        }
                        let sol = control::solve(&problem)?;
                        for (slot, &j) in targets.iter().enumerate() {
                            eta[(m * d + i) * d + j] = sol.eta[slot];
                        }
                    }
                }
            }
        }
        Ok(eta)
    }

    /// One policy-iteration sweep at time level `k`.
    ///
    /// Kernels are optimized against `v_guess`; each regime's implicit system
    /// is then solved in turn, using the newest available values of the other
    /// regimes in the coupling term. Returns the new slice and its sup-norm
    /// distance to `v_guess`.
    pub fn policy_iteration_step(
        &self,
        k: usize,
        v_next: &Slice,
        v_guess: &Slice,
    ) -> Result<StepOutcome> {
        let d = self.dim();
        let n = self.grid.nodes();
        let interior = n - 2;
        let dt = self.grid.dt;
        let tau = self.grid.maturity() - self.grid.time(k);

        let eta = self.kernels(v_guess)?;
        let mut values = v_guess.clone();

        let mut lower = vec![0.0; interior];
        let mut diag = vec![0.0; interior];
        let mut upper = vec![0.0; interior];
        let mut rhs = vec![0.0; interior];
        let mut solution = vec![0.0; interior];
        let mut scratch = Vec::with_capacity(interior);

        for i in 0..d {
            let r = self.regimes[i].r;
            let lo = self.claim.payoff.lower_boundary(self.grid.s_min, tau, r, i);
            let hi = self.claim.payoff.upper_boundary(self.grid.s_max, tau, r, i);
            for m in 1..n - 1 {
                let q = m - 1;
                let (a, b) = self.weights[i][m];
                let mut exit = 0.0;
                let mut inflow = 0.0;
                for j in (0..d).filter(|&j| j != i) {
                    let intensity = self.rates[i][j] * (1.0 + eta[(m * d + i) * d + j]);
                    exit += intensity;
                    inflow += intensity * values[j][m];
                }
                lower[q] = -dt * a;
                upper[q] = -dt * b;
                diag[q] = 1.0 + dt * (a + b + r + exit);
                rhs[q] = v_next[i][m] + dt * inflow;
            }
            rhs[0] += dt * self.weights[i][1].0 * lo;
            rhs[interior - 1] += dt * self.weights[i][n - 2].1 * hi;
            tridiag::solve_into(&lower, &diag, &upper, &rhs, &mut scratch, &mut solution)?;

            let row = &mut values[i];
            row[0] = lo;
            row[1..n - 1].copy_from_slice(&solution);
            row[n - 1] = hi;
        }

        let residual = values
            .iter()
            .zip(v_guess)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        Ok(StepOutcome {
            values,
            eta,
            residual,
        })
    }

    pub fn solve(&self) -> Result<SolveReport> {
        let d = self.dim();
        let n = self.grid.nodes();
        let steps = self.grid.t_steps;

        let mut slices: Vec<Slice> = vec![Vec::new(); steps + 1];
        slices[steps] = self.terminal_slice();
        let mut field = vec![0.0; steps * n * d * d];
        let mut iterations = vec![0; steps];
        let mut history = vec![Vec::new(); steps];
        let mut max_residual: f64 = 0.0;

        for k in (0..steps).rev() {
            let mut guess = slices[k + 1].clone();
            let mut residuals = Vec::new();
            loop {
                let out = self.policy_iteration_step(k, &slices[k + 1], &guess)?;
                residuals.push(out.residual);
                guess = out.values;
                if out.residual <= self.config.tolerance {
                    field[k * n * d * d..(k + 1) * n * d * d].copy_from_slice(&out.eta);
                    max_residual = max_residual.max(out.residual);
                    break;
                }
                if residuals.len() >= self.config.max_iterations {
                    return Err(Error::PolicyIteration {
                        step: k,
                        iterations: residuals.len(),
                        residual: out.residual,
                    });
                }
            }
            iterations[k] = residuals.len();
            history[k] = residuals;
            slices[k] = guess;
        }

        Ok(SolveReport {
            surface: ValueSurface {
                grid: *self.grid,
                regimes: d,
                slices,
            },
            kernels: KernelField {
                steps,
                nodes: n,
                regimes: d,
                eta: field,
            },
            policy_iterations: iterations,
            residual_history: history,
            max_policy_residual: max_residual,
        })
    }
}

fn check_claim(claim: &Claim, grid: &Grid) -> Result<()> {
    let t = claim.maturity;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "claim maturity {t} must be positive"
        )));
    }
    if (grid.maturity() - t).abs() > 1e-9 * t.max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "grid covers [0, {}] but the claim matures at {t}",
            grid.maturity()
        )));
    }
    Ok(())
}

fn check_fixed_kernel(eta: &[Vec<f64>], d: usize) -> Result<Vec<Vec<f64>>> {
    if eta.len() != d || eta.iter().any(|row| row.len() != d) {
        return Err(Error::Dimension(format!("fixed kernel must be {d}x{d}")));
    }
    let mut out = eta.to_vec();
    for (i, row) in out.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            if i == j {
                *e = 0.0;
            } else if !(*e >= -1.0 && e.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "kernel eta_{}{} = {} must be finite and >= -1",
                    i + 1,
                    j + 1,
                    e
                )));
            }
        }
    }
    Ok(out)
}

/// Weights `(a, b)` of `V_{m-1}` and `V_{m+1}` in the discrete operator.
///
/// Central differences, except where that makes a weight negative: the
/// first derivative then switches to the one-sided difference in the
/// direction of the drift.
fn spatial_weights(p: &RegimeParams, grid: &Grid) -> Vec<(f64, f64)> {
    let ds = grid.ds;
    (0..grid.nodes())
        .map(|m| {
            let x = grid.price(m);
            let diffusion = 0.5 * p.sigma * p.sigma * x * x / (ds * ds);
            let drift = p.r * x / ds;
            let (a, b) = (diffusion - 0.5 * drift, diffusion + 0.5 * drift);
            if a >= 0.0 && b >= 0.0 {
                (a, b)
            } else if drift >= 0.0 {
                (diffusion, diffusion + drift)
            } else {
                (diffusion - drift, diffusion)
            }
        })
        .collect()
}

pub fn solve_good_deal(
    model: &MarketModel,
    claim: &Claim,
    grid: &Grid,
    bound: f64,
    direction: Direction,
) -> Result<SolveReport> {
    PdeProblem::good_deal(model, claim, grid, bound, direction)?.solve()
}

pub fn solve_fixed_kernel(
    model: &MarketModel,
    claim: &Claim,
    grid: &Grid,
    eta: &[Vec<f64>],
) -> Result<SolveReport> {
    PdeProblem::fixed_kernel(model, claim, grid, eta)?.solve()
}

/// Price under the minimal martingale measure (`eta = 0`).
pub fn solve_minimal_martingale(
    model: &MarketModel,
    claim: &Claim,
    grid: &Grid,
) -> Result<SolveReport> {
    let d = model.dim();
    solve_fixed_kernel(model, claim, grid, &vec![vec![0.0; d]; d])
}

/// Lower bound, minimal-martingale price and upper bound at one point.
///
/// The good-deal interval `(lower, upper)` is open: the bounds themselves
/// are limits of prices, not prices of admissible measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceBounds {
    pub lower: f64,
    pub mmm: f64,
    pub upper: f64,
    pub open_interval: bool,
}

/// Lower, minimal-martingale and upper solves for one market, claim and bound.
#[derive(Debug, Clone)]
pub struct BoundSurfaces {
    pub lower: SolveReport,
    pub mmm: SolveReport,
    pub upper: SolveReport,
}

impl BoundSurfaces {
    pub fn at(&self, x: f64, regime: Regime) -> Result<PriceBounds> {
        Ok(PriceBounds {
            lower: self.lower.price(x, regime)?,
            mmm: self.mmm.price(x, regime)?,
            upper: self.upper.price(x, regime)?,
            open_interval: true,
        })
    }

    pub fn reports(&self) -> [&SolveReport; 3] {
        [&self.lower, &self.mmm, &self.upper]
    }
}

/// Runs the three solves concurrently.
pub fn solve_bounds(
    model: &MarketModel,
    claim: &Claim,
    grid: &Grid,
    bound: f64,
) -> Result<BoundSurfaces> {
    // fail fast on an infeasible bound before spawning anything
    PdeProblem::good_deal(model, claim, grid, bound, Direction::Upper)?;
    let (lower, (mmm, upper)) = rayon::join(
        || solve_good_deal(model, claim, grid, bound, Direction::Lower),
        || {
            rayon::join(
                || solve_minimal_martingale(model, claim, grid),
                || solve_good_deal(model, claim, grid, bound, Direction::Upper),
            )
        },
    );
    Ok(BoundSurfaces {
        lower: lower?,
        mmm: mmm?,
        upper: upper?,
    })
}

/// Bounds at the model's initial price and regime.
pub fn price_bounds(
    model: &MarketModel,
    claim: &Claim,
    grid: &Grid,
    bound: f64,
) -> Result<PriceBounds> {
    solve_bounds(model, claim, grid, bound)?.at(model.initial_price(), model.initial_regime())
}

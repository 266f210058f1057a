//! Good-deal price bounds for European claims in a regime-switching
//! diffusion market.
//!
//! * [`market`]: per-regime coefficients, the Markov-chain generator, the
//!   diffusion kernel and the minimal admissible bound `B0`.
//! * [`control`]: the nodewise static optimizer for the jump kernel.
//! * [`solver`]: implicit finite differences with per-step policy iteration.
//! * [`oracle`]: Black-Scholes and Monte-Carlo reference prices.

pub mod control;
pub mod error;
pub mod market;
pub mod oracle;
pub mod solver;

pub use control::{Direction, KernelSolution, StaticProblem};
pub use error::{Error, Result};
pub use market::{Generator, MarketModel, Regime, RegimeParams};
pub use solver::{
    price_bounds, solve_bounds, solve_fixed_kernel, solve_good_deal, solve_minimal_martingale,
    BoundSurfaces, Claim, Grid, PdeProblem, PriceBounds, SolveReport,
};

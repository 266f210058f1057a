//! Independent reference computations shared by the integration tests.
//!
//! Nothing in here calls the optimizer, PDE engine or pricing formulas of the
//! library; each routine recomputes its answer from first principles.

#![allow(dead_code, clippy::too_many_arguments, clippy::needless_range_loop)]

use gooddeal_core::control::{Direction, StaticProblem};
use gooddeal_core::{Generator, MarketModel, Regime, RegimeParams};

pub fn reference_regimes() -> Vec<RegimeParams> {
    vec![
        RegimeParams::new(0.06, 0.15, 0.12).unwrap(),
        RegimeParams::new(0.06, -0.22, 0.26).unwrap(),
    ]
}

pub fn model1(regime: usize) -> MarketModel {
    MarketModel::new(
        reference_regimes(),
        Generator::two_state(0.5, 5.0).unwrap(),
        Regime::new(regime).unwrap(),
        100.0,
    )
    .unwrap()
}

fn objective(p: &StaticProblem, eta: &[f64]) -> f64 {
    p.rates
        .iter()
        .zip(&p.gaps)
        .zip(eta)
        .map(|((g, dv), e)| g * (1.0 + e) * dv)
        .sum()
}

fn feasible(p: &StaticProblem, eta: &[f64]) -> bool {
    let spent: f64 = p.rates.iter().zip(eta).map(|(g, e)| g * e * e).sum();
    eta.iter().all(|&e| e >= -1.0) && spent <= p.budget + 1e-9
}

fn better(direction: Direction, a: f64, b: f64) -> bool {
    match direction {
        Direction::Upper => a > b,
        Direction::Lower => a < b,
    }
}

/// Result of a brute-force search: best point, its objective, and the
/// largest objective change across one cell of the final grid.
pub struct GridOptimum {
    pub eta: Vec<f64>,
    pub objective: f64,
    pub resolution: f64,
}

/// Coarse-to-fine search of `f` over a box.
///
/// Each level lays `points` nodes per axis over a window centred on the best
/// point so far, then halves the window, until the spacing drops below
/// `target_step`. Periodic axes are never clipped to their range.
/// `f` returns `None` at infeasible points. Returns the best
/// point, its score and the final spacing per axis.
fn refine_box<F>(
    lo: &[f64],
    hi: &[f64],
    periodic: &[bool],
    start: Vec<f64>,
    points: usize,
    target_step: f64,
    direction: Direction,
    f: F,
) -> (Vec<f64>, f64, Vec<f64>)
where
    F: Fn(&[f64]) -> Option<f64>,
{
    let n = lo.len();
    let mut best = start;
    let mut best_obj = f(&best).expect("start point must be feasible");
    let mut center: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let mut half: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (b - a)).collect();
    let mut idx = vec![0usize; n];
    let mut x = vec![0.0; n];
    loop {
        let steps: Vec<f64> = half.iter().map(|h| 2.0 * h / (points - 1) as f64).collect();
        idx.iter_mut().for_each(|v| *v = 0);
        'grid: loop {
            for d in 0..n {
                let (a, b) = if periodic[d] {
                    (center[d] - half[d], center[d] + half[d])
                } else {
                    (
                        (center[d] - half[d]).max(lo[d]),
                        (center[d] + half[d]).min(hi[d]),
                    )
                };
                x[d] = a + (b - a) * idx[d] as f64 / (points - 1) as f64;
            }
            if let Some(obj) = f(&x) {
                if better(direction, obj, best_obj) {
                    best_obj = obj;
                    best.copy_from_slice(&x);
                }
            }
            for d in 0..n {
                idx[d] += 1;
                if idx[d] < points {
                    continue 'grid;
                }
                idx[d] = 0;
            }
            break;
        }
        if steps.iter().all(|&s| s <= target_step) {
            return (best, best_obj, steps);
        }
        center.copy_from_slice(&best);
        half.iter_mut().for_each(|h| *h *= 0.5);
    }
}

/// Largest objective change from moving one grid step along any axis.
fn cell_variation<F: Fn(&[f64]) -> f64>(x: &[f64], steps: &[f64], f: F) -> f64 {
    let base = f(x);
    let mut total = 0.0;
    for d in 0..x.len() {
        let mut y = x.to_vec();
        y[d] += steps[d];
        total += (f(&y) - base).abs();
    }
    total
}

/// Map from hyperspherical coordinates `(rho, phi_1, ..)` of the scaled
/// variables `u_j = sqrt(g_j) eta_j` back to the kernel.
fn spherical_to_eta(rates: &[f64], coords: &[f64]) -> Vec<f64> {
    let n = rates.len();
    let rho = coords[0];
    let mut u = vec![0.0; n];
    let mut sin_prod = 1.0;
    for j in 0..n {
        if j + 1 < n {
            u[j] = rho * sin_prod * coords[j + 1].cos();
            sin_prod *= coords[j + 1].sin();
        } else {
            u[j] = rho * sin_prod;
        }
    }
    u.iter().zip(rates).map(|(u, g)| u / g.sqrt()).collect()
}

/// Brute-force optimum of the static problem (all rates positive).
///
/// Two coarse-to-fine grid searches run side by side: one over the box
/// `[-1, sqrt(budget / g_j)]^n` in kernel coordinates, whose grid contains
/// the faces `eta_j = -1` exactly, and one in hyperspherical coordinates of
/// `sqrt(g_j) eta_j`, whose grid contains the budget sphere exactly. Only
/// feasible nodes are scored; the better of the two results is returned.
pub fn grid_search(p: &StaticProblem, points: usize, target_step: f64) -> GridOptimum {
    let n = p.rates.len();
    assert!(p.rates.iter().all(|&g| g > 0.0));
    let score = |eta: &[f64]| feasible(p, eta).then(|| objective(p, eta));

    let lo = vec![-1.0; n];
    let hi: Vec<f64> = p.rates.iter().map(|&g| (p.budget / g).sqrt()).collect();
    let (box_eta, box_obj, box_steps) = refine_box(
        &lo,
        &hi,
        &vec![false; n],
        vec![0.0; n],
        points,
        target_step,
        p.direction,
        score,
    );
    let box_res = cell_variation(&box_eta, &box_steps, |e| objective(p, e));

    let mut s_lo = vec![0.0; n];
    let mut s_hi = vec![p.budget.sqrt(); n];
    for d in 1..n {
        s_lo[d] = 0.0;
        s_hi[d] = if d + 1 < n {
            std::f64::consts::PI
        } else {
            2.0 * std::f64::consts::PI
        };
    }
    if n == 1 {
        s_lo[0] = -p.budget.sqrt();
    }
    let to_eta = |c: &[f64]| {
        if n == 1 {
            vec![c[0] / p.rates[0].sqrt()]
        } else {
            spherical_to_eta(&p.rates, c)
        }
    };
    // the last angle wraps around
    let periodic: Vec<bool> = (0..n).map(|d| n > 1 && d == n - 1).collect();
    let (sph, sph_obj, sph_steps) = refine_box(
        &s_lo,
        &s_hi,
        &periodic,
        vec![0.0; n],
        points,
        target_step,
        p.direction,
        |c| score(&to_eta(c)),
    );
    let sph_res = cell_variation(&sph, &sph_steps, |c| objective(p, &to_eta(c)));

    let resolution = 4.0 * box_res.max(sph_res) + 1e-12;
    if better(p.direction, sph_obj, box_obj) {
        GridOptimum {
            eta: to_eta(&sph),
            objective: sph_obj,
            resolution,
        }
    } else {
        GridOptimum {
            eta: box_eta,
            objective: box_obj,
            resolution,
        }
    }
}

/// Standard normal distribution function from the Maclaurin series of erf,
/// accurate to ~1e-14 for |x| <= 6.
pub fn normal_cdf_series(x: f64) -> f64 {
    let z = x / std::f64::consts::SQRT_2;
    let mut term = z;
    let mut sum = z;
    let mut n = 0.0;
    while term.abs() > 1e-18 * sum.abs().max(1e-300) || n < 5.0 {
        n += 1.0;
        term *= -z * z / n;
        let add = term / (2.0 * n + 1.0);
        sum += add;
        if n > 400.0 {
            break;
        }
    }
    0.5 * (1.0 + 2.0 / std::f64::consts::PI.sqrt() * sum)
}

pub fn black_scholes_series(s: f64, k: f64, r: f64, sigma: f64, t: f64) -> f64 {
    let sd = sigma * t.sqrt();
    let d1 = ((s / k).ln() + (r + 0.5 * sigma * sigma) * t) / sd;
    let d2 = d1 - sd;
    s * normal_cdf_series(d1) - k * (-r * t).exp() * normal_cdf_series(d2)
}

/// Backward-Euler finite differences for a European call in one regime:
/// central differences, one-sided drift where a central weight would be
/// negative, Dirichlet data `0` and `s_max - K e^{-r tau}`.
pub fn implicit_bs_call(
    r: f64,
    sigma: f64,
    strike: f64,
    maturity: f64,
    t_steps: usize,
    s_max: f64,
    s_steps: usize,
) -> Vec<f64> {
    let dt = maturity / t_steps as f64;
    let ds = s_max / s_steps as f64;
    let n = s_steps + 1;
    let x: Vec<f64> = (0..n).map(|m| m as f64 * ds).collect();
    let mut v: Vec<f64> = x.iter().map(|&s| (s - strike).max(0.0)).collect();
    let w: Vec<(f64, f64)> = x
        .iter()
        .map(|&s| {
            let diff = 0.5 * sigma * sigma * s * s / (ds * ds);
            let drift = r * s / ds;
            let (a, b) = (diff - 0.5 * drift, diff + 0.5 * drift);
            if a >= 0.0 && b >= 0.0 {
                (a, b)
            } else if drift >= 0.0 {
                (diff, diff + drift)
            } else {
                (diff - drift, diff)
            }
        })
        .collect();
    for k in (0..t_steps).rev() {
        let tau = maturity - k as f64 * dt;
        let hi = s_max - strike * (-r * tau).exp();
        let m_int = n - 2;
        let mut sub = vec![0.0; m_int];
        let mut dia = vec![0.0; m_int];
        let mut sup = vec![0.0; m_int];
        let mut rhs = vec![0.0; m_int];
        for q in 0..m_int {
            let (a, b) = w[q + 1];
            sub[q] = -dt * a;
            sup[q] = -dt * b;
            dia[q] = 1.0 + dt * (a + b + r);
            rhs[q] = v[q + 1];
        }
        rhs[m_int - 1] += dt * w[n - 2].1 * hi;
        // forward elimination
        for q in 1..m_int {
            let f = sub[q] / dia[q - 1];
            dia[q] -= f * sup[q - 1];
            rhs[q] -= f * rhs[q - 1];
        }
        let mut sol = vec![0.0; m_int];
        sol[m_int - 1] = rhs[m_int - 1] / dia[m_int - 1];
        for q in (0..m_int - 1).rev() {
            sol[q] = (rhs[q] - sup[q] * sol[q + 1]) / dia[q];
        }
        v[0] = 0.0;
        v[1..n - 1].copy_from_slice(&sol);
        v[n - 1] = hi;
    }
    v
}

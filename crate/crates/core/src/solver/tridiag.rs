//! Direct elimination for tridiagonal systems.

use crate::error::{Error, Result};

/// Solves `lower[m] x[m-1] + diag[m] x[m] + upper[m] x[m+1] = rhs[m]`.
///
/// `lower[0]` and `upper[n-1]` are ignored. Scratch buffers are reused across
/// calls by passing them in; `x` receives the solution.
pub fn solve_into(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
    scratch: &mut Vec<f64>,
    x: &mut [f64],
) -> Result<()> {
    let n = diag.len();
    debug_assert!(lower.len() == n && upper.len() == n && rhs.len() == n && x.len() == n);
    if n == 0 {
        return Ok(());
    }
    scratch.clear();
    scratch.resize(n, 0.0);

    let mut pivot = diag[0];
    if pivot.abs() < f64::MIN_POSITIVE || !pivot.is_finite() {
        return Err(Error::SingularSystem { row: 0 });
    }
    scratch[0] = upper[0] / pivot;
    x[0] = rhs[0] / pivot;
    for m in 1..n {
        pivot = diag[m] - lower[m] * scratch[m - 1];
        if pivot.abs() < f64::MIN_POSITIVE || !pivot.is_finite() {
            return Err(Error::SingularSystem { row: m });
        }
        scratch[m] = upper[m] / pivot;
        x[m] = (rhs[m] - lower[m] * x[m - 1]) / pivot;
    }
    for m in (0..n - 1).rev() {
        x[m] -= scratch[m] * x[m + 1];
    }
    Ok(())
}

pub fn solve(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let mut x = vec![0.0; diag.len()];
    let mut scratch = Vec::new();
    solve_into(lower, diag, upper, rhs, &mut scratch, &mut x)?;
    Ok(x)
}

//! Banded solvers for the implicit integrator.

/// Solves `a_i x_{i-1} + b_i x_i + c_i x_{i+1} = d_i` in place (Thomas).
/// `a[0]` and `c[n-1]` are ignored. Returns `false` on a zero pivot.
pub(crate) fn solve_tridiagonal(a: &[f64], b: &[f64], c: &[f64], d: &mut [f64]) -> bool {
    let n = d.len();
    if n == 0 {
        return true;
    }
    let mut cp = vec![0.0; n];
    let mut beta = b[0];
    if beta == 0.0 || !beta.is_finite() {
        return false;
    }
    d[0] /= beta;
    for i in 1..n {
        cp[i - 1] = c[i - 1] / beta;
        beta = b[i] - a[i] * cp[i - 1];
        if beta == 0.0 || !beta.is_finite() {
            return false;
        }
        d[i] = (d[i] - a[i] * d[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        d[i] -= cp[i] * d[i + 1];
    }
    true
}

/// Periodic variant: `a[0]` couples row 0 to `x_{n-1}` and `c[n-1]` couples
/// row `n-1` to `x_0`. Uses the Sherman-Morrison correction.
pub(crate) fn solve_cyclic_tridiagonal(a: &[f64], b: &[f64], c: &[f64], d: &mut [f64]) -> bool {
    let n = d.len();
    if n < 3 {
        return false;
    }
    let alpha = c[n - 1];
    let beta = a[0];
    let gamma = -b[0];
    let mut bb = b.to_vec();
    bb[0] = b[0] - gamma;
    bb[n - 1] = b[n - 1] - alpha * beta / gamma;
    if !solve_tridiagonal(a, &bb, c, d) {
        return false;
    }
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    if !solve_tridiagonal(a, &bb, c, &mut u) {
        return false;
    }
    let fact = (d[0] + beta * d[n - 1] / gamma) / (1.0 + u[0] + beta * u[n - 1] / gamma);
    for (x, z) in d.iter_mut().zip(&u) {
        *x -= fact * z;
    }
    true
}

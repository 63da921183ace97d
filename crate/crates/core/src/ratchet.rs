//! Stationary states of the effective equation in a tilted periodic potential.
//!
//! On the unit cell the stationary flux `J0` is constant and the density
//! solves `(1 + g p) p' + V'(x) p = -J0` with `p` periodic and of unit
//! mass. The system is collocated on a periodic grid with an eighth-order
//! central difference and solved by Newton's method with continuation.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::effective_pde::{BoundaryKind, DensityField, Grid, Potential};
use crate::error::{Error, Result};

pub const DEFAULT_GRID: usize = 512;
const MAX_TILT_STEP: f64 = 0.5;
const MAX_COUPLING_STEP: f64 = 0.1;
const NEWTON_TOL: f64 = 1e-12;
const MAX_NEWTON: usize = 50;

/// `sin(2 pi x) + sin(4 pi x) / 4 - F0 x`.
pub fn potential_sf(x: f64, f0: f64) -> f64 {
    (2.0 * PI * x).sin() + 0.25 * (4.0 * PI * x).sin() - f0 * x
}

pub fn potential_sf_derivative(x: f64, f0: f64) -> f64 {
    2.0 * PI * (2.0 * PI * x).cos() + PI * (4.0 * PI * x).cos() - f0
}

/// The tilted asymmetric periodic potential as a drift for the PDE solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltedRatchet {
    pub f0: f64,
}

impl Potential for TiltedRatchet {
    fn value(&self, x: f64) -> f64 {
        potential_sf(x, self.f0)
    }

    fn derivative(&self, x: f64) -> f64 {
        potential_sf_derivative(x, self.f0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatchetProblem {
    /// Nonlinearity `g_h phi` of the concentration form.
    pub g_phi: f64,
    pub f0: f64,
    pub grid_points: usize,
}

impl RatchetProblem {
    pub fn new(g_phi: f64, f0: f64) -> Self {
        Self { g_phi, f0, grid_points: DEFAULT_GRID }
    }

    pub fn with_grid(mut self, grid_points: usize) -> Self {
        self.grid_points = grid_points;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.g_phi.is_finite() && self.g_phi >= 0.0) {
            return Err(Error::InvalidInput(format!("g_phi = {} must be >= 0", self.g_phi)));
        }
        if !self.f0.is_finite() {
            return Err(Error::InvalidInput("tilt must be finite".into()));
        }
        if self.grid_points < 16 {
            return Err(Error::InvalidInput(format!("grid needs at least 16 nodes, got {}", self.grid_points)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RatchetSolution {
    /// Periodic density on `[-1/2, 1/2)`.
    pub density: DensityField,
    pub j0: f64,
    pub g_phi: f64,
    pub f0: f64,
    /// Max-norm residual of the discrete flux relation.
    pub residual: f64,
}

/// Solves one stationary problem, continuing from the zero-tilt Boltzmann
/// state first in the tilt and then in the nonlinearity.
pub fn solve_periodic_stationary(prob: &RatchetProblem) -> Result<RatchetSolution> {
    prob.validate()?;
    let start = boltzmann(prob.grid_points)?;
    continue_to(&start, prob.g_phi, prob.f0)
}

/// Walks from a converged solution to `(g_phi, f0)`, tilt first, in
/// bounded steps that are halved when Newton fails.
pub fn continue_to(from: &RatchetSolution, g_phi: f64, f0: f64) -> Result<RatchetSolution> {
    RatchetProblem { g_phi, f0, grid_points: from.density.grid.nodes() }.validate()?;
    let mid = walk(from, from.g_phi, f0, MAX_TILT_STEP)?;
    walk(&mid, g_phi, f0, MAX_COUPLING_STEP)
}

fn walk(from: &RatchetSolution, g_phi: f64, f0: f64, max_step: f64) -> Result<RatchetSolution> {
    let mut current = from.clone();
    let mut step = max_step;
    let distance = |s: &RatchetSolution| (s.g_phi - g_phi).abs().max((s.f0 - f0).abs());
    // Refine once at the target even when already there.
    let mut first = true;
    while first || distance(&current) > 0.0 {
        first = false;
        let d = distance(&current);
        let frac = if d <= step { 1.0 } else { step / d };
        let g = current.g_phi + frac * (g_phi - current.g_phi);
        let f = current.f0 + frac * (f0 - current.f0);
        match newton(&current, g, f) {
            Ok(next) => {
                current = next;
                step = (step * 1.5).min(max_step);
            }
            Err(err) => {
                step *= 0.5;
                if step < 1e-4 {
                    return Err(match err {
                        Error::Newton { iterations, residual, last_iterate, .. } => Error::Newton {
                            iterations,
                            residual,
                            hint: format!(
                                "continuation stalled at g_phi = {:.4}, F0 = {:.4}; try a finer grid",
                                current.g_phi, current.f0
                            ),
                            last_iterate,
                        },
                        other => other,
                    });
                }
            }
        }
    }
    Ok(current)
}

/// `(F0, J0)` for each tilt, warm-starting each solve from the previous one.
pub fn flux_curve(g_phi: f64, f0_values: &[f64], grid_points: usize) -> Result<Vec<(f64, f64)>> {
    Ok(flux_curve_solutions(g_phi, f0_values, grid_points)?.into_iter().map(|s| (s.f0, s.j0)).collect())
}

pub fn flux_curve_solutions(g_phi: f64, f0_values: &[f64], grid_points: usize) -> Result<Vec<RatchetSolution>> {
    let mut out: Vec<RatchetSolution> = Vec::with_capacity(f0_values.len());
    for &f0 in f0_values {
        let next = match out.last() {
            Some(prev) => continue_to(prev, g_phi, f0),
            None => solve_periodic_stationary(&RatchetProblem { g_phi, f0, grid_points }),
        }
        .map_err(|e| e.in_stage(format!("flux curve at F0 = {f0}")))?;
        out.push(next);
    }
    Ok(out)
}

/// Largest deviation of the points from their least-squares line, relative
/// to the largest `|J0|`. Zero for an exactly linear curve.
pub fn nonlinearity_metric(curve: &[(f64, f64)]) -> f64 {
    let n = curve.len() as f64;
    if curve.len() < 3 {
        return 0.0;
    }
    let mx = curve.iter().map(|p| p.0).sum::<f64>() / n;
    let my = curve.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = curve.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = curve.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let scale = curve.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    curve
        .iter()
        .map(|p| (p.1 - my - slope * (p.0 - mx)).abs())
        .fold(0.0, f64::max)
        / scale
}

fn boltzmann(grid_points: usize) -> Result<RatchetSolution> {
    let grid = Grid::line(grid_points, BoundaryKind::Periodic)?;
    let density = DensityField::from_fn(grid, 1.0, |x| (-potential_sf(x, 0.0)).exp())?;
    Ok(RatchetSolution { density, j0: 0.0, g_phi: 0.0, f0: 0.0, residual: 0.0 })
}

/// Central difference weights for offsets 1..=4.
const STENCIL: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];

fn derivative(p: &[f64], dx: f64) -> Vec<f64> {
    let m = p.len();
    (0..m)
        .map(|i| {
            STENCIL
                .iter()
                .enumerate()
                .map(|(k, w)| w * (p[(i + k + 1) % m] - p[(i + m - k - 1) % m]))
                .sum::<f64>()
                / dx
        })
        .collect()
}

fn residual(p: &[f64], j0: f64, g: f64, vprime: &[f64], dx: f64) -> Vec<f64> {
    let dp = derivative(p, dx);
    let mut r: Vec<f64> = (0..p.len()).map(|i| (1.0 + g * p[i]) * dp[i] + vprime[i] * p[i] + j0).collect();
    r.push(p.iter().sum::<f64>() * dx - 1.0);
    r
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

fn newton(guess: &RatchetSolution, g: f64, f0: f64) -> Result<RatchetSolution> {
    let grid = guess.density.grid;
    let m = grid.nodes();
    let dx = grid.spacing();
    let vprime: Vec<f64> = grid.coords().iter().map(|&x| potential_sf_derivative(x, f0)).collect();
    let mut p = guess.density.values.clone();
    let mut j0 = guess.j0;
    let mut r = residual(&p, j0, g, &vprime, dx);
    let mut norm = max_norm(&r);

    for iteration in 0..MAX_NEWTON {
        if norm < NEWTON_TOL {
            let density = DensityField::new(grid, p, 0.0)?;
            return Ok(RatchetSolution { density, j0, g_phi: g, f0, residual: norm });
        }
        let dp = derivative(&p, dx);
        let mut jac = DMatrix::<f64>::zeros(m + 1, m + 1);
        for i in 0..m {
            let a = (1.0 + g * p[i]) / dx;
            for (k, w) in STENCIL.iter().enumerate() {
                jac[(i, (i + k + 1) % m)] += a * w;
                jac[(i, (i + m - k - 1) % m)] -= a * w;
            }
            jac[(i, i)] += g * dp[i] + vprime[i];
            jac[(i, m)] = 1.0;
            jac[(m, i)] = dx;
        }
        let rhs = -DVector::from_vec(r.clone());
        let delta = jac.lu().solve(&rhs).ok_or_else(|| Error::Newton {
            iterations: iteration,
            residual: norm,
            hint: "singular Jacobian; continue in smaller steps".into(),
            last_iterate: p.clone(),
        })?;

        // Backtrack until the residual decreases.
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = (0..m).map(|i| p[i] + lambda * delta[i]).collect();
            let trial_j = j0 + lambda * delta[m];
            let tr = residual(&trial, trial_j, g, &vprime, dx);
            let tn = max_norm(&tr);
            if tn.is_finite() && (tn < norm || tn < NEWTON_TOL) {
                p = trial;
                j0 = trial_j;
                r = tr;
                norm = tn;
                break;
            }
            lambda *= 0.5;
            if lambda < 1e-4 {
                return Err(Error::Newton {
                    iterations: iteration,
                    residual: norm,
                    hint: "line search failed; continue in smaller steps".into(),
                    last_iterate: p,
                });
            }
        }
    }
    if norm < NEWTON_TOL {
        let density = DensityField::new(grid, p, 0.0)?;
        return Ok(RatchetSolution { density, j0, g_phi: g, f0, residual: norm });
    }
    Err(Error::Newton {
        iterations: MAX_NEWTON,
        residual: norm,
        hint: "no convergence; continue in smaller steps".into(),
        last_iterate: p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn potential_values() {
        assert_eq!(potential_sf(0.0, 3.0), 0.0);
        assert!(potential_sf(0.5, 0.0).abs() < 1e-15);
        assert!((potential_sf(0.25, 1.0) - 0.75).abs() < 1e-15);
        let h = 1e-6;
        let fd = (potential_sf(0.1 + h, 1.3) - potential_sf(0.1 - h, 1.3)) / (2.0 * h);
        assert!((fd - potential_sf_derivative(0.1, 1.3)).abs() < 1e-8);
    }

    #[test]
    fn zero_tilt_boltzmann() {
        let s = solve_periodic_stationary(&RatchetProblem::new(0.0, 0.0)).unwrap();
        assert!(s.j0.abs() < 1e-12);
        let grid = s.density.grid;
        let z: f64 = grid.coords().iter().map(|&x| (-potential_sf(x, 0.0)).exp()).sum::<f64>() * grid.spacing();
        for (x, p) in grid.coords().iter().zip(&s.density.values) {
            assert!((p - (-potential_sf(*x, 0.0)).exp() / z).abs() < 1e-10);
        }
    }

    #[test]
    fn derivative_is_high_order() {
        let m = 64;
        let dx = 1.0 / m as f64;
        let p: Vec<f64> = (0..m).map(|i| (2.0 * PI * (i as f64 * dx)).sin()).collect();
        let d = derivative(&p, dx);
        let err = (0..m)
            .map(|i| (d[i] - 2.0 * PI * (2.0 * PI * i as f64 * dx).cos()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-10);
    }

    #[test]
    fn metric_of_line_is_zero() {
        let line: Vec<(f64, f64)> = (-3..=3).map(|k| (k as f64, 2.0 * k as f64 + 0.5)).collect();
        assert!(nonlinearity_metric(&line) < 1e-15);
        let bent: Vec<(f64, f64)> = (-3..=3).map(|k| (k as f64, (k as f64).powi(3))).collect();
        assert!(nonlinearity_metric(&bent) > 0.1);
    }
}

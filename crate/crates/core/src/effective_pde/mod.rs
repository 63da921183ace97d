//! Effective nonlinear drift-diffusion equation on the unconfined coordinates.
//!
//! The marginal density `p` of one particle obeys
//! `p_t = div[(1 + gamma p) grad p - f p]` with `gamma` set by the
//! [`ModelKind`]. Lines (`d = 1`) and squares (`d = 2`) are supported.

mod field;
mod model;
mod transient;

pub use field::{DensityField, Grid};
pub use model::{BoundaryKind, Domain, Drift, ModelKind, ModelSpec, Normalization, Potential};
pub use transient::{
    solve_transient, solve_transient_detailed, SolveStats, SolverOptions, TransientSolution, NEGATIVE_FLAG,
};

use crate::error::{Error, Result};

/// `int p log p + (gamma/2) p^2 + V p` for the probability density
/// `p = field / mass`, by the trapezoidal rule.
///
/// Its variational derivative `log p + 1 + gamma p + V` is the chemical
/// potential driving the flux, so it decreases along no-flux solutions.
pub fn free_energy(field: &DensityField, model: &ModelSpec) -> Result<f64> {
    let mass = model.mass();
    let grid = field.grid;
    let n = grid.nodes();
    let mut integrand = Vec::with_capacity(field.values.len());
    for (k, &v) in field.values.iter().enumerate() {
        if !(v >= 0.0) {
            return Err(Error::InvalidInput(format!("free energy needs a nonnegative density, found {v}")));
        }
        let p = v / mass;
        let x = grid.coord(k % n);
        let potential = model
            .drift
            .potential_value(x)
            .ok_or_else(|| Error::InvalidInput("free energy needs a potential drift".into()))?;
        let entropy = if p > 0.0 { p * p.ln() } else { 0.0 };
        integrand.push(entropy + 0.5 * model.gamma * p * p + potential * p);
    }
    Ok(grid.integrate(&integrand))
}

/// Minimiser of [`free_energy`] at fixed mass.
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub field: DensityField,
    /// The constant `C` in `log p + gamma p + V = C`.
    pub chemical_potential: f64,
}

/// Solves `log p + gamma p + V(x) = C` with `int p = 1` on a line.
///
/// Each node is found by Newton's method in `log p` (monotone convergence
/// from above), and `C` by a safeguarded Newton iteration on the mass.
pub fn steady_state_noflux(model: &ModelSpec, nodes: usize) -> Result<SteadyState> {
    if model.domain.dim() != 1 {
        return Err(Error::InvalidInput("stationary solve is implemented on a line".into()));
    }
    let grid = Grid::line(nodes, model.bc)?;
    let xs = grid.coords();
    let v: Vec<f64> = xs
        .iter()
        .map(|&x| model.drift.potential_value(x))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::InvalidInput("stationary solve needs a potential drift".into()))?;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("potential is not finite on the domain".into()));
    }
    let gamma = model.gamma;

    let profile = |c: f64| -> Vec<f64> { v.iter().map(|vi| solve_log_relation(c - vi, gamma)).collect() };
    let mass_and_slope = |p: &[f64]| -> (f64, f64) {
        let slope: Vec<f64> = p.iter().map(|pi| pi / (1.0 + gamma * pi)).collect();
        (grid.integrate(p), grid.integrate(&slope))
    };

    // Boltzmann start, then bracket and refine.
    let boltz: Vec<f64> = v.iter().map(|vi| (-vi).exp()).collect();
    let mut c = -grid.integrate(&boltz).ln() + gamma;
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut p = profile(c);
    let mut residual = f64::INFINITY;
    for _ in 0..200 {
        let (mass, slope) = mass_and_slope(&p);
        residual = mass - 1.0;
        if residual.abs() < 1e-14 {
            break;
        }
        if residual > 0.0 {
            hi = hi.min(c);
        } else {
            lo = lo.max(c);
        }
        let mut next = c - residual / slope;
        if !(next > lo && next < hi) {
            next = if lo.is_finite() && hi.is_finite() { 0.5 * (lo + hi) } else { c - residual.signum() };
        }
        c = next;
        p = profile(c);
    }
    if residual.abs() > 1e-12 {
        return Err(Error::Newton {
            iterations: 200,
            residual: residual.abs(),
            hint: "mass constraint did not converge".into(),
            last_iterate: p,
        });
    }
    let mut field = DensityField::new(grid, p, 0.0)?;
    field.rescale(model.mass())?;
    Ok(SteadyState { field, chemical_potential: c })
}

/// Root `p` of `log p + gamma p = rhs`.
fn solve_log_relation(rhs: f64, gamma: f64) -> f64 {
    if gamma == 0.0 {
        return rhs.exp();
    }
    // q = log p; q + gamma e^q is convex and increasing, so Newton from
    // the upper bound q = rhs converges monotonically.
    let mut q = rhs;
    for _ in 0..400 {
        let e = q.exp();
        let f = q + gamma * e - rhs;
        let step = f / (1.0 + gamma * e);
        q -= step;
        if step.abs() <= 1e-15 * q.abs().max(1.0) {
            break;
        }
    }
    q.exp()
}

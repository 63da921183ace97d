use crate::effective_pde::{BoundaryKind, DensityField};
use crate::error::{Error, Result};
use crate::particle_sim::EnsembleHistogram;

/// A density sampled at points along `x`, optionally with standard errors
/// (Monte Carlo histograms).
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub x: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Option<Vec<f64>>,
}

impl Profile {
    pub fn new(x: Vec<f64>, values: Vec<f64>, stderr: Option<Vec<f64>>) -> Result<Self> {
        if x.len() != values.len() || stderr.as_ref().is_some_and(|s| s.len() != x.len()) {
            return Err(Error::InvalidInput("profile arrays differ in length".into()));
        }
        if x.len() < 2 || x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("profile needs at least two increasing abscissae".into()));
        }
        Ok(Self { x, values, stderr })
    }

    /// Marginal along `x` of a field, normalised to unit mass. Periodic
    /// fields get the image of the first node appended at `x = 1/2`.
    pub fn from_field(field: &DensityField) -> Result<Self> {
        let mass = field.integral();
        let mut x = field.grid.coords();
        let mut values: Vec<f64> = field.marginal_x().iter().map(|v| v / mass).collect();
        if field.grid.bc() == BoundaryKind::Periodic {
            x.push(0.5);
            values.push(values[0]);
        }
        Self::new(x, values, None)
    }

    /// Histogram at output index `k`, located at bin centres.
    pub fn from_histogram(hist: &EnsembleHistogram, k: usize) -> Result<Self> {
        if k >= hist.density.len() {
            return Err(Error::InvalidInput(format!("histogram has no output {k}")));
        }
        Self::new(hist.bin_centres.clone(), hist.density[k].clone(), Some(hist.stderr[k].clone()))
    }

    fn range(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    /// Linear interpolation; `None` outside the sampled range.
    pub fn interpolate(&self, x: f64) -> Option<f64> {
        let (lo, hi) = self.range();
        let tol = 1e-12;
        if x < lo - tol || x > hi + tol {
            return None;
        }
        let k = self.x.partition_point(|&v| v <= x).clamp(1, self.x.len() - 1);
        let (x0, x1) = (self.x[k - 1], self.x[k]);
        let t = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
        Some(self.values[k - 1] + t * (self.values[k] - self.values[k - 1]))
    }

    /// `max - min` of the values.
    pub fn spread(&self) -> f64 {
        let max = self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }

    /// Averages of the interpolant over `bins` equal cells spanning the
    /// sampled range, located at the cell centres.
    pub fn bin_average(&self, bins: usize) -> Result<Self> {
        if bins < 2 {
            return Err(Error::InvalidInput("need at least two bins".into()));
        }
        let (lo, hi) = self.range();
        let w = (hi - lo) / bins as f64;
        let mut x = Vec::with_capacity(bins);
        let mut values = Vec::with_capacity(bins);
        for b in 0..bins {
            let (a, c) = (lo + b as f64 * w, lo + (b + 1) as f64 * w);
            let mut knots = vec![a];
            knots.extend(self.x.iter().copied().filter(|&v| v > a && v < c));
            knots.push(c);
            let f = |v: f64| self.interpolate(v.clamp(lo, hi)).unwrap_or(0.0);
            let area: f64 = knots.windows(2).map(|k| 0.5 * (k[1] - k[0]) * (f(k[0]) + f(k[1]))).sum();
            x.push(0.5 * (a + c));
            values.push(area / w);
        }
        Self::new(x, values, None)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    /// `||a - b|| / ||b||` on the common points.
    pub rel_l2: f64,
    pub linf: f64,
    /// `(a - b) / se` at the bins of whichever input carries errors.
    pub z_scores: Vec<f64>,
    pub points: usize,
}

impl ComparisonReport {
    pub fn max_abs_z(&self) -> f64 {
        self.z_scores.iter().fold(0.0, |m, z| m.max(z.abs()))
    }

    pub fn summary(&self) -> String {
        format!(
            "rel_l2={:.6e} linf={:.6e} max_abs_z={:.3} points={}",
            self.rel_l2,
            self.linf,
            self.max_abs_z(),
            self.points
        )
    }
}

/// Compares `a` against the reference `b` on the finer of the two point
/// sets, restricted to where both are defined.
pub fn compare_densities(a: &Profile, b: &Profile) -> Result<ComparisonReport> {
    let fine = if a.x.len() >= b.x.len() { &a.x } else { &b.x };
    let mut diff2 = 0.0;
    let mut ref2 = 0.0;
    let mut linf: f64 = 0.0;
    let mut points = 0;
    for &x in fine {
        if let (Some(va), Some(vb)) = (a.interpolate(x), b.interpolate(x)) {
            let d = va - vb;
            diff2 += d * d;
            ref2 += vb * vb;
            linf = linf.max(d.abs());
            points += 1;
        }
    }
    if points == 0 {
        return Err(Error::InvalidInput("profiles have disjoint domains".into()));
    }
    let rel_l2 = if ref2 > 0.0 { (diff2 / ref2).sqrt() } else { diff2.sqrt() };

    let mut z_scores = Vec::new();
    for (with_err, other, sign) in [(b, a, 1.0), (a, b, -1.0)] {
        if let Some(se) = &with_err.stderr {
            for (k, &x) in with_err.x.iter().enumerate() {
                if let Some(v) = other.interpolate(x) {
                    if se[k] > 0.0 {
                        z_scores.push(sign * (v - with_err.values[k]) / se[k]);
                    }
                }
            }
            break;
        }
    }
    Ok(ComparisonReport { rel_l2, linf, z_scores, points })
}

use crate::error::{Error, Result};

use super::model::BoundaryKind;

/// Uniform nodes on `[-1/2, 1/2]` (per axis).
///
/// No-flux grids include both endpoints; periodic grids omit `x = 1/2`,
/// which is identified with `x = -1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid {
    nodes: usize,
    bc: BoundaryKind,
    dim: usize,
}

impl Grid {
    pub fn new(nodes: usize, bc: BoundaryKind, dim: usize) -> Result<Self> {
        if nodes < 8 {
            return Err(Error::InvalidInput(format!("grid needs at least 8 nodes, got {nodes}")));
        }
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidInput(format!("unsupported dimension {dim}")));
        }
        Ok(Self { nodes, bc, dim })
    }

    pub fn line(nodes: usize, bc: BoundaryKind) -> Result<Self> {
        Self::new(nodes, bc, 1)
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn bc(&self) -> BoundaryKind {
        self.bc
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of values stored for a field on this grid.
    pub fn len(&self) -> usize {
        self.nodes.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        match self.bc {
            BoundaryKind::NoFlux => 1.0 / (self.nodes - 1) as f64,
            BoundaryKind::Periodic => 1.0 / self.nodes as f64,
        }
    }

    pub fn coord(&self, i: usize) -> f64 {
        -0.5 + i as f64 * self.spacing()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.nodes).map(|i| self.coord(i)).collect()
    }

    /// Trapezoidal weight of node `i` along one axis.
    pub fn weight(&self, i: usize) -> f64 {
        let dx = self.spacing();
        match self.bc {
            BoundaryKind::NoFlux if i == 0 || i + 1 == self.nodes => 0.5 * dx,
            _ => dx,
        }
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        let n = self.nodes;
        match self.dim {
            1 => values.iter().enumerate().map(|(i, v)| self.weight(i) * v).sum(),
            _ => (0..n)
                .map(|j| {
                    let row: f64 = (0..n).map(|i| self.weight(i) * values[j * n + i]).sum();
                    self.weight(j) * row
                })
                .sum(),
        }
    }
}

/// Nodal values of an effective density at a given time.
///
/// Two-dimensional fields are stored row-major with `x` varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub time: f64,
}

impl DensityField {
    pub fn new(grid: Grid, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "field has {} values for a grid of {}",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("field contains non-finite values".into()));
        }
        Ok(Self { grid, values, time })
    }

    /// Samples `f(x)` (constant in the second direction) and rescales to `mass`.
    pub fn from_fn(grid: Grid, mass: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let profile: Vec<f64> = grid.coords().into_iter().map(f).collect();
        let values = match grid.dim() {
            1 => profile,
            _ => (0..grid.nodes()).flat_map(|_| profile.iter().copied()).collect(),
        };
        let mut field = Self::new(grid, values, 0.0)?;
        field.rescale(mass)?;
        Ok(field)
    }

    pub fn uniform(grid: Grid, mass: f64) -> Result<Self> {
        Self::from_fn(grid, mass, |_| 1.0)
    }

    /// Uniform on `|x - centre| <= half_width`, with nodes lying exactly on
    /// an edge set to half the plateau value.
    pub fn top_hat(grid: Grid, centre: f64, half_width: f64, mass: f64) -> Result<Self> {
        let tol = 1e-9 * grid.spacing();
        Self::from_fn(grid, mass, |x| {
            let d = (x - centre).abs() - half_width;
            if d < -tol {
                1.0
            } else if d <= tol {
                0.5
            } else {
                0.0
            }
        })
    }

    pub fn integral(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    pub fn rescale(&mut self, mass: f64) -> Result<()> {
        let total = self.integral();
        if !(total > 0.0) {
            return Err(Error::InvalidInput("cannot normalise a field with nonpositive integral".into()));
        }
        let s = mass / total;
        self.values.iter_mut().for_each(|v| *v *= s);
        Ok(())
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Profile along `x`, integrating out the second direction if present.
    pub fn marginal_x(&self) -> Vec<f64> {
        let n = self.grid.nodes();
        match self.grid.dim() {
            1 => self.values.clone(),
            _ => (0..n)
                .map(|i| (0..n).map(|j| self.grid.weight(j) * self.values[j * n + i]).sum())
                .collect(),
        }
    }

    /// Second central moment along `x` of a one-dimensional field.
    pub fn variance(&self) -> f64 {
        let p = self.marginal_x();
        let w: Vec<f64> = (0..self.grid.nodes()).map(|i| self.grid.weight(i) * p[i]).collect();
        let mass: f64 = w.iter().sum();
        let mean: f64 = w.iter().enumerate().map(|(i, wi)| wi * self.grid.coord(i)).sum::<f64>() / mass;
        w.iter()
            .enumerate()
            .map(|(i, wi)| wi * (self.grid.coord(i) - mean).powi(2))
            .sum::<f64>()
            / mass
    }
}

use crate::coefficients::Case;
use crate::effective_pde::BoundaryKind;
use crate::error::{Error, Result};

/// Particle centre in physical coordinates; unused axes stay zero.
pub type Point = [f64; 3];

/// Box available to particle centres: `x` in `[-1/2, 1/2]`, confined axes
/// in `[-eps h / 2, eps h / 2]`. Between plates the second axis is
/// unconfined and shares the boundary kind of `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    case: Case,
    h: f64,
    eps: f64,
    x_bc: BoundaryKind,
}

impl Channel {
    pub fn new(case: Case, h: f64, eps: f64, x_bc: BoundaryKind) -> Result<Self> {
        if case == Case::Rect {
            return Err(Error::InvalidInput("particle simulation supports nc2, nc3 and pp".into()));
        }
        if !(h.is_finite() && h >= 0.0) {
            return Err(Error::Domain(format!("confinement parameter h = {h} must be >= 0")));
        }
        if !(eps.is_finite() && (0.0..0.5).contains(&eps)) {
            return Err(Error::InvalidInput(format!("particle diameter {eps} must lie in [0, 0.5)")));
        }
        Ok(Self { case, h, eps, x_bc })
    }

    pub fn case(&self) -> Case {
        self.case
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn x_bc(&self) -> BoundaryKind {
        self.x_bc
    }

    pub fn dim(&self) -> usize {
        self.case.physical_dim()
    }

    /// Physical half-width of the confined coordinates.
    pub fn half_width(&self) -> f64 {
        0.5 * self.eps * self.h
    }

    pub fn is_confined(&self, axis: usize) -> bool {
        match self.case {
            Case::Pp => axis == 2,
            _ => axis > 0,
        }
    }

    pub fn is_periodic(&self, axis: usize) -> bool {
        !self.is_confined(axis) && self.x_bc == BoundaryKind::Periodic
    }

    pub fn bounds(&self, axis: usize) -> (f64, f64) {
        if self.is_confined(axis) {
            (-self.half_width(), self.half_width())
        } else {
            (-0.5, 0.5)
        }
    }

    /// Folds reflecting axes and wraps periodic ones.
    pub fn place(&self, p: &mut Point) {
        for (axis, v) in p.iter_mut().enumerate().take(self.dim()) {
            let (lo, hi) = self.bounds(axis);
            *v = if self.is_periodic(axis) { wrap_periodic(*v, lo, hi) } else { reflect_walls(*v, lo, hi) };
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0..self.dim()).all(|axis| {
            let (lo, hi) = self.bounds(axis);
            if self.is_periodic(axis) {
                p[axis] >= lo && p[axis] < hi
            } else {
                p[axis] >= lo && p[axis] <= hi
            }
        })
    }

    /// Separation `b - a` using the minimal image along periodic axes.
    pub fn separation(&self, a: &Point, b: &Point) -> Point {
        let mut d = [0.0; 3];
        for axis in 0..self.dim() {
            let mut v = b[axis] - a[axis];
            if self.is_periodic(axis) {
                v -= v.round();
            }
            d[axis] = v;
        }
        d
    }
}

/// Specular reflection into `[lo, hi]`, iterated until inside.
///
/// The iterated fold is periodic with period `2 (hi - lo)`, so excursions
/// of any length are handled in closed form.
pub fn reflect_walls(v: f64, lo: f64, hi: f64) -> f64 {
    if v >= lo && v <= hi {
        return v;
    }
    let width = hi - lo;
    if width <= 0.0 {
        return lo;
    }
    let mut u = (v - lo).rem_euclid(2.0 * width);
    if u > width {
        u = 2.0 * width - u;
    }
    (lo + u).clamp(lo, hi)
}

/// Wraps into `[lo, hi)`.
pub fn wrap_periodic(v: f64, lo: f64, hi: f64) -> f64 {
    if v >= lo && v < hi {
        return v;
    }
    let width = hi - lo;
    let w = lo + (v - lo).rem_euclid(width);
    if w >= hi {
        lo
    } else {
        w
    }
}

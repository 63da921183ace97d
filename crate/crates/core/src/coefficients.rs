//! Excluded-volume coefficients of the effective narrow-domain equation.
//!
//! All lengths are in units of the particle diameter: `h` is the width (or
//! plate gap) available to particle centres, so the physical width is
//! `epsilon * (h + 1)`.
//!
//! `alpha_h` multiplies `(N - 1) epsilon^{d_e} p` inside the collective
//! diffusivity. It is the integral over the confined coordinates of the
//! second moment of the contact surface, divided by the squared
//! cross-section, and has closed forms for the two- and three-dimensional
//! channels, parallel plates and `h x m` rectangular channels.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this width the closed forms lose digits to cancellation
/// (`O(eps / h^4)` for the square channel) and a Taylor series is used.
const SERIES_THRESHOLD: f64 = 0.1;
const SERIES_TERMS: usize = 14;

/// Confinement geometry of the physical domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    /// Two-dimensional channel of width `h`.
    Nc2,
    /// Three-dimensional channel with square `h x h` cross-section.
    Nc3,
    /// Two parallel plates a distance `h` apart.
    Pp,
    /// Three-dimensional channel with rectangular `h x m` cross-section.
    Rect,
}

impl Case {
    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "nc2" => Ok(Case::Nc2),
            "nc3" => Ok(Case::Nc3),
            "pp" => Ok(Case::Pp),
            "rect" => Ok(Case::Rect),
            other => Err(Error::InvalidInput(format!("unknown geometry case `{other}`"))),
        }
    }

    /// Number of unconfined (effective) dimensions.
    pub fn effective_dim(self) -> usize {
        match self {
            Case::Pp => 2,
            Case::Nc2 | Case::Nc3 | Case::Rect => 1,
        }
    }

    /// Dimension of the physical domain.
    pub fn physical_dim(self) -> usize {
        match self {
            Case::Nc2 => 2,
            Case::Nc3 | Case::Pp | Case::Rect => 3,
        }
    }

    /// Unconfined excluded volume in units of `epsilon^d`: the disc area
    /// `pi` in two dimensions, the sphere volume `4 pi / 3` in three.
    pub fn bulk_alpha(self) -> f64 {
        match self {
            Case::Nc2 => PI,
            Case::Nc3 | Case::Pp | Case::Rect => 4.0 * PI / 3.0,
        }
    }
}

impl std::fmt::Display for Case {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Case::Nc2 => "nc2",
            Case::Nc3 => "nc3",
            Case::Pp => "pp",
            Case::Rect => "rect",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    case: Case,
    h: f64,
    m: f64,
}

impl Geometry {
    /// `m` is only read for [`Case::Rect`].
    pub fn new(case: Case, h: f64, m: f64) -> Result<Self> {
        if !h.is_finite() || h < 0.0 {
            return Err(Error::Domain(format!("confinement parameter h = {h} must be finite and >= 0")));
        }
        if case == Case::Rect && !(m.is_finite() && m > 0.0) {
            return Err(Error::Domain(format!("rectangular side m = {m} must be finite and > 0")));
        }
        let m = if case == Case::Rect { m } else { h };
        Ok(Self { case, h, m })
    }

    pub fn nc2(h: f64) -> Result<Self> {
        Self::new(Case::Nc2, h, h)
    }

    pub fn nc3(h: f64) -> Result<Self> {
        Self::new(Case::Nc3, h, h)
    }

    pub fn pp(h: f64) -> Result<Self> {
        Self::new(Case::Pp, h, h)
    }

    pub fn rect(h: f64, m: f64) -> Result<Self> {
        Self::new(Case::Rect, h, m)
    }

    pub fn case(&self) -> Case {
        self.case
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn effective_dim(&self) -> usize {
        self.case.effective_dim()
    }

    /// Rescaled cross-section `A` available to particle centres.
    pub fn cross_section(&self) -> f64 {
        match self.case {
            Case::Nc2 | Case::Pp => self.h,
            Case::Nc3 => self.h * self.h,
            Case::Rect => self.h * self.m,
        }
    }

    /// Physical cross-section (including the particle radius on each side).
    fn physical_cross_section(&self) -> f64 {
        match self.case {
            Case::Nc2 | Case::Pp => self.h + 1.0,
            Case::Nc3 => (self.h + 1.0) * (self.h + 1.0),
            Case::Rect => (self.h + 1.0) * (self.m + 1.0),
        }
    }
}

/// Coefficients of the effective equation for a given population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientBundle {
    pub alpha: f64,
    pub g: f64,
    pub phi: f64,
    pub excluded_volume: f64,
}

/// Excluded-volume coefficient `alpha_h` (or `alpha_hm` for rectangles).
pub fn alpha(geom: &Geometry) -> Result<f64> {
    let h = geom.h;
    let value = match geom.case {
        Case::Nc2 => alpha_nc2(h),
        Case::Nc3 => alpha_nc3(h),
        Case::Pp => alpha_pp(h),
        Case::Rect => {
            // Symmetric under swapping the two sides of the cross-section.
            let (h, m) = if geom.m >= 1.0 { (h, geom.m) } else { (geom.m, h) };
            if m < 1.0 {
                return Err(Error::Domain(format!(
                    "rectangular cross-section {h} x {m}: closed form requires one side >= 1"
                )));
            }
            alpha_rect(h, m)
        }
    };
    Ok(value)
}

/// Concentration-form nonlinearity `g_h`, so that the collective
/// diffusivity reads `1 + g_h c` for the volume concentration `c`.
pub fn g_coefficient(geom: &Geometry) -> Result<f64> {
    let a = alpha(geom)?;
    Ok(g_prefactor(geom.case) * geom.physical_cross_section() * a)
}

/// Total volume fraction of `n` particles of diameter `epsilon`, relative
/// to the physical volume of the channel.
pub fn volume_fraction(geom: &Geometry, n_particles: usize, epsilon: f64) -> f64 {
    let n = n_particles as f64;
    let scaled = match geom.effective_dim() {
        1 => epsilon,
        _ => epsilon * epsilon,
    };
    n * scaled / (g_prefactor(geom.case) * geom.physical_cross_section())
}

/// Particle diameter giving volume fraction `phi` for `n_particles`;
/// the inverse of [`volume_fraction`].
pub fn diameter_for_fraction(geom: &Geometry, n_particles: usize, phi: f64) -> f64 {
    let scaled = phi * g_prefactor(geom.case) * geom.physical_cross_section() / n_particles as f64;
    match geom.effective_dim() {
        1 => scaled,
        _ => scaled.sqrt(),
    }
}

fn g_prefactor(case: Case) -> f64 {
    match case {
        Case::Nc2 => 4.0 / PI,
        Case::Nc3 | Case::Pp | Case::Rect => 6.0 / PI,
    }
}

pub fn bundle(geom: &Geometry, n_particles: usize, epsilon: f64) -> Result<CoefficientBundle> {
    if n_particles == 0 {
        return Err(Error::InvalidInput("population must contain at least one particle".into()));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidInput(format!("particle diameter {epsilon} must be > 0")));
    }
    let alpha = alpha(geom)?;
    let phi = volume_fraction(geom, n_particles, epsilon);
    if phi >= 1.0 {
        return Err(Error::DiluteRegime { phi });
    }
    Ok(CoefficientBundle {
        alpha,
        g: g_prefactor(geom.case) * geom.physical_cross_section() * alpha,
        phi,
        excluded_volume: alpha * geom.cross_section(),
    })
}

/// The limiting models the narrow-channel equation interpolates between.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitModel {
    PointParticles,
    /// Hard rods on a line; concentration measured per rod length.
    SingleFile,
    /// Unconfined hard spheres (`h -> infinity`).
    Bulk,
}

/// Nonlinear coefficient of the limiting models in concentration form.
///
/// The single-file value uses the rod-length volume fraction `N epsilon`,
/// so it is 2 rather than the `h -> 0` limit `8 / pi` of [`g_coefficient`]
/// for the two-dimensional channel. The two are different normalisations and
/// are intentionally not reconciled. Returns `None` where the limit is not
/// defined (single file between plates).
pub fn limiting_g(case: Case, model: LimitModel) -> Option<f64> {
    match model {
        LimitModel::PointParticles => Some(0.0),
        LimitModel::SingleFile => match case {
            Case::Nc2 | Case::Nc3 | Case::Rect => Some(2.0),
            Case::Pp => None,
        },
        LimitModel::Bulk => Some(g_prefactor(case) * case.bulk_alpha()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalWidth {
    pub h_star: f64,
    pub g_max: f64,
}

/// Width that maximises `g_h` at fixed volume fraction.
pub fn optimal_h(case: Case) -> Result<OptimalWidth> {
    if case == Case::Rect {
        return Err(Error::InvalidInput("optimal width is defined for nc2, nc3 and pp".into()));
    }
    let g = |h: f64| g_coefficient(&Geometry { case, h, m: h }).expect("h in bracket is valid");
    let h_star = golden_section_max(g, 0.5, 5.0, 1e-6);
    Ok(OptimalWidth { h_star, g_max: g(h_star) })
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Width of each lane when a channel of width `h_total` is split by
/// zero-thickness walls into `n_lanes` identical lanes.
///
/// Square channels are split along both sides, so `n_lanes` must be a perfect
/// square there.
pub fn lane_width(case: Case, h_total: f64, n_lanes: usize) -> Result<f64> {
    if n_lanes == 0 {
        return Err(Error::InvalidInput("need at least one lane".into()));
    }
    if !(h_total.is_finite() && h_total > 0.0) {
        return Err(Error::Domain(format!("total width h = {h_total} must be > 0")));
    }
    let per_side = match case {
        Case::Nc2 | Case::Pp => n_lanes,
        Case::Nc3 => {
            let k = (n_lanes as f64).sqrt().round() as usize;
            if k * k != n_lanes {
                return Err(Error::InvalidInput(format!(
                    "square channel can only be split into k^2 lanes, got {n_lanes}"
                )));
            }
            k
        }
        Case::Rect => {
            return Err(Error::InvalidInput("subdivision is defined for nc2, nc3 and pp".into()))
        }
    };
    let h_lane = (h_total + 1.0) / per_side as f64 - 1.0;
    if h_lane < 0.0 {
        return Err(Error::Infeasible(format!(
            "{n_lanes} lanes of a width-{h_total} channel are narrower than one particle diameter"
        )));
    }
    Ok(h_lane)
}

/// Relative change of `g_h` obtained by subdividing a channel into lanes.
pub fn subdivision_gain(case: Case, h_total: f64, n_lanes: usize) -> Result<f64> {
    let h_lane = lane_width(case, h_total, n_lanes)?;
    let g_total = g_coefficient(&Geometry::new(case, h_total, h_total)?)?;
    let g_lane = g_coefficient(&Geometry::new(case, h_lane, h_lane)?)?;
    Ok(g_lane / g_total - 1.0)
}

/// Jump of `alpha` across a branch boundary of the piecewise closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchJump {
    pub at: f64,
    pub below: f64,
    pub above: f64,
}

impl BranchJump {
    pub fn size(&self) -> f64 {
        (self.below - self.above).abs()
    }
}

/// Evaluates both adjacent branch expressions exactly at each breakpoint.
pub fn branch_jumps(case: Case) -> Vec<BranchJump> {
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    match case {
        Case::Nc2 => vec![BranchJump {
            at: 1.0,
            below: nc2_bracket(1.0, true),
            above: nc2_bracket(1.0, false),
        }],
        Case::Pp => vec![BranchJump {
            at: 1.0,
            below: PI / 6.0 * (6.0 - 1.0),
            above: PI / 6.0 * (8.0 - 3.0),
        }],
        Case::Nc3 => vec![
            BranchJump {
                at: golden,
                below: (nc3_s(golden) + nc3_sigma_a(golden)) / golden.powi(4),
                above: (nc3_s(golden) + nc3_sigma_b(golden)) / golden.powi(4),
            },
            BranchJump {
                at: FRAC_1_SQRT_2,
                below: (nc3_s(FRAC_1_SQRT_2) + nc3_sigma_b(FRAC_1_SQRT_2)) / 0.25,
                above: nc3_s(FRAC_1_SQRT_2) / 0.25,
            },
            BranchJump {
                at: 1.0,
                below: nc3_s(1.0),
                above: 4.0 * PI / 3.0 - PI + 8.0 / 15.0,
            },
        ],
        Case::Rect => vec![BranchJump {
            at: 1.0,
            below: rect_bracket(1.0, 2.0, true) / 4.0,
            above: rect_bracket(1.0, 2.0, false) / 4.0,
        }],
    }
}

// ---------------------------------------------------------------------------
// Closed forms

fn alpha_nc2(h: f64) -> f64 {
    if h == 0.0 {
        2.0
    } else if h < SERIES_THRESHOLD {
        nc2_series(h)
    } else {
        nc2_bracket(h, h <= 1.0) / (h * h)
    }
}

/// `M_1(h)`: second moment of the contact circle integrated across the channel.
fn nc2_bracket(h: f64, narrow: bool) -> f64 {
    let mut m1 = PI * h - 4.0 / 3.0;
    if narrow {
        let root = (1.0 - h * h).max(0.0).sqrt();
        m1 += 2.0 / 3.0 * (2.0 + h * h) * root - 2.0 * h * h.min(1.0).acos();
    }
    m1
}

fn alpha_nc3(h: f64) -> f64 {
    if h == 0.0 {
        return 2.0;
    }
    if h < SERIES_THRESHOLD {
        return nc3_series(h);
    }
    let h4 = h.powi(4);
    if h >= 1.0 {
        return (4.0 * PI / 3.0 * h * h - PI * h + 8.0 / 15.0) / h4;
    }
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let branch = if h <= golden {
        nc3_sigma_a(h)
    } else if h <= FRAC_1_SQRT_2 {
        nc3_sigma_b(h)
    } else {
        0.0
    };
    (nc3_s(h) + branch) / h4
}

/// Inverse cotangent on the principal branch `atan(1/x)`. Its arguments below
/// pass through `+-infinity` (not zero) inside the branch intervals, and only
/// this branch keeps `sigma_a`, `sigma_b` continuous there.
///
/// A signed zero picks the one-sided limit: at `h = 1/sqrt(2)` the argument
/// reaches zero from below and evaluates to `-0.0`.
fn arccot(x: f64) -> f64 {
    (1.0 / x).atan()
}

fn nc3_s(h: f64) -> f64 {
    let h2 = h * h;
    let root = (1.0 - h2).max(0.0).sqrt();
    8.0 / 15.0 + 2.0 / 15.0 * root * (2.0 * h2 * h2 - 9.0 * h2 - 8.0)
        - PI / 3.0 * h * (h2 * h2 - 6.0 * h2 + 4.0 * h - 3.0)
        - 2.0 * h * h.min(1.0).asin()
}

fn nc3_sigma_a(h: f64) -> f64 {
    let h2 = h * h;
    let h4 = h2 * h2;
    let r1 = (1.0 - 2.0 * h2).max(0.0).sqrt();
    let r2 = (1.0 - h2).sqrt();
    2.0 / 15.0 * r1 * (h4 + 9.0 * h2 + 4.0)
        + PI / 12.0 * h * (3.0 * h4 - 18.0 * h2 + 16.0 * h - 9.0)
        + h * h2 * (h2 - 6.0) / 6.0 * arccot(2.0 * h * r1 / (1.0 - 3.0 * h2))
        - 4.0 / 3.0 * h2 * arccot((1.0 - 2.0 * h2 - h4) / (2.0 * h2 * r1))
        - 0.5
            * h
            * arccot(
                (2.0 * h * r1 * r1 * r1 + 2.0 * h * r2 * (3.0 * h2 - 1.0))
                    / (1.0 - 5.0 * h2 + 6.0 * h4 + 4.0 * h2 * r1 * r2),
            )
        + h * h.asin()
        - h * (h4 - 6.0 * h2 - 3.0) / 3.0 * (h / r2).asin()
}

fn nc3_sigma_b(h: f64) -> f64 {
    let h2 = h * h;
    let h4 = h2 * h2;
    let r1 = (1.0 - 2.0 * h2).max(0.0).sqrt();
    2.0 / 15.0 * r1 * (h4 + 9.0 * h2 + 4.0)
        + PI / 12.0 * h * (2.0 * h4 - 12.0 * h2 + 8.0 * h - 3.0)
        + h * h2 * (h2 - 6.0) / 3.0 * arccot(2.0 * h * r1 / (1.0 - 3.0 * h2))
        + 4.0 / 3.0 * h2 * ((1.0 - 2.0 * h2 - h4) / (2.0 * h2 * r1)).atan()
        + 0.5 * h * arccot(4.0 * h * r1 * (3.0 * h2 - 1.0) / (1.0 - 10.0 * h2 + 17.0 * h4))
}

fn alpha_pp(h: f64) -> f64 {
    if h == 0.0 {
        PI
    } else if h <= 1.0 {
        PI / 6.0 * (6.0 - h * h)
    } else {
        PI / (6.0 * h * h) * (8.0 * h - 3.0)
    }
}

/// Rectangular `h x m` channel with `m >= 1`.
fn alpha_rect(h: f64, m: f64) -> f64 {
    if h < SERIES_THRESHOLD {
        // Leading part of the narrow branch with the h^2 factored out.
        let tail: f64 = rect_series_coefficients()
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, r)| r * h.powi(2 * k as i32 - 2))
            .sum();
        return (PI * m * (1.0 - h * h / 6.0) + tail) / (m * m);
    }
    rect_bracket(h, m, h < 1.0) / (h * h * m * m)
}

fn rect_bracket(h: f64, m: f64, narrow: bool) -> f64 {
    if narrow {
        let root = (1.0 - h * h).max(0.0).sqrt();
        8.0 / 15.0 + PI * m * h * h * (1.0 - h * h / 6.0) - h * h.min(1.0).asin()
            + root / 15.0 * (2.0 * h.powi(4) - 9.0 * h * h - 8.0)
    } else {
        8.0 / 15.0 + 4.0 * PI / 3.0 * h * m - PI / 2.0 * (h + m)
    }
}

// ---------------------------------------------------------------------------
// Small-h series

/// Taylor coefficients of `sqrt(1 - u)` in powers of `u`.
fn sqrt_coefficients() -> [f64; SERIES_TERMS + 1] {
    let mut c = [0.0; SERIES_TERMS + 1];
    c[0] = 1.0;
    for k in 1..=SERIES_TERMS {
        c[k] = c[k - 1] * (k as f64 - 1.5) / k as f64;
    }
    c
}

/// `int_0^h u^{2j} (h - u) du / h^{2j+2}`.
fn tent_moment(j: usize) -> f64 {
    let n = 2.0 * j as f64;
    1.0 / ((n + 1.0) * (n + 2.0))
}

fn nc2_series(h: f64) -> f64 {
    let c = sqrt_coefficients();
    let h2 = h * h;
    let mut sum = 0.0;
    for k in (0..=SERIES_TERMS).rev() {
        sum = sum * h2 + c[k] * tent_moment(k);
    }
    4.0 * sum
}

fn nc3_series(h: f64) -> f64 {
    let c = sqrt_coefficients();
    let h2 = h * h;
    let mut sum = 0.0;
    for k in (0..=SERIES_TERMS).rev() {
        let mut binom = 1.0;
        let mut inner = 0.0;
        for j in 0..=k {
            inner += binom * tent_moment(j) * tent_moment(k - j);
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
        sum = sum * h2 + c[k] * inner;
    }
    8.0 * sum
}

/// Coefficients `r_k` of `8/15 - h asin(h) + sqrt(1-h^2)(2h^4 - 9h^2 - 8)/15`
/// in powers of `h^2`. `r_0` vanishes identically.
fn rect_series_coefficients() -> [f64; SERIES_TERMS + 1] {
    let c = sqrt_coefficients();
    let get = |k: isize| if k < 0 { 0.0 } else { c[k as usize] };
    let mut asin = [0.0; SERIES_TERMS + 1];
    let mut central = 1.0;
    for k in 0..=SERIES_TERMS {
        if k > 0 {
            central *= (2 * k - 1) as f64 / (2 * k) as f64;
        }
        asin[k] = central / (2 * k + 1) as f64;
    }
    let mut r = [0.0; SERIES_TERMS + 1];
    for n in 0..=SERIES_TERMS {
        let k = n as isize;
        let mut value = (2.0 * get(k - 2) - 9.0 * get(k - 1) - 8.0 * get(k)) / 15.0;
        if n == 0 {
            value += 8.0 / 15.0;
        } else {
            value -= asin[n - 1];
        }
        r[n] = value;
    }
    r[0] = 0.0;
    r
}

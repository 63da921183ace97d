use std::fmt;
use std::sync::Arc;

use crate::coefficients::{alpha, Case, Geometry};
use crate::error::{Error, Result};

/// A potential `V(x)` on the effective domain; the drift it induces is `-V'`.
pub trait Potential: Send + Sync + fmt::Debug {
    fn value(&self, x: f64) -> f64;
    fn derivative(&self, x: f64) -> f64;
}

#[derive(Clone)]
pub enum Drift {
    None,
    Potential(Arc<dyn Potential>),
    /// Force field without a potential. Free energies cannot be evaluated.
    Force(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Drift {
    pub fn potential(v: impl Potential + 'static) -> Self {
        Drift::Potential(Arc::new(v))
    }

    pub fn force(&self, x: f64) -> f64 {
        match self {
            Drift::None => 0.0,
            Drift::Potential(v) => -v.derivative(x),
            Drift::Force(f) => f(x),
        }
    }

    /// `Some(V(x))` when the drift derives from a potential (zero for no drift).
    pub fn potential_value(&self, x: f64) -> Option<f64> {
        match self {
            Drift::None => Some(0.0),
            Drift::Potential(v) => Some(v.value(x)),
            Drift::Force(_) => None,
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Drift::None)
    }
}

impl fmt::Debug for Drift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Drift::None => f.write_str("None"),
            Drift::Potential(v) => f.debug_tuple("Potential").field(v).finish(),
            Drift::Force(_) => f.write_str("Force(<fn>)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    NarrowChannel,
    PointParticles,
    SingleFile,
    Bulk,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] =
        [ModelKind::NarrowChannel, ModelKind::PointParticles, ModelKind::SingleFile, ModelKind::Bulk];

    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "narrow" | "narrowchannel" | "narrow_channel" => Ok(ModelKind::NarrowChannel),
            "point" | "pointparticles" | "point_particles" => Ok(ModelKind::PointParticles),
            "singlefile" | "single_file" | "single-file" => Ok(ModelKind::SingleFile),
            "bulk" => Ok(ModelKind::Bulk),
            other => Err(Error::InvalidInput(format!("unknown model kind `{other}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::NarrowChannel => "narrow",
            ModelKind::PointParticles => "point",
            ModelKind::SingleFile => "singlefile",
            ModelKind::Bulk => "bulk",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryKind {
    NoFlux,
    Periodic,
}

impl BoundaryKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "noflux" | "no_flux" | "no-flux" => Ok(BoundaryKind::NoFlux),
            "periodic" => Ok(BoundaryKind::Periodic),
            other => Err(Error::InvalidInput(format!("unknown boundary kind `{other}`"))),
        }
    }
}

/// Effective domain: the unit interval for channels, the unit square
/// between parallel plates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    Interval,
    Square,
}

impl Domain {
    pub fn dim(self) -> usize {
        match self {
            Domain::Interval => 1,
            Domain::Square => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization {
    /// Fields integrate to one.
    Probability,
    /// Fields integrate to the volume fraction `phi`.
    Concentration { phi: f64 },
}

impl Normalization {
    pub fn mass(self) -> f64 {
        match self {
            Normalization::Probability => 1.0,
            Normalization::Concentration { phi } => phi,
        }
    }
}

/// Effective drift-diffusion problem
/// `p_t = div[(1 + gamma p) grad p - f p]`.
///
/// `gamma` always multiplies the probability density. Under concentration
/// normalisation the stored field is `c = phi p`, and the diffusivity is
/// `1 + (gamma / phi) c`.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub gamma: f64,
    pub normalization: Normalization,
    pub drift: Drift,
    pub domain: Domain,
    pub bc: BoundaryKind,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::InvalidInput(format!("nonlinear coefficient {gamma} must be >= 0")));
        }
        Ok(Self {
            kind,
            gamma,
            normalization: Normalization::Probability,
            drift: Drift::None,
            domain: Domain::Interval,
            bc: BoundaryKind::NoFlux,
        })
    }

    /// Model of `n` particles of diameter `eps` in the given geometry.
    ///
    /// * narrow channel: `(N-1) eps^d alpha_h`
    /// * point particles: 0
    /// * single file: `2 (N-1) eps` (channels only)
    /// * bulk: `(N-1) eps^d alpha_bulk / A`, the unconfined excluded volume
    ///   spread over the cross-section `A`. This is the `h -> infinity`
    ///   asymptote of the narrow-channel value.
    pub fn for_geometry(kind: ModelKind, geom: &Geometry, n: usize, eps: f64) -> Result<Self> {
        if n == 0 || !(eps.is_finite() && eps >= 0.0) {
            return Err(Error::InvalidInput(format!("invalid population N = {n}, eps = {eps}")));
        }
        let pairs = (n - 1) as f64;
        let scale = eps.powi(geom.effective_dim() as i32);
        let gamma = match kind {
            ModelKind::NarrowChannel => pairs * scale * alpha(geom)?,
            ModelKind::PointParticles => 0.0,
            ModelKind::SingleFile => {
                if geom.case() == Case::Pp {
                    return Err(Error::InvalidInput("single-file limit is undefined between plates".into()));
                }
                2.0 * pairs * eps
            }
            ModelKind::Bulk => {
                let area = geom.cross_section();
                if area <= 0.0 {
                    return Err(Error::Domain("bulk model needs a nonzero cross-section".into()));
                }
                pairs * scale * geom.case().bulk_alpha() / area
            }
        };
        let mut spec = Self::new(kind, gamma)?;
        if geom.effective_dim() == 2 {
            spec.domain = Domain::Square;
        }
        Ok(spec)
    }

    pub fn with_drift(mut self, drift: Drift) -> Self {
        self.drift = drift;
        self
    }

    pub fn with_bc(mut self, bc: BoundaryKind) -> Self {
        self.bc = bc;
        self
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Self {
        self.normalization = normalization;
        self
    }

    pub fn mass(&self) -> f64 {
        self.normalization.mass()
    }

    /// Coefficient multiplying the stored field inside the diffusivity.
    pub(crate) fn field_gamma(&self) -> f64 {
        self.gamma / self.mass()
    }
}

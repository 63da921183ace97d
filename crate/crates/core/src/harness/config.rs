use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::coefficients::{bundle, Case, Geometry};
use crate::effective_pde::{BoundaryKind, ModelKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Transient PDE models against the particle simulation.
    Transient,
    /// PDE models over a range of widths at fixed volume fraction.
    WidthSweep,
    RatchetFlux,
    RatchetProfiles,
    MhEquilibrium,
}

/// One experiment, read from a flat `key = value` file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub experiment: ExperimentKind,
    #[serde(default = "default_case")]
    pub case: Case,
    pub h: Option<f64>,
    #[serde(default)]
    pub h_values: Vec<f64>,
    pub n: Option<usize>,
    pub eps: Option<f64>,
    /// Fixed volume fraction for width sweeps; `eps` follows from it.
    pub phi: Option<f64>,
    #[serde(default = "default_bc")]
    pub bc: String,
    #[serde(default = "default_models")]
    pub models: Vec<String>,
    #[serde(default)]
    pub particles: bool,
    #[serde(default = "default_half_width")]
    pub init_half_width: f64,
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// `none` or `sf` (tilted ratchet potential with tilt `f0`).
    #[serde(default = "default_potential")]
    pub potential: String,
    #[serde(default)]
    pub f0: f64,
    #[serde(default)]
    pub f0_values: Vec<f64>,
    #[serde(default)]
    pub gphi_values: Vec<f64>,
    #[serde(default = "default_mh_steps")]
    pub mh_steps: u64,
    #[serde(default = "default_bins_y")]
    pub bins_y: usize,
    /// Threshold on the relative L2 distance of the primary comparison.
    pub max_rel_l2: Option<f64>,
    /// Width sweeps: narrow vs single-file bound at the narrowest width.
    pub singlefile_max_rel_l2: Option<f64>,
    /// Width sweeps: narrow vs bulk lower bound at the narrowest width.
    pub bulk_min_rel_l2: Option<f64>,
    /// Ratchet profiles: tilt where the two couplings should nearly coincide.
    pub close_f0: Option<f64>,
    pub close_max_linf: Option<f64>,
    /// Ratchet profiles: tilt where they should differ.
    pub apart_f0: Option<f64>,
    pub apart_min_linf: Option<f64>,
    pub output_dir: Option<PathBuf>,
}

fn default_case() -> Case {
    Case::Nc2
}
fn default_bc() -> String {
    "noflux".into()
}
fn default_potential() -> String {
    "none".into()
}
fn default_models() -> Vec<String> {
    ModelKind::ALL.iter().map(|k| k.name().to_string()).collect()
}
fn default_half_width() -> f64 {
    0.1
}
fn default_times() -> Vec<f64> {
    vec![0.0, 0.05]
}
fn default_dt() -> f64 {
    1e-5
}
fn default_realizations() -> usize {
    2000
}
fn default_bins() -> usize {
    50
}
fn default_grid() -> usize {
    201
}
fn default_seed() -> u64 {
    20_240_101
}
fn default_mh_steps() -> u64 {
    1_000_000
}
fn default_bins_y() -> usize {
    8
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| e.in_stage(format!("loading {}", path.display())))
    }

    pub fn boundary(&self) -> Result<BoundaryKind> {
        BoundaryKind::parse(&self.bc).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn model_kinds(&self) -> Result<Vec<ModelKind>> {
        self.models.iter().map(|m| ModelKind::parse(m).map_err(|e| Error::Config(e.to_string()))).collect()
    }

    fn require<T: Copy>(&self, value: Option<T>, key: &str) -> Result<T> {
        value.ok_or_else(|| Error::Config(format!("`{key}` is required for this experiment")))
    }

    pub fn h(&self) -> Result<f64> {
        self.require(self.h, "h")
    }

    pub fn n(&self) -> Result<usize> {
        self.require(self.n, "n")
    }

    pub fn eps(&self) -> Result<f64> {
        self.require(self.eps, "eps")
    }

    pub fn phi(&self) -> Result<f64> {
        self.require(self.phi, "phi")
    }

    /// Checks every module precondition before anything runs.
    pub fn validate(&self) -> Result<()> {
        let config = |m: &str| Error::Config(format!("{}: {m}", self.name));
        self.boundary()?;
        self.model_kinds()?;
        if !matches!(self.potential.as_str(), "none" | "sf") {
            return Err(config("potential must be `none` or `sf`"));
        }
        if self.grid < 8 || self.bins < 4 {
            return Err(config("grid needs >= 8 nodes and histograms >= 4 bins"));
        }
        if !(self.dt > 0.0) || self.realizations == 0 {
            return Err(config("dt must be positive and realizations nonzero"));
        }
        if self.times.windows(2).any(|w| w[1] < w[0]) || self.times.iter().any(|t| *t < 0.0) {
            return Err(config("times must be nonnegative and nondecreasing"));
        }
        match self.experiment {
            ExperimentKind::Transient => {
                let geom = Geometry::new(self.case, self.h()?, self.h()?)?;
                bundle(&geom, self.n()?, self.eps()?)?;
                if !(self.init_half_width > 0.0 && self.init_half_width <= 0.5) {
                    return Err(config("init_half_width must lie in (0, 1/2]"));
                }
                if self.times.is_empty() {
                    return Err(config("times must not be empty"));
                }
            }
            ExperimentKind::WidthSweep => {
                if self.h_values.is_empty() {
                    return Err(config("h_values must not be empty"));
                }
                let (phi, n) = (self.phi()?, self.n()?);
                if !(phi > 0.0 && phi < 1.0) {
                    return Err(config("phi must lie in (0, 1)"));
                }
                for &h in &self.h_values {
                    Geometry::new(self.case, h, h)?;
                    if n < 2 {
                        return Err(config("need at least two particles"));
                    }
                }
            }
            ExperimentKind::RatchetFlux => {
                if self.gphi_values.is_empty() || self.f0_values.is_empty() {
                    return Err(config("gphi_values and f0_values must not be empty"));
                }
                if self.gphi_values.iter().any(|g| !(*g >= 0.0)) {
                    return Err(config("gphi_values must be >= 0"));
                }
            }
            ExperimentKind::RatchetProfiles => {
                if self.gphi_values.len() != 2 || self.f0_values.is_empty() {
                    return Err(config("ratchet profiles compare exactly two gphi_values"));
                }
            }
            ExperimentKind::MhEquilibrium => {
                if self.case != Case::Nc2 {
                    return Err(config("Metropolis-Hastings sampling is implemented for nc2"));
                }
                let geom = Geometry::nc2(self.h()?)?;
                bundle(&geom, self.n()?, self.eps()?.max(f64::MIN_POSITIVE))?;
                if self.mh_steps < 1000 {
                    return Err(config("mh_steps must be at least 1000"));
                }
            }
        }
        Ok(())
    }
}

pub(crate) const BUNDLED: [(&str, &str); 7] = [
    ("fig5.cfg", include_str!("../../../../configs/fig5.cfg")),
    ("fig6.cfg", include_str!("../../../../configs/fig6.cfg")),
    ("fig8.cfg", include_str!("../../../../configs/fig8.cfg")),
    ("ratchet_flux.cfg", include_str!("../../../../configs/ratchet_flux.cfg")),
    ("ratchet_profiles.cfg", include_str!("../../../../configs/ratchet_profiles.cfg")),
    ("mh_equilibrium.cfg", include_str!("../../../../configs/mh_equilibrium.cfg")),
    ("smoke.cfg", include_str!("../../../../configs/smoke.cfg")),
];

/// Names and contents of the configs shipped with the crate.
pub fn bundled_configs() -> &'static [(&'static str, &'static str)] {
    &BUNDLED
}

pub fn bundled_config(name: &str) -> Result<ExperimentConfig> {
    let file = if name.ends_with(".cfg") { name.to_string() } else { format!("{name}.cfg") };
    let (_, text) = BUNDLED
        .iter()
        .find(|(n, _)| *n == file)
        .ok_or_else(|| Error::Config(format!("no bundled config named `{name}`")))?;
    ExperimentConfig::parse(text)
}

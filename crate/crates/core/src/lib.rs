//! Effective transport models for finite-size Brownian particles in narrow
//! channels and between parallel plates.
//!
//! The crate is organised around five pieces:
//!
//! * [`coefficients`]: closed-form excluded-volume coefficients `alpha_h`, the
//!   concentration-form nonlinearity `g_h`, volume fractions and the
//!   transport-maximising width.
//! * [`effective_pde`]: method-of-lines solver for the nonlinear
//!   drift-diffusion equation `p_t = div[(1 + gamma p) grad p - f p]` and its
//!   limiting models, plus the free energy and no-flux steady states.
//! * [`ratchet`]: periodic stationary states with constant flux under the
//!   tilted Smoluchowski-Feynman potential.
//! * [`particle_sim`]: Euler-Maruyama hard-sphere dynamics with wall
//!   reflection and overlap resolution, and a Metropolis-Hastings sampler.
//! * [`harness`]: config-driven experiments, density comparison and CSV output.

pub mod coefficients;
pub mod effective_pde;
pub mod error;
pub mod harness;
pub(crate) mod linalg;
pub mod particle_sim;
pub mod ratchet;

pub use error::{Error, Result};

/// Version tag written as the first comment line of every CSV artifact.
pub const CSV_SCHEMA_TAG: &str = concat!("# confined-diffusion v", env!("CARGO_PKG_VERSION"));

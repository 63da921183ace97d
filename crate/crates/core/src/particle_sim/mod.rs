//! Stochastic particle simulations in the physical channel.
//!
//! Hard spheres of diameter `eps` follow overdamped Langevin dynamics
//! `dX = f(X) dt + sqrt(2) dW`, integrated by Euler-Maruyama with specular
//! wall reflection and pairwise overlap resolution. A Metropolis-Hastings
//! sampler provides equilibrium configurations in the two-dimensional
//! channel.

mod cells;
mod channel;
mod dynamics;
mod ensemble;
mod mh;

pub use channel::{reflect_walls, wrap_periodic, Channel, Point};
pub use dynamics::{
    em_step, realization_rng, resolve_overlaps, Noise, OverlapStats, ParticleEnsemble, OVERLAP_PASSES, OVERLAP_TOL,
};
pub use ensemble::{run_ensemble, EnsembleHistogram, HistogramSpec, SimSetup};
pub use mh::{mh_sample, MhConfig, MhResult};

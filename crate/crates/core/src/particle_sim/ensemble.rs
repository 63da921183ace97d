use rayon::prelude::*;

use crate::effective_pde::Drift;
use crate::error::{Error, Result};

use super::channel::Channel;
use super::dynamics::{em_step, realization_rng, Noise, OverlapStats, ParticleEnsemble};

/// Physical setup of an ensemble run.
#[derive(Debug, Clone)]
pub struct SimSetup {
    pub channel: Channel,
    pub n_particles: usize,
    /// Initial `x` interval; the other axes start uniform over the channel.
    pub init_x: (f64, f64),
    pub drift: Drift,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramSpec {
    pub bins: usize,
    pub realizations: usize,
    pub output_times: Vec<f64>,
}

impl HistogramSpec {
    fn validate(&self, dt: f64) -> Result<Vec<u64>> {
        if self.bins < 4 {
            return Err(Error::InvalidInput(format!("need at least 4 bins, got {}", self.bins)));
        }
        if self.realizations == 0 {
            return Err(Error::InvalidInput("need at least one realization".into()));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidInput(format!("time step {dt} must be > 0")));
        }
        let steps: Vec<u64> = self
            .output_times
            .iter()
            .map(|&t| {
                if !(t.is_finite() && t >= 0.0) {
                    return Err(Error::InvalidInput(format!("output time {t} must be >= 0")));
                }
                Ok((t / dt).round() as u64)
            })
            .collect::<Result<_>>()?;
        if steps.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidInput("output times must be nondecreasing".into()));
        }
        Ok(steps)
    }
}

/// Ensemble-averaged histograms of `x` at each output time.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleHistogram {
    pub times: Vec<f64>,
    pub bin_centres: Vec<f64>,
    pub bin_width: f64,
    /// Density normalised to unit integral, one row per output time.
    pub density: Vec<Vec<f64>>,
    /// Standard error of each bin from the spread across realizations.
    pub stderr: Vec<Vec<f64>>,
    pub realizations: usize,
    pub overlap: OverlapStats,
}

#[derive(Debug, Clone)]
struct Tally {
    sum: Vec<u64>,
    sum_sq: Vec<u64>,
    overlap: OverlapStats,
}

impl Tally {
    fn new(len: usize) -> Self {
        Self { sum: vec![0; len], sum_sq: vec![0; len], overlap: OverlapStats::default() }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
            *a += b;
        }
        self.overlap.merge(&other.overlap);
        self
    }
}

/// Runs independent realizations in parallel. Realization `r` draws from
/// stream `r` of `seed`, and counts are reduced as integers, so results are
/// bit-identical for a given seed regardless of thread count.
pub fn run_ensemble(setup: &SimSetup, spec: &HistogramSpec, dt: f64, seed: u64) -> Result<EnsembleHistogram> {
    let out_steps = spec.validate(dt)?;
    let bins = spec.bins;
    let n_out = out_steps.len();
    // Fail early on an infeasible initial region.
    sample(setup, seed, 0)?;

    let tally = (0..spec.realizations as u64)
        .into_par_iter()
        .map(|r| -> Result<Tally> {
            let mut ens = sample(setup, seed, r)?;
            let mut tally = Tally::new(n_out * bins);
            let mut counts = vec![0u64; bins];
            let mut step = 0u64;
            for (k, &target) in out_steps.iter().enumerate() {
                while step < target {
                    em_step(&mut ens, dt, &setup.drift, Noise::Gaussian);
                    step += 1;
                }
                counts.iter_mut().for_each(|c| *c = 0);
                for p in &ens.positions {
                    let b = (((p[0] + 0.5) * bins as f64).floor().max(0.0) as usize).min(bins - 1);
                    counts[b] += 1;
                }
                for (b, &c) in counts.iter().enumerate() {
                    tally.sum[k * bins + b] += c;
                    tally.sum_sq[k * bins + b] += c * c;
                }
            }
            tally.overlap = ens.stats;
            Ok(tally)
        })
        .try_reduce(|| Tally::new(n_out * bins), |a, b| Ok(a.merge(b)))?;

    let width = 1.0 / bins as f64;
    let r = spec.realizations as f64;
    let scale = 1.0 / (setup.n_particles as f64 * width);
    let mut density = Vec::with_capacity(n_out);
    let mut stderr = Vec::with_capacity(n_out);
    for k in 0..n_out {
        let mut d = Vec::with_capacity(bins);
        let mut e = Vec::with_capacity(bins);
        for b in 0..bins {
            let s = tally.sum[k * bins + b] as f64;
            let s2 = tally.sum_sq[k * bins + b] as f64;
            let mean = s / r;
            let var = if spec.realizations > 1 { ((s2 - r * mean * mean) / (r - 1.0)).max(0.0) } else { 0.0 };
            d.push(mean * scale);
            e.push((var / r).sqrt() * scale);
        }
        density.push(d);
        stderr.push(e);
    }
    Ok(EnsembleHistogram {
        times: out_steps.iter().map(|&s| s as f64 * dt).collect(),
        bin_centres: (0..bins).map(|b| -0.5 + (b as f64 + 0.5) * width).collect(),
        bin_width: width,
        density,
        stderr,
        realizations: spec.realizations,
        overlap: tally.overlap,
    })
}

fn sample(setup: &SimSetup, seed: u64, realization: u64) -> Result<ParticleEnsemble> {
    ParticleEnsemble::sample_uniform(
        setup.channel,
        setup.n_particles,
        setup.init_x.0,
        setup.init_x.1,
        realization_rng(seed, realization),
    )
}

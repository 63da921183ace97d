//! Metropolis-Hastings sampling of hard discs in a periodic two-dimensional
//! channel under an external potential.
//!
//! The chain lives in narrow coordinates: `x` in `[-1/2, 1/2)` (periodic)
//! and `y` in `[-h/2, h/2]`, the physical transverse coordinate being
//! `eps * y`. Two discs overlap when `dx^2 + (eps dy)^2 < eps^2`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::ratchet::potential_sf;

use super::dynamics::realization_rng;

const TUNE_WINDOW: u64 = 1000;
const MAX_DELTA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct MhConfig {
    pub n_particles: usize,
    pub eps: f64,
    pub h: f64,
    /// Tilt of the ratchet potential acting along `x`.
    pub f0: f64,
    /// Drop the potential; the target is then uniform on admissible configurations.
    pub flat: bool,
    /// Sweeps of `n_particles` single-particle move attempts, burn-in included.
    pub steps: u64,
    pub seed: u64,
    pub bins_x: usize,
    pub bins_y: usize,
    pub batches: usize,
}

impl MhConfig {
    pub fn new(n_particles: usize, eps: f64, h: f64, f0: f64, steps: u64, seed: u64) -> Self {
        Self { n_particles, eps, h, f0, flat: false, steps, seed, bins_x: 50, bins_y: 8, batches: 20 }
    }

    fn validate(&self) -> Result<()> {
        if self.n_particles == 0 {
            return Err(Error::InvalidInput("need at least one particle".into()));
        }
        if !(self.eps.is_finite() && (0.0..0.5).contains(&self.eps)) {
            return Err(Error::InvalidInput(format!("particle diameter {} must lie in [0, 0.5)", self.eps)));
        }
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(Error::Domain(format!("channel width h = {} must be > 0", self.h)));
        }
        if self.bins_x < 4 || self.bins_y < 1 || self.batches < 2 {
            return Err(Error::InvalidInput("need bins_x >= 4, bins_y >= 1 and at least 2 batches".into()));
        }
        if self.moves() < 10 * self.batches as u64 {
            return Err(Error::InvalidInput("too few steps for the requested batches".into()));
        }
        Ok(())
    }

    /// Total single-particle move attempts.
    pub fn moves(&self) -> u64 {
        self.steps.saturating_mul(self.n_particles as u64)
    }
}

/// Time-weighted occupancy after burn-in.
///
/// Every post-burn-in step contributes the full configuration with weight
/// one; particles that did not move are credited lazily.
#[derive(Debug, Clone, PartialEq)]
pub struct MhResult {
    pub bins_x: usize,
    pub bins_y: usize,
    pub h: f64,
    /// Row-major `[y][x]` occupancy summed over all batches.
    pub counts: Vec<u64>,
    /// Transverse occupancy per batch.
    pub batch_transverse: Vec<Vec<u64>>,
    /// Occupancy along `x` per batch.
    pub batch_marginal: Vec<Vec<u64>>,
    pub acceptance: f64,
    pub delta: f64,
}

impl MhResult {
    pub fn x_centres(&self) -> Vec<f64> {
        let w = 1.0 / self.bins_x as f64;
        (0..self.bins_x).map(|i| -0.5 + (i as f64 + 0.5) * w).collect()
    }

    pub fn y_centres(&self) -> Vec<f64> {
        let w = self.h / self.bins_y as f64;
        (0..self.bins_y).map(|j| -0.5 * self.h + (j as f64 + 0.5) * w).collect()
    }

    /// Cross-section-averaged density along `x` (unit integral) with batch
    /// standard errors.
    pub fn marginal_x(&self) -> (Vec<f64>, Vec<f64>) {
        batch_profile(&self.batch_marginal, self.bins_x as f64)
    }

    /// Fraction of the occupancy in each transverse bin with batch standard
    /// errors. Flat for point particles.
    pub fn transverse_profile(&self) -> (Vec<f64>, Vec<f64>) {
        batch_profile(&self.batch_transverse, 1.0)
    }
}

/// Mean and standard error over batches of per-batch normalised profiles.
fn batch_profile(batches: &[Vec<u64>], scale: f64) -> (Vec<f64>, Vec<f64>) {
    let b = batches.len() as f64;
    let bins = batches[0].len();
    let normalised: Vec<Vec<f64>> = batches
        .iter()
        .map(|row| {
            let total: u64 = row.iter().sum();
            row.iter().map(|&c| scale * c as f64 / total.max(1) as f64).collect()
        })
        .collect();
    let mut mean = vec![0.0; bins];
    let mut se = vec![0.0; bins];
    for k in 0..bins {
        let m = normalised.iter().map(|r| r[k]).sum::<f64>() / b;
        let var = normalised.iter().map(|r| (r[k] - m).powi(2)).sum::<f64>() / (b - 1.0);
        mean[k] = m;
        se[k] = (var / b).sqrt();
    }
    (mean, se)
}

struct Chain<'a> {
    cfg: &'a MhConfig,
    pos: Vec<[f64; 2]>,
    cells: Vec<Vec<usize>>,
}

impl Chain<'_> {
    fn cell_of(&self, x: f64) -> usize {
        let n = self.cells.len();
        (((x + 0.5) * n as f64).floor().max(0.0) as usize).min(n - 1)
    }

    fn overlaps(&self, skip: usize, x: f64, y: f64) -> bool {
        let eps = self.cfg.eps;
        if eps == 0.0 {
            return false;
        }
        let n = self.cells.len();
        let c = self.cell_of(x);
        let (first, span) = if n < 3 { (0, n) } else { (c + n - 1, 3) };
        for k in 0..span {
            for &j in &self.cells[(first + k) % n] {
                if j == skip {
                    continue;
                }
                let mut dx = self.pos[j][0] - x;
                dx -= dx.round();
                let dy = eps * (self.pos[j][1] - y);
                if dx * dx + dy * dy < eps * eps {
                    return true;
                }
            }
        }
        false
    }

    fn relocate(&mut self, i: usize, x: f64, y: f64) {
        let from = self.cell_of(self.pos[i][0]);
        let to = self.cell_of(x);
        if from != to {
            let slot = self.cells[from].iter().position(|&k| k == i).expect("particle is filed");
            self.cells[from].swap_remove(slot);
            self.cells[to].push(i);
        }
        self.pos[i] = [x, y];
    }
}

/// Samples `prod_i exp(-V(x_i, F0))` on non-overlapping configurations
/// with single-particle uniform square proposals of half-width `delta`,
/// tuned during a burn-in of 10% of the moves towards 25-40% acceptance.
pub fn mh_sample(cfg: &MhConfig) -> Result<MhResult> {
    cfg.validate()?;
    let n = cfg.n_particles;
    let half = 0.5 * cfg.h;
    let mut rng = realization_rng(cfg.seed, 0);

    let n_cells = if cfg.eps > 0.0 { ((1.0 / cfg.eps).floor() as usize).clamp(1, 1 << 16) } else { 1 };
    let mut chain = Chain { cfg, pos: Vec::with_capacity(n), cells: vec![Vec::new(); n_cells] };
    let budget = 100_000u64 * n as u64;
    let mut attempts = 0u64;
    while chain.pos.len() < n {
        attempts += 1;
        if attempts > budget {
            return Err(Error::Setup(format!("could not place {n} non-overlapping discs")));
        }
        let x = rng.gen_range(-0.5..0.5);
        let y = rng.gen_range(-half..=half);
        if !chain.overlaps(usize::MAX, x, y) {
            let c = chain.cell_of(x);
            chain.cells[c].push(chain.pos.len());
            chain.pos.push([x, y]);
        }
    }

    let bin_x = |x: f64| (((x + 0.5) * cfg.bins_x as f64).floor().max(0.0) as usize).min(cfg.bins_x - 1);
    let bin_y = |y: f64| (((y + half) / cfg.h * cfg.bins_y as f64).floor().max(0.0) as usize).min(cfg.bins_y - 1);

    let moves = cfg.moves();
    let burn_in = moves / 10;
    let sampled = moves - burn_in;
    let batch_len = sampled / cfg.batches as u64;
    let mut delta = 0.1f64;
    let mut window_accept = 0u64;
    let mut accepted = 0u64;

    let mut counts = vec![0u64; cfg.bins_x * cfg.bins_y];
    let mut batch_transverse = vec![vec![0u64; cfg.bins_y]; cfg.batches];
    let mut batch_marginal = vec![vec![0u64; cfg.bins_x]; cfg.batches];
    // Step from which each particle has held its current position.
    let mut held_since = vec![burn_in; n];
    let mut batch = 0usize;
    let mut batch_end = burn_in + batch_len;

    let mut credit = |p: [f64; 2], weight: u64, batch: usize| {
        if weight == 0 {
            return;
        }
        let (bx, by) = (bin_x(p[0]), bin_y(p[1]));
        counts[by * cfg.bins_x + bx] += weight;
        batch_transverse[batch][by] += weight;
        batch_marginal[batch][bx] += weight;
    };

    let sample_end = burn_in + batch_len * cfg.batches as u64;
    for step in 0..sample_end {
        if step < burn_in && step > 0 && step % TUNE_WINDOW == 0 {
            let rate = window_accept as f64 / TUNE_WINDOW as f64;
            if rate < 0.25 {
                delta *= 0.8;
            } else if rate > 0.40 {
                delta = (delta * 1.25).min(MAX_DELTA);
            }
            window_accept = 0;
        }
        if step == batch_end {
            for (i, p) in chain.pos.iter().enumerate() {
                credit(*p, step - held_since[i], batch);
                held_since[i] = step;
            }
            batch += 1;
            batch_end += batch_len;
        }

        let i = rng.gen_range(0..n);
        let [x, y] = chain.pos[i];
        let mut nx = x + delta * rng.gen_range(-1.0..1.0);
        let ny = y + delta * rng.gen_range(-1.0..1.0);
        let u: f64 = rng.gen();
        if ny < -half || ny > half {
            continue;
        }
        nx -= (nx + 0.5).div_euclid(1.0);
        if nx >= 0.5 {
            nx = -0.5;
        }
        let dv = if cfg.flat { 0.0 } else { potential_sf(nx, cfg.f0) - potential_sf(x, cfg.f0) };
        if dv > 0.0 && u >= (-dv).exp() {
            continue;
        }
        if chain.overlaps(i, nx, ny) {
            continue;
        }
        if step >= burn_in {
            // The old position was occupied for the samples after steps held_since..step-1.
            credit([x, y], step - held_since[i], batch);
            held_since[i] = step;
            accepted += 1;
        } else {
            window_accept += 1;
        }
        chain.relocate(i, nx, ny);
    }
    for (i, p) in chain.pos.iter().enumerate() {
        credit(*p, sample_end - held_since[i], batch);
    }

    Ok(MhResult {
        bins_x: cfg.bins_x,
        bins_y: cfg.bins_y,
        h: cfg.h,
        counts,
        batch_transverse,
        batch_marginal,
        acceptance: accepted as f64 / (sample_end - burn_in).max(1) as f64,
        delta,
    })
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::effective_pde::Drift;
use crate::error::{Error, Result};

use super::cells::CellList;
use super::channel::{Channel, Point};

/// Default overlap-resolution passes per step.
pub const OVERLAP_PASSES: usize = 100;
/// Distance deficit below which a pair still counts as overlapping.
pub const OVERLAP_TOL: f64 = 1e-12;

/// Generator for one realization: stream `realization` of `seed`.
pub fn realization_rng(seed: u64, realization: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(realization);
    rng
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OverlapStats {
    pub steps: u64,
    /// Steps that ended with overlaps after all passes.
    pub unresolved_steps: u64,
    pub residual_pairs: u64,
    pub separations: u64,
}

impl OverlapStats {
    pub fn merge(&mut self, other: &OverlapStats) {
        self.steps += other.steps;
        self.unresolved_steps += other.unresolved_steps;
        self.residual_pairs += other.residual_pairs;
        self.separations += other.separations;
    }

    pub fn unresolved_fraction(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.unresolved_steps as f64 / self.steps as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Noise {
    Gaussian,
    /// Deterministic drift only.
    Off,
}

#[derive(Debug, Clone)]
pub struct ParticleEnsemble {
    pub channel: Channel,
    pub positions: Vec<Point>,
    pub rng: ChaCha8Rng,
    pub stats: OverlapStats,
    /// Overlap-resolution passes per step.
    pub passes: usize,
    cells: CellList,
    pairs: Vec<(usize, usize)>,
}

impl ParticleEnsemble {
    pub fn new(channel: Channel, positions: Vec<Point>, rng: ChaCha8Rng) -> Self {
        Self {
            cells: CellList::new(&channel),
            channel,
            positions,
            rng,
            stats: OverlapStats::default(),
            passes: OVERLAP_PASSES,
            pairs: Vec::new(),
        }
    }

    /// Uniform non-overlapping placement with `x` in `[x_lo, x_hi]` and the
    /// remaining axes spanning the channel.
    pub fn sample_uniform(channel: Channel, n: usize, x_lo: f64, x_hi: f64, mut rng: ChaCha8Rng) -> Result<Self> {
        if n == 0 {
            return Err(Error::Setup("ensemble needs at least one particle".into()));
        }
        if !(-0.5..=0.5).contains(&x_lo) || !(-0.5..=0.5).contains(&x_hi) || x_hi < x_lo {
            return Err(Error::Setup(format!("initial region [{x_lo}, {x_hi}] is not inside the channel")));
        }
        let eps2 = channel.eps() * channel.eps();
        let budget = 100_000usize.saturating_mul(n);
        let mut positions: Vec<Point> = Vec::with_capacity(n);
        let mut attempts = 0usize;
        while positions.len() < n {
            attempts += 1;
            if attempts > budget {
                return Err(Error::Setup(format!(
                    "could not place {n} non-overlapping particles after {budget} attempts; initial region too dense"
                )));
            }
            let mut p = [0.0; 3];
            p[0] = if x_hi > x_lo { rng.gen_range(x_lo..x_hi) } else { x_lo };
            for (axis, v) in p.iter_mut().enumerate().take(channel.dim()).skip(1) {
                let (lo, hi) = channel.bounds(axis);
                *v = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
            }
            channel.place(&mut p);
            let clear = positions.iter().all(|q| {
                let d = channel.separation(q, &p);
                d.iter().map(|v| v * v).sum::<f64>() >= eps2
            });
            if clear {
                positions.push(p);
            }
        }
        Ok(Self::new(channel, positions, rng))
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Pairs closer than `eps - OVERLAP_TOL`, by brute force.
    pub fn count_overlaps(&self) -> usize {
        let limit = self.channel.eps() - OVERLAP_TOL;
        let mut count = 0;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                if distance(&self.channel, &self.positions[i], &self.positions[j]) < limit {
                    count += 1;
                }
            }
        }
        count
    }
}

fn distance(channel: &Channel, a: &Point, b: &Point) -> f64 {
    let d = channel.separation(a, b);
    d.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// One Euler-Maruyama step followed by wall reflection and overlap resolution.
/// The force acts along `x` only.
pub fn em_step(ens: &mut ParticleEnsemble, dt: f64, drift: &Drift, noise: Noise) {
    let dim = ens.channel.dim();
    let amp = (2.0 * dt).sqrt();
    let channel = ens.channel;
    for p in ens.positions.iter_mut() {
        let f = drift.force(p[0]);
        p[0] += f * dt;
        if noise == Noise::Gaussian {
            for v in p.iter_mut().take(dim) {
                let xi: f64 = ens.rng.sample(StandardNormal);
                *v += amp * xi;
            }
        }
        channel.place(p);
    }
    resolve_overlaps(ens);
}

/// Sweeps overlapping pairs in index order, pushing each pair apart
/// symmetrically along the line of centres, for up to `ens.passes` passes.
/// Returns the number of residual overlapping pairs.
///
/// Chains of mutually overlapping particles converge geometrically (a
/// colinear triple loses a factor of four per pass), and a particle pressed
/// against a wall is folded straight back towards its partner, so a residual
/// below `OVERLAP_TOL` can take dozens of passes.
pub fn resolve_overlaps(ens: &mut ParticleEnsemble) -> usize {
    ens.stats.steps += 1;
    let eps = ens.channel.eps();
    if eps == 0.0 || ens.len() < 2 {
        return 0;
    }
    let channel = ens.channel;
    let dim = channel.dim();
    let passes = ens.passes;
    let mut residual = 0;
    for pass in 0..=passes {
        ens.cells.rebuild(&ens.positions);
        let mut pairs = std::mem::take(&mut ens.pairs);
        ens.cells.candidate_pairs(&ens.positions, &mut pairs);
        if pass == passes {
            residual = pairs
                .iter()
                .filter(|&&(i, j)| distance(&channel, &ens.positions[i], &ens.positions[j]) < eps - OVERLAP_TOL)
                .count();
            ens.pairs = pairs;
            break;
        }
        let mut moved = false;
        for &(i, j) in &pairs {
            let d = channel.separation(&ens.positions[i], &ens.positions[j]);
            let r = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            if r >= eps - OVERLAP_TOL {
                continue;
            }
            let unit = if r > 0.0 { [d[0] / r, d[1] / r, d[2] / r] } else { [1.0, 0.0, 0.0] };
            let shift = 0.5 * (eps - r);
            for axis in 0..dim {
                ens.positions[i][axis] -= shift * unit[axis];
                ens.positions[j][axis] += shift * unit[axis];
            }
            moved = true;
            ens.stats.separations += 1;
        }
        ens.pairs = pairs;
        for p in ens.positions.iter_mut() {
            channel.place(p);
        }
        if !moved {
            break;
        }
    }
    if residual > 0 {
        ens.stats.unresolved_steps += 1;
        ens.stats.residual_pairs += residual as u64;
        log::debug!("{residual} overlapping pairs left after {passes} passes");
    }
    residual
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::Case;
    use crate::effective_pde::BoundaryKind;
    use std::sync::Arc;

    fn channel(eps: f64) -> Channel {
        Channel::new(Case::Nc2, 3.0, eps, BoundaryKind::Periodic).unwrap()
    }

    #[test]
    fn constant_force_without_noise() {
        let mut ens = ParticleEnsemble::new(channel(0.01), vec![[0.1, 0.0, 0.0]], realization_rng(1, 0));
        let drift = Drift::Force(Arc::new(|_| 1.0));
        em_step(&mut ens, 1e-3, &drift, Noise::Off);
        assert!((ens.positions[0][0] - 0.101).abs() < 1e-15);
        assert_eq!(ens.positions[0][1], 0.0);
    }

    #[test]
    fn separated_pair_is_untouched() {
        let start = vec![[0.0, 0.0, 0.0], [0.02, 0.0, 0.0]];
        let mut ens = ParticleEnsemble::new(channel(0.01), start.clone(), realization_rng(1, 0));
        em_step(&mut ens, 1e-5, &Drift::None, Noise::Off);
        assert_eq!(ens.positions, start);
    }

    #[test]
    fn overlapping_pair_splits_symmetrically() {
        let mut ens =
            ParticleEnsemble::new(channel(0.01), vec![[0.1, 0.0, 0.0], [0.108, 0.0, 0.0]], realization_rng(1, 0));
        assert_eq!(resolve_overlaps(&mut ens), 0);
        let p = &ens.positions;
        assert!((p[1][0] - p[0][0] - 0.01).abs() < 1e-15);
        assert!((0.5 * (p[0][0] + p[1][0]) - 0.104).abs() < 1e-15);
    }

    #[test]
    fn exact_contact_is_untouched() {
        let start = vec![[0.1, 0.0, 0.0], [0.125, 0.0, 0.0]];
        let mut ens = ParticleEnsemble::new(channel(0.025), start.clone(), realization_rng(1, 0));
        resolve_overlaps(&mut ens);
        assert_eq!(ens.positions, start);
    }

    #[test]
    fn colinear_triple_is_resolved() {
        let start = vec![[0.0, 0.0, 0.0], [0.004, 0.0, 0.0], [0.008, 0.0, 0.0]];
        let mut ens = ParticleEnsemble::new(channel(0.01), start, realization_rng(1, 0));
        assert_eq!(resolve_overlaps(&mut ens), 0);
        assert_eq!(ens.count_overlaps(), 0);
        assert_eq!(ens.stats.unresolved_steps, 0);
    }

    #[test]
    fn residual_overlaps_are_counted() {
        let start = vec![[0.0, 0.0, 0.0], [0.004, 0.0, 0.0], [0.008, 0.0, 0.0]];
        let mut ens = ParticleEnsemble::new(channel(0.01), start, realization_rng(1, 0));
        ens.passes = 10;
        let left = resolve_overlaps(&mut ens);
        assert!(left > 0);
        assert_eq!(left, ens.count_overlaps());
        assert_eq!(ens.stats.unresolved_steps, 1);
        // Four-fold contraction per pass: deficit of about 2e-8 after ten.
        let d = ens.positions[1][0] - ens.positions[0][0];
        assert!(d > 0.01 - 1e-7);
    }

    #[test]
    fn dense_setup_fails() {
        let ch = Channel::new(Case::Nc2, 0.0, 0.1, BoundaryKind::NoFlux).unwrap();
        let err = ParticleEnsemble::sample_uniform(ch, 5, 0.0, 0.1, realization_rng(3, 0)).unwrap_err();
        assert!(matches!(err, Error::Setup(_)));
    }
}

//! Uniform cell list over the unconfined axes.

use super::channel::{Channel, Point};

const EMPTY: usize = usize::MAX;
const MAX_CELLS: usize = 4096;

/// Linked-list cells with generation stamps, so a rebuild costs `O(N)`
/// rather than clearing every cell.
#[derive(Debug, Clone)]
pub(crate) struct CellList {
    nx: usize,
    ny: usize,
    periodic: bool,
    head: Vec<usize>,
    stamp: Vec<u32>,
    generation: u32,
    next: Vec<usize>,
    offsets_x: Vec<isize>,
    offsets_y: Vec<isize>,
}

impl CellList {
    pub(crate) fn new(channel: &Channel) -> Self {
        let eps = channel.eps();
        let per_axis = if eps > 0.0 { ((1.0 / eps).floor() as usize).clamp(1, MAX_CELLS) } else { 1 };
        let two_axes = !channel.is_confined(1);
        let ny = if two_axes { per_axis.min(512) } else { 1 };
        let periodic = channel.is_periodic(0);
        let offsets = |n: usize| -> Vec<isize> {
            if n < 3 {
                (0..n as isize).collect()
            } else {
                vec![-1, 0, 1]
            }
        };
        Self {
            nx: per_axis,
            ny,
            periodic,
            head: vec![EMPTY; per_axis * ny],
            stamp: vec![0; per_axis * ny],
            generation: 0,
            next: Vec::new(),
            offsets_x: offsets(per_axis),
            offsets_y: offsets(ny),
        }
    }

    fn coord_cell(v: f64, n: usize) -> usize {
        (((v + 0.5) * n as f64).floor().max(0.0) as usize).min(n - 1)
    }

    fn cell_of(&self, p: &Point) -> (usize, usize) {
        let cx = Self::coord_cell(p[0], self.nx);
        let cy = if self.ny > 1 { Self::coord_cell(p[1], self.ny) } else { 0 };
        (cx, cy)
    }

    pub(crate) fn rebuild(&mut self, positions: &[Point]) {
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.stamp.iter_mut().for_each(|s| *s = u32::MAX);
        }
        self.next.clear();
        self.next.resize(positions.len(), EMPTY);
        for (i, p) in positions.iter().enumerate() {
            let (cx, cy) = self.cell_of(p);
            let c = cy * self.nx + cx;
            if self.stamp[c] != self.generation {
                self.stamp[c] = self.generation;
                self.head[c] = EMPTY;
            }
            self.next[i] = self.head[c];
            self.head[c] = i;
        }
    }

    fn neighbour_index(&self, c: usize, d: isize, n: usize) -> Option<usize> {
        if n < 3 {
            // Offsets enumerate every cell directly.
            return Some(d as usize);
        }
        let v = c as isize + d;
        if (0..n as isize).contains(&v) {
            Some(v as usize)
        } else if self.periodic {
            Some(v.rem_euclid(n as isize) as usize)
        } else {
            None
        }
    }

    /// Appends every pair `(i, j)` with `i < j` sharing or neighbouring a
    /// cell, sorted in index order.
    pub(crate) fn candidate_pairs(&self, positions: &[Point], out: &mut Vec<(usize, usize)>) {
        out.clear();
        for (i, p) in positions.iter().enumerate() {
            let (cx, cy) = self.cell_of(p);
            for &dy in &self.offsets_y {
                let Some(ny) = self.neighbour_index(cy, dy, self.ny) else { continue };
                for &dx in &self.offsets_x {
                    let Some(nx) = self.neighbour_index(cx, dx, self.nx) else { continue };
                    let c = ny * self.nx + nx;
                    if self.stamp[c] != self.generation {
                        continue;
                    }
                    let mut j = self.head[c];
                    while j != EMPTY {
                        if j > i {
                            out.push((i, j));
                        }
                        j = self.next[j];
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::Case;
    use crate::effective_pde::BoundaryKind;

    #[test]
    fn finds_all_close_pairs() {
        let ch = Channel::new(Case::Pp, 1.0, 0.05, BoundaryKind::Periodic).unwrap();
        let pts: Vec<Point> = (0..200)
            .map(|k| {
                let a = k as f64 * 0.618_033_988_75;
                let b = k as f64 * 0.754_877_666_2;
                [a.fract() - 0.5, b.fract() - 0.5, 0.0]
            })
            .collect();
        let mut cells = CellList::new(&ch);
        cells.rebuild(&pts);
        let mut pairs = Vec::new();
        cells.candidate_pairs(&pts, &mut pairs);
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let d = ch.separation(&pts[i], &pts[j]);
                if d[0].hypot(d[1]) < 0.05 {
                    assert!(pairs.binary_search(&(i, j)).is_ok(), "missed ({i}, {j})");
                }
            }
        }
    }
}

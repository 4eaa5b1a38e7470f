//! Random-restart local search on the channel lattice.
//!
//! Each restart anneals a smoothed objective in which the outer max is
//! replaced by `tau * ln(exp(T1/tau) + exp(T2/tau))`, adds a quadratic
//! penalty on distortion excess, and finishes with an exact polish.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::objective::{Compiled, Scratch, Terms};
use super::{
    finish, lattice_points, lattice_size, snap_to_lattice, Layout, Objective, OptimizeResult,
    Score, SearchConfig, Strategy,
};
use crate::error::Result;
use crate::model::{AuxChannel, JointSourcePmf};

/// Annealing temperatures, geometric from 1 down to 1e-3.
const TEMPERATURES: [f64; 7] = [1.0, 0.316_227_766, 0.1, 0.031_622_776_6, 0.01, 0.003_162_277_66, 1e-3];
/// Largest per-column lattice for which a column is re-optimized exhaustively.
const COLUMN_SCAN_LIMIT: f64 = 4096.0;
/// Largest number of evaluations in one pass of pairwise column scans.
const PAIR_SCAN_LIMIT: f64 = 200_000.0;
const PENALTY_ROUNDS: usize = 7;
/// Random column perturbations tried after the first polish.
const KICKS: usize = 48;

pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn smooth_max(a: f64, b: f64, tau: f64) -> f64 {
    let m = a.max(b);
    m + tau * (-(a - b).abs() / tau).exp().ln_1p()
}

#[derive(Clone, Copy)]
enum Goal {
    Smooth { tau: f64, lambda: f64 },
    Exact,
}

struct Walker<'a> {
    compiled: &'a Compiled,
    layout: &'a Layout,
    points: Option<&'a [Vec<u32>]>,
    pair_scan: bool,
    max_iters: usize,
    counts: Vec<u32>,
    probs: Vec<f64>,
    scratch: Scratch,
    evaluations: u64,
}

impl<'a> Walker<'a> {
    fn new(
        compiled: &'a Compiled,
        layout: &'a Layout,
        points: Option<&'a [Vec<u32>]>,
        pair_scan: bool,
        max_iters: usize,
        counts: Vec<u32>,
    ) -> Self {
        let w = layout.width;
        let kf = layout.k as f64;
        let probs = counts.iter().map(|&c| c as f64 / kf).collect();
        debug_assert_eq!(counts.len(), layout.active.len() * w);
        Walker {
            compiled,
            layout,
            points,
            pair_scan,
            max_iters,
            counts,
            probs,
            scratch: compiled.scratch(),
            evaluations: 0,
        }
    }

    fn terms(&mut self) -> Terms {
        self.evaluations += 1;
        self.compiled.evaluate(&self.probs, &mut self.scratch)
    }

    fn value(&mut self, goal: Goal) -> f64 {
        let t = self.terms();
        match goal {
            Goal::Smooth { tau, lambda } => {
                let e = self.compiled.excess(&t);
                smooth_max(t.t1, t.t2, tau) + t.layer + lambda * e * e
            }
            Goal::Exact => Score::of(self.compiled, &t).scalar(),
        }
    }

    fn set(&mut self, a: usize, o: usize, c: u32) {
        let i = a * self.layout.width + o;
        self.counts[i] = c;
        self.probs[i] = c as f64 / self.layout.k as f64;
    }

    fn set_row(&mut self, a: usize, row: &[u32]) {
        for (o, &c) in row.iter().enumerate() {
            self.set(a, o, c);
        }
    }

    fn row(&self, a: usize) -> Vec<u32> {
        let w = self.layout.width;
        self.counts[a * w..(a + 1) * w].to_vec()
    }

    /// Best transfer of `t` units between two outputs of column `a`.
    fn transfer_step(&mut self, a: usize, goal: Goal, current: f64) -> Option<f64> {
        let w = self.layout.width;
        let base = self.row(a);
        let mut best: Option<(f64, Vec<u32>)> = None;
        for from in 0..w {
            for to in 0..w {
                if from == to {
                    continue;
                }
                for t in 1..=base[from] {
                    let mut row = base.clone();
                    row[from] -= t;
                    row[to] += t;
                    self.set_row(a, &row);
                    let v = self.value(goal);
                    if v < best.as_ref().map_or(current - 1e-12, |b| b.0) {
                        best = Some((v, row));
                    }
                }
            }
        }
        match best {
            Some((v, row)) => {
                self.set_row(a, &row);
                Some(v)
            }
            None => {
                self.set_row(a, &base);
                None
            }
        }
    }

    /// Exhaustive re-optimization of column `a` over its lattice.
    fn column_step(&mut self, a: usize, goal: Goal, current: f64) -> Option<f64> {
        let points = self.points?;
        let base = self.row(a);
        let mut best: Option<(f64, usize)> = None;
        for (i, p) in points.iter().enumerate() {
            if *p == base {
                continue;
            }
            self.set_row(a, p);
            let v = self.value(goal);
            if v < best.map_or(current - 1e-12, |b| b.0) {
                best = Some((v, i));
            }
        }
        match best {
            Some((v, i)) => {
                self.set_row(a, &points[i]);
                Some(v)
            }
            None => {
                self.set_row(a, &base);
                None
            }
        }
    }

    /// Joint re-optimization of columns `a` and `b`.
    fn pair_step(&mut self, a: usize, b: usize, goal: Goal, current: f64) -> Option<f64> {
        let points = self.points?;
        let (ra, rb) = (self.row(a), self.row(b));
        let mut best: Option<(f64, usize, usize)> = None;
        for (i, p) in points.iter().enumerate() {
            self.set_row(a, p);
            for (j, q) in points.iter().enumerate() {
                self.set_row(b, q);
                let v = self.value(goal);
                if v < best.map_or(current - 1e-12, |x| x.0) {
                    best = Some((v, i, j));
                }
            }
        }
        match best {
            Some((v, i, j)) => {
                self.set_row(a, &points[i]);
                self.set_row(b, &points[j]);
                Some(v)
            }
            None => {
                self.set_row(a, &ra);
                self.set_row(b, &rb);
                None
            }
        }
    }

    /// Coordinate descent until no column move improves `goal`.
    fn descend(&mut self, goal: Goal) {
        let n = self.layout.active.len();
        let mut current = self.value(goal);
        for _ in 0..self.max_iters {
            let mut improved = false;
            for a in 0..n {
                let step = if self.points.is_some() {
                    self.column_step(a, goal, current)
                } else {
                    self.transfer_step(a, goal, current)
                };
                if let Some(v) = step {
                    current = v;
                    improved = true;
                }
            }
            if !improved {
                break;
            }
        }
    }

    fn polish(&mut self) {
        self.descend(Goal::Exact);
        if !self.pair_scan {
            return;
        }
        let n = self.layout.active.len();
        for _ in 0..self.max_iters {
            let mut current = self.value(Goal::Exact);
            let mut improved = false;
            for a in 0..n {
                for b in a + 1..n {
                    if let Some(v) = self.pair_step(a, b, Goal::Exact, current) {
                        current = v;
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
            self.descend(Goal::Exact);
        }
    }

    fn load(&mut self, counts: &[u32]) {
        let w = self.layout.width;
        for (a, row) in counts.chunks(w).enumerate() {
            self.set_row(a, row);
        }
    }

    /// Iterated local search: redraw one or two columns, descend, keep the
    /// result only if it beats the incumbent.
    fn kick(&mut self, rng: &mut ChaCha8Rng) {
        let n = self.layout.active.len();
        let w = self.layout.width;
        let k = self.layout.k;
        let mut best = self.value(Goal::Exact);
        let mut best_counts = self.counts.clone();
        let mut improved = false;
        for _ in 0..KICKS {
            for _ in 0..rng.gen_range(1..=2.min(n)) {
                let a = rng.gen_range(0..n);
                let mut row = vec![0u32; w];
                match self.points {
                    Some(p) => row.copy_from_slice(&p[rng.gen_range(0..p.len())]),
                    None => row[rng.gen_range(0..w)] = k,
                }
                self.set_row(a, &row);
            }
            self.descend(Goal::Exact);
            let v = self.value(Goal::Exact);
            if v < best - 1e-12 {
                best = v;
                best_counts.copy_from_slice(&self.counts);
                improved = true;
            } else {
                self.load(&best_counts.clone());
            }
        }
        if improved {
            self.polish();
        }
    }

    fn run(&mut self, rng: &mut ChaCha8Rng) -> Score {
        let lossless = self.compiled.lossless();
        let mut lambda = 1.0;
        for _ in 0..PENALTY_ROUNDS {
            for &tau in &TEMPERATURES {
                self.descend(Goal::Smooth { tau, lambda });
            }
            let t = self.terms();
            if lossless || self.compiled.feasible(&t) {
                break;
            }
            lambda *= 10.0;
        }
        self.polish();
        self.kick(rng);
        let t = self.terms();
        Score::of(self.compiled, &t)
    }
}

fn initial_counts(layout: &Layout, rng: &mut ChaCha8Rng, restart: usize) -> Vec<u32> {
    let w = layout.width;
    let k = layout.k;
    let mut counts = vec![0u32; layout.active.len() * w];
    for row in counts.chunks_mut(w) {
        if restart.is_multiple_of(2) {
            row[rng.gen_range(0..w)] = k;
        } else {
            for _ in 0..k {
                row[rng.gen_range(0..w)] += 1;
            }
        }
    }
    counts
}

struct RestartOutcome {
    score: Score,
    counts: Vec<u32>,
    evaluations: u64,
}

/// Random-restart search. `warm` (projected onto the lattice) replaces the
/// first random start. Restarts run in parallel and are reduced in restart
/// order, so the result does not depend on the thread count.
pub fn heuristic_search(
    source: &JointSourcePmf,
    objective: &Objective,
    cfg: &SearchConfig,
    warm: Option<&AuxChannel>,
) -> Result<OptimizeResult> {
    let layout = Layout::new(source, objective, cfg)?;
    let compiled = Compiled::new(source, objective, &layout);
    let per_column = lattice_size(layout.width, layout.k);
    let points = (per_column <= COLUMN_SCAN_LIMIT).then(|| lattice_points(layout.width, layout.k));
    let n = layout.active.len() as f64;
    let pair_scan = per_column * per_column * n * (n - 1.0) / 2.0 <= PAIR_SCAN_LIMIT;
    let warm_counts = warm.and_then(|c| snap_to_lattice(&layout, c));
    let outcomes: Vec<RestartOutcome> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix64(cfg.seed ^ mix64(r as u64)));
            let init = match (&warm_counts, r) {
                (Some(c), 0) => c.clone(),
                _ => initial_counts(&layout, &mut rng, r),
            };
            let mut w = Walker::new(
                &compiled,
                &layout,
                points.as_deref(),
                pair_scan,
                cfg.max_iters,
                init,
            );
            let score = w.run(&mut rng);
            RestartOutcome {
                score,
                counts: w.counts,
                evaluations: w.evaluations,
            }
        })
        .collect();
    let evaluations = outcomes.iter().map(|o| o.evaluations).sum();
    let best = outcomes
        .iter()
        .reduce(|a, b| match b.score.cmp_to(&a.score) {
            Ordering::Less => b,
            Ordering::Equal if b.counts < a.counts => b,
            _ => a,
        })
        .expect("at least one restart");
    finish(source, objective, &layout, &best.counts, Strategy::Heuristic, evaluations)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_max_bounds() {
        for &(a, b) in &[(0.0, 1.0), (2.0, 2.0), (3.5, -1.0)] {
            for &tau in &TEMPERATURES {
                let s = smooth_max(a, b, tau);
                assert!(s >= a.max(b));
                assert!(s <= a.max(b) + tau * std::f64::consts::LN_2 + 1e-15);
            }
        }
    }

    #[test]
    fn mix64_spreads_neighbours() {
        assert_ne!(mix64(0), mix64(1));
        assert_ne!(mix64(1) & 0xff, mix64(2) & 0xff);
    }
}

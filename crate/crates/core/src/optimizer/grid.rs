//! Exhaustive search over the quantized channel lattice.

use std::cmp::Ordering;
use std::collections::HashSet;

use super::objective::{Compiled, Partial, Scratch};
use super::{finish, lattice_points, Layout, Objective, OptimizeResult, Score, SearchConfig, Strategy};
use crate::error::{Error, Result};
use crate::model::JointSourcePmf;

/// Exact minimum of the objective over every channel whose active columns
/// lie on the `grid_step` lattice. Channels that differ only on zero-mass
/// columns are not distinguished.
///
/// Among channels tied within `1e-12` the lexicographically smallest
/// flattened channel wins.
pub fn grid_oracle(
    source: &JointSourcePmf,
    objective: &Objective,
    cfg: &SearchConfig,
) -> Result<OptimizeResult> {
    let layout = Layout::new(source, objective, cfg)?;
    let points = lattice_points(layout.width, layout.k);
    let total = (points.len() as f64).powi(layout.active.len() as i32);
    if total > cfg.budget {
        return Err(Error::Budget {
            what: format!(
                "grid oracle over {} columns of {} lattice points",
                layout.active.len(),
                points.len()
            ),
            required: total,
            limit: cfg.budget,
        });
    }
    let compiled = Compiled::new(source, objective, &layout);
    let table: Vec<Vec<f64>> = points
        .iter()
        .map(|c| c.iter().map(|&x| x as f64 / layout.k as f64).collect())
        .collect();
    let choice = if compiled.is_decomposable() {
        decomposed(&compiled, &layout, &table)
    } else {
        exhaustive(&compiled, &layout, &table)
    };
    let counts: Vec<u32> = choice.iter().flat_map(|&i| points[i].iter().copied()).collect();
    finish(source, objective, &layout, &counts, Strategy::GridOracle, total as u64)
}

fn set_row(probs: &mut [f64], width: usize, a: usize, point: &[f64]) {
    probs[a * width..(a + 1) * width].copy_from_slice(point);
}

/// Odometer over all active columns, last column fastest: points are
/// visited in lexicographic order, so keeping the first of tied values
/// realizes the tie-break.
fn exhaustive(compiled: &Compiled, layout: &Layout, table: &[Vec<f64>]) -> Vec<usize> {
    let n = layout.active.len();
    let w = layout.width;
    let mut idx = vec![0usize; n];
    let mut probs = vec![0.0; n * w];
    for a in 0..n {
        set_row(&mut probs, w, a, &table[0]);
    }
    let mut scratch = compiled.scratch();
    let mut best: Option<(Score, Vec<usize>)> = None;
    loop {
        let t = compiled.evaluate(&probs, &mut scratch);
        let s = Score::of(compiled, &t);
        if best.as_ref().is_none_or(|(b, _)| s.cmp_to(b) == Ordering::Less) {
            best = Some((s, idx.clone()));
        }
        let mut pos = n;
        loop {
            if pos == 0 {
                return best.map(|b| b.1).unwrap_or_default();
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < table.len() {
                set_row(&mut probs, w, pos, &table[idx[pos]]);
                break;
            }
            idx[pos] = 0;
            set_row(&mut probs, w, pos, &table[0]);
        }
    }
}

/// Per-group table of partial sums, stored column-wise.
struct Group {
    /// Positions (in active-row order) of the rows in this group.
    rows: Vec<usize>,
    /// Encoded row choice of each kept entry.
    ids: Vec<usize>,
    a1: Vec<f64>,
    a2: Vec<f64>,
    b: Vec<f64>,
    d: Vec<f64>,
}

impl Group {
    fn len(&self) -> usize {
        self.a1.len()
    }
}

/// Decodes entry `e` of a group into per-row point indices (last row fastest).
fn decode(mut e: usize, rows: usize, points: usize, out: &mut [usize]) {
    for j in (0..rows).rev() {
        out[j] = e % points;
        e /= points;
    }
}

fn build_groups(compiled: &Compiled, layout: &Layout, table: &[Vec<f64>]) -> Vec<Group> {
    let ns2 = layout.sizes[1];
    let w = layout.width;
    let np = table.len();
    let mut scratch: Scratch = compiled.scratch();
    let mut probs = vec![0.0; layout.active.len() * w];
    let mut groups = Vec::new();
    for g in compiled.s2_groups() {
        let rows: Vec<usize> = (0..layout.active.len())
            .filter(|&a| layout.active[a] % ns2 == g)
            .collect();
        let count = np.pow(rows.len() as u32);
        let mut grp = Group {
            rows: rows.clone(),
            ids: Vec::new(),
            a1: Vec::with_capacity(count),
            a2: Vec::with_capacity(count),
            b: Vec::with_capacity(count),
            d: Vec::with_capacity(count),
        };
        let mut idx = vec![0usize; rows.len()];
        // Relabeling auxiliary symbols inside a group repeats the same
        // partial sums; only the first (lexicographically smallest) is kept.
        let mut seen = HashSet::new();
        for e in 0..count {
            decode(e, rows.len(), np, &mut idx);
            for (j, &a) in rows.iter().enumerate() {
                set_row(&mut probs, w, a, &table[idx[j]]);
            }
            let p: Partial = compiled.partial(&probs, Some(g), &mut scratch);
            let key = [p.a1, p.a2, p.b, p.dist1].map(|x| (x * 1e12).round() as i64);
            if !seen.insert(key) {
                continue;
            }
            grp.ids.push(e);
            grp.a1.push(p.a1);
            grp.a2.push(p.a2);
            grp.b.push(p.b);
            grp.d.push(p.dist1);
        }
        groups.push(grp);
    }
    groups
}

struct Combine<'a> {
    groups: &'a [Group],
    k1: f64,
    k2: f64,
    max_d: f64,
    lossless: bool,
    np: usize,
    n_active: usize,
    sel: Vec<usize>,
    best: Option<(Score, Vec<usize>)>,
}

impl Combine<'_> {
    fn global(&self, sel: &[usize]) -> Vec<usize> {
        let mut out = vec![0usize; self.n_active];
        let mut tmp = Vec::new();
        for (g, grp) in self.groups.iter().enumerate() {
            tmp.resize(grp.rows.len(), 0);
            decode(grp.ids[sel[g]], grp.rows.len(), self.np, &mut tmp);
            for (j, &a) in grp.rows.iter().enumerate() {
                out[a] = tmp[j];
            }
        }
        out
    }

    fn offer(&mut self, a1: f64, a2: f64, b: f64, d: f64) {
        let t1 = (self.k1 - a1).max(0.0);
        let t2 = (self.k2 - a2).max(0.0);
        let layer = if self.lossless { a1 } else { a1 - b }.max(0.0);
        let feasible = self.lossless || d <= self.max_d + crate::rd_eval::FEASIBILITY_TOL;
        let s = Score {
            feasible,
            rate: t1.max(t2) + layer,
            excess: if self.lossless { 0.0 } else { (d - self.max_d).max(0.0) },
        };
        let replace = match &self.best {
            None => true,
            Some((b, bsel)) => match s.cmp_to(b) {
                Ordering::Less => true,
                Ordering::Greater => false,
                Ordering::Equal => {
                    let bsel = bsel.clone();
                    self.global(&self.sel) < self.global(&bsel)
                }
            },
        };
        if replace {
            self.best = Some((s, self.sel.clone()));
        }
    }

    fn walk(&mut self, g: usize, a1: f64, a2: f64, b: f64, d: f64) {
        let groups = self.groups;
        let grp = &groups[g];
        let last = g + 1 == groups.len();
        for e in 0..grp.len() {
            self.sel[g] = e;
            let (na1, na2, nb, nd) = (a1 + grp.a1[e], a2 + grp.a2[e], b + grp.b[e], d + grp.d[e]);
            if last {
                self.offer(na1, na2, nb, nd);
            } else {
                self.walk(g + 1, na1, na2, nb, nd);
            }
        }
    }
}

/// Splits the search by `s2`: the decoder-side entropies and the expected
/// distortion are sums of per-`s2` contributions, so each group's columns
/// are tabulated once and the groups are combined by nested loops.
fn decomposed(compiled: &Compiled, layout: &Layout, table: &[Vec<f64>]) -> Vec<usize> {
    let groups = build_groups(compiled, layout, table);
    let (k1, k2) = compiled.constants();
    let mut c = Combine {
        groups: &groups,
        k1,
        k2,
        max_d: compiled.max_d1,
        lossless: compiled.lossless(),
        np: table.len(),
        n_active: layout.active.len(),
        sel: vec![0; groups.len()],
        best: None,
    };
    if groups.is_empty() {
        return Vec::new();
    }
    c.walk(0, 0.0, 0.0, 0.0, 0.0);
    let sel = c.best.as_ref().map(|b| b.1.clone()).unwrap_or_default();
    c.global(&sel)
}

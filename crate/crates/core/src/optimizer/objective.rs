//! A compiled evaluator for the rate objectives.
//!
//! The generic route builds the full joint and marginalizes it for every
//! term. Here the source support is flattened once and each evaluation
//! scatters `p(s1, s2, y1, y2) P(u | s1, s2)` into the handful of
//! accumulators the terms actually read.

use super::{Layout, Objective};
use crate::model::DistortionTable;

#[derive(Debug, Clone, Copy)]
struct Cell {
    /// Index of the `(s1, s2)` row among the active rows.
    active: usize,
    s2: usize,
    p: f64,
    /// Offset inside one decoder-1 accumulator block.
    off1: usize,
    /// Offset inside one decoder-2 accumulator block.
    off2: usize,
    /// `s2` or joint `(s1, s2)` index used by distortion-2 bookkeeping.
    x: usize,
}

#[derive(Debug, Clone)]
enum Mode {
    Lossless,
    One { d1: DistortionTable },
    Common { d1: DistortionTable, d2: DistortionTable },
}

/// Partial sums of one evaluation; additive over disjoint `s2` groups in
/// the one-distortion and lossless modes.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Partial {
    /// `H(S1 | U0 S2 Y1)` (or `H(S1 S2 | U0 S2hat Y1)`).
    pub a1: f64,
    /// `H(S1 | U0 S2 Y2)` (or `H(S1 S2 | U0 S2hat Y2)`).
    pub a2: f64,
    /// `H(S1 | U0 U1 S2 Y1)` (or `H(S1 S2 | U0 U1 S2hat Y1)`).
    pub b: f64,
    pub dist1: f64,
    pub dist2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Terms {
    pub t1: f64,
    pub t2: f64,
    pub layer: f64,
    pub dist1: f64,
    pub dist2: f64,
}

impl Terms {
    pub fn rate(&self) -> f64 {
        self.t1.max(self.t2) + self.layer
    }
}

/// Reusable accumulators.
#[derive(Debug, Clone)]
pub(crate) struct Scratch {
    acc1: Vec<f64>,
    acc2: Vec<f64>,
    accb: Vec<f64>,
    accd: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct Compiled {
    mode: Mode,
    cells: Vec<Cell>,
    width: usize,
    /// Output index -> accumulator block of the common layer.
    common_block: Vec<usize>,
    /// Output index -> `S2hat` symbol (common-reconstruction mode).
    s2hat_of: Vec<usize>,
    inner1: usize,
    inner2: usize,
    chunk: usize,
    blocks_common: usize,
    ns1: usize,
    ns2: usize,
    nsh: usize,
    k1: f64,
    k2: f64,
    pub max_d1: f64,
    pub max_d2: f64,
}

fn chunk_entropy(acc: &[f64], chunk: usize) -> f64 {
    let mut h = 0.0;
    for c in acc.chunks_exact(chunk) {
        let tot: f64 = c.iter().sum();
        if tot <= 0.0 {
            continue;
        }
        for &x in c {
            if x > 0.0 {
                h -= x * (x / tot).log2();
            }
        }
    }
    h
}

impl Compiled {
    pub fn new(source: &crate::model::JointSourcePmf, objective: &Objective, layout: &Layout) -> Self {
        let [ns1, ns2, ny1, ny2] = layout.sizes;
        let outputs = &layout.outputs;
        let (nu0, nu1) = (outputs[0], outputs[1]);
        let nsh = outputs.get(2).copied().unwrap_or(1);
        let (mode, max_d1, max_d2) = match objective {
            Objective::Lossless => (Mode::Lossless, 0.0, 0.0),
            Objective::OneDistortion { d1, max_d1 } => {
                (Mode::One { d1: d1.clone() }, *max_d1, 0.0)
            }
            Objective::CommonReconstruction {
                d1,
                d2,
                max_d1,
                max_d2,
            } => (
                Mode::Common {
                    d1: d1.clone(),
                    d2: d2.clone(),
                },
                *max_d1,
                *max_d2,
            ),
        };
        let common = matches!(mode, Mode::Common { .. });
        // Decoder-j blocks are indexed by (side, conditioning symbol, chunk).
        let (chunk, mid) = if common { (ns1 * ns2, 1) } else { (ns1, ns2) };
        let inner1 = mid * ny1 * chunk;
        let inner2 = mid * ny2 * chunk;
        let mut row_of = vec![usize::MAX; ns1 * ns2];
        for (a, &r) in layout.active.iter().enumerate() {
            row_of[r] = a;
        }
        let side = ny1 * ny2;
        let mut cells = Vec::new();
        for (i, &p) in source.probs().iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            let r = i / side;
            let (s1, s2) = (r / ns2, r % ns2);
            let (y1, y2) = ((i % side) / ny2, i % ny2);
            let (off1, off2, x) = if common {
                let x = s1 * ns2 + s2;
                (y1 * chunk + x, y2 * chunk + x, x)
            } else {
                ((s2 * ny1 + y1) * chunk + s1, (s2 * ny2 + y2) * chunk + s1, s2)
            };
            cells.push(Cell {
                active: row_of[r],
                s2,
                p,
                off1,
                off2,
                x,
            });
        }
        let width = layout.width;
        let common_block = (0..width)
            .map(|o| {
                let u0 = o / (nu1 * nsh);
                if common {
                    u0 * nsh + o % nsh
                } else {
                    u0
                }
            })
            .collect();
        let s2hat_of = (0..width).map(|o| o % nsh).collect();
        let p = source.pmf();
        let k1 = p.entropy(&["S1", "S2"], &["Y1"]).unwrap_or(0.0);
        let k2 = p.entropy(&["S1", "S2"], &["Y2"]).unwrap_or(0.0);
        let blocks_common = if common { nu0 * nsh } else { nu0 };
        Compiled {
            mode,
            cells,
            width,
            common_block,
            s2hat_of,
            inner1,
            inner2,
            chunk,
            blocks_common,
            ns1,
            ns2,
            nsh,
            k1,
            k2,
            max_d1,
            max_d2,
        }
    }

    pub fn scratch(&self) -> Scratch {
        let b_len = self.width * self.inner1;
        Scratch {
            acc1: vec![0.0; self.blocks_common * self.inner1],
            acc2: vec![0.0; self.blocks_common * self.inner2],
            accb: if matches!(self.mode, Mode::Lossless) {
                Vec::new()
            } else {
                vec![0.0; b_len]
            },
            accd: vec![0.0; self.ns2 * self.nsh],
        }
    }

    /// Distinct `s2` values among the source support, ascending.
    pub fn s2_groups(&self) -> Vec<usize> {
        let mut g: Vec<usize> = self.cells.iter().map(|c| c.s2).collect();
        g.sort_unstable();
        g.dedup();
        g
    }

    /// Partial sums over the cells with the given `s2` (all cells if `None`).
    /// `probs` holds one row of `width` entries per active `(s1, s2)` row.
    pub fn partial(&self, probs: &[f64], group: Option<usize>, s: &mut Scratch) -> Partial {
        s.acc1.fill(0.0);
        s.acc2.fill(0.0);
        s.accb.fill(0.0);
        s.accd.fill(0.0);
        let w = self.width;
        let lossless = matches!(self.mode, Mode::Lossless);
        let common = matches!(self.mode, Mode::Common { .. });
        for c in &self.cells {
            if group.is_some_and(|g| g != c.s2) {
                continue;
            }
            let row = &probs[c.active * w..(c.active + 1) * w];
            for (o, &q) in row.iter().enumerate() {
                if q <= 0.0 {
                    continue;
                }
                let m = c.p * q;
                let blk = self.common_block[o];
                s.acc1[blk * self.inner1 + c.off1] += m;
                s.acc2[blk * self.inner2 + c.off2] += m;
                if !lossless {
                    s.accb[o * self.inner1 + c.off1] += m;
                }
                if common {
                    s.accd[c.x % self.ns2 * self.nsh + self.s2hat_of[o]] += m;
                }
            }
        }
        let a1 = chunk_entropy(&s.acc1, self.chunk);
        let a2 = chunk_entropy(&s.acc2, self.chunk);
        let (b, dist1, dist2) = match &self.mode {
            Mode::Lossless => (0.0, 0.0, 0.0),
            Mode::One { d1 } => (
                chunk_entropy(&s.accb, self.chunk),
                self.distortion1(&s.accb, d1, false),
                0.0,
            ),
            Mode::Common { d1, d2 } => {
                let mut dist2 = 0.0;
                for (i, &m) in s.accd.iter().enumerate() {
                    dist2 += m * d2.get(i / self.nsh, i % self.nsh);
                }
                (
                    chunk_entropy(&s.accb, self.chunk),
                    self.distortion1(&s.accb, d1, true),
                    dist2,
                )
            }
        };
        Partial {
            a1,
            a2,
            b,
            dist1,
            dist2,
        }
    }

    fn distortion1(&self, accb: &[f64], d1: &DistortionTable, joint_chunks: bool) -> f64 {
        let mut total = 0.0;
        let mut marg = vec![0.0; self.ns1];
        for c in accb.chunks_exact(self.chunk) {
            if joint_chunks {
                marg.fill(0.0);
                for (x, &m) in c.iter().enumerate() {
                    marg[x / self.ns2] += m;
                }
            } else {
                marg.copy_from_slice(c);
            }
            if marg.iter().all(|&m| m == 0.0) {
                continue;
            }
            let mut best = f64::INFINITY;
            for r in 0..d1.recon_size() {
                let cost: f64 = marg.iter().enumerate().map(|(s, &m)| m * d1.get(s, r)).sum();
                best = best.min(cost);
            }
            total += best;
        }
        total
    }

    pub fn terms(&self, p: &Partial) -> Terms {
        let layer = match self.mode {
            Mode::Lossless => p.a1,
            _ => p.a1 - p.b,
        };
        Terms {
            t1: (self.k1 - p.a1).max(0.0),
            t2: (self.k2 - p.a2).max(0.0),
            layer: layer.max(0.0),
            dist1: p.dist1,
            dist2: p.dist2,
        }
    }

    pub fn evaluate(&self, probs: &[f64], s: &mut Scratch) -> Terms {
        let p = self.partial(probs, None, s);
        self.terms(&p)
    }

    /// Total constraint violation `max(0, d1 - D1) + max(0, d2 - D2)`.
    pub fn excess(&self, t: &Terms) -> f64 {
        let e1 = match self.mode {
            Mode::Lossless => 0.0,
            _ => (t.dist1 - self.max_d1).max(0.0),
        };
        let e2 = match self.mode {
            Mode::Common { .. } => (t.dist2 - self.max_d2).max(0.0),
            _ => 0.0,
        };
        e1 + e2
    }

    pub fn feasible(&self, t: &Terms) -> bool {
        let ok1 = matches!(self.mode, Mode::Lossless)
            || t.dist1 <= self.max_d1 + crate::rd_eval::FEASIBILITY_TOL;
        let ok2 = !matches!(self.mode, Mode::Common { .. })
            || t.dist2 <= self.max_d2 + crate::rd_eval::FEASIBILITY_TOL;
        ok1 && ok2
    }

    pub fn is_decomposable(&self) -> bool {
        !matches!(self.mode, Mode::Common { .. })
    }

    /// `H(S1 S2 | Y1)` and `H(S1 S2 | Y2)`.
    pub fn constants(&self) -> (f64, f64) {
        (self.k1, self.k2)
    }

    pub fn lossless(&self) -> bool {
        matches!(self.mode, Mode::Lossless)
    }
}

//! Minimization of the rate objectives over auxiliary channels.
//!
//! Every channel column `P(. | s1, s2)` lives on the quantized simplex
//! `{c / k : c in N^m, sum c = k}` with `k = 1 / grid_step`. The grid oracle
//! enumerates that lattice exhaustively; the heuristic walks it with
//! single-unit transfers, so both search the same set of channels.

mod grid;
mod heuristic;
mod objective;
mod sweep;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{AuxChannel, ChannelKind, DistortionTable, JointSourcePmf};
use crate::rd_eval::RateBreakdown;

pub use grid::grid_oracle;
pub use heuristic::heuristic_search;
pub(crate) use heuristic::mix64;
pub use sweep::{sweep_distortion, SweepPoint};

/// Default ceiling on the number of lattice channels the oracle may visit.
pub const DEFAULT_BUDGET: f64 = 1e8;

/// Which rate function is minimized.
#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    /// `S1` recovered losslessly; the channel is `P(U0 | S1, S2)` with `|U1| = 1`.
    Lossless,
    /// Lossy `S1` at `E d1 <= max_d1`; channel `P(U0, U1 | S1, S2)`.
    OneDistortion { d1: DistortionTable, max_d1: f64 },
    /// Common reconstruction of `S2`; channel `P(U0, U1, S2hat | S1, S2)`.
    CommonReconstruction {
        d1: DistortionTable,
        d2: DistortionTable,
        max_d1: f64,
        max_d2: f64,
    },
}

impl Objective {
    pub fn kind(&self) -> ChannelKind {
        match self {
            Objective::CommonReconstruction { .. } => ChannelKind::CommonReconstruction,
            _ => ChannelKind::OneDistortion,
        }
    }

    /// Auxiliary output sizes implied by the search cardinalities.
    pub fn output_sizes(&self, cfg: &SearchConfig) -> Vec<usize> {
        match self {
            Objective::Lossless => vec![cfg.u0_card, 1],
            Objective::OneDistortion { .. } => vec![cfg.u0_card, cfg.u1_card],
            Objective::CommonReconstruction { .. } => {
                vec![cfg.u0_card, cfg.u1_card, cfg.s2hat_card]
            }
        }
    }

    /// The same objective with new distortion targets.
    pub fn with_targets(&self, max_d1: f64, max_d2: Option<f64>) -> Objective {
        match self {
            Objective::Lossless => Objective::Lossless,
            Objective::OneDistortion { d1, .. } => Objective::OneDistortion {
                d1: d1.clone(),
                max_d1,
            },
            Objective::CommonReconstruction { d1, d2, max_d2: old, .. } => {
                Objective::CommonReconstruction {
                    d1: d1.clone(),
                    d2: d2.clone(),
                    max_d1,
                    max_d2: max_d2.unwrap_or(*old),
                }
            }
        }
    }
}

/// Simplex quantization `1/k`, written as the string `"1/k"` in configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridStep(u32);

impl GridStep {
    pub fn new(denominator: u32) -> Result<Self> {
        if denominator == 0 {
            return Err(Error::InvalidArgument("grid step must be 1/k with k >= 1".into()));
        }
        Ok(GridStep(denominator))
    }

    /// Vertices only.
    pub fn vertices() -> Self {
        GridStep(1)
    }

    pub fn denominator(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f64 {
        1.0 / self.0 as f64
    }
}

impl fmt::Display for GridStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "1/{}", self.0)
    }
}

impl FromStr for GridStep {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidArgument(format!("grid step `{s}` is not of the form 1/k"));
        let k = match s.split_once('/') {
            Some((num, den)) => {
                if num.trim() != "1" {
                    return Err(bad());
                }
                den.trim().parse::<u32>().map_err(|_| bad())?
            }
            None if s == "1" => 1,
            None => return Err(bad()),
        };
        GridStep::new(k)
    }
}

impl Serialize for GridStep {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for GridStep {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Search settings shared by the oracle and the heuristic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub u0_card: usize,
    pub u1_card: usize,
    pub s2hat_card: usize,
    pub grid_step: GridStep,
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
    pub tolerance: f64,
    /// Oracle budget in lattice channels.
    pub budget: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            u0_card: 2,
            u1_card: 2,
            s2hat_card: 2,
            grid_step: GridStep(8),
            restarts: 16,
            max_iters: 200,
            seed: 0,
            tolerance: 1e-6,
            budget: DEFAULT_BUDGET,
        }
    }
}

impl SearchConfig {
    /// Default cardinalities `|U0| = |S1||S2| + 2`, `|U1| = |S1||S2| + 1`,
    /// `|S2hat| = |S2|`.
    pub fn for_source(source: &JointSourcePmf) -> Self {
        let [n1, n2, _, _] = source.sizes();
        SearchConfig {
            u0_card: n1 * n2 + 2,
            u1_card: n1 * n2 + 1,
            s2hat_card: n2,
            ..SearchConfig::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.u0_card == 0 || self.u1_card == 0 || self.s2hat_card == 0 {
            return Err(Error::InvalidArgument("auxiliary cardinalities must be >= 1".into()));
        }
        if self.restarts == 0 || self.max_iters == 0 {
            return Err(Error::InvalidArgument("restarts and max_iters must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    GridOracle,
    Heuristic,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::GridOracle => "grid_oracle",
            Strategy::Heuristic => "heuristic",
        })
    }
}

/// Best channel found. When no lattice channel meets the distortion
/// targets, `best.feasible` is false and the channel is the one with the
/// least constraint violation.
#[derive(Debug, Clone)]
pub struct OptimizeResult {
    pub best: RateBreakdown,
    pub channel: AuxChannel,
    pub strategy: Strategy,
    pub evaluations: u64,
}

/// Runs the requested strategy.
pub fn optimize(
    source: &JointSourcePmf,
    objective: &Objective,
    cfg: &SearchConfig,
    strategy: Strategy,
) -> Result<OptimizeResult> {
    match strategy {
        Strategy::GridOracle => grid_oracle(source, objective, cfg),
        Strategy::Heuristic => heuristic_search(source, objective, cfg, None),
    }
}

/// Minimizes `I(U1; S1 | S2 Y1)` subject to `E d1 <= max_d1` with a
/// constant `U0`. Returns the minimized layer and the search result.
pub fn minimize_individual_layer(
    source: &JointSourcePmf,
    d1: &DistortionTable,
    max_d1: f64,
    cfg: &SearchConfig,
    strategy: Strategy,
) -> Result<(f64, OptimizeResult)> {
    let cfg = SearchConfig {
        u0_card: 1,
        ..cfg.clone()
    };
    let objective = Objective::OneDistortion {
        d1: d1.clone(),
        max_d1,
    };
    let res = optimize(source, &objective, &cfg, strategy)?;
    Ok((res.best.individual_layer, res))
}

/// Lattice points of `{c in N^m : sum c = k}` in lexicographically
/// ascending order.
pub(crate) fn lattice_points(m: usize, k: u32) -> Vec<Vec<u32>> {
    fn rec(m: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if m == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(m - 1, left - c, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, k, &mut Vec::with_capacity(m), &mut out);
    out
}

/// Number of lattice points of the `m`-simplex at resolution `k`:
/// `C(k + m - 1, m - 1)`.
pub(crate) fn lattice_size(m: usize, k: u32) -> f64 {
    let mut c = 1.0f64;
    for i in 1..m {
        c = c * (k as f64 + i as f64) / i as f64;
    }
    c.round()
}

/// Common plumbing: the source columns that carry mass and the output width.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub sizes: [usize; 4],
    pub outputs: Vec<usize>,
    pub width: usize,
    pub k: u32,
    /// Active `(s1, s2)` rows in ascending row order.
    pub active: Vec<usize>,
    pub rows: usize,
}

impl Layout {
    pub fn new(source: &JointSourcePmf, objective: &Objective, cfg: &SearchConfig) -> Result<Self> {
        cfg.validate()?;
        let sizes = source.sizes();
        let [n1, n2, ny1, ny2] = sizes;
        check_tables(objective, sizes, cfg)?;
        let outputs = objective.output_sizes(cfg);
        let width = outputs.iter().product();
        let side = ny1 * ny2;
        let probs = source.probs();
        let active = (0..n1 * n2)
            .filter(|r| probs[r * side..(r + 1) * side].iter().any(|&p| p > 0.0))
            .collect();
        Ok(Layout {
            sizes,
            outputs,
            width,
            k: cfg.grid_step.denominator(),
            active,
            rows: n1 * n2,
        })
    }

    /// Expands per-active-row counts into a full channel. Inactive rows sit
    /// on the lex-smallest lattice point (all mass on the last output).
    pub fn channel_probs(&self, counts: &[u32]) -> Vec<f64> {
        let mut probs = vec![0.0; self.rows * self.width];
        for r in 0..self.rows {
            probs[r * self.width + self.width - 1] = 1.0;
        }
        let kf = self.k as f64;
        for (a, &r) in self.active.iter().enumerate() {
            let row = &mut probs[r * self.width..(r + 1) * self.width];
            for (o, slot) in row.iter_mut().enumerate() {
                *slot = counts[a * self.width + o] as f64 / kf;
            }
        }
        probs
    }

    pub fn channel(&self, kind: ChannelKind, counts: &[u32]) -> Result<AuxChannel> {
        let [n1, n2, _, _] = self.sizes;
        AuxChannel::from_probs(kind, [n1, n2], &self.outputs, self.channel_probs(counts))
    }
}

fn check_tables(objective: &Objective, sizes: [usize; 4], cfg: &SearchConfig) -> Result<()> {
    let [n1, n2, _, _] = sizes;
    match objective {
        Objective::Lossless => Ok(()),
        Objective::OneDistortion { d1, .. } => check_d(d1, n1, None, "d1"),
        Objective::CommonReconstruction { d1, d2, .. } => {
            check_d(d1, n1, None, "d1")?;
            check_d(d2, n2, Some(cfg.s2hat_card), "d2")
        }
    }
}

fn check_d(d: &DistortionTable, source: usize, recon: Option<usize>, name: &str) -> Result<()> {
    if d.source_size() != source || recon.is_some_and(|r| r != d.recon_size()) {
        return Err(Error::AlphabetMismatch(format!(
            "{name} is {}x{}, does not fit the source alphabets",
            d.source_size(),
            d.recon_size()
        )));
    }
    Ok(())
}

/// Projects a channel onto the lattice, row by row, by largest-remainder
/// rounding. Used to seed the heuristic from an arbitrary warm start.
pub(crate) fn snap_to_lattice(layout: &Layout, channel: &AuxChannel) -> Option<Vec<u32>> {
    let [n1, n2, _, _] = layout.sizes;
    if channel.source_sizes() != [n1, n2] || channel.output_sizes() != layout.outputs {
        return None;
    }
    let k = layout.k;
    let mut counts = Vec::with_capacity(layout.active.len() * layout.width);
    for &r in &layout.active {
        let row = channel.cond().row(r);
        let scaled: Vec<f64> = row.iter().map(|&p| p * k as f64).collect();
        let mut c: Vec<u32> = scaled.iter().map(|&x| x.floor() as u32).collect();
        let mut left = k - c.iter().sum::<u32>().min(k);
        let mut order: Vec<usize> = (0..row.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = scaled[a] - scaled[a].floor();
            let rb = scaled[b] - scaled[b].floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for &o in order.iter().cycle() {
            if left == 0 {
                break;
            }
            c[o] += 1;
            left -= 1;
        }
        counts.extend(c);
    }
    Some(counts)
}

/// Ranking of a candidate: feasible channels by rate, infeasible ones by
/// constraint violation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Score {
    pub feasible: bool,
    pub rate: f64,
    pub excess: f64,
}

const TIE: f64 = 1e-12;

impl Score {
    pub fn of(compiled: &objective::Compiled, t: &objective::Terms) -> Self {
        Score {
            feasible: compiled.feasible(t),
            rate: t.rate(),
            excess: compiled.excess(t),
        }
    }

    /// `Less` if `self` is strictly better, `Equal` on a tie within `1e-12`.
    pub fn cmp_to(&self, other: &Score) -> std::cmp::Ordering {
        use std::cmp::Ordering::*;
        match (self.feasible, other.feasible) {
            (true, false) => Less,
            (false, true) => Greater,
            (f, _) => {
                let (a, b) = if f {
                    (self.rate, other.rate)
                } else {
                    (self.excess, other.excess)
                };
                if a < b - TIE {
                    Less
                } else if a > b + TIE {
                    Greater
                } else {
                    Equal
                }
            }
        }
    }

    /// Scalar form used by local search: rate when feasible, a large
    /// offset plus the violation otherwise.
    pub fn scalar(&self) -> f64 {
        if self.feasible {
            self.rate
        } else {
            1e3 + self.excess
        }
    }
}

/// Re-evaluates the winning lattice channel through the generic evaluator.
pub(crate) fn finish(
    source: &JointSourcePmf,
    objective: &Objective,
    layout: &Layout,
    counts: &[u32],
    strategy: Strategy,
    evaluations: u64,
) -> Result<OptimizeResult> {
    let channel = layout.channel(objective.kind(), counts)?;
    let best = crate::rd_eval::eval_objective(source, &channel, objective)?;
    Ok(OptimizeResult {
        best,
        channel,
        strategy,
        evaluations,
    })
}

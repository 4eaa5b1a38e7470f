//! JSON problem and channel files.
//!
//! A problem file names its axes explicitly and lists the pmf flat in
//! row-major order over `axis_order`:
//!
//! ```json
//! {
//!   "kind": "lossless",
//!   "alphabets": {"S1": 2, "S2": 2, "Y1": 2, "Y2": 2},
//!   "axis_order": ["S1", "S2", "Y1", "Y2"],
//!   "pmf": [0.25, 0, 0, 0, 0, 0, 0.25, 0, 0, 0.25, 0, 0, 0, 0, 0, 0.25]
//! }
//! ```
//!
//! Missing distortion tables default to Hamming over `S1hat = S1` and
//! `S2hat = S2`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::binning::SimulationSettings;
use crate::error::{Error, Result};
use crate::model::{
    source_axes, AuxChannel, ChannelKind, DistortionTable, JointSourcePmf, S1, S2, S2HAT, U0,
    U1, Y1, Y2,
};
use crate::optimizer::{GridStep, Objective, SearchConfig};
use crate::prob::{Axis, CondPmf, Pmf};
use crate::rd_eval::{self, RateBreakdown};

/// Drift tolerated in a parsed pmf before it is renormalized.
pub const PARSE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    /// `S1` recovered losslessly at decoder 1.
    Lossless,
    OneDistortion,
    CommonReconstruction,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Targets {
    #[serde(rename = "D1", default)]
    pub d1: f64,
    #[serde(rename = "D2", default)]
    pub d2: f64,
}

/// Search settings as written in a config; unset cardinalities fall back
/// to the source-dependent defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSettings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u0_card: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u1_card: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s2hat_card: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_step: Option<GridStep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub kind: ProblemKind,
    pub alphabets: BTreeMap<String, usize>,
    pub axis_order: Vec<String>,
    pub pmf: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d1: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d2: Option<Vec<f64>>,
    #[serde(default)]
    pub targets: Targets,
    #[serde(default)]
    pub search: SearchSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSettings>,
}

pub(crate) fn parse_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        Error::InvalidArgument(format!(
            "{what}: {e} (line {}, column {})",
            e.line(),
            e.column()
        ))
    })
}

fn check_entries(xs: &[f64], what: &str) -> Result<()> {
    for (i, &x) in xs.iter().enumerate() {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::InvalidProbability(format!("{what}[{i}] = {x}")));
        }
    }
    Ok(())
}

fn renormalize(xs: &mut [f64], what: &str) -> Result<()> {
    let total: f64 = xs.iter().sum();
    if (total - 1.0).abs() > PARSE_TOL {
        return Err(Error::Normalization(format!("{what} sums to {total}, expected 1")));
    }
    if (total - 1.0).abs() > 8.0 * f64::EPSILON {
        xs.iter_mut().for_each(|x| *x /= total);
    }
    Ok(())
}

impl ProblemConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ProblemConfig = parse_json(text, "problem config")?;
        cfg.source()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    fn alphabet(&self, name: &str) -> Result<usize> {
        match self.alphabets.get(name) {
            Some(&0) => Err(Error::Shape(format!("alphabet {name} is empty"))),
            Some(&n) => Ok(n),
            None => Err(Error::Shape(format!("alphabets.{name} is missing"))),
        }
    }

    fn optional_alphabet(&self, name: &str, default: usize) -> Result<usize> {
        match self.alphabets.get(name) {
            Some(&0) => Err(Error::Shape(format!("alphabet {name} is empty"))),
            Some(&n) => Ok(n),
            None => Ok(default),
        }
    }

    /// Source sizes `[|S1|, |S2|, |Y1|, |Y2|]`.
    pub fn sizes(&self) -> Result<[usize; 4]> {
        Ok([self.alphabet(S1)?, self.alphabet(S2)?, self.alphabet(Y1)?, self.alphabet(Y2)?])
    }

    /// The source pmf in canonical `(S1, S2, Y1, Y2)` order, renormalized.
    pub fn source(&self) -> Result<JointSourcePmf> {
        let sizes = self.sizes()?;
        let order: Vec<&str> = self.axis_order.iter().map(String::as_str).collect();
        let mut sorted = order.clone();
        sorted.sort_unstable();
        if sorted != [S1, S2, Y1, Y2] {
            return Err(Error::Shape(format!(
                "axis_order must be a permutation of [S1, S2, Y1, Y2], got {order:?}"
            )));
        }
        let axes: Vec<Axis> = order
            .iter()
            .map(|n| Ok(Axis::new(*n, self.alphabet(n)?)))
            .collect::<Result<_>>()?;
        let volume: usize = axes.iter().map(|a| a.size).product();
        if self.pmf.len() != volume {
            return Err(Error::Shape(format!(
                "pmf has {} entries, alphabets {:?} need {volume}",
                self.pmf.len(),
                order
            )));
        }
        check_entries(&self.pmf, "pmf")?;
        let mut probs = self.pmf.clone();
        renormalize(&mut probs, "pmf")?;
        let pmf = Pmf::new(axes, probs)?;
        let canonical = pmf.permuted(&[S1, S2, Y1, Y2])?;
        debug_assert_eq!(canonical.shape(), source_axes(sizes).iter().map(|a| a.size).collect::<Vec<_>>());
        JointSourcePmf::new(canonical)
    }

    pub fn d1_table(&self) -> Result<DistortionTable> {
        let n1 = self.alphabet(S1)?;
        let r = self.optional_alphabet("S1hat", n1)?;
        match &self.d1 {
            Some(v) => DistortionTable::new(n1, r, v.clone()),
            None if r == n1 => Ok(DistortionTable::hamming(n1)),
            None => Err(Error::Distortion("S1hat differs from S1 but d1 is missing".into())),
        }
    }

    pub fn d2_table(&self) -> Result<DistortionTable> {
        let n2 = self.alphabet(S2)?;
        let r = self.optional_alphabet(S2HAT, n2)?;
        match &self.d2 {
            Some(v) => DistortionTable::new(n2, r, v.clone()),
            None if r == n2 => Ok(DistortionTable::hamming(n2)),
            None => Err(Error::Distortion("S2hat differs from S2 but d2 is missing".into())),
        }
    }

    pub fn objective(&self) -> Result<Objective> {
        Ok(match self.kind {
            ProblemKind::Lossless => Objective::Lossless,
            ProblemKind::OneDistortion => Objective::OneDistortion {
                d1: self.d1_table()?,
                max_d1: self.targets.d1,
            },
            ProblemKind::CommonReconstruction => Objective::CommonReconstruction {
                d1: self.d1_table()?,
                d2: self.d2_table()?,
                max_d1: self.targets.d1,
                max_d2: self.targets.d2,
            },
        })
    }

    pub fn search_config(&self) -> Result<SearchConfig> {
        let source = self.source()?;
        let mut cfg = SearchConfig::for_source(&source);
        let s = &self.search;
        if let Some(v) = s.u0_card.or(self.alphabets.get(U0).copied()) {
            cfg.u0_card = v;
        }
        if let Some(v) = s.u1_card.or(self.alphabets.get(U1).copied()) {
            cfg.u1_card = v;
        }
        if let Some(v) = s.s2hat_card.or(self.alphabets.get(S2HAT).copied()) {
            cfg.s2hat_card = v;
        }
        if let Some(v) = s.grid_step {
            cfg.grid_step = v;
        }
        if let Some(v) = s.restarts {
            cfg.restarts = v;
        }
        if let Some(v) = s.max_iters {
            cfg.max_iters = v;
        }
        if let Some(v) = s.seed {
            cfg.seed = v;
        }
        if let Some(v) = s.tolerance {
            cfg.tolerance = v;
        }
        if let Some(v) = s.budget {
            cfg.budget = v;
        }
        Ok(cfg)
    }

    /// Evaluates a channel under this problem. A lossless problem accepts a
    /// channel on `U0` alone, or a full `(U0, U1)` channel evaluated at zero
    /// Hamming distortion.
    pub fn evaluate(&self, channel: &AuxChannel) -> Result<RateBreakdown> {
        let source = self.source()?;
        match self.kind {
            ProblemKind::Lossless if channel.output_sizes()[1] == 1 => {
                rd_eval::eval_corollary1_breakdown(&source, channel)
            }
            ProblemKind::Lossless => rd_eval::eval_theorem1(
                &source,
                channel,
                &DistortionTable::hamming(self.alphabet(S1)?),
                0.0,
            ),
            _ => rd_eval::eval_objective(&source, channel, &self.objective()?),
        }
    }
}

/// Serialized auxiliary channel: `probs` is flat row-major over
/// `given_axes` followed by `output_axes`, with sizes in `shape`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    pub kind: ChannelKind,
    pub given_axes: Vec<String>,
    pub output_axes: Vec<String>,
    pub shape: Vec<usize>,
    pub probs: Vec<f64>,
}

impl ChannelFile {
    pub fn from_json(text: &str) -> Result<Self> {
        parse_json(text, "channel file")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("channel serializes")
    }

    pub fn from_channel(channel: &AuxChannel) -> Self {
        let cond = channel.cond();
        let axes = cond.given_axes().iter().chain(cond.output_axes());
        ChannelFile {
            kind: channel.kind(),
            given_axes: cond.given_axes().iter().map(|a| a.name.clone()).collect(),
            output_axes: cond.output_axes().iter().map(|a| a.name.clone()).collect(),
            shape: axes.map(|a| a.size).collect(),
            probs: channel.probs().to_vec(),
        }
    }

    /// Rebuilds the channel. The given axes may appear as `[S2, S1]`; a
    /// one-distortion channel may omit `U1`.
    pub fn to_channel(&self) -> Result<AuxChannel> {
        let ng = self.given_axes.len();
        if ng != 2 || self.shape.len() != ng + self.output_axes.len() {
            return Err(Error::Shape(format!(
                "channel shape {:?} does not match given {:?} and outputs {:?}",
                self.shape, self.given_axes, self.output_axes
            )));
        }
        let volume: usize = self.shape.iter().product();
        if self.probs.len() != volume {
            return Err(Error::Shape(format!(
                "channel has {} entries, shape {:?} needs {volume}",
                self.probs.len(),
                self.shape
            )));
        }
        check_entries(&self.probs, "channel")?;
        let mut outputs: Vec<Axis> = self
            .output_axes
            .iter()
            .zip(&self.shape[ng..])
            .map(|(n, &s)| Axis::new(n.as_str(), s))
            .collect();
        let given: Vec<Axis> = self
            .given_axes
            .iter()
            .zip(&self.shape[..ng])
            .map(|(n, &s)| Axis::new(n.as_str(), s))
            .collect();
        let width: usize = outputs.iter().map(|a| a.size).product();
        let mut probs = self.probs.clone();
        for (r, row) in probs.chunks_mut(width).enumerate() {
            renormalize(row, &format!("channel row {r}"))?;
        }
        let names: Vec<&str> = given.iter().map(|a| a.name.as_str()).collect();
        let (flat, gsizes) = match names.as_slice() {
            [S1, S2] => (probs, [given[0].size, given[1].size]),
            [S2, S1] => {
                let (n2, n1) = (given[0].size, given[1].size);
                let mut flat = Vec::with_capacity(probs.len());
                for s1 in 0..n1 {
                    for s2 in 0..n2 {
                        let r = s2 * n1 + s1;
                        flat.extend_from_slice(&probs[r * width..(r + 1) * width]);
                    }
                }
                (flat, [n1, n2])
            }
            _ => {
                return Err(Error::ChannelKind(format!(
                    "channel must be conditioned on S1 and S2, got {names:?}"
                )))
            }
        };
        if self.kind == ChannelKind::OneDistortion && self.output_axes == [U0] {
            outputs.push(Axis::new(U1, 1));
        }
        let given = vec![Axis::new(S1, gsizes[0]), Axis::new(S2, gsizes[1])];
        AuxChannel::new(self.kind, CondPmf::new(given, outputs, flat)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"{
        "kind": "lossless",
        "alphabets": {"S1": 2, "S2": 2, "Y1": 2, "Y2": 2},
        "axis_order": ["S1", "S2", "Y1", "Y2"],
        "pmf": [0.25, 0, 0, 0, 0, 0, 0.25, 0, 0, 0.25, 0, 0, 0, 0, 0, 0.25]
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ProblemConfig::from_json(SMALL).unwrap();
        let again = ProblemConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.source().unwrap().sizes(), [2, 2, 2, 2]);
    }

    #[test]
    fn transposed_axis_order_is_permuted() {
        let mut cfg = ProblemConfig::from_json(SMALL).unwrap();
        let canonical = cfg.source().unwrap();
        // Write the same pmf in (Y2, Y1, S2, S1) order.
        let p = canonical.pmf().permuted(&[Y2, Y1, S2, S1]).unwrap();
        cfg.axis_order = vec![Y2.into(), Y1.into(), S2.into(), S1.into()];
        cfg.pmf = p.probs().to_vec();
        assert_eq!(cfg.source().unwrap(), canonical);
    }

    #[test]
    fn rejects_mass_drift() {
        let text = SMALL.replace("[0.25, 0, 0", "[0.15, 0, 0");
        let err = ProblemConfig::from_json(&text).unwrap_err();
        assert!(matches!(err, Error::Normalization(_)), "{err}");
    }

    #[test]
    fn small_drift_is_renormalized() {
        let text = SMALL.replace("[0.25, 0, 0", "[0.2500000001, 0, 0");
        let cfg = ProblemConfig::from_json(&text).unwrap();
        let total: f64 = cfg.source().unwrap().probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_wrong_length_and_unknown_axis() {
        let text = SMALL.replace(", 0.25]", "]");
        assert!(matches!(ProblemConfig::from_json(&text), Err(Error::Shape(_))));
        let text = SMALL.replace("\"Y2\"]", "\"Z\"]");
        assert!(ProblemConfig::from_json(&text).is_err());
    }

    #[test]
    fn channel_file_round_trip_and_transpose() {
        let ch = AuxChannel::deterministic(ChannelKind::OneDistortion, [2, 3], &[3, 2], |s1, s2| {
            vec![s2, s1]
        })
        .unwrap();
        let file = ChannelFile::from_channel(&ch);
        let back = ChannelFile::from_json(&file.to_json()).unwrap().to_channel().unwrap();
        assert_eq!(back, ch);

        // Same channel written with the given axes swapped.
        let mut swapped = file.clone();
        swapped.given_axes = vec![S2.into(), S1.into()];
        swapped.shape = vec![3, 2, 3, 2];
        let mut probs = Vec::new();
        for s2 in 0..3 {
            for s1 in 0..2 {
                probs.extend_from_slice(ch.cond().row(s1 * 3 + s2));
            }
        }
        swapped.probs = probs;
        assert_eq!(swapped.to_channel().unwrap(), ch);
    }

    #[test]
    fn u0_only_channel_gets_constant_u1() {
        let file = ChannelFile {
            kind: ChannelKind::OneDistortion,
            given_axes: vec![S1.into(), S2.into()],
            output_axes: vec![U0.into()],
            shape: vec![2, 2, 2],
            probs: vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0],
        };
        let ch = file.to_channel().unwrap();
        assert_eq!(ch.output_sizes(), vec![2, 1]);
    }
}

//! Rate expressions for a fixed auxiliary channel, closed forms for the
//! structured special cases, and the single-decoder baselines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    compose, expected_d2, optimal_phi, AuxChannel, ChannelKind, DistortionTable, FullJoint,
    JointSourcePmf, S1, S2, S2HAT, U0, U1, Y1, Y2,
};
use crate::optimizer::{self, Objective, OptimizeResult, SearchConfig, Strategy};
use crate::prob::{Axis, CondPmf, Pmf};

/// Slack allowed when comparing a realized distortion with its target.
pub const FEASIBILITY_TOL: f64 = 1e-12;

/// Threshold under which a structural information quantity counts as zero.
pub const HYPOTHESIS_TOL: f64 = 1e-9;

/// Rate of a fixed channel, split into the common-layer terms seen by each
/// decoder and the individual layer decoded by decoder 1 only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateBreakdown {
    pub rate: f64,
    pub term_decoder1: f64,
    pub term_decoder2: f64,
    pub individual_layer: f64,
    pub distortion1: f64,
    pub distortion2: Option<f64>,
    pub feasible: bool,
}

impl RateBreakdown {
    fn new(
        t1: f64,
        t2: f64,
        layer: f64,
        distortion1: f64,
        distortion2: Option<f64>,
        feasible: bool,
    ) -> Self {
        RateBreakdown {
            rate: t1.max(t2) + layer,
            term_decoder1: t1,
            term_decoder2: t2,
            individual_layer: layer,
            distortion1,
            distortion2,
            feasible,
        }
    }
}

fn require_kind(channel: &AuxChannel, kind: ChannelKind) -> Result<()> {
    if channel.kind() != kind {
        return Err(Error::ChannelKind(format!(
            "expected a {kind:?} channel, got {:?}",
            channel.kind()
        )));
    }
    Ok(())
}

/// `I(U0 S2; S1 S2 | Yj) = H(S1 S2 | Yj) - H(S1 | U0 S2 Yj)`.
fn common_term(p: &Pmf, side: &str) -> Result<f64> {
    Ok((p.entropy(&[S1, S2], &[side])? - p.entropy(&[S1], &[U0, S2, side])?).max(0.0))
}

/// Evaluates the one-distortion rate of a fixed channel in its layered form
/// `max{I(U0 S2; S1 S2 | Y1), I(U0 S2; S1 S2 | Y2)} + I(U1; S1 | U0 S2 Y1)`,
/// with the optimal decoder-1 reconstruction.
pub fn eval_theorem1(
    source: &JointSourcePmf,
    channel: &AuxChannel,
    d1: &DistortionTable,
    max_d1: f64,
) -> Result<RateBreakdown> {
    require_kind(channel, ChannelKind::OneDistortion)?;
    let joint = compose(source, channel)?;
    let p = joint.pmf();
    let t1 = common_term(p, Y1)?;
    let t2 = common_term(p, Y2)?;
    let layer = p.mutual_information(&[U1], &[S1], &[U0, S2, Y1])?;
    let (_, dist) = optimal_phi(&joint, d1)?;
    Ok(RateBreakdown::new(
        t1,
        t2,
        layer,
        dist,
        None,
        dist <= max_d1 + FEASIBILITY_TOL,
    ))
}

/// The one-distortion rate evaluated two ways: as the max of the two
/// per-decoder sums, and in the layered form. Returns `(sum form, layered form)`.
pub fn eval_theorem1_forms(source: &JointSourcePmf, channel: &AuxChannel) -> Result<(f64, f64)> {
    require_kind(channel, ChannelKind::OneDistortion)?;
    let joint = compose(source, channel)?;
    let p = joint.pmf();
    let dec1 = p.entropy(&[S2], &[Y1])? + p.mutual_information(&[U0, U1], &[S1], &[S2, Y1])?;
    let dec2 = p.entropy(&[S2], &[Y2])?
        + p.mutual_information(&[U0], &[S1], &[S2, Y2])?
        + p.mutual_information(&[U1], &[S1], &[U0, S2, Y1])?;
    let sum_form = dec1.max(dec2);
    let layered = common_term(p, Y1)?.max(common_term(p, Y2)?)
        + p.mutual_information(&[U1], &[S1], &[U0, S2, Y1])?;
    Ok((sum_form, layered))
}

fn common_only(channel: &AuxChannel) -> Result<()> {
    require_kind(channel, ChannelKind::OneDistortion)?;
    if channel.output_sizes()[1] != 1 {
        return Err(Error::ChannelKind(
            "lossless evaluation takes a channel on U0 only (|U1| = 1)".into(),
        ));
    }
    Ok(())
}

/// Lossless minimum-rate objective for a fixed `P(U0 | S1, S2)`:
/// `max{H(S1 S2 | Y1), H(S1 S2 | Y2) + H(S1 | Y1 S2 U0) - H(S1 | Y2 S2 U0)}`.
pub fn eval_corollary1(source: &JointSourcePmf, channel: &AuxChannel) -> Result<f64> {
    common_only(channel)?;
    let joint = compose(source, channel)?;
    let p = joint.pmf();
    let first = p.entropy(&[S1, S2], &[Y1])?;
    let second = p.entropy(&[S1, S2], &[Y2])? + p.entropy(&[S1], &[Y1, S2, U0])?
        - p.entropy(&[S1], &[Y2, S2, U0])?;
    Ok(first.max(second))
}

/// The lossless objective written in layered form, with `U1 = S1`: the
/// individual layer is `H(S1 | U0 S2 Y1)` and no distortion remains.
pub fn eval_corollary1_breakdown(
    source: &JointSourcePmf,
    channel: &AuxChannel,
) -> Result<RateBreakdown> {
    common_only(channel)?;
    let joint = compose(source, channel)?;
    let p = joint.pmf();
    let t1 = common_term(p, Y1)?;
    let t2 = common_term(p, Y2)?;
    let layer = p.entropy(&[S1], &[U0, S2, Y1])?;
    Ok(RateBreakdown::new(t1, t2, layer, 0.0, None, true))
}

/// Common-reconstruction rate of a fixed channel `P(U0, U1, S2hat | S1, S2)`:
/// `max{I(U0 S2hat; S1 S2 | Y1), I(U0 S2hat; S1 S2 | Y2)} + I(U1; S1 S2 | Y1 S2hat U0)`.
pub fn eval_theorem3(
    source: &JointSourcePmf,
    channel: &AuxChannel,
    d1: &DistortionTable,
    d2: &DistortionTable,
    max_d1: f64,
    max_d2: f64,
) -> Result<RateBreakdown> {
    require_kind(channel, ChannelKind::CommonReconstruction)?;
    let joint = compose(source, channel)?;
    let p = joint.pmf();
    let t1 = p.mutual_information(&[U0, S2HAT], &[S1, S2], &[Y1])?;
    let t2 = p.mutual_information(&[U0, S2HAT], &[S1, S2], &[Y2])?;
    let layer = p.mutual_information(&[U1], &[S1, S2], &[Y1, S2HAT, U0])?;
    let (_, dist1) = optimal_phi(&joint, d1)?;
    let dist2 = expected_d2(&joint, d2)?;
    let feasible = dist1 <= max_d1 + FEASIBILITY_TOL && dist2 <= max_d2 + FEASIBILITY_TOL;
    Ok(RateBreakdown::new(t1, t2, layer, dist1, Some(dist2), feasible))
}

/// Evaluates any channel against the objective it belongs to.
pub fn eval_objective(
    source: &JointSourcePmf,
    channel: &AuxChannel,
    objective: &Objective,
) -> Result<RateBreakdown> {
    match objective {
        Objective::Lossless => eval_corollary1_breakdown(source, channel),
        Objective::OneDistortion { d1, max_d1 } => eval_theorem1(source, channel, d1, *max_d1),
        Objective::CommonReconstruction {
            d1,
            d2,
            max_d1,
            max_d2,
        } => eval_theorem3(source, channel, d1, d2, *max_d1, *max_d2),
    }
}

/// Structured special cases with a closed-form rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseTag {
    /// `Y2 - Y1 - (S1, S2)`, lossy `S1`.
    Degraded,
    /// `Y2 - Y1 - (S1, S2)`, lossless `S1`.
    DegradedLossless,
    /// `Y1 - Y2 - (S1, S2)`, lossy `S1`.
    ReverseDegraded,
    /// `Y1 - Y2 - (S1, S2)`, lossless `S1`.
    ReverseDegradedLossless,
    /// `Y2` carries no information.
    Y2Absent,
    /// `Y1` carries no information.
    Y1Absent,
    /// `Y2 = f(S2)`, lossy `S1`.
    FuncY2Lossy,
    /// `Y2 = f(S2)`, lossless `S1`.
    FuncY2Lossless,
    /// `Y1 = f(S2)`, lossless `S1`.
    FuncY1Lossless,
    /// `Y1 = S2` and `Y2 = S1`.
    CompDelivery,
}

impl CaseTag {
    pub const ALL: [CaseTag; 10] = [
        CaseTag::Degraded,
        CaseTag::DegradedLossless,
        CaseTag::ReverseDegraded,
        CaseTag::ReverseDegradedLossless,
        CaseTag::Y2Absent,
        CaseTag::Y1Absent,
        CaseTag::FuncY2Lossy,
        CaseTag::FuncY2Lossless,
        CaseTag::FuncY1Lossless,
        CaseTag::CompDelivery,
    ];

    pub fn is_lossy(self) -> bool {
        matches!(
            self,
            CaseTag::Degraded | CaseTag::ReverseDegraded | CaseTag::FuncY2Lossy
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            CaseTag::Degraded => "Degraded",
            CaseTag::DegradedLossless => "DegradedLossless",
            CaseTag::ReverseDegraded => "ReverseDegraded",
            CaseTag::ReverseDegradedLossless => "ReverseDegradedLossless",
            CaseTag::Y2Absent => "Y2Absent",
            CaseTag::Y1Absent => "Y1Absent",
            CaseTag::FuncY2Lossy => "FuncY2Lossy",
            CaseTag::FuncY2Lossless => "FuncY2Lossless",
            CaseTag::FuncY1Lossless => "FuncY1Lossless",
            CaseTag::CompDelivery => "CompDelivery",
        }
    }
}

impl std::str::FromStr for CaseTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CaseTag::ALL
            .iter()
            .copied()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown case tag `{s}`")))
    }
}

impl std::fmt::Display for CaseTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Distortion target and search settings for the lossy closed forms.
#[derive(Debug, Clone)]
pub struct LossyTarget {
    pub d1: DistortionTable,
    pub max_d1: f64,
    pub search: SearchConfig,
    pub strategy: Strategy,
}

/// Value of a closed form and, where the case pins it down, a channel
/// attaining it.
#[derive(Debug, Clone)]
pub struct ClosedForm {
    pub case: CaseTag,
    pub value: f64,
    /// A lossless channel `P(U0 | S1, S2)` or, for lossy cases, the
    /// minimizing `P(U0, U1 | S1, S2)` with constant `U0`.
    pub channel: Option<AuxChannel>,
    /// For lossy cases: the minimized individual layer `I(U1; S1 | S2 Y1)`.
    pub layer_min: Option<f64>,
    pub inner: Option<OptimizeResult>,
}

fn vanishes(value: f64, what: &str) -> Result<()> {
    if value >= HYPOTHESIS_TOL {
        return Err(Error::Hypothesis(format!(
            "{what} = {value:.6e}, must vanish"
        )));
    }
    Ok(())
}

/// Checks the structural hypothesis of a case on the source.
pub fn check_hypothesis(source: &JointSourcePmf, case: CaseTag) -> Result<()> {
    let p = source.pmf();
    match case {
        CaseTag::Degraded | CaseTag::DegradedLossless => vanishes(
            p.mutual_information(&[Y2], &[S1, S2], &[Y1])?,
            "I(Y2; S1 S2 | Y1) (Y2 - Y1 - (S1,S2) Markov chain)",
        ),
        CaseTag::ReverseDegraded | CaseTag::ReverseDegradedLossless => vanishes(
            p.mutual_information(&[Y1], &[S1, S2], &[Y2])?,
            "I(Y1; S1 S2 | Y2) (Y1 - Y2 - (S1,S2) Markov chain)",
        ),
        CaseTag::Y2Absent => vanishes(
            p.mutual_information(&[Y2], &[S1, S2, Y1], &[])?,
            "I(Y2; S1 S2 Y1) (Y2 absent)",
        ),
        CaseTag::Y1Absent => vanishes(
            p.mutual_information(&[Y1], &[S1, S2, Y2], &[])?,
            "I(Y1; S1 S2 Y2) (Y1 absent)",
        ),
        CaseTag::FuncY2Lossy | CaseTag::FuncY2Lossless => {
            vanishes(p.entropy(&[Y2], &[S2])?, "H(Y2 | S2) (Y2 a function of S2)")
        }
        CaseTag::FuncY1Lossless => {
            vanishes(p.entropy(&[Y1], &[S2])?, "H(Y1 | S2) (Y1 a function of S2)")
        }
        CaseTag::CompDelivery => {
            vanishes(p.entropy(&[Y1], &[S2])?, "H(Y1 | S2) (Y1 = S2)")?;
            vanishes(p.entropy(&[S2], &[Y1])?, "H(S2 | Y1) (Y1 = S2)")?;
            vanishes(p.entropy(&[Y2], &[S1])?, "H(Y2 | S1) (Y2 = S1)")?;
            vanishes(p.entropy(&[S1], &[Y2])?, "H(S1 | Y2) (Y2 = S1)")
        }
    }
}

fn u0_empty(source: &JointSourcePmf) -> Result<AuxChannel> {
    let [n1, n2, _, _] = source.sizes();
    AuxChannel::from_u0([n1, n2], 1, vec![1.0; n1 * n2])
}

fn u0_is_s1(source: &JointSourcePmf) -> Result<AuxChannel> {
    let [n1, n2, _, _] = source.sizes();
    AuxChannel::deterministic(ChannelKind::OneDistortion, [n1, n2], &[n1, 1], |s1, _| {
        vec![s1, 0]
    })
}

/// Evaluates a special-case closed form after checking its hypothesis.
///
/// Lossy cases need `lossy`; their inner minimization over `P(U1 | S1, S2)`
/// runs the optimizer with a constant `U0`.
pub fn closed_form(
    source: &JointSourcePmf,
    case: CaseTag,
    lossy: Option<&LossyTarget>,
) -> Result<ClosedForm> {
    check_hypothesis(source, case)?;
    let p = source.pmf();
    let lossless = |value: f64, channel: AuxChannel| ClosedForm {
        case,
        value,
        channel: Some(channel),
        layer_min: None,
        inner: None,
    };
    match case {
        CaseTag::DegradedLossless => Ok(lossless(
            p.entropy(&[S2], &[Y2])? + p.entropy(&[S1], &[S2, Y1])?,
            u0_empty(source)?,
        )),
        CaseTag::ReverseDegradedLossless | CaseTag::Y1Absent => {
            Ok(lossless(p.entropy(&[S1, S2], &[Y1])?, u0_empty(source)?))
        }
        CaseTag::Y2Absent => Ok(lossless(
            p.entropy(&[S2], &[])? + p.entropy(&[S1], &[Y1, S2])?,
            u0_empty(source)?,
        )),
        CaseTag::FuncY2Lossless => Ok(lossless(
            p.entropy(&[S1, S2], &[Y1])?
                .max(p.entropy(&[S2], &[Y2])? + p.entropy(&[S1], &[Y1, S2])?),
            u0_empty(source)?,
        )),
        CaseTag::FuncY1Lossless => Ok(lossless(
            p.entropy(&[S1, S2], &[Y1])?.max(p.entropy(&[S1, S2], &[Y2])?),
            u0_is_s1(source)?,
        )),
        CaseTag::CompDelivery => Ok(lossless(
            p.entropy(&[S2], &[S1])?.max(p.entropy(&[S1], &[S2])?),
            u0_is_s1(source)?,
        )),
        CaseTag::Degraded | CaseTag::ReverseDegraded | CaseTag::FuncY2Lossy => {
            let target = lossy.ok_or_else(|| {
                Error::InvalidArgument(format!("case {case} needs a distortion target"))
            })?;
            let (layer, inner) = optimizer::minimize_individual_layer(
                source,
                &target.d1,
                target.max_d1,
                &target.search,
                target.strategy,
            )?;
            let common = match case {
                CaseTag::Degraded => p.entropy(&[S2], &[Y2])?,
                CaseTag::ReverseDegraded => p.entropy(&[S2], &[Y1])?,
                _ => p.entropy(&[S2], &[Y1])?.max(p.entropy(&[S2], &[Y2])?),
            };
            if !inner.best.feasible {
                return Err(Error::InvalidArgument(format!(
                    "no channel in the search space meets D1 = {}",
                    target.max_d1
                )));
            }
            Ok(ClosedForm {
                case,
                value: common + layer,
                channel: Some(inner.channel.clone()),
                layer_min: Some(layer),
                inner: Some(inner),
            })
        }
    }
}

/// Rate, realized distortion and feasibility of a single-decoder baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRate {
    pub rate: f64,
    pub distortion: f64,
    pub feasible: bool,
}

fn baseline_joint(source_sy: &Pmf, channel: &CondPmf, out_name: &str) -> Result<Pmf> {
    let names: Vec<&str> = source_sy.axes().iter().map(|a| a.name.as_str()).collect();
    if names != ["S", "Y"] {
        return Err(Error::Shape(format!("baseline source axes must be [S, Y], got {names:?}")));
    }
    let g = channel.given_axes();
    let o = channel.output_axes();
    if g.len() != 1 || g[0].name != "S" || o.len() != 1 || o[0].name != out_name {
        return Err(Error::ChannelKind(format!(
            "baseline channel must map S to {out_name}"
        )));
    }
    let ns = source_sy.size_of("S")?;
    let ny = source_sy.size_of("Y")?;
    if g[0].size != ns {
        return Err(Error::AlphabetMismatch(format!(
            "channel input has {} symbols, source has {ns}",
            g[0].size
        )));
    }
    let nv = o[0].size;
    let axes = vec![Axis::new(out_name, nv), Axis::new("S", ns), Axis::new("Y", ny)];
    Pmf::from_fn(axes, |i| channel.row(i[1])[i[0]] * source_sy.get(&[i[1], i[2]]))
}

/// Wyner-Ziv rate `I(V; S | Y)` of a test channel `P(V | S)`, with the
/// best reconstruction `phi(V, Y)`.
pub fn eval_wyner_ziv(
    source_sy: &Pmf,
    channel: &CondPmf,
    d: &DistortionTable,
    max_d: f64,
) -> Result<BaselineRate> {
    let joint = baseline_joint(source_sy, channel, "V")?;
    if d.source_size() != source_sy.size_of("S")? {
        return Err(Error::AlphabetMismatch("distortion table does not cover S".into()));
    }
    let rate = joint.mutual_information(&["V"], &["S"], &["Y"])?;
    let m = joint.permuted(&["V", "Y", "S"])?;
    let ns = d.source_size();
    let mut distortion = 0.0;
    for cell in m.probs().chunks(ns) {
        let best = (0..d.recon_size())
            .map(|r| cell.iter().enumerate().map(|(s, &p)| p * d.get(s, r)).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        distortion += best;
    }
    Ok(BaselineRate {
        rate,
        distortion,
        feasible: distortion <= max_d + FEASIBILITY_TOL,
    })
}

/// Common-reconstruction rate `I(S_hat; S | Y)` of a channel `P(S_hat | S)`;
/// the reconstruction ignores the side information.
pub fn eval_common_reconstruction(
    source_sy: &Pmf,
    channel: &CondPmf,
    d: &DistortionTable,
    max_d: f64,
) -> Result<BaselineRate> {
    let joint = baseline_joint(source_sy, channel, "Shat")?;
    if d.source_size() != source_sy.size_of("S")? || d.recon_size() != joint.size_of("Shat")? {
        return Err(Error::AlphabetMismatch("distortion table does not cover S x Shat".into()));
    }
    let rate = joint.mutual_information(&["Shat"], &["S"], &["Y"])?;
    let m = joint.marginalize(&["Shat", "S"])?;
    let ns = d.source_size();
    let distortion: f64 = m
        .probs()
        .iter()
        .enumerate()
        .map(|(i, &p)| p * d.get(i % ns, i / ns))
        .sum();
    Ok(BaselineRate {
        rate,
        distortion,
        feasible: distortion <= max_d + FEASIBILITY_TOL,
    })
}

/// Joint of a composed channel, exposed for callers that need the raw law.
pub fn full_joint(source: &JointSourcePmf, channel: &AuxChannel) -> Result<FullJoint> {
    compose(source, channel)
}

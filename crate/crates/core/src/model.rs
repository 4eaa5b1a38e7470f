//! Problem data: the four-source, distortion tables, auxiliary channels and
//! their composition into a full joint law.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{for_each_index, Axis, CondPmf, Pmf};

pub const S1: &str = "S1";
pub const S2: &str = "S2";
pub const Y1: &str = "Y1";
pub const Y2: &str = "Y2";
pub const U0: &str = "U0";
pub const U1: &str = "U1";
pub const S2HAT: &str = "S2hat";

/// Joint law of `(S1, S2, Y1, Y2)`, always in that axis order.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSourcePmf {
    pmf: Pmf,
}

impl JointSourcePmf {
    pub fn new(pmf: Pmf) -> Result<Self> {
        let names: Vec<&str> = pmf.axes().iter().map(|a| a.name.as_str()).collect();
        if names != [S1, S2, Y1, Y2] {
            return Err(Error::Shape(format!(
                "source axes must be [S1, S2, Y1, Y2], got {names:?}"
            )));
        }
        Ok(JointSourcePmf { pmf })
    }

    /// Builds the source from `f(s1, s2, y1, y2)`.
    pub fn from_fn(
        sizes: [usize; 4],
        f: impl Fn(usize, usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let axes = source_axes(sizes);
        JointSourcePmf::new(Pmf::from_fn(axes, |i| f(i[0], i[1], i[2], i[3]))?)
    }

    pub fn pmf(&self) -> &Pmf {
        &self.pmf
    }

    /// Alphabet sizes of `(S1, S2, Y1, Y2)`.
    pub fn sizes(&self) -> [usize; 4] {
        let s = self.pmf.shape();
        [s[0], s[1], s[2], s[3]]
    }

    pub fn probs(&self) -> &[f64] {
        self.pmf.probs()
    }
}

pub fn source_axes(sizes: [usize; 4]) -> Vec<Axis> {
    vec![
        Axis::new(S1, sizes[0]),
        Axis::new(S2, sizes[1]),
        Axis::new(Y1, sizes[2]),
        Axis::new(Y2, sizes[3]),
    ]
}

/// A per-letter distortion measure `d(s, s_hat)`, stored source-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionTable {
    source_size: usize,
    recon_size: usize,
    values: Vec<f64>,
}

impl DistortionTable {
    pub fn new(source_size: usize, recon_size: usize, values: Vec<f64>) -> Result<Self> {
        if source_size == 0 || recon_size == 0 {
            return Err(Error::Distortion("empty alphabet".into()));
        }
        if values.len() != source_size * recon_size {
            return Err(Error::Distortion(format!(
                "expected {} entries, got {}",
                source_size * recon_size,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Distortion(format!("entry {v} is not a finite nonnegative value")));
        }
        Ok(DistortionTable {
            source_size,
            recon_size,
            values,
        })
    }

    /// Hamming distortion on an alphabet of the given size.
    pub fn hamming(size: usize) -> Self {
        let values = (0..size * size)
            .map(|i| if i / size == i % size { 0.0 } else { 1.0 })
            .collect();
        DistortionTable {
            source_size: size,
            recon_size: size,
            values,
        }
    }

    pub fn source_size(&self) -> usize {
        self.source_size
    }

    pub fn recon_size(&self) -> usize {
        self.recon_size
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, s: usize, r: usize) -> f64 {
        self.values[s * self.recon_size + r]
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// The distortion measures of a problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionSpec {
    pub d1: DistortionTable,
    pub d2: Option<DistortionTable>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    /// `P(U0, U1 | S1, S2)`; `S2` is recovered losslessly by both decoders.
    OneDistortion,
    /// `P(U0, U1, S2hat | S1, S2)`; both decoders share the reconstruction `S2hat`.
    CommonReconstruction,
}

impl ChannelKind {
    pub fn output_names(self) -> &'static [&'static str] {
        match self {
            ChannelKind::OneDistortion => &[U0, U1],
            ChannelKind::CommonReconstruction => &[U0, U1, S2HAT],
        }
    }

    /// Axis playing the role of `S2` at the reconstruction map.
    pub fn s2_role(self) -> &'static str {
        match self {
            ChannelKind::OneDistortion => S2,
            ChannelKind::CommonReconstruction => S2HAT,
        }
    }
}

/// A test channel from `(S1, S2)` to the auxiliary block.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxChannel {
    kind: ChannelKind,
    cond: CondPmf,
}

impl AuxChannel {
    pub fn new(kind: ChannelKind, cond: CondPmf) -> Result<Self> {
        let given: Vec<&str> = cond.given_axes().iter().map(|a| a.name.as_str()).collect();
        if given != [S1, S2] {
            return Err(Error::ChannelKind(format!(
                "channel must be conditioned on [S1, S2], got {given:?}"
            )));
        }
        let outputs: Vec<&str> = cond.output_axes().iter().map(|a| a.name.as_str()).collect();
        if outputs != kind.output_names() {
            return Err(Error::ChannelKind(format!(
                "{kind:?} channel needs outputs {:?}, got {outputs:?}",
                kind.output_names()
            )));
        }
        Ok(AuxChannel { kind, cond })
    }

    /// Builds a channel from flat given-major probabilities.
    pub fn from_probs(
        kind: ChannelKind,
        source_sizes: [usize; 2],
        output_sizes: &[usize],
        probs: Vec<f64>,
    ) -> Result<Self> {
        let (given, output) = channel_axes(kind, source_sizes, output_sizes)?;
        AuxChannel::new(kind, CondPmf::new(given, output, probs)?)
    }

    /// A deterministic channel `(s1, s2) -> outputs`.
    pub fn deterministic(
        kind: ChannelKind,
        source_sizes: [usize; 2],
        output_sizes: &[usize],
        f: impl Fn(usize, usize) -> Vec<usize>,
    ) -> Result<Self> {
        let (given, output) = channel_axes(kind, source_sizes, output_sizes)?;
        let cond = CondPmf::deterministic(given, output, |g| f(g[0], g[1]))?;
        AuxChannel::new(kind, cond)
    }

    /// A common-layer-only channel `P(U0 | S1, S2)` with a constant `U1`.
    pub fn from_u0(source_sizes: [usize; 2], u0_size: usize, probs: Vec<f64>) -> Result<Self> {
        AuxChannel::from_probs(ChannelKind::OneDistortion, source_sizes, &[u0_size, 1], probs)
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn cond(&self) -> &CondPmf {
        &self.cond
    }

    pub fn probs(&self) -> &[f64] {
        self.cond.probs()
    }

    pub fn source_sizes(&self) -> [usize; 2] {
        let g = self.cond.given_axes();
        [g[0].size, g[1].size]
    }

    pub fn output_sizes(&self) -> Vec<usize> {
        self.cond.output_axes().iter().map(|a| a.size).collect()
    }
}

fn channel_axes(
    kind: ChannelKind,
    source_sizes: [usize; 2],
    output_sizes: &[usize],
) -> Result<(Vec<Axis>, Vec<Axis>)> {
    let names = kind.output_names();
    if output_sizes.len() != names.len() {
        return Err(Error::ChannelKind(format!(
            "{kind:?} channel has {} outputs, got {} sizes",
            names.len(),
            output_sizes.len()
        )));
    }
    let given = vec![Axis::new(S1, source_sizes[0]), Axis::new(S2, source_sizes[1])];
    let output = names
        .iter()
        .zip(output_sizes)
        .map(|(n, &s)| Axis::new(*n, s))
        .collect();
    Ok((given, output))
}

/// Joint law of the auxiliary block and the source, built as
/// `P(u | s1, s2) P(s1, s2, y1, y2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FullJoint {
    kind: ChannelKind,
    pmf: Pmf,
}

impl FullJoint {
    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn pmf(&self) -> &Pmf {
        &self.pmf
    }
}

/// Composes a source with an auxiliary channel. The auxiliary block sees
/// the side information only through `(S1, S2)`.
pub fn compose(source: &JointSourcePmf, channel: &AuxChannel) -> Result<FullJoint> {
    let [n1, n2, ny1, ny2] = source.sizes();
    if channel.source_sizes() != [n1, n2] {
        return Err(Error::AlphabetMismatch(format!(
            "channel is conditioned on |S1|x|S2| = {:?}, source has {:?}",
            channel.source_sizes(),
            [n1, n2]
        )));
    }
    let mut axes: Vec<Axis> = channel.cond().output_axes().to_vec();
    axes.extend(source.pmf().axes().iter().cloned());
    let width = channel.cond().row_len();
    let src_len = n1 * n2 * ny1 * ny2;
    let side = ny1 * ny2;
    let mut probs = vec![0.0; width * src_len];
    let src = source.probs();
    let ch = channel.probs();
    for o in 0..width {
        for (si, &p) in src.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let row = si / side;
            probs[o * src_len + si] = ch[row * width + o] * p;
        }
    }
    Ok(FullJoint {
        kind: channel.kind(),
        pmf: Pmf::new(axes, probs)?,
    })
}

/// A deterministic decoder-1 reconstruction `(u0, u1, s2 or s2hat, y1) -> s1_hat`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionMap {
    dims: [usize; 4],
    table: Vec<usize>,
}

impl ReconstructionMap {
    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    #[inline]
    pub fn get(&self, u0: usize, u1: usize, s2: usize, y1: usize) -> usize {
        let [_, d1, d2, d3] = self.dims;
        self.table[((u0 * d1 + u1) * d2 + s2) * d3 + y1]
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    /// Builds a map from an explicit table over `(u0, u1, s2, y1)`.
    pub fn from_table(dims: [usize; 4], table: Vec<usize>) -> Result<Self> {
        if table.len() != dims.iter().product::<usize>() {
            return Err(Error::Shape("reconstruction table has the wrong size".into()));
        }
        Ok(ReconstructionMap { dims, table })
    }
}

fn phi_marginal(joint: &FullJoint) -> Result<Pmf> {
    let role = joint.kind().s2_role();
    joint.pmf().marginalize(&[U0, U1, role, Y1, S1])?.permuted(&[U0, U1, role, Y1, S1])
}

/// Expected distortion of an arbitrary reconstruction map.
pub fn distortion_of_map(
    joint: &FullJoint,
    d1: &DistortionTable,
    map: &ReconstructionMap,
) -> Result<f64> {
    let m = phi_marginal(joint)?;
    let shape = m.shape();
    if shape[..4] != map.dims() || shape[4] != d1.source_size() {
        return Err(Error::AlphabetMismatch("map or distortion table does not fit the joint".into()));
    }
    let mut total = 0.0;
    for_each_index(&shape, |flat, i| {
        let p = m.probs()[flat];
        if p > 0.0 {
            total += p * d1.get(i[4], map.get(i[0], i[1], i[2], i[3]));
        }
    });
    Ok(total)
}

/// Pointwise optimal decoder-1 reconstruction and its expected distortion.
///
/// For each tuple `t = (u0, u1, s2 or s2hat, y1)` the map picks the
/// reconstruction minimizing `sum_s1 P(s1, t) d1(s1, s1_hat)`, the smallest
/// index on ties. Tuples of zero mass map to symbol 0.
pub fn optimal_phi(joint: &FullJoint, d1: &DistortionTable) -> Result<(ReconstructionMap, f64)> {
    let m = phi_marginal(joint)?;
    let shape = m.shape();
    if shape[4] != d1.source_size() {
        return Err(Error::AlphabetMismatch(format!(
            "d1 covers |S1| = {}, joint has {}",
            d1.source_size(),
            shape[4]
        )));
    }
    let total: f64 = m.probs().iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidArgument("joint has no mass".into()));
    }
    let ns1 = shape[4];
    let dims = [shape[0], shape[1], shape[2], shape[3]];
    let tuples: usize = dims.iter().product();
    let mut table = vec![0usize; tuples];
    let mut distortion = 0.0;
    for (t, slot) in table.iter_mut().enumerate() {
        let cell = &m.probs()[t * ns1..(t + 1) * ns1];
        if cell.iter().all(|&p| p == 0.0) {
            continue;
        }
        let mut best = (0usize, f64::INFINITY);
        for r in 0..d1.recon_size() {
            let cost: f64 = cell.iter().enumerate().map(|(s, &p)| p * d1.get(s, r)).sum();
            if cost < best.1 {
                best = (r, cost);
            }
        }
        *slot = best.0;
        distortion += best.1;
    }
    Ok((ReconstructionMap { dims, table }, distortion))
}

/// `E d2(S2, S2hat)` for a common-reconstruction joint.
pub fn expected_d2(joint: &FullJoint, d2: &DistortionTable) -> Result<f64> {
    if joint.kind() != ChannelKind::CommonReconstruction {
        return Err(Error::ChannelKind(
            "expected_d2 needs a common-reconstruction joint".into(),
        ));
    }
    let m = joint.pmf().marginalize(&[S2, S2HAT])?.permuted(&[S2, S2HAT])?;
    let shape = m.shape();
    if shape[0] != d2.source_size() || shape[1] != d2.recon_size() {
        return Err(Error::AlphabetMismatch(format!(
            "d2 is {}x{}, joint has |S2| x |S2hat| = {}x{}",
            d2.source_size(),
            d2.recon_size(),
            shape[0],
            shape[1]
        )));
    }
    let mut total = 0.0;
    for_each_index(&shape, |flat, i| total += m.probs()[flat] * d2.get(i[0], i[1]));
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fair_pair() -> JointSourcePmf {
        // S1, S2 independent fair bits, constant side information.
        JointSourcePmf::from_fn([2, 2, 1, 1], |_, _, _, _| 0.25).unwrap()
    }

    #[test]
    fn constant_channel_preserves_source() {
        let src = fair_pair();
        let ch = AuxChannel::deterministic(ChannelKind::OneDistortion, [2, 2], &[1, 1], |_, _| {
            vec![0, 0]
        })
        .unwrap();
        let joint = compose(&src, &ch).unwrap();
        let m = joint.pmf().marginalize(&[S1, S2, Y1, Y2]).unwrap();
        assert_eq!(m.probs(), src.probs());
    }

    #[test]
    fn copy_channel_is_diagonal() {
        let src = fair_pair();
        let ch = AuxChannel::deterministic(ChannelKind::OneDistortion, [2, 2], &[2, 1], |s1, _| {
            vec![s1, 0]
        })
        .unwrap();
        let joint = compose(&src, &ch).unwrap();
        let m = joint.pmf().marginalize(&[U0, S1]).unwrap();
        assert_eq!(m.probs(), &[0.5, 0.0, 0.0, 0.5]);
    }

    #[test]
    fn compose_rejects_alphabet_mismatch() {
        let src = fair_pair();
        let ch = AuxChannel::deterministic(ChannelKind::OneDistortion, [3, 2], &[1, 1], |_, _| {
            vec![0, 0]
        })
        .unwrap();
        assert!(matches!(compose(&src, &ch), Err(Error::AlphabetMismatch(_))));
    }

    #[test]
    fn channel_outputs_must_match_kind() {
        let given = vec![Axis::new(S1, 2), Axis::new(S2, 2)];
        let cond = CondPmf::new(given, vec![Axis::new(U0, 1)], vec![1.0; 4]).unwrap();
        assert!(matches!(
            AuxChannel::new(ChannelKind::OneDistortion, cond),
            Err(Error::ChannelKind(_))
        ));
    }

    #[test]
    fn recoverable_source_has_zero_hamming_distortion() {
        let src = fair_pair();
        let ch = AuxChannel::deterministic(ChannelKind::OneDistortion, [2, 2], &[1, 2], |s1, _| {
            vec![0, s1]
        })
        .unwrap();
        let joint = compose(&src, &ch).unwrap();
        let (map, d) = optimal_phi(&joint, &DistortionTable::hamming(2)).unwrap();
        assert_eq!(d, 0.0);
        assert_eq!(map.get(0, 1, 0, 0), 1);
    }

    #[test]
    fn independent_coin_costs_half_and_ties_to_zero() {
        let src = fair_pair();
        let ch = AuxChannel::deterministic(ChannelKind::OneDistortion, [2, 2], &[1, 1], |_, _| {
            vec![0, 0]
        })
        .unwrap();
        let joint = compose(&src, &ch).unwrap();
        let (map, d) = optimal_phi(&joint, &DistortionTable::hamming(2)).unwrap();
        assert_eq!(d, 0.5);
        assert!(map.table().iter().all(|&r| r == 0));
    }

    #[test]
    fn expected_d2_copy_and_independent() {
        let src = fair_pair();
        let copy = AuxChannel::deterministic(
            ChannelKind::CommonReconstruction,
            [2, 2],
            &[1, 1, 2],
            |_, s2| vec![0, 0, s2],
        )
        .unwrap();
        let j = compose(&src, &copy).unwrap();
        assert_eq!(expected_d2(&j, &DistortionTable::hamming(2)).unwrap(), 0.0);

        let indep = AuxChannel::from_probs(
            ChannelKind::CommonReconstruction,
            [2, 2],
            &[1, 1, 2],
            vec![0.5; 8],
        )
        .unwrap();
        let j = compose(&src, &indep).unwrap();
        assert_eq!(expected_d2(&j, &DistortionTable::hamming(2)).unwrap(), 0.5);
    }

    #[test]
    fn expected_d2_rejects_one_distortion_joint() {
        let src = fair_pair();
        let ch = AuxChannel::deterministic(ChannelKind::OneDistortion, [2, 2], &[1, 1], |_, _| {
            vec![0, 0]
        })
        .unwrap();
        let joint = compose(&src, &ch).unwrap();
        assert!(matches!(
            expected_d2(&joint, &DistortionTable::hamming(2)),
            Err(Error::ChannelKind(_))
        ));
    }

    #[test]
    fn distortion_table_validation() {
        assert!(DistortionTable::new(2, 2, vec![0.0, 1.0, 1.0]).is_err());
        assert!(DistortionTable::new(2, 2, vec![0.0, -1.0, 1.0, 0.0]).is_err());
        assert_eq!(DistortionTable::hamming(3).max_value(), 1.0);
    }
}

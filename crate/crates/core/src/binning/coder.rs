//! Typicality encoder and the two bin decoders.

use std::ops::ControlFlow;

use super::codebook::{CodeTables, Codebooks};
use super::typicality::TypicalityTest;
use crate::error::{Error, Result};
use crate::model::{
    compose, optimal_phi, AuxChannel, DistortionTable, JointSourcePmf, ReconstructionMap, S1, S2,
    U0, U1, Y1, Y2,
};

/// Largest table built for one half of a bin enumeration.
pub const MAX_HALF_ENTRIES: f64 = (1u64 << 22) as f64;
/// Largest expected number of members of one `S2` bin.
pub const MAX_BIN_MEMBERS: f64 = (1u64 << 28) as f64;

/// Everything the coder needs besides a codebook realization.
#[derive(Debug, Clone)]
pub struct Scheme {
    pub tables: CodeTables,
    pub d1: DistortionTable,
    phi: ReconstructionMap,
    t_s2: TypicalityTest,
    t_s2y1: TypicalityTest,
    t_s2y2: TypicalityTest,
    t_enc0: TypicalityTest,
    t_enc1: TypicalityTest,
    t_dec2: TypicalityTest,
    t_dec1_common: TypicalityTest,
    t_dec1: TypicalityTest,
    s2_given_y1: Vec<Vec<u8>>,
    s2_given_y2: Vec<Vec<u8>>,
}

/// Indices sent over the link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Message {
    pub w2: u64,
    pub w0p: u64,
    pub w1p: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EncodeFailure {
    /// `s2` is outside the typical set.
    S2NotTypical,
    /// No common-layer codeword is jointly typical with `(s2, s1)`.
    NoCommonCover,
    /// No individual-layer codeword is jointly typical.
    NoIndividualCover,
}

/// Encoder output. On failure the encoder still sends the `S2` bin and
/// index 0 for the layers it could not cover.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoding {
    pub message: Message,
    pub w0: u64,
    pub w1: u64,
    pub failure: Option<EncodeFailure>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecodeError {
    None,
    Ambiguous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decoded2 {
    pub s2: Vec<u8>,
    pub w0: u64,
    pub u0: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decoded1 {
    pub s2: Vec<u8>,
    pub s1_hat: Vec<u8>,
}

impl Scheme {
    pub fn new(
        source: &JointSourcePmf,
        channel: &AuxChannel,
        d1: &DistortionTable,
        tables: CodeTables,
        eps: f64,
    ) -> Result<Self> {
        if eps.is_nan() || eps <= 0.0 {
            return Err(Error::InvalidArgument("typicality epsilon must be > 0".into()));
        }
        let joint = compose(source, channel)?;
        let (phi, _) = optimal_phi(&joint, d1)?;
        let p = joint.pmf();
        let t = |axes: &[&str]| TypicalityTest::new(p, axes, eps);
        let t_s2y1 = t(&[S2, Y1])?;
        let t_s2y2 = t(&[S2, Y2])?;
        let n = tables.n as f64;
        let half = (n / 2.0).ceil() * (tables.s2_size as f64).log2();
        if half > MAX_HALF_ENTRIES.log2() {
            return Err(Error::Budget {
                what: format!("bin enumeration half table at n = {}", tables.n),
                required: 2f64.powf(half),
                limit: MAX_HALF_ENTRIES,
            });
        }
        let members = n * (tables.s2_size as f64).log2() - tables.bits2 as f64;
        if members > MAX_BIN_MEMBERS.log2() {
            return Err(Error::Budget {
                what: format!("S2 bin size at n = {}", tables.n),
                required: 2f64.powf(members),
                limit: MAX_BIN_MEMBERS,
            });
        }
        Ok(Scheme {
            d1: d1.clone(),
            phi,
            t_s2: t(&[S2])?,
            s2_given_y1: t_s2y1.support_by_last(),
            s2_given_y2: t_s2y2.support_by_last(),
            t_s2y1,
            t_s2y2,
            t_enc0: t(&[U0, S2, S1])?,
            t_enc1: t(&[U0, U1, S2, S1])?,
            t_dec2: t(&[U0, S2, Y2])?,
            t_dec1_common: t(&[U0, S2, Y1])?,
            t_dec1: t(&[U0, U1, S2, Y1])?,
            tables,
        })
    }

    pub fn n(&self) -> usize {
        self.tables.n
    }

    pub fn eps(&self) -> f64 {
        self.t_s2.eps()
    }

    pub fn encode(&self, cb: &Codebooks, s1: &[u8], s2: &[u8]) -> Encoding {
        let w2 = cb.s2_bin(s2);
        let failed = |failure| Encoding {
            message: Message {
                w2,
                w0p: 0,
                w1p: 0,
            },
            w0: 0,
            w1: 0,
            failure: Some(failure),
        };
        if !self.t_s2.is_typical(&[s2]) {
            return failed(EncodeFailure::S2NotTypical);
        }
        let mut u0 = Vec::with_capacity(s2.len());
        let Some(w0) = (0..self.tables.n0).find(|&w| {
            cb.u0_codeword(s2, w, &mut u0);
            self.t_enc0.is_typical(&[&u0, s2, s1])
        }) else {
            return failed(EncodeFailure::NoCommonCover);
        };
        cb.u0_codeword(s2, w0, &mut u0);
        let mut u1 = Vec::with_capacity(s2.len());
        let found = (0..self.tables.n1).find(|&w| {
            cb.u1_codeword(s2, w0, &u0, w, &mut u1);
            self.t_enc1.is_typical(&[&u0, &u1, s2, s1])
        });
        let (w1, failure) = match found {
            Some(w1) => (w1, None),
            None => (0, Some(EncodeFailure::NoIndividualCover)),
        };
        Encoding {
            message: Message {
                w2,
                w0p: cb.u0_bin(w0),
                w1p: cb.u1_bin(w1),
            },
            w0,
            w1,
            failure,
        }
    }

    /// Decoder 2: the unique `(s2, w0)` with `s2` in bin `w2`, `w0` in bin
    /// `w0p` and `(u0(w0), s2, y2)` jointly typical.
    pub fn decode2(&self, cb: &Codebooks, msg: &Message, y2: &[u8]) -> std::result::Result<Decoded2, DecodeError> {
        let allowed: Vec<&[u8]> = y2.iter().map(|&y| self.s2_given_y2[y as usize].as_slice()).collect();
        let mut found: Option<Decoded2> = None;
        let mut ambiguous = false;
        let mut u0 = Vec::with_capacity(y2.len());
        for_each_bin_member(cb, &allowed, msg.w2, |s2| {
            if !self.t_s2.is_typical(&[s2]) || !self.t_s2y2.is_typical(&[s2, y2]) {
                return ControlFlow::Continue(());
            }
            for w0 in cb.u0_bin_members(msg.w0p) {
                cb.u0_codeword(s2, w0, &mut u0);
                if self.t_dec2.is_typical(&[&u0, s2, y2]) {
                    if found.is_some() {
                        ambiguous = true;
                        return ControlFlow::Break(());
                    }
                    found = Some(Decoded2 {
                        s2: s2.to_vec(),
                        w0,
                        u0: u0.clone(),
                    });
                }
            }
            ControlFlow::Continue(())
        });
        match (ambiguous, found) {
            (true, _) => Err(DecodeError::Ambiguous),
            (false, Some(d)) => Ok(d),
            (false, None) => Err(DecodeError::None),
        }
    }

    /// Decoder 1: the unique `(s2, w0, w1)` within the signalled bins with
    /// `(u0, u1, s2, y1)` jointly typical, followed by the symbolwise
    /// reconstruction of `S1`.
    pub fn decode1(&self, cb: &Codebooks, msg: &Message, y1: &[u8]) -> std::result::Result<Decoded1, DecodeError> {
        let allowed: Vec<&[u8]> = y1.iter().map(|&y| self.s2_given_y1[y as usize].as_slice()).collect();
        let mut found: Option<(Vec<u8>, Vec<u8>, Vec<u8>)> = None;
        let mut ambiguous = false;
        let mut u0 = Vec::with_capacity(y1.len());
        let mut u1 = Vec::with_capacity(y1.len());
        for_each_bin_member(cb, &allowed, msg.w2, |s2| {
            if !self.t_s2.is_typical(&[s2]) || !self.t_s2y1.is_typical(&[s2, y1]) {
                return ControlFlow::Continue(());
            }
            for w0 in cb.u0_bin_members(msg.w0p) {
                cb.u0_codeword(s2, w0, &mut u0);
                if !self.t_dec1_common.is_typical(&[&u0, s2, y1]) {
                    continue;
                }
                for w1 in cb.u1_bin_members(msg.w1p) {
                    cb.u1_codeword(s2, w0, &u0, w1, &mut u1);
                    if self.t_dec1.is_typical(&[&u0, &u1, s2, y1]) {
                        if found.is_some() {
                            ambiguous = true;
                            return ControlFlow::Break(());
                        }
                        found = Some((s2.to_vec(), u0.clone(), u1.clone()));
                    }
                }
            }
            ControlFlow::Continue(())
        });
        match (ambiguous, found) {
            (true, _) => Err(DecodeError::Ambiguous),
            (false, None) => Err(DecodeError::None),
            (false, Some((s2, u0, u1))) => {
                let s1_hat = (0..s2.len())
                    .map(|i| {
                        self.phi
                            .get(u0[i] as usize, u1[i] as usize, s2[i] as usize, y1[i] as usize)
                            as u8
                    })
                    .collect();
                Ok(Decoded1 { s2, s1_hat })
            }
        }
    }

    /// Average per-letter distortion between `s1` and its reconstruction.
    pub fn distortion(&self, s1: &[u8], s1_hat: &[u8]) -> f64 {
        let total: f64 = s1
            .iter()
            .zip(s1_hat)
            .map(|(&s, &r)| self.d1.get(s as usize, r as usize))
            .sum();
        total / s1.len() as f64
    }
}

/// Calls `f` on every sequence with `seq[i]` in `allowed[i]` whose bin is
/// `bin`, by meet-in-the-middle over the additive hash. Stops when `f`
/// breaks.
fn for_each_bin_member(
    cb: &Codebooks,
    allowed: &[&[u8]],
    bin: u64,
    mut f: impl FnMut(&[u8]) -> ControlFlow<()>,
) {
    let n = allowed.len();
    if allowed.iter().any(|a| a.is_empty()) {
        return;
    }
    let h = n / 2;
    let (left, right) = (&allowed[..h], &allowed[h..]);
    // Left half: (partial hash, assignment) sorted by hash.
    let mut table: Vec<(u64, Vec<u8>)> = Vec::new();
    let _ = enumerate(left, |seq| {
        let sum = seq
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &s)| acc.wrapping_add(cb.hash_term(i, s)));
        table.push((cb.reduce2(sum), seq.to_vec()));
        ControlFlow::Continue(())
    });
    table.sort_unstable();
    let mut full = vec![0u8; n];
    let _ = enumerate(right, |seq| {
        let sum = seq
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &s)| acc.wrapping_add(cb.hash_term(h + i, s)));
        let need = cb.reduce2(bin.wrapping_sub(sum));
        let start = table.partition_point(|e| e.0 < need);
        full[h..].copy_from_slice(seq);
        for e in table[start..].iter().take_while(|e| e.0 == need) {
            full[..h].copy_from_slice(&e.1);
            f(&full)?;
        }
        ControlFlow::Continue(())
    });
}

/// Odometer over `allowed[0] x allowed[1] x ...`, last position fastest.
fn enumerate(
    allowed: &[&[u8]],
    mut f: impl FnMut(&[u8]) -> ControlFlow<()>,
) -> ControlFlow<()> {
    let m = allowed.len();
    let mut idx = vec![0usize; m];
    let mut seq: Vec<u8> = allowed.iter().map(|a| a[0]).collect();
    loop {
        f(&seq)?;
        let mut pos = m;
        loop {
            if pos == 0 {
                return ControlFlow::Continue(());
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < allowed[pos].len() {
                seq[pos] = allowed[pos][idx[pos]];
                break;
            }
            idx[pos] = 0;
            seq[pos] = allowed[pos][0];
        }
    }
}

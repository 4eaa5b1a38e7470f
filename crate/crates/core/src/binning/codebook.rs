//! Lazily materialized random codebooks.
//!
//! A codebook for every `s2` sequence (and every `(s2, w0)` pair) would be
//! exponentially large, so a codeword is regenerated on demand from a seed
//! derived from the book seed, the sequence it is indexed by and its index.
//! Drawing codeword `w` therefore costs `n` samples regardless of how many
//! codewords precede it, and repeated requests return the same sequence.

use rand::distributions::{Distribution, WeightedIndex};
use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};

use super::rates::{index_bits, SchemeRates};
use crate::error::{Error, Result};
use crate::model::{compose, AuxChannel, JointSourcePmf, S2, U0, U1};
use crate::optimizer::mix64;

/// Largest codebook or bin index width, in bits.
pub const MAX_INDEX_BITS: u32 = 40;
/// Largest supported blocklength.
pub const MAX_BLOCKLENGTH: usize = 20;

fn row_sampler(weights: &[f64]) -> WeightedIndex<f64> {
    WeightedIndex::new(weights)
        .unwrap_or_else(|_| WeightedIndex::new(vec![1.0; weights.len()]).expect("uniform row"))
}

/// Sizes and per-letter laws shared by every codebook realization.
#[derive(Debug, Clone)]
pub struct CodeTables {
    pub n: usize,
    pub s2_size: usize,
    pub u0_size: usize,
    pub u1_size: usize,
    /// Codewords per common book, `ceil(2^(n R0))`.
    pub n0: u64,
    /// Bins of the common book, `2^ceil(n R0p)`.
    pub bins0: u64,
    pub n1: u64,
    pub bins1: u64,
    /// Width of the `S2` bin index.
    pub bits2: u32,
    u0_given_s2: Vec<WeightedIndex<f64>>,
    u1_given_u0s2: Vec<WeightedIndex<f64>>,
}

fn book_size(n: usize, rate: f64, what: &str) -> Result<u64> {
    let bits = n as f64 * rate;
    if bits > MAX_INDEX_BITS as f64 {
        return Err(Error::Budget {
            what: format!("{what} codebook at n = {n}"),
            required: 2f64.powf(bits),
            limit: 2f64.powi(MAX_INDEX_BITS as i32),
        });
    }
    let r = bits.round();
    Ok(if (bits - r).abs() < 1e-9 {
        1u64 << r as u32
    } else {
        2f64.powf(bits).ceil() as u64
    })
}

fn bin_count(n: usize, rate: f64, what: &str) -> Result<u64> {
    let bits = index_bits(n, rate);
    if bits > MAX_INDEX_BITS {
        return Err(Error::Budget {
            what: format!("{what} bin index at n = {n}"),
            required: 2f64.powi(bits as i32),
            limit: 2f64.powi(MAX_INDEX_BITS as i32),
        });
    }
    Ok(1u64 << bits)
}

impl CodeTables {
    pub fn new(source: &JointSourcePmf, channel: &AuxChannel, n: usize, rates: &SchemeRates) -> Result<Self> {
        rates.validate()?;
        if n == 0 || n > MAX_BLOCKLENGTH {
            return Err(Error::Budget {
                what: "blocklength".into(),
                required: n as f64,
                limit: MAX_BLOCKLENGTH as f64,
            });
        }
        let joint = compose(source, channel)?;
        let sizes = channel.output_sizes();
        let (nu0, nu1) = (sizes[0], sizes[1]);
        let ns2 = source.sizes()[1];
        if nu0 > 256 || nu1 > 256 || source.sizes().iter().any(|&s| s > 256) {
            return Err(Error::InvalidArgument("alphabets above 256 symbols are not simulated".into()));
        }
        let p_u0s2 = joint.pmf().marginalize(&[U0, S2])?.permuted(&[S2, U0])?;
        let u0_given_s2 = p_u0s2.probs().chunks(nu0).map(row_sampler).collect();
        let p_u1 = joint.pmf().marginalize(&[U0, U1, S2])?.permuted(&[U0, S2, U1])?;
        let u1_given_u0s2 = p_u1.probs().chunks(nu1).map(row_sampler).collect();
        let bits2 = index_bits(n, rates.r2);
        if bits2 > MAX_INDEX_BITS {
            return Err(Error::Budget {
                what: format!("S2 bin index at n = {n}"),
                required: 2f64.powi(bits2 as i32),
                limit: 2f64.powi(MAX_INDEX_BITS as i32),
            });
        }
        Ok(CodeTables {
            n,
            s2_size: ns2,
            u0_size: nu0,
            u1_size: nu1,
            n0: book_size(n, rates.r0, "U0")?,
            bins0: bin_count(n, rates.r0p, "U0")?,
            n1: book_size(n, rates.r1, "U1")?,
            bins1: bin_count(n, rates.r1p, "U1")?,
            bits2,
            u0_given_s2,
            u1_given_u0s2,
        })
    }
}

/// One realization of the random codebooks, fixed by its seed.
#[derive(Debug, Clone)]
pub struct Codebooks<'a> {
    tables: &'a CodeTables,
    seed: u64,
    /// Additive hash `h_i(s)`, indexed `i * |S2| + s`.
    hash: Vec<u64>,
}

fn sequence_key(seed: u64, tag: u64, seq: &[u8]) -> u64 {
    seq.iter()
        .fold(mix64(seed ^ tag), |k, &x| mix64(k ^ (x as u64 + 1)))
}

const U0_TAG: u64 = 0x5530_0000_0000_0001;
const U1_TAG: u64 = 0x5531_0000_0000_0002;

/// Draws a codebook realization.
pub fn generate_codebooks(tables: &CodeTables, seed: u64) -> Codebooks<'_> {
    let mut rng = SmallRng::seed_from_u64(mix64(seed ^ 0x5332_4249_4e53_0000));
    let hash = (0..tables.n * tables.s2_size).map(|_| rng.gen::<u64>()).collect();
    Codebooks { tables, seed, hash }
}

impl<'a> Codebooks<'a> {
    pub fn tables(&self) -> &'a CodeTables {
        self.tables
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn mask2(&self) -> u64 {
        if self.tables.bits2 >= 64 {
            u64::MAX
        } else {
            (1u64 << self.tables.bits2) - 1
        }
    }

    /// Additive contribution of symbol `s` at position `i`.
    pub(crate) fn hash_term(&self, i: usize, s: u8) -> u64 {
        self.hash[i * self.tables.s2_size + s as usize]
    }

    /// Bin of an `s2` sequence: `sum_i h_i(s2_i) mod 2^bits2`. The tables are
    /// uniform and independent, so distinct sequences land in independent
    /// uniform bins pairwise.
    pub fn s2_bin(&self, s2: &[u8]) -> u64 {
        let sum = s2
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &s)| acc.wrapping_add(self.hash_term(i, s)));
        sum & self.mask2()
    }

    pub(crate) fn reduce2(&self, x: u64) -> u64 {
        x & self.mask2()
    }

    /// Common-layer codeword `u0(w0)` of the book attached to `s2`, drawn
    /// i.i.d. from `P(U0 | S2 = s2_i)`.
    pub fn u0_codeword(&self, s2: &[u8], w0: u64, out: &mut Vec<u8>) {
        let key = sequence_key(self.seed, U0_TAG, s2);
        let mut rng = SmallRng::seed_from_u64(mix64(key ^ w0));
        out.clear();
        out.extend(s2.iter().map(|&s| self.tables.u0_given_s2[s as usize].sample(&mut rng) as u8));
    }

    /// Individual-layer codeword `u1(w0, w1)` attached to `(s2, w0)`, drawn
    /// i.i.d. from `P(U1 | U0 = u0_i, S2 = s2_i)`.
    pub fn u1_codeword(&self, s2: &[u8], w0: u64, u0: &[u8], w1: u64, out: &mut Vec<u8>) {
        let key = mix64(sequence_key(self.seed, U1_TAG, s2) ^ mix64(w0));
        let mut rng = SmallRng::seed_from_u64(mix64(key ^ w1));
        let ns2 = self.tables.s2_size;
        out.clear();
        out.extend(u0.iter().zip(s2).map(|(&u, &s)| {
            self.tables.u1_given_u0s2[u as usize * ns2 + s as usize].sample(&mut rng) as u8
        }));
    }

    /// Bin of a common-layer index.
    pub fn u0_bin(&self, w0: u64) -> u64 {
        w0 % self.tables.bins0
    }

    pub fn u1_bin(&self, w1: u64) -> u64 {
        w1 % self.tables.bins1
    }

    /// Indices `w0 < n0` in bin `b`, ascending. Codewords are i.i.d., so
    /// the residue classes are a uniformly random equal-size partition.
    pub fn u0_bin_members(&self, b: u64) -> impl Iterator<Item = u64> {
        (b..self.tables.n0).step_by(self.tables.bins0 as usize)
    }

    pub fn u1_bin_members(&self, b: u64) -> impl Iterator<Item = u64> {
        (b..self.tables.n1).step_by(self.tables.bins1 as usize)
    }
}

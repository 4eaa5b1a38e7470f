//! Rate bookkeeping for the binning scheme: the single-letter quantities
//! that bound each index, a margin-based rate choice, and the minimum
//! total rate both by linear programming and in eliminated form.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{compose, AuxChannel, ChannelKind, JointSourcePmf, S1, S2, U0, U1, Y1, Y2};

/// Index rates in bits per sample: `R2` for the `S2` bin, `R0`/`R0p` for
/// the common codebook and its bins, `R1`/`R1p` for the individual layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeRates {
    #[serde(rename = "R2")]
    pub r2: f64,
    #[serde(rename = "R0")]
    pub r0: f64,
    #[serde(rename = "R0p")]
    pub r0p: f64,
    #[serde(rename = "R1")]
    pub r1: f64,
    #[serde(rename = "R1p")]
    pub r1p: f64,
}

impl SchemeRates {
    pub fn new(r2: f64, r0: f64, r0p: f64, r1: f64, r1p: f64) -> Result<Self> {
        let r = SchemeRates {
            r2,
            r0,
            r0p,
            r1,
            r1p,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.r2, self.r0, self.r0p, self.r1, self.r1p];
        if all.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidArgument(format!("rates must be finite and >= 0: {self:?}")));
        }
        if self.r0p > self.r0 || self.r1p > self.r1 {
            return Err(Error::InvalidArgument(format!(
                "bin rates must not exceed codebook rates: {self:?}"
            )));
        }
        Ok(())
    }

    /// Nominal total `R2 + R0p + R1p`.
    pub fn total(&self) -> f64 {
        self.r2 + self.r0p + self.r1p
    }

    /// Transmitted bits at blocklength `n`: `ceil(n R2) + ceil(n R0p) + ceil(n R1p)`.
    pub fn description_bits(&self, n: usize) -> u32 {
        index_bits(n, self.r2) + index_bits(n, self.r0p) + index_bits(n, self.r1p)
    }
}

/// `ceil(n R)`, tolerant of rates that are integral multiples of `1/n` up
/// to rounding.
pub fn index_bits(n: usize, rate: f64) -> u32 {
    let x = n as f64 * rate;
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as u32
    } else {
        x.ceil() as u32
    }
}

/// Single-letter quantities of a channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleLetterTerms {
    /// `I(U0; S1 | S2)`.
    pub a: f64,
    /// `I(U1; S1 | U0 S2)`.
    pub b: f64,
    /// `I(U0; Y1 | S2)`.
    pub c1: f64,
    /// `I(U0; Y2 | S2)`.
    pub c2: f64,
    /// `I(U1; Y1 | U0 S2)`.
    pub e: f64,
    /// `H(S2 | Y1)`.
    pub h1: f64,
    /// `H(S2 | Y2)`.
    pub h2: f64,
}

pub fn single_letter_terms(source: &JointSourcePmf, channel: &AuxChannel) -> Result<SingleLetterTerms> {
    if channel.kind() != ChannelKind::OneDistortion {
        return Err(Error::ChannelKind("the binning scheme takes a (U0, U1) channel".into()));
    }
    let joint = compose(source, channel)?;
    let p = joint.pmf();
    Ok(SingleLetterTerms {
        a: p.mutual_information(&[U0], &[S1], &[S2])?,
        b: p.mutual_information(&[U1], &[S1], &[U0, S2])?,
        c1: p.mutual_information(&[U0], &[Y1], &[S2])?,
        c2: p.mutual_information(&[U0], &[Y2], &[S2])?,
        e: p.mutual_information(&[U1], &[Y1], &[U0, S2])?,
        h1: p.entropy(&[S2], &[Y1])?,
        h2: p.entropy(&[S2], &[Y2])?,
    })
}

impl SingleLetterTerms {
    /// Whether `rates` satisfy every covering and packing constraint with
    /// at least `slack` bits to spare.
    pub fn admits(&self, r: &SchemeRates, slack: f64) -> bool {
        let d0 = r.r0 - r.r0p;
        r.r0 >= self.a + slack
            && r.r1 >= self.b + slack
            && d0 <= self.c2 - slack
            && d0 - r.r2 <= self.c2 - self.h2 - slack
            && d0 <= self.c1 - slack
            && d0 - r.r2 <= self.c1 - self.h1 - slack
            && r.r1 - r.r1p <= self.e - slack
    }

    /// Rates with `margin` bits of slack on every constraint that can
    /// carry it: codebooks `margin` above their covering bounds, bins
    /// absorbing as much of the side-information gain as the margin allows.
    pub fn rates_with_margin(&self, margin: f64) -> SchemeRates {
        let r0 = self.a + margin;
        let d0 = (self.a.min(self.c1).min(self.c2) - margin).max(0.0);
        let r2 = (self.h2 - self.c2 + d0).max(self.h1 - self.c1 + d0).max(0.0) + margin;
        let r1 = self.b + margin;
        let d1 = (self.e.min(self.b) - margin).max(0.0);
        SchemeRates {
            r2,
            r0,
            r0p: r0 - d0,
            r1,
            r1p: r1 - d1,
        }
    }

    /// The eliminated minimum total rate
    /// `max{I(U0;S1|S2Y1) + H(S2|Y1), I(U0;S1|S2Y2) + H(S2|Y2)} + I(U1;S1|U0S2Y1)`,
    /// written through the chain-rule identities `I(U0;S1|S2Yj) = a - cj`
    /// and `I(U1;S1|U0S2Y1) = b - e`.
    pub fn eliminated_total(&self) -> f64 {
        (self.a - self.c1 + self.h1).max(self.a - self.c2 + self.h2) + (self.b - self.e)
    }

    /// Minimum of `R2 + R0p + R1p` over the constraint polytope, by LP.
    pub fn lp_min_total(&self) -> Result<f64> {
        let mut lp = Problem::new(OptimizationDirection::Minimize);
        let free = (0.0, f64::INFINITY);
        let r2 = lp.add_var(1.0, free);
        let r0 = lp.add_var(0.0, free);
        let r0p = lp.add_var(1.0, free);
        let r1 = lp.add_var(0.0, free);
        let r1p = lp.add_var(1.0, free);
        use ComparisonOp::{Ge, Le};
        lp.add_constraint([(r0, 1.0)], Ge, self.a);
        lp.add_constraint([(r1, 1.0)], Ge, self.b);
        lp.add_constraint([(r0, 1.0), (r0p, -1.0)], Le, self.c2);
        lp.add_constraint([(r0, 1.0), (r0p, -1.0), (r2, -1.0)], Le, self.c2 - self.h2);
        lp.add_constraint([(r0, 1.0), (r0p, -1.0)], Le, self.c1);
        lp.add_constraint([(r0, 1.0), (r0p, -1.0), (r2, -1.0)], Le, self.c1 - self.h1);
        lp.add_constraint([(r1, 1.0), (r1p, -1.0)], Le, self.e);
        lp.add_constraint([(r0p, 1.0), (r0, -1.0)], Le, 0.0);
        lp.add_constraint([(r1p, 1.0), (r1, -1.0)], Le, 0.0);
        let sol = lp
            .solve()
            .map_err(|e| Error::InvalidArgument(format!("rate LP failed: {e:?}")))?;
        Ok(sol.objective())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn terms() -> SingleLetterTerms {
        SingleLetterTerms {
            a: 1.0,
            b: 1.0,
            c1: 0.0,
            c2: 1.0,
            e: 1.0,
            h1: 0.0,
            h2: 2.0,
        }
    }

    #[test]
    fn margin_rates_satisfy_constraints() {
        let t = terms();
        let r = t.rates_with_margin(0.5);
        r.validate().unwrap();
        assert!(t.admits(&r, 0.0));
        assert!(r.r0 >= t.a + 0.5 && r.r1 >= t.b + 0.5);
        assert!((r.r0 - 1.5).abs() < 1e-12);
        assert!((r.r0p - 1.5).abs() < 1e-12);
        assert!((r.r2 - 1.5).abs() < 1e-12);
        assert!((r.r1p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_margin_reaches_eliminated_total() {
        let t = terms();
        let r = t.rates_with_margin(0.0);
        assert!(t.admits(&r, -1e-12));
        assert!((r.total() - t.eliminated_total()).abs() < 1e-12);
        assert!((t.lp_min_total().unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn index_bits_rounds_up() {
        assert_eq!(index_bits(12, 1.5), 18);
        assert_eq!(index_bits(4, 0.3), 2);
        assert_eq!(index_bits(3, 1.0 / 3.0), 1);
        assert_eq!(index_bits(5, 0.0), 0);
    }

    #[test]
    fn rejects_bins_above_codebook() {
        assert!(SchemeRates::new(0.0, 0.5, 1.0, 0.0, 0.0).is_err());
        assert!(SchemeRates::new(0.0, 1.0, 0.5, 0.0, 0.0).is_ok());
    }
}

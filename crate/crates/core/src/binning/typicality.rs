use crate::error::Result;
use crate::prob::Pmf;

/// Strong typicality against a fixed joint law: a tuple of sequences is
/// typical when every letter count `N(a)` satisfies
/// `|N(a) - n p(a)| <= eps n p(a)`. Letters of probability zero must not
/// occur at all.
#[derive(Debug, Clone)]
pub struct TypicalityTest {
    dims: Vec<usize>,
    probs: Vec<f64>,
    eps: f64,
}

impl TypicalityTest {
    /// Test for the joint law of `axes` (in that order) under `joint`.
    pub fn new(joint: &Pmf, axes: &[&str], eps: f64) -> Result<Self> {
        let m = joint.marginalize(axes)?.permuted(axes)?;
        Ok(TypicalityTest {
            dims: m.shape(),
            probs: m.probs().to_vec(),
            eps,
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Sequences are given in the axis order of construction and must
    /// share one length.
    pub fn is_typical(&self, seqs: &[&[u8]]) -> bool {
        debug_assert_eq!(seqs.len(), self.dims.len());
        let n = seqs[0].len();
        let mut counts = vec![0u32; self.probs.len()];
        for i in 0..n {
            let mut flat = 0usize;
            for (seq, &d) in seqs.iter().zip(&self.dims) {
                flat = flat * d + seq[i] as usize;
            }
            if self.probs[flat] == 0.0 {
                return false;
            }
            counts[flat] += 1;
        }
        let nf = n as f64;
        self.probs.iter().zip(&counts).all(|(&p, &c)| {
            let expected = nf * p;
            (c as f64 - expected).abs() <= self.eps * expected + 1e-9
        })
    }

    /// Symbols of the first axis compatible with each symbol of the last
    /// axis, for a two-axis test: `out[y]` lists `x` with `p(x, y) > 0`.
    pub fn support_by_last(&self) -> Vec<Vec<u8>> {
        debug_assert_eq!(self.dims.len(), 2);
        let (nx, ny) = (self.dims[0], self.dims[1]);
        (0..ny)
            .map(|y| (0..nx).filter(|&x| self.probs[x * ny + y] > 0.0).map(|x| x as u8).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::Axis;

    fn fair_pair() -> Pmf {
        Pmf::new(
            vec![Axis::new("A", 2), Axis::new("B", 2)],
            vec![0.5, 0.0, 0.0, 0.5],
        )
        .unwrap()
    }

    #[test]
    fn copy_law_requires_equal_sequences() {
        let t = TypicalityTest::new(&fair_pair(), &["A", "B"], 0.5).unwrap();
        assert!(t.is_typical(&[&[0, 1, 0, 1], &[0, 1, 0, 1]]));
        assert!(!t.is_typical(&[&[0, 1, 0, 1], &[0, 1, 1, 1]]));
    }

    #[test]
    fn counts_must_be_close() {
        let t = TypicalityTest::new(&fair_pair(), &["A"], 0.2).unwrap();
        assert!(t.is_typical(&[&[0, 1, 0, 1, 1, 0, 0, 1, 0, 1]]));
        assert!(!t.is_typical(&[&[0, 0, 0, 0, 0, 0, 0, 1, 1, 1]]));
    }

    #[test]
    fn support_lists() {
        let t = TypicalityTest::new(&fair_pair(), &["A", "B"], 0.2).unwrap();
        assert_eq!(t.support_by_last(), vec![vec![0], vec![1]]);
    }
}

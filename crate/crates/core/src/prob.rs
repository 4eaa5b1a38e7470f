//! Dense finite-alphabet probability tables and exact information measures.
//!
//! A [`Pmf`] is a row-major tensor whose axes carry string labels; every
//! information measure is addressed by label sets, so `H(S1 S2 | Y1)` reads
//! as `p.entropy(&["S1", "S2"], &["Y1"])`. All logarithms are base 2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a pmf (and on each row of a conditional).
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// A labelled finite alphabet. Symbols are the indices `0..size`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub size: usize,
}

impl Axis {
    pub fn new(name: impl Into<String>, size: usize) -> Self {
        Axis {
            name: name.into(),
            size,
        }
    }
}

fn check_axes(axes: &[Axis]) -> Result<()> {
    for (i, a) in axes.iter().enumerate() {
        if a.size == 0 {
            return Err(Error::Shape(format!("axis `{}` has an empty alphabet", a.name)));
        }
        if axes[..i].iter().any(|b| b.name == a.name) {
            return Err(Error::Shape(format!("axis `{}` appears twice", a.name)));
        }
    }
    Ok(())
}

fn check_entries(probs: &[f64]) -> Result<()> {
    for (i, &p) in probs.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidProbability(format!("entry {i} is {p}")));
        }
    }
    Ok(())
}

pub(crate) fn volume(axes: &[Axis]) -> usize {
    axes.iter().map(|a| a.size).product()
}

/// Calls `f(flat, index)` for every multi-index of `shape` in row-major order.
pub fn for_each_index(shape: &[usize], mut f: impl FnMut(usize, &[usize])) {
    let total: usize = shape.iter().product();
    let mut idx = vec![0usize; shape.len()];
    for flat in 0..total {
        f(flat, &idx);
        for ax in (0..shape.len()).rev() {
            idx[ax] += 1;
            if idx[ax] < shape[ax] {
                break;
            }
            idx[ax] = 0;
        }
    }
}

/// `-sum p log2 p` with `0 log 0 = 0`.
pub fn shannon_entropy(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

/// Binary entropy function in bits.
pub fn binary_entropy(p: f64) -> f64 {
    shannon_entropy(&[p, 1.0 - p])
}

/// A joint probability mass function over labelled axes.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    axes: Vec<Axis>,
    probs: Vec<f64>,
}

impl Pmf {
    /// Builds a pmf, checking shape, nonnegativity and normalization.
    pub fn new(axes: Vec<Axis>, probs: Vec<f64>) -> Result<Self> {
        check_axes(&axes)?;
        if probs.len() != volume(&axes) {
            return Err(Error::Shape(format!(
                "expected {} entries for axes {:?}, got {}",
                volume(&axes),
                axes.iter().map(|a| &a.name).collect::<Vec<_>>(),
                probs.len()
            )));
        }
        check_entries(&probs)?;
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Normalization(format!("entries sum to {total}")));
        }
        Ok(Pmf { axes, probs })
    }

    /// Builds a pmf from nonnegative weights, dividing by their total.
    pub fn from_weights(axes: Vec<Axis>, weights: Vec<f64>) -> Result<Self> {
        check_entries(&weights)?;
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::Normalization("weights have zero total mass".into()));
        }
        Pmf::new(axes, weights.into_iter().map(|w| w / total).collect())
    }

    /// Builds a pmf by evaluating `f` on every multi-index.
    pub fn from_fn(axes: Vec<Axis>, f: impl Fn(&[usize]) -> f64) -> Result<Self> {
        check_axes(&axes)?;
        let shape: Vec<usize> = axes.iter().map(|a| a.size).collect();
        let mut probs = vec![0.0; volume(&axes)];
        for_each_index(&shape, |flat, idx| probs[flat] = f(idx));
        Pmf::new(axes, probs)
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.size).collect()
    }

    pub fn axis_position(&self, name: &str) -> Result<usize> {
        self.axes
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| Error::UnknownAxis(name.to_string()))
    }

    pub fn size_of(&self, name: &str) -> Result<usize> {
        Ok(self.axes[self.axis_position(name)?].size)
    }

    /// Probability of a single cell.
    pub fn get(&self, idx: &[usize]) -> f64 {
        let mut flat = 0;
        for (a, &i) in self.axes.iter().zip(idx) {
            flat = flat * a.size + i;
        }
        self.probs[flat]
    }

    fn positions(&self, labels: &[&str]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(labels.len());
        for l in labels {
            let p = self.axis_position(l)?;
            if out.contains(&p) {
                return Err(Error::OverlappingAxes(l.to_string()));
            }
            out.push(p);
        }
        Ok(out)
    }

    /// Raw marginal over the axes at `keep` (positions, ascending).
    fn marginal_raw(&self, keep: &[usize]) -> Vec<f64> {
        let shape = self.shape();
        let mut target_stride = vec![0usize; shape.len()];
        let mut size = 1;
        for &k in keep.iter().rev() {
            target_stride[k] = size;
            size *= shape[k];
        }
        let mut out = vec![0.0; size];
        let mut idx = vec![0usize; shape.len()];
        let mut t = 0usize;
        for &p in &self.probs {
            out[t] += p;
            for ax in (0..shape.len()).rev() {
                idx[ax] += 1;
                t += target_stride[ax];
                if idx[ax] < shape[ax] {
                    break;
                }
                t -= target_stride[ax] * shape[ax];
                idx[ax] = 0;
            }
        }
        out
    }

    /// Sums out every axis not in `keep`. Kept axes retain this pmf's order.
    pub fn marginalize(&self, keep: &[&str]) -> Result<Pmf> {
        let mut pos = self.positions(keep)?;
        pos.sort_unstable();
        let axes = pos.iter().map(|&p| self.axes[p].clone()).collect();
        Ok(Pmf {
            axes,
            probs: self.marginal_raw(&pos),
        })
    }

    /// Reorders the axes to `order`, which must name every axis exactly once.
    pub fn permuted(&self, order: &[&str]) -> Result<Pmf> {
        let pos = self.positions(order)?;
        if pos.len() != self.axes.len() {
            return Err(Error::Shape(format!(
                "permutation names {} axes, pmf has {}",
                pos.len(),
                self.axes.len()
            )));
        }
        let axes: Vec<Axis> = pos.iter().map(|&p| self.axes[p].clone()).collect();
        let old_shape = self.shape();
        let mut old_stride = vec![1usize; old_shape.len()];
        for i in (0..old_shape.len().saturating_sub(1)).rev() {
            old_stride[i] = old_stride[i + 1] * old_shape[i + 1];
        }
        let new_shape: Vec<usize> = axes.iter().map(|a| a.size).collect();
        let mut probs = vec![0.0; self.probs.len()];
        for_each_index(&new_shape, |flat, idx| {
            let src: usize = idx.iter().zip(&pos).map(|(&i, &p)| i * old_stride[p]).sum();
            probs[flat] = self.probs[src];
        });
        Ok(Pmf { axes, probs })
    }

    fn set_entropy(&self, pos: &[usize]) -> f64 {
        if pos.is_empty() {
            return 0.0;
        }
        let mut sorted = pos.to_vec();
        sorted.sort_unstable();
        shannon_entropy(&self.marginal_raw(&sorted))
    }

    fn disjoint(&self, sets: &[&[&str]]) -> Result<Vec<Vec<usize>>> {
        let resolved: Vec<Vec<usize>> = sets
            .iter()
            .map(|s| self.positions(s))
            .collect::<Result<_>>()?;
        for i in 0..resolved.len() {
            for j in 0..i {
                if let Some(&p) = resolved[i].iter().find(|p| resolved[j].contains(p)) {
                    return Err(Error::OverlappingAxes(self.axes[p].name.clone()));
                }
            }
        }
        Ok(resolved)
    }

    /// Conditional entropy `H(of | given)` in bits.
    pub fn entropy(&self, of: &[&str], given: &[&str]) -> Result<f64> {
        let sets = self.disjoint(&[of, given])?;
        let joint: Vec<usize> = sets[0].iter().chain(&sets[1]).copied().collect();
        let h = self.set_entropy(&joint) - self.set_entropy(&sets[1]);
        Ok(h.max(0.0))
    }

    /// Conditional mutual information `I(a; b | given)` in bits, clamped at zero.
    pub fn mutual_information(&self, a: &[&str], b: &[&str], given: &[&str]) -> Result<f64> {
        let sets = self.disjoint(&[a, b, given])?;
        let union = |x: &[usize], y: &[usize]| -> Vec<usize> { x.iter().chain(y).copied().collect() };
        let ag = union(&sets[0], &sets[2]);
        let bg = union(&sets[1], &sets[2]);
        let abg = union(&ag, &sets[1]);
        let i = self.set_entropy(&ag) + self.set_entropy(&bg)
            - self.set_entropy(&abg)
            - self.set_entropy(&sets[2]);
        Ok(i.max(0.0))
    }
}

/// A conditional pmf `P(output | given)`, stored given-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CondPmf {
    given: Vec<Axis>,
    output: Vec<Axis>,
    probs: Vec<f64>,
}

impl CondPmf {
    pub fn new(given: Vec<Axis>, output: Vec<Axis>, probs: Vec<f64>) -> Result<Self> {
        let mut all = given.clone();
        all.extend(output.iter().cloned());
        check_axes(&all)?;
        let rows = volume(&given);
        let width = volume(&output);
        if probs.len() != rows * width {
            return Err(Error::Shape(format!(
                "conditional expects {} entries, got {}",
                rows * width,
                probs.len()
            )));
        }
        check_entries(&probs)?;
        for (r, row) in probs.chunks(width).enumerate() {
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::Normalization(format!(
                    "conditional row {r} sums to {total}"
                )));
            }
        }
        Ok(CondPmf {
            given,
            output,
            probs,
        })
    }

    /// Builds a conditional from nonnegative weights, normalizing each row.
    pub fn from_weights(given: Vec<Axis>, output: Vec<Axis>, mut weights: Vec<f64>) -> Result<Self> {
        check_entries(&weights)?;
        let width = volume(&output).max(1);
        for (r, row) in weights.chunks_mut(width).enumerate() {
            let total: f64 = row.iter().sum();
            if total <= 0.0 {
                return Err(Error::Normalization(format!("conditional row {r} has zero mass")));
            }
            row.iter_mut().for_each(|w| *w /= total);
        }
        CondPmf::new(given, output, weights)
    }

    /// A deterministic conditional: `f` maps a given index to an output index.
    pub fn deterministic(
        given: Vec<Axis>,
        output: Vec<Axis>,
        f: impl Fn(&[usize]) -> Vec<usize>,
    ) -> Result<Self> {
        let gshape: Vec<usize> = given.iter().map(|a| a.size).collect();
        let oshape: Vec<usize> = output.iter().map(|a| a.size).collect();
        let width = volume(&output);
        let mut probs = vec![0.0; volume(&given) * width];
        let mut bad = None;
        for_each_index(&gshape, |row, g| {
            let o = f(g);
            if o.len() != oshape.len() || o.iter().zip(&oshape).any(|(&i, &s)| i >= s) {
                bad = Some(format!("map sends {g:?} to invalid output {o:?}"));
                return;
            }
            let col = o.iter().zip(&oshape).fold(0, |acc, (&i, &s)| acc * s + i);
            probs[row * width + col] = 1.0;
        });
        if let Some(msg) = bad {
            return Err(Error::Shape(msg));
        }
        CondPmf::new(given, output, probs)
    }

    pub fn given_axes(&self) -> &[Axis] {
        &self.given
    }

    pub fn output_axes(&self) -> &[Axis] {
        &self.output
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn rows(&self) -> usize {
        volume(&self.given)
    }

    pub fn row_len(&self) -> usize {
        volume(&self.output)
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let w = self.row_len();
        &self.probs[r * w..(r + 1) * w]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits2(probs: Vec<f64>) -> Pmf {
        Pmf::new(vec![Axis::new("A", 2), Axis::new("B", 2)], probs).unwrap()
    }

    #[test]
    fn marginal_of_uniform_pair_is_uniform() {
        let p = bits2(vec![0.25; 4]);
        let m = p.marginalize(&["A"]).unwrap();
        assert_eq!(m.probs(), &[0.5, 0.5]);
        assert_eq!(m.axes(), &[Axis::new("A", 2)]);
    }

    #[test]
    fn marginal_of_single_axis_is_identity() {
        let p = Pmf::new(vec![Axis::new("A", 3)], vec![0.5, 0.25, 0.25]).unwrap();
        assert_eq!(p.marginalize(&["A"]).unwrap(), p);
    }

    #[test]
    fn marginal_keeps_pmf_order() {
        let p = Pmf::from_fn(
            vec![Axis::new("A", 2), Axis::new("B", 3), Axis::new("C", 2)],
            |i| (1 + i[0] + 2 * i[1] + 6 * i[2]) as f64 / 78.0,
        )
        .unwrap();
        let m = p.marginalize(&["C", "A"]).unwrap();
        assert_eq!(m.axes()[0].name, "A");
        assert_eq!(m.axes()[1].name, "C");
        // P(A=1, C=0) = (2 + 4 + 6) / 78
        assert!((m.get(&[1, 0]) - 12.0 / 78.0).abs() < 1e-15);
    }

    #[test]
    fn unknown_axis_is_rejected() {
        let p = bits2(vec![0.25; 4]);
        assert_eq!(
            p.marginalize(&["Z"]).unwrap_err(),
            Error::UnknownAxis("Z".into())
        );
    }

    #[test]
    fn fair_coin_has_one_bit() {
        let p = Pmf::new(vec![Axis::new("A", 2)], vec![0.5, 0.5]).unwrap();
        assert_eq!(p.entropy(&["A"], &[]).unwrap(), 1.0);
    }

    #[test]
    fn degenerate_pmf_has_zero_entropy() {
        let p = bits2(vec![0.0, 0.0, 1.0, 0.0]);
        assert_eq!(p.entropy(&["A", "B"], &[]).unwrap(), 0.0);
        assert_eq!(p.entropy(&["A"], &["B"]).unwrap(), 0.0);
        assert_eq!(p.entropy(&["B"], &["A"]).unwrap(), 0.0);
    }

    #[test]
    fn overlapping_sets_are_rejected() {
        let p = bits2(vec![0.25; 4]);
        assert!(matches!(
            p.entropy(&["A"], &["A"]),
            Err(Error::OverlappingAxes(_))
        ));
        assert!(matches!(
            p.mutual_information(&["A"], &["B"], &["B"]),
            Err(Error::OverlappingAxes(_))
        ));
    }

    #[test]
    fn independent_bits_share_nothing() {
        let p = bits2(vec![0.25; 4]);
        assert_eq!(p.mutual_information(&["A"], &["B"], &[]).unwrap(), 0.0);
    }

    #[test]
    fn copied_bit_shares_one_bit() {
        let p = bits2(vec![0.5, 0.0, 0.0, 0.5]);
        assert_eq!(p.mutual_information(&["A"], &["B"], &[]).unwrap(), 1.0);
    }

    #[test]
    fn normalization_is_enforced() {
        let err = Pmf::new(vec![Axis::new("A", 2)], vec![0.5, 0.4]).unwrap_err();
        assert!(matches!(err, Error::Normalization(_)));
        let err = Pmf::new(vec![Axis::new("A", 2)], vec![1.5, -0.5]).unwrap_err();
        assert!(matches!(err, Error::InvalidProbability(_)));
        let err = Pmf::new(vec![Axis::new("A", 2)], vec![1.0]).unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
    }

    #[test]
    fn permutation_transposes() {
        let p = Pmf::new(
            vec![Axis::new("A", 2), Axis::new("B", 3)],
            vec![0.1, 0.2, 0.05, 0.3, 0.15, 0.2],
        )
        .unwrap();
        let q = p.permuted(&["B", "A"]).unwrap();
        for a in 0..2 {
            for b in 0..3 {
                assert_eq!(p.get(&[a, b]), q.get(&[b, a]));
            }
        }
    }

    #[test]
    fn conditional_rows_must_normalize() {
        let g = vec![Axis::new("X", 2)];
        let o = vec![Axis::new("U", 2)];
        assert!(CondPmf::new(g.clone(), o.clone(), vec![0.5, 0.5, 1.0, 0.0]).is_ok());
        assert!(matches!(
            CondPmf::new(g, o, vec![0.5, 0.5, 0.9, 0.0]),
            Err(Error::Normalization(_))
        ));
    }

    #[test]
    fn binary_entropy_values() {
        assert_eq!(binary_entropy(0.5), 1.0);
        assert_eq!(binary_entropy(0.0), 0.0);
        // h(1/4) = 2 - (3/4) log2 3
        let expected = 2.0 - 0.75 * 3f64.log2();
        assert!((binary_entropy(0.25) - expected).abs() < 1e-15);
    }
}

#![allow(dead_code)]

use std::collections::HashMap;

use hbrd_core::{AuxChannel, ChannelKind, JointSourcePmf};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random weights with a few exact zeros.
pub fn random_weights(rng: &mut ChaCha8Rng, n: usize, zero_prob: f64) -> Vec<f64> {
    loop {
        let w: Vec<f64> = (0..n)
            .map(|_| if rng.gen::<f64>() < zero_prob { 0.0 } else { rng.gen::<f64>() })
            .collect();
        let t: f64 = w.iter().sum();
        if t > 0.0 {
            return w.into_iter().map(|x| x / t).collect();
        }
    }
}

pub fn random_source(rng: &mut ChaCha8Rng, sizes: [usize; 4]) -> JointSourcePmf {
    let w = random_weights(rng, sizes.iter().product(), 0.1);
    let [_, n2, ny1, ny2] = sizes;
    JointSourcePmf::from_fn(sizes, |a, b, c, d| w[((a * n2 + b) * ny1 + c) * ny2 + d]).unwrap()
}

pub fn random_channel(rng: &mut ChaCha8Rng, kind: ChannelKind, src: [usize; 2], out: &[usize]) -> AuxChannel {
    let width: usize = out.iter().product();
    let mut probs = Vec::new();
    for _ in 0..src[0] * src[1] {
        probs.extend(random_weights(rng, width, 0.2));
    }
    AuxChannel::from_probs(kind, src, out, probs).unwrap()
}

/// A plain joint table over named variables, used as an independent
/// reference for information quantities.
pub struct Table {
    pub names: Vec<&'static str>,
    pub cells: Vec<(Vec<usize>, f64)>,
}

impl Table {
    /// `p(s1, s2, y1, y2) P(outputs | s1, s2)` with outputs named in `out`.
    pub fn compose(source: &JointSourcePmf, channel: &AuxChannel, out: &[&'static str]) -> Table {
        let [n1, n2, ny1, ny2] = source.sizes();
        let osz = channel.output_sizes();
        let width: usize = osz.iter().product();
        let mut names = vec!["S1", "S2", "Y1", "Y2"];
        names.extend_from_slice(out);
        let mut cells = Vec::new();
        for s1 in 0..n1 {
            for s2 in 0..n2 {
                for y1 in 0..ny1 {
                    for y2 in 0..ny2 {
                        let p = source.probs()[((s1 * n2 + s2) * ny1 + y1) * ny2 + y2];
                        for o in 0..width {
                            let q = channel.probs()[(s1 * n2 + s2) * width + o];
                            let mut idx = vec![s1, s2, y1, y2];
                            let mut rest = o;
                            let mut digits = vec![0; osz.len()];
                            for k in (0..osz.len()).rev() {
                                digits[k] = rest % osz[k];
                                rest /= osz[k];
                            }
                            idx.extend(digits);
                            cells.push((idx, p * q));
                        }
                    }
                }
            }
        }
        Table { names, cells }
    }

    fn pos(&self, v: &str) -> usize {
        self.names.iter().position(|n| *n == v).unwrap()
    }

    pub fn h(&self, vars: &[&str]) -> f64 {
        let pos: Vec<usize> = vars.iter().map(|v| self.pos(v)).collect();
        let mut m: HashMap<Vec<usize>, f64> = HashMap::new();
        for (idx, p) in &self.cells {
            *m.entry(pos.iter().map(|&i| idx[i]).collect()).or_default() += p;
        }
        m.values().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum()
    }

    /// `H(a | b)`.
    pub fn hc(&self, a: &[&str], b: &[&str]) -> f64 {
        let mut ab: Vec<&str> = a.to_vec();
        ab.extend(b.iter().filter(|v| !a.contains(v)));
        self.h(&ab) - self.h(b)
    }

    /// `I(a; b | c)`.
    pub fn mi(&self, a: &[&str], b: &[&str], c: &[&str]) -> f64 {
        self.hc(a, c) - self.hc(a, &[b, c].concat())
    }
}

use rand::distributions::{Distribution, WeightedIndex};
use rand::rngs::SmallRng;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::codebook::{generate_codebooks, CodeTables};
use super::coder::Scheme;
use super::rates::{single_letter_terms, SchemeRates};
use super::SimulationSettings;
use crate::error::{Error, Result};
use crate::model::{AuxChannel, DistortionTable, JointSourcePmf};
use crate::optimizer::mix64;

/// Aggregated Monte-Carlo outcome. A trial is in error when either
/// decoder fails to return the true `s2` sequence.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub trials: u64,
    pub encode_failures: u64,
    pub decode1_errors: u64,
    pub decode2_errors: u64,
    pub errors: u64,
    pub empirical_pe: f64,
    pub avg_d1: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Outcome {
    encode_failure: bool,
    decode1_error: bool,
    decode2_error: bool,
    d1: f64,
}

const SOURCE_SALT: u64 = 0x534f_5552_4345_0000;
const BOOK_SALT: u64 = 0x424f_4f4b_0000_0000;

/// Runs `trials` independent trials. The codebooks are redrawn every
/// `refresh` trials; trial `t` uses source seed `f(seed, t)` and codebook
/// seed `g(seed, t / refresh)`, so results do not depend on scheduling.
pub fn run_trials(
    scheme: &Scheme,
    source: &JointSourcePmf,
    trials: u64,
    seed: u64,
    refresh: u64,
) -> Result<TrialStats> {
    if trials == 0 || refresh == 0 {
        return Err(Error::InvalidArgument("trials and codebook refresh must be >= 1".into()));
    }
    let sampler = WeightedIndex::new(source.probs())
        .map_err(|e| Error::InvalidArgument(format!("source cannot be sampled: {e}")))?;
    let [_, n2, ny1, ny2] = source.sizes();
    let n = scheme.n();
    let d1_max = scheme.d1.max_value();
    let outcomes: Vec<Outcome> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = SmallRng::seed_from_u64(mix64(seed ^ SOURCE_SALT ^ mix64(t)));
            let mut s1 = Vec::with_capacity(n);
            let mut s2 = Vec::with_capacity(n);
            let mut y1 = Vec::with_capacity(n);
            let mut y2 = Vec::with_capacity(n);
            for _ in 0..n {
                let i = sampler.sample(&mut rng);
                let (row, side) = (i / (ny1 * ny2), i % (ny1 * ny2));
                s1.push((row / n2) as u8);
                s2.push((row % n2) as u8);
                y1.push((side / ny2) as u8);
                y2.push((side % ny2) as u8);
            }
            let cb = generate_codebooks(&scheme.tables, mix64(seed ^ BOOK_SALT ^ mix64(t / refresh)));
            let enc = scheme.encode(&cb, &s1, &s2);
            let dec2 = scheme.decode2(&cb, &enc.message, &y2);
            let dec1 = scheme.decode1(&cb, &enc.message, &y1);
            let (decode1_error, d1) = match &dec1 {
                Ok(d) => (d.s2 != s2, scheme.distortion(&s1, &d.s1_hat)),
                Err(_) => (true, d1_max),
            };
            Outcome {
                encode_failure: enc.failure.is_some(),
                decode1_error,
                decode2_error: dec2.map_or(true, |d| d.s2 != s2),
                d1,
            }
        })
        .collect();
    let mut stats = TrialStats {
        trials,
        ..TrialStats::default()
    };
    let mut d1_sum = 0.0;
    for o in &outcomes {
        stats.encode_failures += o.encode_failure as u64;
        stats.decode1_errors += o.decode1_error as u64;
        stats.decode2_errors += o.decode2_error as u64;
        stats.errors += (o.decode1_error || o.decode2_error) as u64;
        d1_sum += o.d1;
    }
    stats.empirical_pe = stats.errors as f64 / trials as f64;
    stats.avg_d1 = d1_sum / trials as f64;
    Ok(stats)
}

/// One simulated operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRow {
    pub n: usize,
    /// Transmitted bits divided by `n`.
    pub r_total: f64,
    pub rates: SchemeRates,
    pub epsilon: f64,
    pub stats: TrialStats,
}

impl SimulationRow {
    pub const CSV_HEADER: &'static str =
        "n,R_total,R2,R0p,R1p,epsilon,trials,encode_failures,decode1_errors,decode2_errors,Pe,avg_d1";

    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.n,
            self.r_total,
            self.rates.r2,
            self.rates.r0p,
            self.rates.r1p,
            self.epsilon,
            self.stats.trials,
            self.stats.encode_failures,
            self.stats.decode1_errors,
            self.stats.decode2_errors,
            self.stats.empirical_pe,
            self.stats.avg_d1
        )
    }
}

/// Builds the scheme at blocklength `n` and runs the trials.
#[allow(clippy::too_many_arguments)]
pub fn simulate_point(
    source: &JointSourcePmf,
    channel: &AuxChannel,
    d1: &DistortionTable,
    n: usize,
    rates: &SchemeRates,
    eps: f64,
    trials: u64,
    seed: u64,
    refresh: u64,
) -> Result<SimulationRow> {
    let tables = CodeTables::new(source, channel, n, rates)?;
    let scheme = Scheme::new(source, channel, d1, tables, eps)?;
    let stats = run_trials(&scheme, source, trials, mix64(seed ^ n as u64), refresh)?;
    Ok(SimulationRow {
        n,
        r_total: rates.description_bits(n) as f64 / n as f64,
        rates: *rates,
        epsilon: eps,
        stats,
    })
}

/// Runs every blocklength of `settings`. Rates come from the settings, or
/// from the single-letter constraints plus the configured margin.
pub fn simulate(
    source: &JointSourcePmf,
    channel: &AuxChannel,
    d1: &DistortionTable,
    settings: &SimulationSettings,
) -> Result<Vec<SimulationRow>> {
    let rates = match settings.rates {
        Some(r) => r,
        None => single_letter_terms(source, channel)?.rates_with_margin(settings.margin),
    };
    if settings.n.is_empty() {
        return Err(Error::InvalidArgument("no blocklengths to simulate".into()));
    }
    settings
        .n
        .iter()
        .map(|&n| {
            simulate_point(
                source,
                channel,
                d1,
                n,
                &rates,
                settings.epsilon,
                settings.trials,
                settings.seed,
                settings.codebook_refresh,
            )
        })
        .collect()
}

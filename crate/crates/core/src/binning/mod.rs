//! Finite-blocklength simulation of the layered random-binning scheme.
//!
//! The encoder sends the bin of `s2`, the bin of a common codeword `u0`
//! covering `s1` given `s2`, and the bin of an individual codeword `u1`.
//! Decoder 2 resolves `(s2, u0)` with `y2`; decoder 1 resolves
//! `(s2, u0, u1)` with `y1` and reconstructs `s1` symbolwise.

mod codebook;
mod coder;
mod rates;
mod trials;
mod typicality;

use serde::{Deserialize, Serialize};

pub use codebook::{generate_codebooks, CodeTables, Codebooks, MAX_BLOCKLENGTH, MAX_INDEX_BITS};
pub use coder::{
    DecodeError, Decoded1, Decoded2, EncodeFailure, Encoding, Message, Scheme, MAX_BIN_MEMBERS,
    MAX_HALF_ENTRIES,
};
pub use rates::{index_bits, single_letter_terms, SchemeRates, SingleLetterTerms};
pub use trials::{run_trials, simulate, simulate_point, SimulationRow, TrialStats};
pub use typicality::TypicalityTest;

use crate::config::ChannelFile;

fn default_n() -> Vec<usize> {
    vec![4, 8, 12]
}

fn default_trials() -> u64 {
    1000
}

fn default_epsilon() -> f64 {
    0.2
}

fn default_margin() -> f64 {
    0.5
}

fn default_refresh() -> u64 {
    1
}

/// Simulator settings as written in a problem config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSettings {
    #[serde(default = "default_n")]
    pub n: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub seed: u64,
    /// Slack added to each single-letter constraint when `rates` is unset.
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<SchemeRates>,
    #[serde(default = "default_refresh")]
    pub codebook_refresh: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelFile>,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        SimulationSettings {
            n: default_n(),
            trials: default_trials(),
            epsilon: default_epsilon(),
            seed: 0,
            margin: default_margin(),
            rates: None,
            codebook_refresh: default_refresh(),
            channel: None,
        }
    }
}

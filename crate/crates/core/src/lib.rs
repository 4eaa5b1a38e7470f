//! Evaluation, optimization and finite-blocklength simulation for
//! Heegard-Berger source coding with degraded reconstruction sets.
//!
//! One encoder describes `(S1, S2)` to two decoders. Decoder 1 sees `Y1`
//! and reconstructs both components, decoder 2 sees `Y2` and needs only
//! `S2`. The crate evaluates the single-letter rate expressions for a
//! given auxiliary channel, minimizes them over channels, checks the
//! closed forms of structured sources, and simulates the random-binning
//! scheme at small blocklengths.

pub mod binning;
pub mod config;
pub mod error;
pub mod fixtures;
pub mod model;
pub mod optimizer;
pub mod prob;
pub mod rd_eval;
pub mod verify;

pub use error::{Error, Result};
pub use model::{AuxChannel, ChannelKind, DistortionTable, FullJoint, JointSourcePmf};
pub use optimizer::{Objective, OptimizeResult, SearchConfig, Strategy};
pub use prob::{CondPmf, Pmf};
pub use rd_eval::{CaseTag, RateBreakdown};

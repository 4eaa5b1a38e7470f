//! Bundled problem and channel files.

use crate::config::{ChannelFile, ProblemConfig};
use crate::error::{Error, Result};
use crate::model::{AuxChannel, JointSourcePmf};

/// Problem fixtures by name.
pub const PROBLEMS: [(&str, &str); 6] = [
    ("example1", include_str!("../fixtures/example1.json")),
    ("comp-delivery", include_str!("../fixtures/comp-delivery.json")),
    ("degraded-bsc", include_str!("../fixtures/degraded-bsc.json")),
    ("y1-absent", include_str!("../fixtures/y1-absent.json")),
    ("y2-absent", include_str!("../fixtures/y2-absent.json")),
    ("functional-y2", include_str!("../fixtures/functional-y2.json")),
];

/// Channel fixtures for `example1`, by name.
pub const CHANNELS: [(&str, &str); 3] = [
    ("channel_u0_x3", include_str!("../fixtures/channel_u0_x3.json")),
    ("channel_u0_empty", include_str!("../fixtures/channel_u0_empty.json")),
    ("channel_u0_s1", include_str!("../fixtures/channel_u0_s1.json")),
];

fn lookup<'a>(table: &[(&str, &'a str)], name: &str) -> Result<&'a str> {
    let name = name.trim_end_matches(".json");
    table
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
        .ok_or_else(|| Error::InvalidArgument(format!("no bundled fixture named `{name}`")))
}

pub fn problem(name: &str) -> Result<ProblemConfig> {
    ProblemConfig::from_json(lookup(&PROBLEMS, name)?)
}

pub fn source(name: &str) -> Result<JointSourcePmf> {
    problem(name)?.source()
}

pub fn channel(name: &str) -> Result<AuxChannel> {
    ChannelFile::from_json(lookup(&CHANNELS, name)?)?.to_channel()
}

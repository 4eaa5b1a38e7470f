//! Regression checks against the published values for the bundled
//! fixtures.
//!
//! Fixtures are read from an optional directory first and fall back to the
//! copies compiled into the crate, so a modified file on disk shows up as
//! failing checks.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{ChannelFile, ProblemConfig};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::model::{AuxChannel, ChannelKind, DistortionTable};
use crate::optimizer::{self, GridStep, Objective, SearchConfig, Strategy};
use crate::prob::binary_entropy;
use crate::rd_eval::{self, CaseTag};

/// How `actual` is compared with `expected`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    /// `|actual - expected| <= tolerance`.
    Equal,
    /// `actual <= expected + tolerance`.
    AtMost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub expected: f64,
    pub actual: Option<f64>,
    pub tolerance: f64,
    pub bound: Bound,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Check {
    fn new(name: &str, expected: f64, tolerance: f64, bound: Bound, actual: Result<f64>) -> Self {
        let (actual, error) = match actual {
            Ok(v) => (Some(v), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let passed = actual.is_some_and(|a| match bound {
            Bound::Equal => (a - expected).abs() <= tolerance,
            Bound::AtMost => a <= expected + tolerance,
        });
        Check {
            name: name.to_string(),
            expected,
            actual,
            tolerance,
            bound,
            passed,
            error,
        }
    }
}

/// Where fixtures come from.
#[derive(Debug, Clone, Default)]
pub struct FixtureSet {
    dir: Option<PathBuf>,
}

impl FixtureSet {
    pub fn bundled() -> Self {
        FixtureSet { dir: None }
    }

    /// Files named `<fixture>.json` in `dir` override the bundled copies.
    pub fn with_dir(dir: impl AsRef<Path>) -> Self {
        FixtureSet {
            dir: Some(dir.as_ref().to_path_buf()),
        }
    }

    fn read(&self, name: &str) -> Result<Option<String>> {
        let Some(dir) = &self.dir else {
            return Ok(None);
        };
        let path = dir.join(format!("{name}.json"));
        if !path.exists() {
            return Ok(None);
        }
        fs::read_to_string(&path)
            .map(Some)
            .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
    }

    pub fn problem(&self, name: &str) -> Result<ProblemConfig> {
        match self.read(name)? {
            Some(text) => ProblemConfig::from_json(&text),
            None => fixtures::problem(name),
        }
    }

    pub fn channel(&self, name: &str) -> Result<AuxChannel> {
        match self.read(name)? {
            Some(text) => ChannelFile::from_json(&text)?.to_channel(),
            None => fixtures::channel(name),
        }
    }
}

/// Keeps only `U0` of a `(U0, U1)` channel.
fn common_part(channel: &AuxChannel) -> Result<AuxChannel> {
    let sizes = channel.output_sizes();
    let (nu0, nu1) = (sizes[0], sizes[1]);
    let probs = channel
        .probs()
        .chunks(nu0 * nu1)
        .flat_map(|row| row.chunks(nu1).map(|c| c.iter().sum::<f64>()).collect::<Vec<_>>())
        .collect();
    AuxChannel::from_u0(channel.source_sizes(), nu0, probs)
}

/// Appends `S2hat = S2` to a one-distortion channel.
fn with_s2_copy(channel: &AuxChannel) -> Result<AuxChannel> {
    let [n1, n2] = channel.source_sizes();
    let sizes = channel.output_sizes();
    let width = sizes[0] * sizes[1];
    let mut probs = Vec::with_capacity(n1 * n2 * width * n2);
    for (r, row) in channel.probs().chunks(width).enumerate() {
        for &q in row {
            for sh in 0..n2 {
                probs.push(if sh == r % n2 { q } else { 0.0 });
            }
        }
    }
    AuxChannel::from_probs(
        ChannelKind::CommonReconstruction,
        [n1, n2],
        &[sizes[0], sizes[1], n2],
        probs,
    )
}

fn constant_u0(sizes: [usize; 2]) -> Result<AuxChannel> {
    AuxChannel::from_u0(sizes, 1, vec![1.0; sizes[0] * sizes[1]])
}

fn closed(fx: &FixtureSet, name: &str, case: CaseTag) -> Result<f64> {
    let source = fx.problem(name)?.source()?;
    Ok(rd_eval::closed_form(&source, case, None)?.value)
}

/// Runs every regression and returns one entry per check, in a fixed order.
pub fn run_checks(fx: &FixtureSet) -> Vec<Check> {
    const EXACT: f64 = 1e-12;
    const SEARCH: f64 = 1e-6;
    let mut out = Vec::new();
    let mut push = |name: &str, expected: f64, tol: f64, bound: Bound, actual: Result<f64>| {
        out.push(Check::new(name, expected, tol, bound, actual));
    };

    let example1 = || fx.problem("example1");
    let eval = |channel: &str| -> Result<f64> {
        Ok(example1()?.evaluate(&fx.channel(channel)?)?.rate)
    };
    push("eval example1 u0=empty", 3.0, EXACT, Bound::Equal, eval("channel_u0_empty"));
    push("eval example1 u0=x3", 2.0, EXACT, Bound::Equal, eval("channel_u0_x3"));

    let lossless = |channel: Result<AuxChannel>| -> Result<f64> {
        let source = example1()?.source()?;
        rd_eval::eval_corollary1(&source, &channel?)
    };
    push(
        "lossless example1 u0=empty",
        3.0,
        EXACT,
        Bound::Equal,
        lossless(example1().and_then(|c| c.sizes()).and_then(|s| constant_u0([s[0], s[1]]))),
    );
    push("lossless example1 u0=s1", 3.0, EXACT, Bound::Equal, lossless(fx.channel("channel_u0_s1")));
    push(
        "lossless example1 u0=x3",
        2.0,
        EXACT,
        Bound::Equal,
        lossless(fx.channel("channel_u0_x3").and_then(|c| common_part(&c))),
    );

    let forms = || -> Result<(f64, f64)> {
        rd_eval::eval_theorem1_forms(&example1()?.source()?, &fx.channel("channel_u0_x3")?)
    };
    push("sum form example1 u0=x3", 2.0, EXACT, Bound::Equal, forms().map(|f| f.0));
    push("layered form example1 u0=x3", 2.0, EXACT, Bound::Equal, forms().map(|f| f.1));

    let common_recon = || -> Result<f64> {
        let cfg = example1()?;
        let channel = with_s2_copy(&fx.channel("channel_u0_x3")?)?;
        let [n1, n2, _, _] = cfg.sizes()?;
        let r = rd_eval::eval_theorem3(
            &cfg.source()?,
            &channel,
            &DistortionTable::hamming(n1),
            &DistortionTable::hamming(n2),
            0.0,
            0.0,
        )?;
        Ok(r.rate)
    };
    push("common reconstruction example1 u0=x3 d2=0", 2.0, EXACT, Bound::Equal, common_recon());

    push(
        "closed form comp-delivery",
        1.0,
        EXACT,
        Bound::Equal,
        closed(fx, "comp-delivery", CaseTag::CompDelivery),
    );
    let comp_empty = || -> Result<f64> {
        let source = fx.problem("comp-delivery")?.source()?;
        let [n1, n2, _, _] = source.sizes();
        rd_eval::eval_corollary1(&source, &constant_u0([n1, n2])?)
    };
    push("lossless comp-delivery u0=empty", 2.0, EXACT, Bound::Equal, comp_empty());

    push(
        "closed form y1-absent",
        1.0 + binary_entropy(0.25),
        EXACT,
        Bound::Equal,
        closed(fx, "y1-absent", CaseTag::Y1Absent),
    );
    push(
        "closed form y2-absent",
        1.0 + 22.0 / 32.0 * binary_entropy(1.0 / 22.0) + 10.0 / 32.0 * binary_entropy(0.3),
        EXACT,
        Bound::Equal,
        closed(fx, "y2-absent", CaseTag::Y2Absent),
    );
    push(
        "closed form functional-y2",
        1.0 + binary_entropy(0.25) + binary_entropy(0.125),
        EXACT,
        Bound::Equal,
        closed(fx, "functional-y2", CaseTag::FuncY2Lossless),
    );
    push(
        "closed form degraded-bsc",
        binary_entropy(0.375) + binary_entropy(0.25),
        EXACT,
        Bound::Equal,
        closed(fx, "degraded-bsc", CaseTag::DegradedLossless),
    );

    let oracle = |name: &str| -> Result<f64> {
        let cfg = fx.problem(name)?;
        let search = SearchConfig {
            grid_step: GridStep::vertices(),
            ..cfg.search_config()?
        };
        Ok(optimizer::grid_oracle(&cfg.source()?, &Objective::Lossless, &search)?.best.rate)
    };
    push("oracle example1 lossless vertices", 2.0, SEARCH, Bound::Equal, oracle("example1"));
    push("oracle comp-delivery lossless vertices", 1.0, SEARCH, Bound::Equal, oracle("comp-delivery"));

    let heuristic = || -> Result<f64> {
        let cfg = example1()?;
        let search = SearchConfig {
            u0_card: 2,
            u1_card: 2,
            grid_step: GridStep::vertices(),
            restarts: 64,
            ..cfg.search_config()?
        };
        let objective = Objective::OneDistortion {
            d1: DistortionTable::hamming(cfg.sizes()?[0]),
            max_d1: 0.0,
        };
        let r = optimizer::optimize(&cfg.source()?, &objective, &search, Strategy::Heuristic)?;
        if !r.best.feasible {
            return Err(Error::InvalidArgument("no zero-distortion channel found".into()));
        }
        Ok(r.best.rate)
    };
    push("heuristic example1 binary auxiliaries", 2.0, SEARCH, Bound::AtMost, heuristic());
    out
}

/// Fixed-width report: one line per check and a summary line.
pub fn render_table(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut s = format!(
        "{:<width$}  {:>14}  {:>14}  {:>9}  result\n",
        "check", "expected", "actual", "tol"
    );
    for c in checks {
        let actual = c.actual.map_or_else(|| "error".to_string(), |a| format!("{a:.10}"));
        let op = match c.bound {
            Bound::Equal => "",
            Bound::AtMost => "<=",
        };
        s.push_str(&format!(
            "{:<width$}  {:>14}  {:>14}  {:>9.1e}  {}",
            c.name,
            format!("{op}{:.10}", c.expected),
            actual,
            c.tolerance,
            if c.passed { "PASS" } else { "FAIL" }
        ));
        if let Some(e) = &c.error {
            s.push_str(&format!("  ({e})"));
        }
        s.push('\n');
    }
    let passed = checks.iter().filter(|c| c.passed).count();
    s.push_str(&format!("{passed}/{} checks passed\n", checks.len()));
    s
}

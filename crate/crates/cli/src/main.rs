use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use hbrd_core::binning::{self, SchemeRates, SimulationRow};
use hbrd_core::config::{ChannelFile, ProblemConfig};
use hbrd_core::optimizer::{self, sweep_distortion, Objective, OptimizeResult, Strategy};
use hbrd_core::rd_eval::{self, LossyTarget};
use hbrd_core::verify::{self, FixtureSet};
use hbrd_core::{AuxChannel, CaseTag, Error, RateBreakdown};

/// Rate evaluation, optimization and simulation for two-decoder source
/// coding with degraded reconstruction sets.
#[derive(Parser)]
#[command(name = "hbrd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Output {
    /// Emit JSON instead of text or CSV.
    #[arg(long, global = true)]
    json: bool,
    /// Write the output to a file instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StrategyFlags {
    /// Exhaustive lattice search.
    #[arg(long, conflicts_with = "heuristic")]
    oracle: bool,
    /// Random-restart local search (default).
    #[arg(long)]
    heuristic: bool,
}

impl StrategyFlags {
    fn strategy(&self) -> Strategy {
        if self.oracle {
            Strategy::GridOracle
        } else {
            Strategy::Heuristic
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the rate of a fixed auxiliary channel.
    Eval {
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
        #[arg(long, value_name = "PATH")]
        channel: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Minimize the rate over auxiliary channels.
    Optimize {
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
        #[command(flatten)]
        strategy: StrategyFlags,
        /// Distortion targets, e.g. `d1=0,0.1,0.2` or `d1=0,0.1;d2=0.2,0.3`.
        #[arg(long, value_name = "LIST")]
        sweep: Option<String>,
        /// Write the channel of the last row as a channel file.
        #[arg(long, value_name = "PATH")]
        save_channel: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Evaluate a special-case closed form after checking its hypothesis.
    ClosedForm {
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
        #[arg(long, value_name = "TAG")]
        case: CaseTag,
        #[command(flatten)]
        strategy: StrategyFlags,
        #[command(flatten)]
        output: Output,
    },
    /// Run the regression checks on the bundled fixtures.
    Verify {
        /// Directory whose `<fixture>.json` files replace the bundled ones.
        #[arg(long, value_name = "DIR")]
        fixtures: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Monte-Carlo simulation of the binning scheme.
    Simulate {
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
        /// Auxiliary channel; defaults to the one in the config.
        #[arg(long, value_name = "PATH")]
        channel: Option<PathBuf>,
        /// Blocklengths, e.g. `4,8,12`.
        #[arg(long, value_name = "LIST", value_delimiter = ',')]
        n: Option<Vec<usize>>,
        #[arg(long, value_name = "N")]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Explicit rates `R2,R0,R0p,R1,R1p`.
        #[arg(long, value_name = "LIST", value_delimiter = ',')]
        rates: Option<Vec<f64>>,
        #[command(flatten)]
        output: Output,
    },
}

enum Failure {
    Core(Error),
    Io(String),
    ChecksFailed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Core(Error::Budget { .. }) => 3,
            Failure::Core(Error::Hypothesis(_)) => 4,
            Failure::Core(_) | Failure::Io(_) => 2,
            Failure::ChecksFailed => 1,
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn read(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn load_config(path: &Path) -> Outcome<ProblemConfig> {
    ProblemConfig::from_json(&read(path)?).map_err(|e| {
        Failure::Io(format!("{}: {e}", path.display()))
    })
}

fn load_channel(path: &Path) -> Outcome<AuxChannel> {
    ChannelFile::from_json(&read(path)?)
        .and_then(|f| f.to_channel())
        .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn emit(output: &Output, text: &str) -> Outcome<()> {
    match &output.out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

fn breakdown_text(r: &RateBreakdown) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "rate: {}", r.rate);
    let _ = writeln!(s, "term_decoder1: {}", r.term_decoder1);
    let _ = writeln!(s, "term_decoder2: {}", r.term_decoder2);
    let _ = writeln!(s, "individual_layer: {}", r.individual_layer);
    let _ = writeln!(s, "distortion1: {}", r.distortion1);
    if let Some(d2) = r.distortion2 {
        let _ = writeln!(s, "distortion2: {d2}");
    }
    let _ = writeln!(s, "feasible: {}", r.feasible);
    s
}

fn cmd_eval(config: &Path, channel: &Path, output: &Output) -> Outcome<()> {
    let cfg = load_config(config)?;
    let ch = load_channel(channel)?;
    let r = cfg.evaluate(&ch)?;
    let text = if output.json {
        pretty(&serde_json::to_value(&r).expect("breakdown serializes"))
    } else {
        breakdown_text(&r)
    };
    emit(output, &text)
}

/// Parses `d1=a,b,c[;d2=x,y,z]`.
fn parse_sweep(text: &str) -> Outcome<(Vec<f64>, Option<Vec<f64>>)> {
    let bad = |msg: String| Failure::Core(Error::InvalidArgument(format!("--sweep: {msg}")));
    let mut d1 = None;
    let mut d2 = None;
    for part in text.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, values) = part
            .split_once('=')
            .ok_or_else(|| bad(format!("`{part}` is not of the form key=list")))?;
        let values = values
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad(format!("`{v}` is not a number"))))
            .collect::<Outcome<Vec<f64>>>()?;
        match key.trim().to_ascii_lowercase().as_str() {
            "d1" => d1 = Some(values),
            "d2" => d2 = Some(values),
            other => return Err(bad(format!("unknown key `{other}`"))),
        }
    }
    let d1 = d1.ok_or_else(|| bad("missing d1 list".into()))?;
    Ok((d1, d2))
}

const OPTIMIZE_HEADER: &str = "D1,D2,rate,term_decoder1,term_decoder2,individual_layer,distortion1,distortion2,feasible,strategy,evaluations,channel";

struct Row {
    d1: f64,
    d2: Option<f64>,
    result: OptimizeResult,
}

impl Row {
    fn csv(&self) -> String {
        let b = &self.result.best;
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
        let channel: Vec<String> = self.result.channel.probs().iter().map(|p| p.to_string()).collect();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.d1,
            opt(self.d2),
            b.rate,
            b.term_decoder1,
            b.term_decoder2,
            b.individual_layer,
            b.distortion1,
            opt(b.distortion2),
            b.feasible,
            self.result.strategy,
            self.result.evaluations,
            channel.join(" ")
        )
    }

    fn json(&self) -> Value {
        json!({
            "D1": self.d1,
            "D2": self.d2,
            "breakdown": self.result.best,
            "strategy": self.result.strategy.to_string(),
            "evaluations": self.result.evaluations,
            "channel": ChannelFile::from_channel(&self.result.channel),
        })
    }
}

fn cmd_optimize(
    config: &Path,
    strategy: Strategy,
    sweep: Option<&str>,
    save_channel: Option<&Path>,
    output: &Output,
) -> Outcome<()> {
    let cfg = load_config(config)?;
    let source = cfg.source()?;
    let objective = cfg.objective()?;
    let search = cfg.search_config()?;
    let rows: Vec<Row> = match sweep {
        Some(text) => {
            let (d1, d2) = parse_sweep(text)?;
            let objective = match objective {
                Objective::Lossless => Objective::OneDistortion {
                    d1: cfg.d1_table()?,
                    max_d1: 0.0,
                },
                other => other,
            };
            sweep_distortion(&source, &objective, &d1, d2.as_deref(), &search, strategy)?
                .into_iter()
                .map(|p| Row {
                    d1: p.d1,
                    d2: p.d2,
                    result: p.result,
                })
                .collect()
        }
        None => {
            let result = optimizer::optimize(&source, &objective, &search, strategy)?;
            let (d1, d2) = match &objective {
                Objective::Lossless => (0.0, None),
                Objective::OneDistortion { max_d1, .. } => (*max_d1, None),
                Objective::CommonReconstruction { max_d1, max_d2, .. } => (*max_d1, Some(*max_d2)),
            };
            vec![Row { d1, d2, result }]
        }
    };
    if let (Some(path), Some(last)) = (save_channel, rows.last()) {
        let text = ChannelFile::from_channel(&last.result.channel).to_json();
        fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    }
    let text = if output.json {
        pretty(&Value::Array(rows.iter().map(Row::json).collect()))
    } else {
        let mut s = format!("{OPTIMIZE_HEADER}\n");
        for r in &rows {
            s.push_str(&r.csv());
            s.push('\n');
        }
        s
    };
    emit(output, &text)
}

fn cmd_closed_form(config: &Path, case: CaseTag, strategy: Strategy, output: &Output) -> Outcome<()> {
    let cfg = load_config(config)?;
    let source = cfg.source()?;
    rd_eval::check_hypothesis(&source, case)?;
    let target = if case.is_lossy() {
        Some(LossyTarget {
            d1: cfg.d1_table()?,
            max_d1: cfg.targets.d1,
            search: cfg.search_config()?,
            strategy,
        })
    } else {
        None
    };
    let cf = rd_eval::closed_form(&source, case, target.as_ref())?;
    let channel = cf.channel.as_ref().map(ChannelFile::from_channel);
    let text = if output.json {
        pretty(&json!({
            "case": case.name(),
            "value": cf.value,
            "layer_min": cf.layer_min,
            "channel": channel,
        }))
    } else {
        let mut s = format!("case: {case}\nvalue: {}\n", cf.value);
        if let Some(l) = cf.layer_min {
            let _ = writeln!(s, "individual_layer: {l}");
        }
        if let Some(c) = &channel {
            let _ = writeln!(s, "channel:\n{}", c.to_json());
        }
        s
    };
    emit(output, &text)
}

fn cmd_verify(fixtures: Option<&Path>, output: &Output) -> Outcome<()> {
    let set = fixtures.map_or_else(FixtureSet::bundled, FixtureSet::with_dir);
    let checks = verify::run_checks(&set);
    let text = if output.json {
        pretty(&serde_json::to_value(&checks).expect("checks serialize"))
    } else {
        verify::render_table(&checks)
    };
    emit(output, &text)?;
    if checks.iter().all(|c| c.passed) {
        Ok(())
    } else {
        Err(Failure::ChecksFailed)
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    config: &Path,
    channel: Option<&Path>,
    n: Option<Vec<usize>>,
    trials: Option<u64>,
    seed: Option<u64>,
    epsilon: Option<f64>,
    rates: Option<Vec<f64>>,
    output: &Output,
) -> Outcome<()> {
    let cfg = load_config(config)?;
    let source = cfg.source()?;
    let mut settings = cfg.simulation.clone().unwrap_or_default();
    let ch = match (channel, &settings.channel) {
        (Some(path), _) => load_channel(path)?,
        (None, Some(file)) => file.to_channel()?,
        (None, None) => {
            return Err(Error::InvalidArgument(
                "no auxiliary channel: pass --channel or set simulation.channel".into(),
            )
            .into())
        }
    };
    if let Some(n) = n {
        settings.n = n;
    }
    if let Some(t) = trials {
        settings.trials = t;
    }
    if let Some(s) = seed {
        settings.seed = s;
    }
    if let Some(e) = epsilon {
        settings.epsilon = e;
    }
    if let Some(r) = rates {
        if r.len() != 5 {
            return Err(Error::InvalidArgument(format!("--rates takes 5 values, got {}", r.len())).into());
        }
        settings.rates = Some(SchemeRates::new(r[0], r[1], r[2], r[3], r[4])?);
    }
    let rows = binning::simulate(&source, &ch, &cfg.d1_table()?, &settings)?;
    let text = if output.json {
        pretty(&serde_json::to_value(&rows).expect("rows serialize"))
    } else {
        let mut s = format!("{}\n", SimulationRow::CSV_HEADER);
        for r in &rows {
            s.push_str(&r.csv());
            s.push('\n');
        }
        s
    };
    emit(output, &text)
}

fn run(cli: Cli) -> Outcome<()> {
    match cli.command {
        Command::Eval {
            config,
            channel,
            output,
        } => cmd_eval(&config, &channel, &output),
        Command::Optimize {
            config,
            strategy,
            sweep,
            save_channel,
            output,
        } => cmd_optimize(
            &config,
            strategy.strategy(),
            sweep.as_deref(),
            save_channel.as_deref(),
            &output,
        ),
        Command::ClosedForm {
            config,
            case,
            strategy,
            output,
        } => cmd_closed_form(&config, case, strategy.strategy(), &output),
        Command::Verify { fixtures, output } => cmd_verify(fixtures.as_deref(), &output),
        Command::Simulate {
            config,
            channel,
            n,
            trials,
            seed,
            epsilon,
            rates,
            output,
        } => cmd_simulate(&config, channel.as_deref(), n, trials, seed, epsilon, rates, &output),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Core(e) => eprintln!("error: {e}"),
                Failure::Io(msg) => eprintln!("error: {msg}"),
                Failure::ChecksFailed => eprintln!("error: some checks failed"),
            }
            ExitCode::from(f.code())
        }
    }
}

use super::{grid_oracle, heuristic_search, Objective, OptimizeResult, SearchConfig, Strategy};
use crate::error::{Error, Result};
use crate::model::JointSourcePmf;
use crate::rd_eval::eval_objective;

/// One point of a rate-distortion sweep.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub d1: f64,
    pub d2: Option<f64>,
    pub result: OptimizeResult,
}

fn ascending(xs: &[f64], name: &str) -> Result<()> {
    if xs.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::InvalidArgument(format!("{name} values must be finite and >= 0")));
    }
    if xs.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument(format!("{name} list must be sorted ascending")));
    }
    Ok(())
}

/// Optimizes at each target in turn, warm-starting from the previous
/// point's channel. The reported curve is the running minimum: when a
/// point comes out worse than its predecessor, the predecessor's channel
/// (still feasible at the looser target) is re-evaluated and reported.
pub fn sweep_distortion(
    source: &JointSourcePmf,
    objective: &Objective,
    d1_list: &[f64],
    d2_list: Option<&[f64]>,
    cfg: &SearchConfig,
    strategy: Strategy,
) -> Result<Vec<SweepPoint>> {
    if d1_list.is_empty() {
        return Err(Error::InvalidArgument("empty distortion list".into()));
    }
    if matches!(objective, Objective::Lossless) {
        return Err(Error::InvalidArgument("a lossless objective has no distortion to sweep".into()));
    }
    ascending(d1_list, "D1")?;
    if let Some(d2) = d2_list {
        if d2.len() != d1_list.len() {
            return Err(Error::InvalidArgument("D1 and D2 lists differ in length".into()));
        }
        if !matches!(objective, Objective::CommonReconstruction { .. }) {
            return Err(Error::InvalidArgument("D2 applies to common reconstruction only".into()));
        }
        ascending(d2, "D2")?;
    }
    let mut out: Vec<SweepPoint> = Vec::with_capacity(d1_list.len());
    for (i, &d1) in d1_list.iter().enumerate() {
        let d2 = d2_list.map(|l| l[i]);
        let obj = objective.with_targets(d1, d2);
        let prev = out.last().map(|p| &p.result);
        let mut res = match strategy {
            Strategy::GridOracle => grid_oracle(source, &obj, cfg)?,
            Strategy::Heuristic => heuristic_search(source, &obj, cfg, prev.map(|p| &p.channel))?,
        };
        if let Some(prev) = prev {
            let worse = (prev.best.feasible && !res.best.feasible)
                || (prev.best.feasible && res.best.rate > prev.best.rate);
            if worse {
                let best = eval_objective(source, &prev.channel, &obj)?;
                res = OptimizeResult {
                    best,
                    channel: prev.channel.clone(),
                    strategy: res.strategy,
                    evaluations: res.evaluations,
                };
            }
        }
        out.push(SweepPoint { d1, d2, result: res });
    }
    Ok(out)
}

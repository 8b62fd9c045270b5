use serde::{Deserialize, Serialize};

use super::config::Condition;
use super::suite::Suite;
use crate::error::{Error, Result};

/// Paired complementarity (pp) at every checkpoint of every trial:
/// `result[trial][checkpoint] = (round, comp)`.
pub fn checkpoint_complementarity(suite: &Suite) -> Result<Vec<Vec<(usize, f64)>>> {
    let p = suite.require(Condition::PlatformOnly)?;
    let s = suite.require(Condition::SellerOnly)?;
    let b = suite.require(Condition::Baseline)?;
    let j = suite.require(Condition::Joint)?;
    if [p.len(), s.len(), j.len()].iter().any(|&l| l != b.len()) {
        return Err(Error::Pairing("conditions have different trial counts".into()));
    }
    (0..b.len())
        .map(|t| {
            let cps = &b[t].checkpoints;
            if [&p[t], &s[t], &j[t]].iter().any(|r| r.checkpoints.len() != cps.len()) {
                return Err(Error::Pairing(format!("trial {t} has mismatched checkpoints")));
            }
            Ok((0..cps.len())
                .map(|k| {
                    let base = b[t].checkpoints[k].cs_mean;
                    let comp = (p[t].checkpoints[k].cs_mean + s[t].checkpoints[k].cs_mean
                        - base
                        - j[t].checkpoints[k].cs_mean)
                        / base
                        * 100.0;
                    (cps[k].round, comp)
                })
                .collect())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCrossing {
    pub threshold: f64,
    /// Mean first-crossing round over trials that cross; `None` if none do.
    pub mean_round: Option<f64>,
    pub median_round: Option<f64>,
    pub fraction_reaching: f64,
}

/// First checkpoint at which each trial's paired complementarity reaches
/// each threshold, aggregated over trials.
pub fn time_to_threshold(suite: &Suite, thresholds: &[f64]) -> Result<Vec<ThresholdCrossing>> {
    if thresholds.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InputDomain("thresholds must be positive".into()));
    }
    let per_trial = checkpoint_complementarity(suite)?;
    if per_trial.first().is_none_or(|c| c.is_empty()) {
        return Err(Error::InsufficientData("suite was run without checkpoints".into()));
    }
    Ok(thresholds
        .iter()
        .map(|&thr| {
            let mut rounds: Vec<f64> = per_trial
                .iter()
                .filter_map(|cps| cps.iter().find(|(_, c)| *c >= thr).map(|&(r, _)| r as f64))
                .collect();
            rounds.sort_by(f64::total_cmp);
            let k = rounds.len();
            let (mean_round, median_round) = if k == 0 {
                (None, None)
            } else {
                let med = if k % 2 == 1 { rounds[k / 2] } else { (rounds[k / 2 - 1] + rounds[k / 2]) / 2.0 };
                (Some(rounds.iter().sum::<f64>() / k as f64), Some(med))
            };
            ThresholdCrossing { threshold: thr, mean_round, median_round, fraction_reaching: k as f64 / per_trial.len() as f64 }
        })
        .collect())
}

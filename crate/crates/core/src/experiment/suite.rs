use serde::{Deserialize, Serialize};

use super::config::{Condition, TrialConfig};
use super::trial::{run_trial, TrialResult};
use crate::error::{Error, Result};

/// Runs `jobs` and returns their results in input order. Uses the rayon
/// pool when the `parallel` feature is on.
pub(crate) fn run_jobs<T, F>(jobs: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..jobs).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..jobs).map(f).collect()
    }
}

/// Trials of several conditions with matched seeds: trial `t` of every
/// condition uses seed `config.seed(t)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Suite {
    pub runs: Vec<(Condition, Vec<TrialResult>)>,
}

impl Suite {
    pub fn get(&self, condition: Condition) -> Option<&[TrialResult]> {
        self.runs.iter().find(|(c, _)| *c == condition).map(|(_, r)| r.as_slice())
    }

    pub fn require(&self, condition: Condition) -> Result<&[TrialResult]> {
        self.get(condition).ok_or_else(|| Error::Completeness(format!("suite has no {condition} trials")))
    }

    pub fn trials(&self) -> usize {
        self.runs.first().map_or(0, |(_, r)| r.len())
    }

    /// Per-trial measured consumer surplus for `condition`.
    pub fn cs(&self, condition: Condition) -> Result<Vec<f64>> {
        Ok(self.require(condition)?.iter().map(|r| r.cs_mean).collect())
    }
}

/// Runs `trials` trials of each of `conditions`.
pub fn run_conditions(config: &TrialConfig, conditions: &[Condition], trials: usize) -> Result<Suite> {
    config.validate()?;
    let flat = run_jobs(conditions.len() * trials, |job| run_trial(config, conditions[job / trials], job % trials))?;
    let mut it = flat.into_iter();
    let runs = conditions.iter().map(|&c| (c, it.by_ref().take(trials).collect())).collect();
    Ok(Suite { runs })
}

/// All four conditions with matched seeds.
pub fn run_condition_suite(config: &TrialConfig, trials: usize) -> Result<Suite> {
    if trials < 2 {
        return Err(Error::Configuration("a condition suite needs at least 2 trials".into()));
    }
    run_conditions(config, &Condition::ALL, trials)
}

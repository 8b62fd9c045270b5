//! Welfare metrics and statistics over collections of trial results.

mod stats;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{Channels, Condition, Suite, TrialResult};
pub use stats::{cohens_d, mean, pearson, std_dev, t_test_and_ci, TTest};

/// `(CS_0 - CS_C) / CS_0 * 100`; positive values are consumer harm.
pub fn relative_harm(cs_condition: f64, cs_baseline: f64) -> Result<f64> {
    if !(cs_baseline > 0.0 && cs_baseline.is_finite()) || !cs_condition.is_finite() {
        return Err(Error::NumericInput(format!("baseline consumer surplus {cs_baseline} must be positive")));
    }
    Ok((cs_baseline - cs_condition) / cs_baseline * 100.0)
}

fn check_lengths(lens: &[usize]) -> Result<()> {
    if lens.windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::Pairing(format!("trial counts differ: {lens:?}")));
    }
    Ok(())
}

/// Per-trial complementarity in percentage points,
/// `(CS_P + CS_S - CS_0 - CS_PS) / CS_0 * 100`, pairing trials by index.
pub fn complementarity_paired(
    platform_only: &[f64],
    seller_only: &[f64],
    baseline: &[f64],
    joint: &[f64],
) -> Result<Vec<f64>> {
    check_lengths(&[platform_only.len(), seller_only.len(), baseline.len(), joint.len()])?;
    (0..baseline.len())
        .map(|t| {
            let b = baseline[t];
            if !(b > 0.0) {
                return Err(Error::NumericInput(format!("baseline consumer surplus {b} in trial {t}")));
            }
            Ok((platform_only[t] + seller_only[t] - b - joint[t]) / b * 100.0)
        })
        .collect()
}

/// Means of consumer surplus, platform revenue, seller profit and their
/// total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Welfare {
    pub consumer_surplus: f64,
    pub platform: f64,
    pub sellers: f64,
    pub total: f64,
}

pub fn welfare_decomposition(results: &[TrialResult]) -> Welfare {
    let n = results.len() as f64;
    let cs = results.iter().map(|r| r.cs_mean).sum::<f64>() / n;
    let platform = results.iter().map(|r| r.platform_mean).sum::<f64>() / n;
    let sellers = results.iter().map(|r| r.seller_mean).sum::<f64>() / n;
    Welfare { consumer_surplus: cs, platform, sellers, total: cs + platform + sellers }
}

/// Welfare lost relative to `baseline` that the platform does not capture.
pub fn deadweight_loss(baseline: &Welfare, condition: &Welfare) -> f64 {
    (baseline.total - condition.total) - (condition.platform - baseline.platform)
}

/// Pearson correlation between seller win rates and qualities.
pub fn quality_win_correlation(win_rates: &[f64], qualities: &[f64]) -> Result<f64> {
    pearson(win_rates, qualities)
}

/// Win rate of each seller pooled over trials.
pub fn pooled_win_rates(results: &[TrialResult]) -> Vec<f64> {
    let n = results.first().map_or(0, |r| r.win_counts.len());
    let mut counts = vec![0u64; n];
    let mut total = 0u64;
    for r in results {
        for (c, w) in counts.iter_mut().zip(&r.win_counts) {
            *c += w;
        }
        total += r.window_len() as u64;
    }
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

/// Mean absolute elementwise change between consecutive snapshots.
pub fn q_stability(snapshots: &[Vec<f64>]) -> Result<f64> {
    if snapshots.len() < 2 {
        return Err(Error::InsufficientData("need at least two snapshots".into()));
    }
    let mut total = 0.0;
    for pair in snapshots.windows(2) {
        if pair[0].len() != pair[1].len() || pair[0].is_empty() {
            return Err(Error::Pairing("snapshots differ in size".into()));
        }
        total += pair[0].iter().zip(&pair[1]).map(|(a, b)| (b - a).abs()).sum::<f64>() / pair[0].len() as f64;
    }
    Ok(total / (snapshots.len() - 1) as f64)
}

/// A t test summary with degenerate cases reported as absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub n: usize,
    pub mean: f64,
    pub sd: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub cohens_d: Option<f64>,
    pub t: Option<f64>,
    pub p_value: Option<f64>,
    /// Fraction of samples strictly above zero.
    pub positive_rate: f64,
}

impl SampleStats {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        let m = if n > 0 { mean(samples) } else { f64::NAN };
        let positive_rate = samples.iter().filter(|&&x| x > 0.0).count() as f64 / n.max(1) as f64;
        match t_test_and_ci(samples, 0.95) {
            Ok(t) => SampleStats {
                n,
                mean: m,
                sd: Some(t.sd),
                ci_low: Some(t.ci_low),
                ci_high: Some(t.ci_high),
                cohens_d: Some(t.mean / t.sd),
                t: Some(t.t),
                p_value: Some(t.p_value),
                positive_rate,
            },
            Err(_) => SampleStats {
                n,
                mean: m,
                sd: (n > 1).then(|| std_dev(samples)),
                ci_low: None,
                ci_high: None,
                cohens_d: None,
                t: None,
                p_value: None,
                positive_rate,
            },
        }
    }
}

/// Statistics of one condition against the matched baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionStats {
    pub condition: Condition,
    pub trials: usize,
    pub cs_mean: f64,
    pub cs_sd: Option<f64>,
    /// Relative harm of the condition's mean against the baseline mean (%).
    pub effect: f64,
    /// Per-trial relative harm against the same-trial baseline (%).
    pub paired_effect: SampleStats,
    /// Fraction of trials whose consumer surplus is strictly below the
    /// same-trial baseline.
    pub harm_rate: f64,
    pub welfare: Welfare,
    pub win_rates: Vec<f64>,
    pub quality_win_correlation: Option<f64>,
    pub mean_bid_weight: f64,
    pub mean_manipulation: f64,
    pub mean_bid: f64,
    pub q_change: Option<f64>,
}

pub fn condition_stats(results: &[TrialResult], baseline: &[TrialResult], qualities: &[f64]) -> Result<ConditionStats> {
    check_lengths(&[results.len(), baseline.len()])?;
    if results.is_empty() {
        return Err(Error::InsufficientData("no trials".into()));
    }
    let cs: Vec<f64> = results.iter().map(|r| r.cs_mean).collect();
    let base: Vec<f64> = baseline.iter().map(|r| r.cs_mean).collect();
    let paired: Vec<f64> = cs.iter().zip(&base).map(|(&c, &b)| relative_harm(c, b)).collect::<Result<_>>()?;
    let harm_rate = cs.iter().zip(&base).filter(|(c, b)| c < b).count() as f64 / cs.len() as f64;
    let win_rates = pooled_win_rates(results);
    let n = results.len() as f64;
    let q_changes: Vec<f64> = results.iter().filter_map(|r| r.q_change).collect();
    Ok(ConditionStats {
        condition: results[0].condition,
        trials: results.len(),
        cs_mean: mean(&cs),
        cs_sd: (cs.len() > 1).then(|| std_dev(&cs)),
        effect: relative_harm(mean(&cs), mean(&base))?,
        paired_effect: SampleStats::from_samples(&paired),
        harm_rate,
        welfare: welfare_decomposition(results),
        quality_win_correlation: quality_win_correlation(&win_rates, qualities).ok(),
        win_rates,
        mean_bid_weight: results.iter().map(|r| r.mean_bid_weight).sum::<f64>() / n,
        mean_manipulation: results.iter().map(|r| r.mean_manipulation).sum::<f64>() / n,
        mean_bid: results.iter().map(|r| r.mean_bid).sum::<f64>() / n,
        q_change: (!q_changes.is_empty()).then(|| mean(&q_changes)),
    })
}

/// Statistics of every condition in a suite plus, when all four are
/// present, the paired complementarity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteStats {
    pub trials: usize,
    pub conditions: Vec<ConditionStats>,
    pub complementarity: Option<SampleStats>,
    /// Complementarity computed from the four condition means.
    pub complementarity_of_means: Option<f64>,
}

impl SuiteStats {
    pub fn get(&self, condition: Condition) -> Option<&ConditionStats> {
        self.conditions.iter().find(|c| c.condition == condition)
    }

    /// Relative harm of `condition`'s mean, if present.
    pub fn effect(&self, condition: Condition) -> Option<f64> {
        self.get(condition).map(|c| c.effect)
    }
}

pub fn suite_stats(suite: &Suite, qualities: &[f64]) -> Result<SuiteStats> {
    let baseline = suite.require(Condition::Baseline)?;
    let conditions = suite
        .runs
        .iter()
        .map(|(_, r)| condition_stats(r, baseline, qualities))
        .collect::<Result<Vec<_>>>()?;
    let (complementarity, complementarity_of_means) = if Condition::ALL.iter().all(|&c| suite.get(c).is_some()) {
        let comp = complementarity_paired(
            &suite.cs(Condition::PlatformOnly)?,
            &suite.cs(Condition::SellerOnly)?,
            &suite.cs(Condition::Baseline)?,
            &suite.cs(Condition::Joint)?,
        )?;
        let m = |c| mean(&suite.cs(c).expect("present"));
        let of_means = (m(Condition::PlatformOnly) + m(Condition::SellerOnly)
            - m(Condition::Baseline)
            - m(Condition::Joint))
            / m(Condition::Baseline)
            * 100.0;
        (Some(SampleStats::from_samples(&comp)), Some(of_means))
    } else {
        (None, None)
    };
    Ok(SuiteStats { trials: suite.trials(), conditions, complementarity, complementarity_of_means })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorialRow {
    pub channels: Channels,
    pub label: String,
    pub joint_effect: f64,
    pub complementarity: f64,
    pub cohens_d: Option<f64>,
}

/// One row per channel mask, ordered by mask; all 16 must be present.
pub fn factorial_table(cells: &[(Channels, SuiteStats)]) -> Result<Vec<FactorialRow>> {
    let mut rows = Vec::with_capacity(16);
    for mask in 0..16u8 {
        let ch = Channels::from_mask(mask);
        let (_, s) = cells
            .iter()
            .find(|(c, _)| *c == ch)
            .ok_or_else(|| Error::Completeness(format!("factorial cell {} missing", ch.label())))?;
        let comp = s.complementarity.ok_or_else(|| Error::Completeness(format!("cell {} lacks conditions", ch.label())))?;
        rows.push(FactorialRow {
            channels: ch,
            label: ch.label(),
            joint_effect: s
                .effect(Condition::Joint)
                .ok_or_else(|| Error::Completeness(format!("cell {} lacks joint trials", ch.label())))?,
            complementarity: comp.mean,
            cohens_d: comp.cohens_d,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn harm_examples() {
        assert_abs_diff_eq!(relative_harm(0.191, 0.303).unwrap(), 36.96, epsilon = 0.01);
        assert_eq!(relative_harm(0.303, 0.303).unwrap(), 0.0);
        assert_abs_diff_eq!(relative_harm(0.333, 0.303).unwrap(), -9.9, epsilon = 0.01);
        assert!(relative_harm(0.2, 0.0).is_err());
        assert!(relative_harm(0.2, -0.1).is_err());
    }

    #[test]
    fn complementarity_examples() {
        let c = complementarity_paired(&[0.222], &[0.333], &[0.303], &[0.191]).unwrap();
        assert_abs_diff_eq!(c[0], 20.13, epsilon = 0.01);
        let c = complementarity_paired(&[0.3], &[0.3], &[0.3], &[0.3]).unwrap();
        assert_eq!(c[0], 0.0);
        let c = complementarity_paired(&[0.303], &[0.303], &[0.303], &[0.2]).unwrap();
        assert_abs_diff_eq!(c[0], relative_harm(0.2, 0.303).unwrap(), epsilon = 1e-12);
        assert!(matches!(complementarity_paired(&[0.3], &[0.3, 0.3], &[0.3], &[0.3]), Err(Error::Pairing(_))));
    }

    #[test]
    fn paired_mean_matches_means_formula_with_equal_baselines() {
        let p = [0.22, 0.25, 0.21, 0.24];
        let s = [0.33, 0.31, 0.35, 0.32];
        let b = [0.303; 4];
        let j = [0.19, 0.2, 0.18, 0.21];
        let comp = complementarity_paired(&p, &s, &b, &j).unwrap();
        let of_means = (mean(&p) + mean(&s) - mean(&b) - mean(&j)) / mean(&b) * 100.0;
        assert_abs_diff_eq!(mean(&comp), of_means, epsilon = 1e-12);
    }

    #[test]
    fn q_stability_examples() {
        let a = vec![0.1, 0.2, -0.3];
        assert_eq!(q_stability(&[a.clone(), a.clone()]).unwrap(), 0.0);
        let b: Vec<f64> = a.iter().map(|x| x + 0.25).collect();
        assert_abs_diff_eq!(q_stability(&[a.clone(), b]).unwrap(), 0.25, epsilon = 1e-15);
        assert!(matches!(q_stability(&[a]), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn deadweight_loss_example() {
        let base = Welfare { consumer_surplus: 0.303, platform: 0.0, sellers: 0.326, total: 0.629 };
        let joint = Welfare { consumer_surplus: 0.191, platform: 0.027, sellers: 0.256, total: 0.474 };
        assert_abs_diff_eq!(deadweight_loss(&base, &joint), 0.128, epsilon = 1e-12);
    }

    #[test]
    fn factorial_needs_every_cell() {
        assert!(matches!(factorial_table(&[]), Err(Error::Completeness(_))));
    }
}

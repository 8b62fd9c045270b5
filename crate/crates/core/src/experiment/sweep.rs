use serde::{Deserialize, Serialize};

use super::config::{AiMode, Channels, Condition, ConsumerClass, TrialConfig};
use super::suite::{run_jobs, Suite};
use super::trial::run_trial;
use crate::analysis::{suite_stats, SuiteStats};
use crate::error::{Error, Result};
use crate::learners::{Algorithm, StateCodec};
use crate::market::{BiasParams, ManipulationForm, SellerDecision};

/// The single parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    Factorial,
    BiasScale,
    Override,
    Population,
    TakeRate,
    NaiveSeller,
    GatekeeperW,
    PositionMagnitude,
    QualityWeight,
    EqualWeights,
    NoiseCv,
    Algorithm,
    StateSpace,
    LongRun,
    FunctionalForm,
    AiMode,
    MarketSize,
    LearningParams,
    DebiasLevel,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 19] = [
        SweepAxis::Factorial,
        SweepAxis::BiasScale,
        SweepAxis::Override,
        SweepAxis::Population,
        SweepAxis::TakeRate,
        SweepAxis::NaiveSeller,
        SweepAxis::GatekeeperW,
        SweepAxis::PositionMagnitude,
        SweepAxis::QualityWeight,
        SweepAxis::EqualWeights,
        SweepAxis::NoiseCv,
        SweepAxis::Algorithm,
        SweepAxis::StateSpace,
        SweepAxis::LongRun,
        SweepAxis::FunctionalForm,
        SweepAxis::AiMode,
        SweepAxis::MarketSize,
        SweepAxis::LearningParams,
        SweepAxis::DebiasLevel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Factorial => "factorial",
            SweepAxis::BiasScale => "bias-scale",
            SweepAxis::Override => "override",
            SweepAxis::Population => "population",
            SweepAxis::TakeRate => "take-rate",
            SweepAxis::NaiveSeller => "naive-seller",
            SweepAxis::GatekeeperW => "gatekeeper-w",
            SweepAxis::PositionMagnitude => "position-magnitude",
            SweepAxis::QualityWeight => "quality-weight",
            SweepAxis::EqualWeights => "equal-weights",
            SweepAxis::NoiseCv => "noise-cv",
            SweepAxis::Algorithm => "algorithm",
            SweepAxis::StateSpace => "state-space",
            SweepAxis::LongRun => "long-run",
            SweepAxis::FunctionalForm => "functional-form",
            SweepAxis::AiMode => "ai-mode",
            SweepAxis::MarketSize => "market-size",
            SweepAxis::LearningParams => "learning-params",
            SweepAxis::DebiasLevel => "debias-level",
        }
    }

    /// Values swept when none are given.
    pub fn default_values(self) -> Vec<String> {
        let v: &[&str] = match self {
            SweepAxis::Factorial => &[],
            SweepAxis::BiasScale => &["0.5", "0.75", "1.0", "1.25", "1.5", "2.0"],
            SweepAxis::Override => &["0", "0.1", "0.2", "0.3", "0.4", "0.5"],
            SweepAxis::Population => &["1.0", "0.75", "0.5", "0.25", "0.0"],
            SweepAxis::TakeRate => &["0", "0.05", "0.10", "0.15", "0.20"],
            SweepAxis::NaiveSeller => &["learning", "1:0", "2:0", "1:1", "1:2"],
            SweepAxis::GatekeeperW => &["0", "0.33", "0.5", "0.67", "1.0"],
            SweepAxis::PositionMagnitude => &["0.30", "0.45", "0.60", "0.75", "0.90"],
            SweepAxis::QualityWeight => &["0.10", "0.15", "0.25", "0.40", "0.60"],
            SweepAxis::EqualWeights => {
                &["baseline", "equal-moderate", "equal-strong", "position-reduced", "quality-boosted"]
            }
            SweepAxis::NoiseCv => &["0", "0.1", "0.2", "0.3", "0.5"],
            SweepAxis::Algorithm => {
                &["qlearning", "sarsa", "gradient_bandit", "ucb", "thompson", "actor_critic", "reinforce", "exp3"]
            }
            SweepAxis::StateSpace => &["4", "16", "64"],
            SweepAxis::LongRun => &["100000"],
            SweepAxis::FunctionalForm => &["multiplicative", "additive"],
            SweepAxis::AiMode => &["biased", "debiased", "true_random"],
            SweepAxis::MarketSize => &["4", "6", "10", "18", "36"],
            SweepAxis::LearningParams => &[
                "0.08:0.85", "0.08:0.90", "0.08:0.95", "0.12:0.85", "0.12:0.90", "0.12:0.95", "0.18:0.85",
                "0.18:0.90", "0.18:0.95",
            ],
            SweepAxis::DebiasLevel => &["0", "0.25", "0.5", "0.75", "0.9", "0.95"],
        };
        if self == SweepAxis::Factorial {
            return (0..16u8).map(|m| Channels::from_mask(m).label()).collect();
        }
        v.iter().map(|s| s.to_string()).collect()
    }
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepAxis::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| {
            let names: Vec<_> = SweepAxis::ALL.iter().map(|a| a.name()).collect();
            Error::Configuration(format!("unknown sweep axis '{s}'; valid axes: {}", names.join(", ")))
        })
    }
}

/// One configuration of a sweep and the conditions it needs.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub label: String,
    pub config: TrialConfig,
    pub conditions: Vec<Condition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub label: String,
    pub stats: SuiteStats,
}

fn number(axis: SweepAxis, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::Configuration(format!("{axis} value '{v}' is not a number")))
}

fn integer(axis: SweepAxis, v: &str) -> Result<usize> {
    v.parse::<usize>().map_err(|_| Error::Configuration(format!("{axis} value '{v}' is not a positive integer")))
}

/// Channel mask from a label like `PB-D` or a bit string like `1101`.
fn parse_mask(v: &str) -> Result<Channels> {
    let chars: Vec<char> = v.chars().collect();
    if chars.len() == 4 {
        let mut mask = 0u8;
        for (k, (&c, name)) in chars.iter().zip(['P', 'B', 'M', 'D']).enumerate() {
            let on = match c {
                '1' => true,
                '0' | '-' => false,
                c if c.eq_ignore_ascii_case(&name) => true,
                _ => return Err(Error::Configuration(format!("bad factorial cell '{v}'"))),
            };
            mask |= (on as u8) << (3 - k);
        }
        return Ok(Channels::from_mask(mask));
    }
    Err(Error::Configuration(format!("bad factorial cell '{v}' (expected e.g. PB-D or 1101)")))
}

/// Every bias weight equal to `x`; position's three components keep their
/// relative sizes with the top-row bonus at `x`.
fn equal_weights(base: &BiasParams, x: f64) -> BiasParams {
    let d = BiasParams::default();
    BiasParams {
        beta_prime: d.beta_prime * x,
        beta_pos: d.beta_pos * x,
        beta_rec: d.beta_rec * x,
        beta_end: x,
        beta_spon: -x,
        beta_manip: x,
        beta_dec: x,
        ..*base
    }
}

/// Expands an axis and its values into configurations.
pub fn sweep_points(base: &TrialConfig, axis: SweepAxis, values: &[String]) -> Result<Vec<SweepPoint>> {
    let values = if values.is_empty() { axis.default_values() } else { values.to_vec() };
    let all = Condition::ALL.to_vec();
    values
        .iter()
        .map(|v| {
            let mut c = base.clone();
            let mut conditions = all.clone();
            match axis {
                SweepAxis::Factorial => c.channels = parse_mask(v)?,
                SweepAxis::BiasScale => c.bias_scale = number(axis, v)?,
                SweepAxis::Override => c.override_p = number(axis, v)?,
                SweepAxis::Population => {
                    let high = number(axis, v)?;
                    c.population = vec![
                        ConsumerClass { fraction: high, bias_multiplier: 1.0 },
                        ConsumerClass { fraction: 1.0 - high, bias_multiplier: 0.5 },
                    ];
                }
                SweepAxis::TakeRate => c.payoff.take_rate = number(axis, v)?,
                SweepAxis::NaiveSeller => {
                    c.naive_seller = if v == "learning" {
                        SellerDecision::NAIVE
                    } else {
                        let (b, m) = v
                            .split_once(':')
                            .ok_or_else(|| Error::Configuration(format!("naive-seller value '{v}' is not bid:manip")))?;
                        SellerDecision::new(integer(axis, m)? as u8, integer(axis, b)? as u8)?
                    }
                }
                SweepAxis::GatekeeperW => {
                    c.fixed_bid_weight = number(axis, v)?;
                    conditions = vec![Condition::Baseline, Condition::SellerOnly];
                }
                SweepAxis::PositionMagnitude => {
                    let row = number(axis, v)?;
                    let d = BiasParams::default();
                    c.bias.beta_pos = row;
                    c.bias.beta_prime = d.beta_prime * row / d.beta_pos;
                    c.bias.beta_rec = d.beta_rec * row / d.beta_pos;
                }
                SweepAxis::QualityWeight => {
                    let q = number(axis, v)?;
                    if !(q > 0.0) {
                        return Err(Error::Configuration("quality weight must be positive".into()));
                    }
                    c.bias_scale *= c.bias.alpha / q;
                }
                SweepAxis::EqualWeights => match v.as_str() {
                    "baseline" => {}
                    "equal-moderate" => c.bias = equal_weights(&c.bias, 0.30),
                    "equal-strong" => c.bias = equal_weights(&c.bias, 0.50),
                    "position-reduced" => {
                        c.bias.beta_prime = 0.30;
                        c.bias.beta_pos = 0.60;
                        c.bias.beta_rec = 0.10;
                    }
                    "quality-boosted" => c.bias_scale /= 3.0,
                    _ => return Err(Error::Configuration(format!("unknown equal-weights configuration '{v}'"))),
                },
                SweepAxis::NoiseCv => c.bias_noise_cv = number(axis, v)?,
                SweepAxis::Algorithm => c.learner.algorithm = v.parse::<Algorithm>()?,
                SweepAxis::StateSpace => {
                    let states = integer(axis, v)?;
                    let bins = (states as f64).sqrt().round() as usize;
                    if bins * bins != states || bins == 0 {
                        return Err(Error::Configuration(format!("state-space size {states} is not a square")));
                    }
                    c.codec = StateCodec { bins, ..c.codec };
                }
                SweepAxis::LongRun => {
                    c.rounds = integer(axis, v)?;
                    c.checkpoints = [5_000, 10_000, 20_000, 50_000, 75_000, 100_000]
                        .into_iter()
                        .filter(|&r| r <= c.rounds)
                        .collect();
                }
                SweepAxis::FunctionalForm => {
                    c.bias.manipulation_form = match v.as_str() {
                        "multiplicative" => ManipulationForm::Multiplicative,
                        "additive" => ManipulationForm::Additive,
                        _ => return Err(Error::Configuration(format!("unknown functional form '{v}'"))),
                    }
                }
                SweepAxis::AiMode => {
                    c.ai_mode = match v.as_str() {
                        "biased" => AiMode::Biased,
                        "debiased" => AiMode::Debiased,
                        "true_random" | "true-random" => AiMode::TrueRandom,
                        _ => return Err(Error::Configuration(format!("unknown ai mode '{v}'"))),
                    }
                }
                SweepAxis::MarketSize => c.n_sellers = integer(axis, v)?,
                SweepAxis::LearningParams => {
                    let (a, g) = v
                        .split_once(':')
                        .ok_or_else(|| Error::Configuration(format!("learning-params value '{v}' is not alpha:gamma")))?;
                    c.learner.alpha = number(axis, a)?;
                    c.learner.gamma = number(axis, g)?;
                }
                SweepAxis::DebiasLevel => c.bias_scale *= 1.0 - number(axis, v)?,
            }
            c.validate()?;
            Ok(SweepPoint { label: v.clone(), config: c, conditions })
        })
        .collect()
}

/// Runs every point of a sweep with `trials` matched trials per condition.
/// All trials of all points share one work queue.
pub fn run_sweep(base: &TrialConfig, axis: SweepAxis, values: &[String], trials: usize) -> Result<Vec<SweepRow>> {
    let points = sweep_points(base, axis, values)?;
    run_points(axis, &points, trials)
}

pub(crate) fn run_points(axis: SweepAxis, points: &[SweepPoint], trials: usize) -> Result<Vec<SweepRow>> {
    if trials == 0 {
        return Err(Error::Configuration("trials must be positive".into()));
    }
    let jobs: Vec<(usize, Condition, usize)> = points
        .iter()
        .enumerate()
        .flat_map(|(p, pt)| pt.conditions.iter().flat_map(move |&c| (0..trials).map(move |t| (p, c, t))))
        .collect();
    let results = run_jobs(jobs.len(), |k| {
        let (p, c, t) = jobs[k];
        run_trial(&points[p].config, c, t)
    })?;
    let mut it = results.into_iter();
    points
        .iter()
        .map(|pt| {
            let runs = pt.conditions.iter().map(|&c| (c, it.by_ref().take(trials).collect())).collect();
            let suite = Suite { runs };
            let qualities = pt.config.catalog()?.quality().to_vec();
            Ok(SweepRow { axis, label: pt.label.clone(), stats: suite_stats(&suite, &qualities)? })
        })
        .collect()
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::{LearnerConfig, StateCodec};
use crate::market::{BiasParams, Catalog, EndorsementRule, PayoffParams, PlatformDecision, SellerDecision, TieBreak};

/// Which side of the market learns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// Fair platform, honest non-bidding sellers.
    Baseline,
    /// Learning platform, fixed sellers.
    PlatformOnly,
    /// Fixed platform, learning sellers.
    SellerOnly,
    Joint,
}

impl Condition {
    pub const ALL: [Condition; 4] = [Condition::Baseline, Condition::PlatformOnly, Condition::SellerOnly, Condition::Joint];

    pub fn platform_learns(self) -> bool {
        matches!(self, Condition::PlatformOnly | Condition::Joint)
    }

    pub fn sellers_learn(self) -> bool {
        matches!(self, Condition::SellerOnly | Condition::Joint)
    }

    pub fn name(self) -> &'static str {
        match self {
            Condition::Baseline => "baseline",
            Condition::PlatformOnly => "platform_only",
            Condition::SellerOnly => "seller_only",
            Condition::Joint => "joint",
        }
    }
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Condition::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Configuration(format!("unknown condition '{s}'")))
    }
}

/// How the shopping agent chooses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AiMode {
    #[default]
    Biased,
    /// Every bias coefficient set to zero; quality and price still matter.
    Debiased,
    /// Uniform choice ignoring the display entirely.
    TrueRandom,
}

/// Bias channels that can be switched off independently.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Channels {
    /// Primacy, top-row and recency bonuses.
    pub position: bool,
    /// Badge bonus and sponsored-label penalty.
    pub endorsement: bool,
    /// Manipulation bonus and its visibility interaction.
    pub manipulation: bool,
    pub decoy: bool,
}

impl Default for Channels {
    fn default() -> Self {
        Self::ALL_ON
    }
}

impl Channels {
    pub const ALL_ON: Channels = Channels { position: true, endorsement: true, manipulation: true, decoy: true };
    pub const ALL_OFF: Channels = Channels { position: false, endorsement: false, manipulation: false, decoy: false };

    /// Bit 3 position, bit 2 endorsement, bit 1 manipulation, bit 0 decoy.
    pub fn from_mask(mask: u8) -> Self {
        Channels {
            position: mask & 0b1000 != 0,
            endorsement: mask & 0b0100 != 0,
            manipulation: mask & 0b0010 != 0,
            decoy: mask & 0b0001 != 0,
        }
    }

    pub fn mask(self) -> u8 {
        (self.position as u8) << 3 | (self.endorsement as u8) << 2 | (self.manipulation as u8) << 1 | self.decoy as u8
    }

    /// Four-character label such as `PB--`.
    pub fn label(self) -> String {
        [(self.position, 'P'), (self.endorsement, 'B'), (self.manipulation, 'M'), (self.decoy, 'D')]
            .iter()
            .map(|&(on, c)| if on { c } else { '-' })
            .collect()
    }

    pub fn apply(self, bias: &BiasParams) -> BiasParams {
        let mut b = *bias;
        if !self.position {
            b.beta_prime = 0.0;
            b.beta_pos = 0.0;
            b.beta_rec = 0.0;
        }
        if !self.endorsement {
            b.beta_end = 0.0;
            b.beta_spon = 0.0;
        }
        if !self.manipulation {
            b.beta_manip = 0.0;
            b.eta = 0.0;
        }
        if !self.decoy {
            b.beta_dec = 0.0;
        }
        b
    }
}

/// A share of consumers whose bias coefficients are all multiplied by
/// `bias_multiplier`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsumerClass {
    pub fraction: f64,
    pub bias_multiplier: f64,
}

/// Everything needed to run one trial, short of the condition and trial
/// index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialConfig {
    pub n_sellers: usize,
    pub rounds: usize,
    pub measure_fraction: f64,
    /// Trial `t` is seeded with `seed_base + 100 * t`.
    pub seed_base: u64,
    pub bias: BiasParams,
    pub channels: Channels,
    pub bias_scale: f64,
    /// Per-trial multiplicative noise on every bias coefficient, as a
    /// fraction of its magnitude.
    pub bias_noise_cv: f64,
    pub payoff: PayoffParams,
    pub override_p: f64,
    pub population: Vec<ConsumerClass>,
    pub codec: StateCodec,
    pub learner: LearnerConfig,
    pub ai_mode: AiMode,
    /// Elapsed-round counts at which trailing-window consumer surplus is
    /// recorded.
    pub checkpoints: Vec<usize>,
    pub tie_break: TieBreak,
    /// Bid weight of the fixed platform in the seller-only condition.
    pub fixed_bid_weight: f64,
    /// Strategy of the fixed sellers in the platform-only condition.
    pub naive_seller: SellerDecision,
    /// Keep per-round series in the result.
    pub record_series: bool,
    /// Spacing of Q-table snapshots taken over the final 20% of rounds.
    pub snapshot_every: usize,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            n_sellers: 6,
            rounds: 20_000,
            measure_fraction: 0.40,
            seed_base: 42,
            bias: BiasParams::default(),
            channels: Channels::ALL_ON,
            bias_scale: 1.0,
            bias_noise_cv: 0.0,
            payoff: PayoffParams::default(),
            override_p: 0.0,
            population: vec![ConsumerClass { fraction: 1.0, bias_multiplier: 1.0 }],
            codec: StateCodec::default(),
            learner: LearnerConfig::default(),
            ai_mode: AiMode::Biased,
            checkpoints: Vec::new(),
            tie_break: TieBreak::Calibrated,
            fixed_bid_weight: 0.0,
            naive_seller: SellerDecision::NAIVE,
            record_series: false,
            snapshot_every: 1000,
        }
    }
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Configuration(m));
        if self.n_sellers < 4 {
            return Err(Error::UnsupportedMarketSize(self.n_sellers));
        }
        if self.rounds == 0 {
            return bad("rounds must be positive".into());
        }
        if !(self.measure_fraction > 0.0 && self.measure_fraction <= 1.0) {
            return bad(format!("measure_fraction must lie in (0, 1], got {}", self.measure_fraction));
        }
        self.bias.validate()?;
        self.payoff.validate()?;
        self.codec.validate()?;
        self.learner.validate()?;
        if !(self.bias_scale >= 0.0 && self.bias_scale.is_finite()) {
            return bad(format!("bias_scale must be non-negative, got {}", self.bias_scale));
        }
        if !(self.bias_noise_cv >= 0.0 && self.bias_noise_cv.is_finite()) {
            return bad(format!("bias_noise_cv must be non-negative, got {}", self.bias_noise_cv));
        }
        if !(0.0..=1.0).contains(&self.override_p) {
            return bad(format!("override_p must lie in [0, 1], got {}", self.override_p));
        }
        if self.population.is_empty() {
            return bad("population needs at least one class".into());
        }
        if self.population.iter().any(|c| !(c.fraction >= 0.0 && c.bias_multiplier >= 0.0 && c.bias_multiplier.is_finite())) {
            return bad("population fractions and multipliers must be non-negative".into());
        }
        let total: f64 = self.population.iter().map(|c| c.fraction).sum();
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("population fractions sum to {total}, not 1"));
        }
        if !(0.0..=1.0).contains(&self.fixed_bid_weight) {
            return bad(format!("fixed_bid_weight must lie in [0, 1], got {}", self.fixed_bid_weight));
        }
        SellerDecision::new(self.naive_seller.manipulation, self.naive_seller.bid)?;
        if self.checkpoints.iter().any(|&c| c == 0 || c > self.rounds) {
            return bad("checkpoints must lie in 1..=rounds".into());
        }
        if self.snapshot_every == 0 {
            return bad("snapshot_every must be positive".into());
        }
        Ok(())
    }

    /// Number of rounds in the measurement window, `ceil(fraction * T)`.
    pub fn window_len(&self) -> usize {
        window_len(self.rounds, self.measure_fraction)
    }

    /// Seed of trial `index`.
    pub fn seed(&self, index: usize) -> u64 {
        self.seed_base.wrapping_add(100 * index as u64)
    }

    pub fn catalog(&self) -> Result<Catalog> {
        Catalog::with_sellers(self.n_sellers)
    }

    /// Fixed platform used when the platform does not learn.
    pub fn fixed_platform(&self, condition: Condition) -> PlatformDecision {
        match condition {
            Condition::SellerOnly => PlatformDecision {
                bid_weight: self.fixed_bid_weight,
                endorsement: EndorsementRule::Quality,
                decoy: false,
            },
            _ => PlatformDecision::FAIR,
        }
    }

    /// Fixed seller strategy used when sellers do not learn.
    pub fn fixed_seller(&self, condition: Condition) -> SellerDecision {
        match condition {
            Condition::PlatformOnly => self.naive_seller,
            _ => SellerDecision::NAIVE,
        }
    }

    /// Bias coefficients after the AI mode and global scale, before
    /// per-trial noise, channel toggles and consumer classes.
    pub fn base_bias(&self) -> BiasParams {
        let b = match self.ai_mode {
            AiMode::Debiased => self.bias.debiased(),
            _ => self.bias,
        };
        b.scaled(self.bias_scale)
    }
}

pub(crate) fn window_len(rounds: usize, fraction: f64) -> usize {
    // Guard against 0.4 * 20000 landing a hair above 8000.
    let raw = fraction * rounds as f64;
    let rounded = raw.round();
    let w = if (raw - rounded).abs() < 1e-9 { rounded } else { raw.ceil() };
    (w as usize).min(rounds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_matches_measurement_rule() {
        let c = TrialConfig::default();
        assert_eq!(c.window_len(), 8000);
        assert_eq!(window_len(1000, 0.4), 400);
        assert_eq!(window_len(7, 0.4), 3);
        assert_eq!(window_len(1, 0.4), 1);
    }

    #[test]
    fn seeds_follow_the_trial_scheme() {
        let c = TrialConfig::default();
        assert_eq!(c.seed(0), 42);
        assert_eq!(c.seed(99), 9942);
    }

    #[test]
    fn validation_rejects_bad_fields() {
        let ok = TrialConfig::default();
        ok.validate().unwrap();
        assert!(TrialConfig { rounds: 0, ..ok.clone() }.validate().is_err());
        assert!(TrialConfig { n_sellers: 3, ..ok.clone() }.validate().is_err());
        let pop = vec![ConsumerClass { fraction: 0.5, bias_multiplier: 1.0 }];
        assert!(TrialConfig { population: pop, ..ok.clone() }.validate().is_err());
        assert!(TrialConfig { override_p: 1.5, ..ok.clone() }.validate().is_err());
        assert!(TrialConfig { checkpoints: vec![30_000], ..ok }.validate().is_err());
    }

    #[test]
    fn channel_masks() {
        for m in 0..16u8 {
            assert_eq!(Channels::from_mask(m).mask(), m);
        }
        assert_eq!(Channels::from_mask(0b1000).label(), "P---");
        let b = BiasParams::default();
        assert_eq!(Channels::ALL_OFF.apply(&b), b.debiased());
        assert_eq!(Channels::ALL_ON.apply(&b), b);
    }

    #[test]
    fn config_json_rejects_unknown_keys() {
        let c: TrialConfig = serde_json::from_str(r#"{"rounds": 500}"#).unwrap();
        assert_eq!(c.rounds, 500);
        assert_eq!(c.n_sellers, 6);
        assert!(serde_json::from_str::<TrialConfig>(r#"{"roundz": 500}"#).is_err());
    }
}

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::config::{window_len, AiMode, Condition, TrialConfig};
use crate::error::{Error, Result};
use crate::learners::{Learner, MarketHistory};
use crate::market::display::{bid_targets, rank_into};
use crate::market::{
    apply_override, payoffs_into, sample_winner, softmax_into, utilities_into, BiasParams, Catalog, Display,
    PayoffParams, PlatformDecision, SellerDecision, TieBreak, TiePriority, PLATFORM_ACTIONS, SELLER_ACTIONS,
    SPONSORED_BID,
};

/// Full record of one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub round: usize,
    pub platform: PlatformDecision,
    pub sellers: Vec<SellerDecision>,
    /// 1-based display position of each seller.
    pub rank: Vec<usize>,
    pub endorsed: Vec<bool>,
    pub sponsored: Vec<bool>,
    pub decoy_target: Vec<bool>,
    pub utility: Vec<f64>,
    pub choice_prob: Vec<f64>,
    /// Seller that made the sale, after any consumer override.
    pub winner: usize,
    pub consumer_class: usize,
    pub cs: f64,
    pub platform_profit: f64,
    pub seller_profit: Vec<f64>,
}

enum Actor<D> {
    Fixed(D),
    Learning { learner: Learner, action: usize },
}

/// A market in progress: one trial's agents, history and rng.
pub struct Market {
    catalog: Catalog,
    classes: Vec<BiasParams>,
    class_cdf: Vec<f64>,
    temperature: f64,
    ai_mode: AiMode,
    override_p: f64,
    payoff: PayoffParams,
    tie_break: TieBreak,
    platform: Actor<PlatformDecision>,
    sellers: Vec<Actor<SellerDecision>>,
    history: MarketHistory,
    state: usize,
    round: usize,
    rng: ChaCha8Rng,

    ties: TiePriority,
    bid_ties: TiePriority,
    order: Vec<usize>,
    display: Display,
    platform_decision: PlatformDecision,
    decisions: Vec<SellerDecision>,
    bids: Vec<u8>,
    utilities: Vec<f64>,
    probs: Vec<f64>,
    seller_profit: Vec<f64>,
    class: usize,
    winner: usize,
    cs: f64,
    platform_profit: f64,
}

/// Draws per-trial bias noise: each coefficient gets Gaussian noise with
/// standard deviation `cv * |value|`, then is clamped back to its sign.
fn noisy_bias<R: Rng + ?Sized>(bias: &BiasParams, cv: f64, rng: &mut R) -> BiasParams {
    let mut b = *bias;
    let mut jitter = |v: f64| {
        let sd = cv * v.abs();
        if sd > 0.0 {
            v + Normal::new(0.0, sd).expect("finite sd").sample(rng)
        } else {
            v
        }
    };
    b.beta_prime = jitter(b.beta_prime).max(0.0);
    b.beta_pos = jitter(b.beta_pos).max(0.0);
    b.beta_rec = jitter(b.beta_rec).max(0.0);
    b.beta_end = jitter(b.beta_end).max(0.0);
    b.beta_spon = jitter(b.beta_spon).min(0.0);
    b.beta_manip = jitter(b.beta_manip).max(0.0);
    b.beta_dec = jitter(b.beta_dec).max(0.0);
    b
}

impl Market {
    /// Builds the market for one trial. Draw order on the trial rng: bias
    /// noise (if any), then the platform's table, then each seller's.
    pub fn new(config: &TrialConfig, condition: Condition, seed: u64) -> Result<Self> {
        config.validate()?;
        let catalog = config.catalog()?;
        let n = catalog.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let mut bias = config.base_bias();
        if config.bias_noise_cv > 0.0 && config.ai_mode == AiMode::Biased {
            bias = noisy_bias(&bias, config.bias_noise_cv, &mut rng);
        }
        let bias = config.channels.apply(&bias);
        let live: Vec<_> = config.population.iter().filter(|c| c.fraction > 0.0).collect();
        let classes = live.iter().map(|c| bias.scaled(c.bias_multiplier)).collect();
        let mut acc = 0.0;
        let class_cdf = live
            .iter()
            .map(|c| {
                acc += c.fraction;
                acc
            })
            .collect();

        let n_states = config.codec.n_states();
        let platform = if condition.platform_learns() {
            let learner = Learner::new(config.learner, n_states, PLATFORM_ACTIONS, &mut rng)?;
            Actor::Learning { learner, action: 0 }
        } else {
            Actor::Fixed(config.fixed_platform(condition))
        };
        let mut sellers = Vec::with_capacity(n);
        for _ in 0..n {
            sellers.push(if condition.sellers_learn() {
                let learner = Learner::new(config.learner, n_states, SELLER_ACTIONS, &mut rng)?;
                Actor::Learning { learner, action: 0 }
            } else {
                Actor::Fixed(config.fixed_seller(condition))
            });
        }

        Ok(Self {
            catalog,
            classes,
            class_cdf,
            temperature: bias.temperature,
            ai_mode: config.ai_mode,
            override_p: config.override_p,
            payoff: config.payoff,
            tie_break: config.tie_break,
            platform,
            sellers,
            history: MarketHistory::new(config.codec, n),
            state: 0,
            round: 0,
            rng,
            ties: match config.tie_break {
                TieBreak::Calibrated => TiePriority::by_lower_quality(n),
                _ => TiePriority::by_quality(n),
            },
            bid_ties: TiePriority::by_quality(n),
            order: Vec::with_capacity(n),
            display: Display { rank: vec![0; n], endorsed: None, decoy_target: None },
            platform_decision: PlatformDecision::FAIR,
            decisions: vec![SellerDecision::NAIVE; n],
            bids: vec![0; n],
            utilities: vec![0.0; n],
            probs: vec![0.0; n],
            seller_profit: vec![0.0; n],
            class: 0,
            winner: 0,
            cs: 0.0,
            platform_profit: 0.0,
        })
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    /// Rounds played so far.
    pub fn round(&self) -> usize {
        self.round
    }

    /// Current market state index.
    pub fn state(&self) -> usize {
        self.state
    }

    /// Plays one round.
    pub fn step(&mut self) -> Result<()> {
        let t = self.round;
        let s = self.state;
        let n = self.catalog.len();

        self.platform_decision = match &mut self.platform {
            Actor::Fixed(d) => *d,
            Actor::Learning { learner, action } => {
                *action = learner.select(s, t, &mut self.rng);
                PlatformDecision::decode(*action)?
            }
        };
        let mut manip_total = 0u32;
        let mut bid_total = 0u32;
        for (i, seller) in self.sellers.iter_mut().enumerate() {
            let d = match seller {
                Actor::Fixed(d) => *d,
                Actor::Learning { learner, action } => {
                    *action = learner.select(s, t, &mut self.rng);
                    SellerDecision::decode(*action)?
                }
            };
            self.decisions[i] = d;
            self.bids[i] = d.bid;
            manip_total += d.manipulation as u32;
            bid_total += d.bid as u32;
        }

        if self.tie_break == TieBreak::Random {
            self.ties.as_mut_vec().shuffle(&mut self.rng);
            self.bid_ties.as_mut_vec().clone_from(self.ties.as_mut_vec());
        }
        let pd = self.platform_decision;
        rank_into(&self.catalog, &self.bids, pd.bid_weight, &self.ties, &mut self.order, &mut self.display.rank);
        (self.display.endorsed, self.display.decoy_target) =
            bid_targets(&self.catalog, &self.bids, &pd, self.tie_break, &self.bid_ties);

        self.class = 0;
        if self.classes.len() > 1 {
            let u = self.rng.random::<f64>();
            self.class = self.class_cdf.iter().position(|&c| u < c).unwrap_or(self.classes.len() - 1);
        }

        let chosen = match self.ai_mode {
            AiMode::TrueRandom => {
                self.utilities.fill(0.0);
                self.probs.fill(1.0 / n as f64);
                self.rng.random_range(0..n)
            }
            _ => {
                let bias = &self.classes[self.class];
                utilities_into(&self.catalog, &self.display, &self.decisions, bias, &mut self.utilities);
                softmax_into(&self.utilities, self.temperature, &mut self.probs)?;
                sample_winner(&self.probs, &mut self.rng)?
            }
        };
        self.winner = apply_override(chosen, self.override_p, &mut self.rng);

        let (cs, platform) = payoffs_into(&self.catalog, &self.bids, self.winner, &self.payoff, &mut self.seller_profit);
        self.cs = cs;
        self.platform_profit = platform;

        self.history.push(manip_total, bid_total);
        let s_next = self.history.state();

        if let Actor::Learning { learner, action } = &mut self.platform {
            learner.update(s, *action, platform, s_next, t, &mut self.rng)?;
        }
        for (seller, &r) in self.sellers.iter_mut().zip(&self.seller_profit) {
            if let Actor::Learning { learner, action } = seller {
                learner.update(s, *action, r, s_next, t, &mut self.rng)?;
            }
        }

        self.state = s_next;
        self.round += 1;
        Ok(())
    }

    /// Flushes learners with end-of-trial work (REINFORCE episodes).
    pub fn finish(&mut self) -> Result<()> {
        if let Actor::Learning { learner, .. } = &mut self.platform {
            learner.finish()?;
        }
        for s in &mut self.sellers {
            if let Actor::Learning { learner, .. } = s {
                learner.finish()?;
            }
        }
        Ok(())
    }

    /// Consumer surplus, platform profit and seller profits of the last
    /// round.
    pub fn last_payoffs(&self) -> (f64, f64, &[f64]) {
        (self.cs, self.platform_profit, &self.seller_profit)
    }

    pub fn last_winner(&self) -> usize {
        self.winner
    }

    pub fn last_platform_decision(&self) -> PlatformDecision {
        self.platform_decision
    }

    pub fn last_seller_decisions(&self) -> &[SellerDecision] {
        &self.decisions
    }

    /// The platform's last action index, if it learns.
    pub fn last_platform_action(&self) -> Option<usize> {
        match &self.platform {
            Actor::Learning { action, .. } => Some(*action),
            Actor::Fixed(_) => None,
        }
    }

    /// Everything about the last round.
    pub fn last_outcome(&self) -> RoundOutcome {
        let n = self.catalog.len();
        RoundOutcome {
            round: self.round.saturating_sub(1),
            platform: self.platform_decision,
            sellers: self.decisions.clone(),
            rank: self.display.rank.clone(),
            endorsed: (0..n).map(|i| self.display.endorsed == Some(i)).collect(),
            sponsored: self.bids.iter().map(|&b| b >= SPONSORED_BID).collect(),
            decoy_target: (0..n).map(|i| self.display.decoy_target == Some(i)).collect(),
            utility: self.utilities.clone(),
            choice_prob: self.probs.clone(),
            winner: self.winner,
            consumer_class: self.class,
            cs: self.cs,
            platform_profit: self.platform_profit,
            seller_profit: self.seller_profit.clone(),
        }
    }

    /// Concatenated main tables of every learning agent, platform first.
    pub fn learner_snapshot(&self) -> Vec<f64> {
        let mut out = Vec::new();
        if let Actor::Learning { learner, .. } = &self.platform {
            out.extend(learner.snapshot());
        }
        for s in &self.sellers {
            if let Actor::Learning { learner, .. } = s {
                out.extend(learner.snapshot());
            }
        }
        out
    }
}

/// Plays one round and returns its full record.
pub fn run_round(market: &mut Market) -> Result<RoundOutcome> {
    market.step()?;
    Ok(market.last_outcome())
}

/// Per-round traces of a trial.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub cs: Vec<f64>,
    pub platform_profit: Vec<f64>,
    pub seller_profit: Vec<f64>,
    pub winner: Vec<u8>,
    /// Platform action index, or `u8::MAX` when the platform is fixed.
    pub platform_action: Vec<u8>,
    /// Seller action indices, `n_sellers` per round.
    pub seller_actions: Vec<u8>,
}

/// Trailing-window consumer surplus at a checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    /// Rounds elapsed.
    pub round: usize,
    pub cs_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub condition: Condition,
    pub trial: usize,
    pub seed: u64,
    pub rounds: usize,
    /// First round (0-based) of the measurement window.
    pub window_start: usize,
    pub cs_mean: f64,
    pub platform_mean: f64,
    /// Total seller profit per round, averaged over the window.
    pub seller_mean: f64,
    pub seller_profit_means: Vec<f64>,
    pub win_counts: Vec<u64>,
    pub mean_bid_weight: f64,
    pub mean_manipulation: f64,
    pub mean_bid: f64,
    pub checkpoints: Vec<Checkpoint>,
    /// Mean absolute change of the learners' tables between consecutive
    /// snapshots over the final 20% of rounds.
    pub q_change: Option<f64>,
    pub series: Option<Series>,
}

impl TrialResult {
    pub fn window_len(&self) -> usize {
        self.rounds - self.window_start
    }

    pub fn win_rates(&self) -> Vec<f64> {
        let total = self.window_len() as f64;
        self.win_counts.iter().map(|&c| c as f64 / total).collect()
    }

    pub fn total_welfare(&self) -> f64 {
        self.cs_mean + self.platform_mean + self.seller_mean
    }
}

fn mean_abs_change(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

/// Runs trial `index` of `condition` with seed `config.seed(index)`.
pub fn run_trial(config: &TrialConfig, condition: Condition, index: usize) -> Result<TrialResult> {
    run_trial_seeded(config, condition, index, config.seed(index))
}

pub fn run_trial_seeded(config: &TrialConfig, condition: Condition, index: usize, seed: u64) -> Result<TrialResult> {
    let mut market = Market::new(config, condition, seed)?;
    let n = market.catalog().len();
    let rounds = config.rounds;
    let window = config.window_len();
    if window == 0 {
        return Err(Error::Configuration("measurement window is empty".into()));
    }
    let window_start = rounds - window;
    let stable_start = rounds - window_len(rounds, 0.2);
    let learning = condition.platform_learns() || condition.sellers_learn();

    let mut cs = Vec::with_capacity(rounds);
    let mut series = config.record_series.then(|| Series {
        cs: Vec::new(),
        platform_profit: Vec::with_capacity(rounds),
        seller_profit: Vec::with_capacity(rounds),
        winner: Vec::with_capacity(rounds),
        platform_action: Vec::with_capacity(rounds),
        seller_actions: Vec::with_capacity(rounds * n),
    });
    let mut platform_sum = 0.0;
    let mut seller_sum = 0.0;
    let mut seller_sums = vec![0.0; n];
    let mut win_counts = vec![0u64; n];
    let (mut w_sum, mut m_sum, mut b_sum) = (0.0, 0u64, 0u64);
    let mut snapshots: Vec<Vec<f64>> = Vec::new();
    let mut changes = Vec::new();

    for t in 0..rounds {
        if learning && t >= stable_start && (t - stable_start) % config.snapshot_every == 0 {
            let snap = market.learner_snapshot();
            if let Some(prev) = snapshots.last() {
                changes.push(mean_abs_change(prev, &snap));
            }
            snapshots.push(snap);
            if snapshots.len() > 1 {
                snapshots.remove(0);
            }
        }
        market.step()?;
        let (c, p, sp) = market.last_payoffs();
        let seller_total: f64 = sp.iter().sum();
        cs.push(c);
        if t >= window_start {
            platform_sum += p;
            seller_sum += seller_total;
            for (acc, &v) in seller_sums.iter_mut().zip(sp) {
                *acc += v;
            }
            win_counts[market.last_winner()] += 1;
            w_sum += market.last_platform_decision().bid_weight;
            for d in market.last_seller_decisions() {
                m_sum += d.manipulation as u64;
                b_sum += d.bid as u64;
            }
        }
        if let Some(s) = series.as_mut() {
            s.platform_profit.push(p);
            s.seller_profit.push(seller_total);
            s.winner.push(market.last_winner() as u8);
            s.platform_action.push(market.last_platform_action().map_or(u8::MAX, |a| a as u8));
            s.seller_actions.extend(market.last_seller_decisions().iter().map(|d| d.encode() as u8));
        }
    }
    market.finish()?;
    if learning {
        let snap = market.learner_snapshot();
        if let Some(prev) = snapshots.last() {
            if rounds > stable_start && (rounds - stable_start) % config.snapshot_every == 0 {
                changes.push(mean_abs_change(prev, &snap));
            }
        }
    }

    let w = window as f64;
    let cs_mean = cs[window_start..].iter().sum::<f64>() / w;
    let checkpoints = config
        .checkpoints
        .iter()
        .map(|&c| {
            let len = window_len(c, config.measure_fraction).max(1);
            Checkpoint { round: c, cs_mean: cs[c - len..c].iter().sum::<f64>() / len as f64 }
        })
        .collect();
    let q_change = (!changes.is_empty()).then(|| changes.iter().sum::<f64>() / changes.len() as f64);
    if let Some(s) = series.as_mut() {
        s.cs = cs;
    }

    Ok(TrialResult {
        condition,
        trial: index,
        seed,
        rounds,
        window_start,
        cs_mean,
        platform_mean: platform_sum / w,
        seller_mean: seller_sum / w,
        seller_profit_means: seller_sums.iter().map(|s| s / w).collect(),
        win_counts,
        mean_bid_weight: w_sum / w,
        mean_manipulation: m_sum as f64 / (w * n as f64),
        mean_bid: b_sum as f64 / (w * n as f64),
        checkpoints,
        q_change,
        series,
    })
}

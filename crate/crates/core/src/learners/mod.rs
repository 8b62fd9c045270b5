//! Tabular learners behind one select/update contract.

mod explore;
mod state;
pub mod update;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use explore::{argmax, epsilon_at, sample_index, select_eps_greedy, softmax_policy};
pub use state::{MarketHistory, StateCodec};
use update::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    #[default]
    Qlearning,
    Sarsa,
    GradientBandit,
    Ucb,
    Thompson,
    ActorCritic,
    Reinforce,
    Exp3,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::Qlearning,
        Algorithm::Sarsa,
        Algorithm::GradientBandit,
        Algorithm::Ucb,
        Algorithm::Thompson,
        Algorithm::ActorCritic,
        Algorithm::Reinforce,
        Algorithm::Exp3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Qlearning => "qlearning",
            Algorithm::Sarsa => "sarsa",
            Algorithm::GradientBandit => "gradient_bandit",
            Algorithm::Ucb => "ucb",
            Algorithm::Thompson => "thompson",
            Algorithm::ActorCritic => "actor_critic",
            Algorithm::Reinforce => "reinforce",
            Algorithm::Exp3 => "exp3",
        }
    }

    /// Whether the learner conditions on the market state.
    pub fn uses_state(self) -> bool {
        !matches!(self, Algorithm::GradientBandit | Algorithm::Ucb | Algorithm::Thompson)
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Configuration(format!("unknown algorithm '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    pub algorithm: Algorithm,
    pub alpha: f64,
    pub gamma: f64,
    pub eps0: f64,
    pub eps_decay: f64,
    pub eps_min: f64,
    pub ucb_c: f64,
    pub ac_alpha_v: f64,
    pub ac_alpha_theta: f64,
    pub ac_tau: f64,
    pub reinforce_alpha: f64,
    pub reinforce_episode: usize,
    pub exp3_gamma: f64,
    /// Half-width of the uniform Q-table initialization.
    pub q_init_range: f64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Qlearning,
            alpha: 0.12,
            gamma: 0.9,
            eps0: 0.25,
            eps_decay: 0.9995,
            eps_min: 0.02,
            ucb_c: 2.0,
            ac_alpha_v: 0.15,
            ac_alpha_theta: 0.10,
            ac_tau: 1.0,
            reinforce_alpha: 0.05,
            reinforce_episode: 100,
            exp3_gamma: 0.1,
            q_init_range: 0.01,
        }
    }
}

impl LearnerConfig {
    pub fn with_algorithm(algorithm: Algorithm) -> Self {
        Self { algorithm, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("alpha", self.alpha),
            ("gamma", self.gamma),
            ("eps0", self.eps0),
            ("eps_decay", self.eps_decay),
            ("eps_min", self.eps_min),
            ("ac_alpha_v", self.ac_alpha_v),
            ("ac_alpha_theta", self.ac_alpha_theta),
            ("reinforce_alpha", self.reinforce_alpha),
            ("exp3_gamma", self.exp3_gamma),
        ];
        for (name, v) in rates {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Configuration(format!("{name} must lie in (0, 1], got {v}")));
            }
        }
        if self.eps_min > self.eps0 {
            return Err(Error::Configuration("eps_min must not exceed eps0".into()));
        }
        if !(self.ucb_c >= 0.0 && self.ucb_c.is_finite()) {
            return Err(Error::Configuration(format!("ucb_c must be non-negative, got {}", self.ucb_c)));
        }
        if !(self.ac_tau > 0.0 && self.ac_tau.is_finite()) {
            return Err(Error::Configuration(format!("ac_tau must be positive, got {}", self.ac_tau)));
        }
        if self.reinforce_episode == 0 {
            return Err(Error::Configuration("reinforce_episode must be at least 1".into()));
        }
        if !(self.q_init_range >= 0.0 && self.q_init_range.is_finite()) {
            return Err(Error::Configuration("q_init_range must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum Tables {
    Q { q: Table, next: Option<(usize, usize)> },
    Bandit { prefs: Vec<f64>, baseline: RunningMean },
    Ucb { counts: Vec<u64>, means: Vec<f64>, rounds: u64 },
    Thompson { successes: Vec<f64>, failures: Vec<f64> },
    ActorCritic { theta: Table, values: Vec<f64> },
    Reinforce { theta: Table, episode: Vec<(usize, usize, f64)> },
    Exp3 { log_weights: Table },
}

/// One agent's learning state.
#[derive(Debug, Clone)]
pub struct Learner {
    config: LearnerConfig,
    n_states: usize,
    n_actions: usize,
    tables: Tables,
    policy: Vec<f64>,
}

impl Learner {
    /// Q-based learners draw their initial table from `rng`; the others
    /// start from fixed priors and draw nothing.
    pub fn new<R: Rng + ?Sized>(config: LearnerConfig, n_states: usize, n_actions: usize, rng: &mut R) -> Result<Self> {
        config.validate()?;
        if n_states == 0 || n_actions == 0 {
            return Err(Error::Configuration("learner needs at least one state and one action".into()));
        }
        let h = config.q_init_range;
        let tables = match config.algorithm {
            Algorithm::Qlearning | Algorithm::Sarsa => Tables::Q {
                q: Table::from_fn(n_states, n_actions, || if h > 0.0 { rng.random_range(-h..h) } else { 0.0 }),
                next: None,
            },
            Algorithm::GradientBandit => Tables::Bandit { prefs: vec![0.0; n_actions], baseline: RunningMean::default() },
            Algorithm::Ucb => Tables::Ucb { counts: vec![0; n_actions], means: vec![0.0; n_actions], rounds: 0 },
            Algorithm::Thompson => Tables::Thompson { successes: vec![1.0; n_actions], failures: vec![1.0; n_actions] },
            Algorithm::ActorCritic => {
                Tables::ActorCritic { theta: Table::filled(n_states, n_actions, 0.0), values: vec![0.0; n_states] }
            }
            Algorithm::Reinforce => Tables::Reinforce {
                theta: Table::filled(n_states, n_actions, 0.0),
                episode: Vec::with_capacity(config.reinforce_episode),
            },
            Algorithm::Exp3 => Tables::Exp3 { log_weights: Table::filled(n_states, n_actions, 0.0) },
        };
        Ok(Self { config, n_states, n_actions, tables, policy: vec![0.0; n_actions] })
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }

    pub fn algorithm(&self) -> Algorithm {
        self.config.algorithm
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    /// Chooses an action in `state` at 0-based round `t`.
    pub fn select<R: Rng + ?Sized>(&mut self, state: usize, t: usize, rng: &mut R) -> usize {
        debug_assert!(state < self.n_states);
        let cfg = &self.config;
        match &mut self.tables {
            Tables::Q { q, next } => match next.take() {
                Some((s, a)) if s == state => a,
                _ => select_eps_greedy(q.row(state), epsilon_at(t, cfg), rng),
            },
            Tables::Bandit { prefs, .. } => {
                softmax_policy(prefs, 1.0, &mut self.policy);
                sample_index(&self.policy, rng)
            }
            Tables::Ucb { counts, means, rounds } => ucb_select(counts, means, *rounds + 1, cfg.ucb_c),
            Tables::Thompson { successes, failures } => thompson_select(successes, failures, rng),
            Tables::ActorCritic { theta, .. } => {
                softmax_policy(theta.row(state), cfg.ac_tau, &mut self.policy);
                sample_index(&self.policy, rng)
            }
            Tables::Reinforce { theta, .. } => {
                softmax_policy(theta.row(state), 1.0, &mut self.policy);
                sample_index(&self.policy, rng)
            }
            Tables::Exp3 { log_weights } => {
                exp3_policy(log_weights.row(state), cfg.exp3_gamma, &mut self.policy);
                sample_index(&self.policy, rng)
            }
        }
    }

    /// Learns from `reward` for `action` taken in `state`, landing in
    /// `next_state`. `t` is the round the action was taken in; SARSA picks
    /// and caches its round-`t + 1` action here.
    #[allow(clippy::too_many_arguments)]
    pub fn update<R: Rng + ?Sized>(
        &mut self,
        state: usize,
        action: usize,
        reward: f64,
        next_state: usize,
        t: usize,
        rng: &mut R,
    ) -> Result<()> {
        let cfg = self.config;
        match &mut self.tables {
            Tables::Q { q, next } => {
                if cfg.algorithm == Algorithm::Sarsa {
                    let a_next = select_eps_greedy(q.row(next_state), epsilon_at(t + 1, &cfg), rng);
                    sarsa_update(q, state, action, reward, next_state, a_next, cfg.alpha, cfg.gamma)?;
                    *next = Some((next_state, a_next));
                    Ok(())
                } else {
                    qlearning_update(q, state, action, reward, next_state, cfg.alpha, cfg.gamma)
                }
            }
            Tables::Bandit { prefs, baseline } => {
                softmax_policy(prefs, 1.0, &mut self.policy);
                gradient_bandit_update(prefs, &self.policy, baseline, action, reward, cfg.alpha)
            }
            Tables::Ucb { counts, means, rounds } => {
                ucb_update(counts, means, action, reward)?;
                *rounds += 1;
                Ok(())
            }
            Tables::Thompson { successes, failures } => thompson_update(successes, failures, action, reward),
            Tables::ActorCritic { theta, values } => actor_critic_update(
                theta,
                values,
                state,
                action,
                reward,
                next_state,
                cfg.ac_alpha_v,
                cfg.ac_alpha_theta,
                cfg.gamma,
            ),
            Tables::Reinforce { theta, episode } => {
                if !reward.is_finite() {
                    return Err(Error::NumericInput(format!("reward {reward}")));
                }
                episode.push((state, action, reward));
                if episode.len() >= cfg.reinforce_episode {
                    reinforce_episode_update(theta, episode, cfg.reinforce_alpha, cfg.gamma)?;
                    episode.clear();
                }
                Ok(())
            }
            Tables::Exp3 { log_weights } => {
                exp3_policy(log_weights.row(state), cfg.exp3_gamma, &mut self.policy);
                exp3_update(log_weights.row_mut(state), &self.policy, action, reward, cfg.exp3_gamma)
            }
        }
    }

    /// Flushes any partial REINFORCE episode.
    pub fn finish(&mut self) -> Result<()> {
        if let Tables::Reinforce { theta, episode } = &mut self.tables {
            reinforce_episode_update(theta, episode, self.config.reinforce_alpha, self.config.gamma)?;
            episode.clear();
        }
        Ok(())
    }

    /// Action distribution the learner currently plays in `state`. For
    /// Q-based learners this is the epsilon-greedy policy at round `t`; UCB
    /// and Thompson report their deterministic or posterior-mean greedy
    /// choice as a point mass.
    pub fn policy(&self, state: usize, t: usize, out: &mut [f64]) {
        let cfg = &self.config;
        let k = self.n_actions as f64;
        match &self.tables {
            Tables::Q { q, .. } => {
                let eps = epsilon_at(t, cfg);
                out.fill(eps / k);
                out[argmax(q.row(state))] += 1.0 - eps;
            }
            Tables::Bandit { prefs, .. } => softmax_policy(prefs, 1.0, out),
            Tables::Ucb { counts, means, rounds } => {
                out.fill(0.0);
                out[ucb_select(counts, means, rounds + 1, cfg.ucb_c)] = 1.0;
            }
            Tables::Thompson { successes, failures } => {
                let mean: Vec<f64> = successes.iter().zip(failures).map(|(s, f)| s / (s + f)).collect();
                out.fill(0.0);
                out[argmax(&mean)] = 1.0;
            }
            Tables::ActorCritic { theta, .. } => softmax_policy(theta.row(state), cfg.ac_tau, out),
            Tables::Reinforce { theta, .. } => softmax_policy(theta.row(state), 1.0, out),
            Tables::Exp3 { log_weights } => exp3_policy(log_weights.row(state), cfg.exp3_gamma, out),
        }
    }

    /// Action-value table for Q-based learners.
    pub fn q_table(&self) -> Option<&Table> {
        match &self.tables {
            Tables::Q { q, .. } => Some(q),
            _ => None,
        }
    }

    /// Copy of the learner's main table, flattened row-major.
    pub fn snapshot(&self) -> Vec<f64> {
        match &self.tables {
            Tables::Q { q, .. } => q.as_slice().to_vec(),
            Tables::Bandit { prefs, .. } => prefs.clone(),
            Tables::Ucb { means, .. } => means.clone(),
            Tables::Thompson { successes, failures } => {
                successes.iter().zip(failures).map(|(s, f)| s / (s + f)).collect()
            }
            Tables::ActorCritic { theta, .. } | Tables::Reinforce { theta, .. } => theta.as_slice().to_vec(),
            Tables::Exp3 { log_weights } => log_weights.as_slice().to_vec(),
        }
    }
}

//! Update rules for each learning algorithm, as free functions over plain
//! tables so they can be checked in isolation.

use rand::Rng;
use rand_distr::{Beta, Distribution};

use super::explore::argmax;
use crate::error::{Error, Result};

/// Dense `states x actions` table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    actions: usize,
    values: Vec<f64>,
}

impl Table {
    pub fn filled(states: usize, actions: usize, value: f64) -> Self {
        Self { actions, values: vec![value; states * actions] }
    }

    pub fn from_fn(states: usize, actions: usize, mut f: impl FnMut() -> f64) -> Self {
        Self { actions, values: (0..states * actions).map(|_| f()).collect() }
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn states(&self) -> usize {
        self.values.len() / self.actions
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.actions..(s + 1) * self.actions]
    }

    pub fn row_mut(&mut self, s: usize) -> &mut [f64] {
        &mut self.values[s * self.actions..(s + 1) * self.actions]
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.actions + a]
    }

    pub fn get_mut(&mut self, s: usize, a: usize) -> &mut f64 {
        &mut self.values[s * self.actions + a]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

fn finite(r: f64) -> Result<()> {
    if r.is_finite() {
        Ok(())
    } else {
        Err(Error::NumericInput(format!("reward {r}")))
    }
}

/// `Q[s,a] += alpha * (r + gamma * max_a' Q[s',a'] - Q[s,a])`.
pub fn qlearning_update(q: &mut Table, s: usize, a: usize, r: f64, s_next: usize, alpha: f64, gamma: f64) -> Result<()> {
    finite(r)?;
    let next = q.get(s_next, argmax(q.row(s_next)));
    let cur = q.get_mut(s, a);
    *cur += alpha * (r + gamma * next - *cur);
    Ok(())
}

/// `Q[s,a] += alpha * (r + gamma * Q[s',a'] - Q[s,a])` with the action
/// actually taken next.
#[allow(clippy::too_many_arguments)]
pub fn sarsa_update(q: &mut Table, s: usize, a: usize, r: f64, s_next: usize, a_next: usize, alpha: f64, gamma: f64) -> Result<()> {
    finite(r)?;
    let next = q.get(s_next, a_next);
    let cur = q.get_mut(s, a);
    *cur += alpha * (r + gamma * next - *cur);
    Ok(())
}

/// Incremental mean of observed rewards.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningMean {
    pub mean: f64,
    pub count: u64,
}

impl RunningMean {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.mean += (x - self.mean) / self.count as f64;
    }
}

/// Gradient-bandit preference step against the baseline accumulated so
/// far; the baseline then absorbs `r`.
///
/// `policy` must be `softmax(prefs)` before the update.
pub fn gradient_bandit_update(prefs: &mut [f64], policy: &[f64], baseline: &mut RunningMean, taken: usize, r: f64, alpha: f64) -> Result<()> {
    finite(r)?;
    let adv = r - baseline.mean;
    for (a, h) in prefs.iter_mut().enumerate() {
        if a == taken {
            *h += alpha * adv * (1.0 - policy[a]);
        } else {
            *h -= alpha * adv * policy[a];
        }
    }
    baseline.push(r);
    Ok(())
}

/// Untried actions first (lowest index), then the largest upper confidence
/// index `mean + c * sqrt(ln t / N)`; ties go to the lowest index.
pub fn ucb_select(counts: &[u64], means: &[f64], t: u64, c: f64) -> usize {
    if let Some(a) = counts.iter().position(|&n| n == 0) {
        return a;
    }
    let ln_t = (t.max(1) as f64).ln();
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (a, (&n, &m)) in counts.iter().zip(means).enumerate() {
        let v = m + c * (ln_t / n as f64).sqrt();
        if v > best_v {
            best = a;
            best_v = v;
        }
    }
    best
}

pub fn ucb_update(counts: &mut [u64], means: &mut [f64], taken: usize, r: f64) -> Result<()> {
    finite(r)?;
    counts[taken] += 1;
    means[taken] += (r - means[taken]) / counts[taken] as f64;
    Ok(())
}

/// Fractional Beta update with success probability `clamp((r + 1) / 2)`.
pub fn thompson_update(successes: &mut [f64], failures: &mut [f64], taken: usize, r: f64) -> Result<()> {
    finite(r)?;
    let p = ((r + 1.0) / 2.0).clamp(0.0, 1.0);
    successes[taken] += p;
    failures[taken] += 1.0 - p;
    Ok(())
}

/// Action with the largest independent Beta posterior draw.
pub fn thompson_select<R: Rng + ?Sized>(successes: &[f64], failures: &[f64], rng: &mut R) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (a, (&s, &f)) in successes.iter().zip(failures).enumerate() {
        let v = Beta::new(s, f).expect("pseudo-counts stay positive").sample(rng);
        if v > best_v {
            best = a;
            best_v = v;
        }
    }
    best
}

/// One-step actor-critic: `delta = r + gamma V[s'] - V[s]`, then
/// `V[s] += alpha_v delta` and `theta[s,a] += alpha_theta delta`.
#[allow(clippy::too_many_arguments)]
pub fn actor_critic_update(
    theta: &mut Table,
    values: &mut [f64],
    s: usize,
    a: usize,
    r: f64,
    s_next: usize,
    alpha_v: f64,
    alpha_theta: f64,
    gamma: f64,
) -> Result<()> {
    finite(r)?;
    let delta = r + gamma * values[s_next] - values[s];
    values[s] += alpha_v * delta;
    *theta.get_mut(s, a) += alpha_theta * delta;
    Ok(())
}

/// Monte Carlo policy step over a finished episode:
/// `theta[s_t, a_t] += alpha * G_t` with `G_t` the discounted return from
/// step `t` to the end of the episode.
pub fn reinforce_episode_update(theta: &mut Table, episode: &[(usize, usize, f64)], alpha: f64, gamma: f64) -> Result<()> {
    if let Some(&(_, _, r)) = episode.iter().find(|(_, _, r)| !r.is_finite()) {
        return Err(Error::NumericInput(format!("reward {r}")));
    }
    let mut g = 0.0;
    for &(s, a, r) in episode.iter().rev() {
        g = r + gamma * g;
        *theta.get_mut(s, a) += alpha * g;
    }
    Ok(())
}

/// Exp3 mixed policy from log-weights:
/// `(1 - gamma_e) * w / sum(w) + gamma_e / |A|`.
pub fn exp3_policy(log_weights: &[f64], gamma_e: f64, out: &mut [f64]) {
    super::explore::softmax_policy(log_weights, 1.0, out);
    let k = log_weights.len() as f64;
    for p in out.iter_mut() {
        *p = (1.0 - gamma_e) * *p + gamma_e / k;
    }
}

/// Importance-weighted Exp3 step on log-weights. Rewards are mapped to
/// `[0, 1]` by `clamp((r + 1) / 3)`; `policy` is the mixed policy the action
/// was drawn from.
pub fn exp3_update(log_weights: &mut [f64], policy: &[f64], taken: usize, r: f64, gamma_e: f64) -> Result<()> {
    finite(r)?;
    let r_norm = ((r + 1.0) / 3.0).clamp(0.0, 1.0);
    let r_hat = r_norm / policy[taken];
    log_weights[taken] += gamma_e * r_hat / log_weights.len() as f64;
    Ok(())
}

use rand::Rng;

use super::LearnerConfig;

/// `max(eps_min, eps0 * eps_decay^t)` for 0-based round `t`.
pub fn epsilon_at(t: usize, config: &LearnerConfig) -> f64 {
    (config.eps0 * config.eps_decay.powf(t as f64)).max(config.eps_min)
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Greedy action with probability `1 - epsilon`, otherwise a uniformly
/// random action (which may coincide with the greedy one).
pub fn select_eps_greedy<R: Rng + ?Sized>(row: &[f64], epsilon: f64, rng: &mut R) -> usize {
    assert!(!row.is_empty(), "empty action row");
    if rng.random::<f64>() < epsilon {
        rng.random_range(0..row.len())
    } else {
        argmax(row)
    }
}

/// Softmax of `prefs / temperature` into `out`.
pub fn softmax_policy(prefs: &[f64], temperature: f64, out: &mut [f64]) {
    let max = prefs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &h) in out.iter_mut().zip(prefs) {
        *o = ((h - max) / temperature).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

/// Draws an index from a normalized distribution.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u = rng.random::<f64>();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

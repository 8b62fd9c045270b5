use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{MAX_BID, MAX_MANIPULATION};

/// Discretizes recent average manipulation and bids into a state index.
///
/// Each dimension is cut into `bins` equal-width, half-open bins over its
/// natural range (manipulation `[0, 3]`, bids `[0, 2]`); the last bin is
/// closed and absorbs anything larger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StateCodec {
    pub bins: usize,
    /// Rounds averaged into each observation.
    pub history_window: usize,
}

impl Default for StateCodec {
    fn default() -> Self {
        Self { bins: 4, history_window: 100 }
    }
}

impl StateCodec {
    pub fn validate(&self) -> Result<()> {
        if self.bins == 0 || self.history_window == 0 {
            return Err(Error::Configuration("state codec needs bins >= 1 and history_window >= 1".into()));
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.bins * self.bins
    }

    fn bin(&self, value: f64, range: f64) -> usize {
        let width = range / self.bins as f64;
        ((value / width).floor() as usize).min(self.bins - 1)
    }

    /// `manip_bin * bins + bid_bin`.
    pub fn state_index(&self, manip_mean: f64, bid_mean: f64) -> Result<usize> {
        if !(manip_mean >= 0.0 && bid_mean >= 0.0) {
            return Err(Error::InputDomain(format!(
                "state means must be non-negative (got {manip_mean}, {bid_mean})"
            )));
        }
        let m = self.bin(manip_mean, MAX_MANIPULATION as f64);
        let b = self.bin(bid_mean, MAX_BID as f64);
        Ok(m * self.bins + b)
    }

    /// Lower bin edges for manipulation and bids.
    pub fn edges(&self) -> (Vec<f64>, Vec<f64>) {
        let e = |range: f64| (0..self.bins).map(|k| k as f64 * range / self.bins as f64).collect();
        (e(MAX_MANIPULATION as f64), e(MAX_BID as f64))
    }
}

/// Trailing window of per-round seller totals, kept as integers so the
/// running sums are exact.
#[derive(Debug, Clone)]
pub struct MarketHistory {
    codec: StateCodec,
    sellers: usize,
    rounds: VecDeque<(u32, u32)>,
    manip_sum: u64,
    bid_sum: u64,
}

impl MarketHistory {
    pub fn new(codec: StateCodec, sellers: usize) -> Self {
        Self {
            codec,
            sellers,
            rounds: VecDeque::with_capacity(codec.history_window + 1),
            manip_sum: 0,
            bid_sum: 0,
        }
    }

    /// Records one round's total manipulation and total bid across sellers.
    pub fn push(&mut self, manip_total: u32, bid_total: u32) {
        self.rounds.push_back((manip_total, bid_total));
        self.manip_sum += manip_total as u64;
        self.bid_sum += bid_total as u64;
        if self.rounds.len() > self.codec.history_window {
            let (m, b) = self.rounds.pop_front().expect("non-empty");
            self.manip_sum -= m as u64;
            self.bid_sum -= b as u64;
        }
    }

    /// Trailing means of the per-round cross-seller averages, or `None`
    /// until a full window has been observed.
    pub fn means(&self) -> Option<(f64, f64)> {
        if self.rounds.len() < self.codec.history_window {
            return None;
        }
        let denom = (self.sellers * self.codec.history_window) as f64;
        Some((self.manip_sum as f64 / denom, self.bid_sum as f64 / denom))
    }

    /// Current state; 0 before a full window of history exists.
    pub fn state(&self) -> usize {
        match self.means() {
            Some((m, b)) => self.codec.state_index(m, b).expect("means are non-negative"),
            None => 0,
        }
    }
}

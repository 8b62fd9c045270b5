use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const BASE_MARKUP: f64 = 0.25;
pub const QUALITY_PREMIUM: f64 = 0.10;

const REFERENCE_QUALITY: [f64; 6] = [0.90, 0.75, 0.60, 0.45, 0.30, 0.20];
const REFERENCE_COST: [f64; 6] = [0.15, 0.12, 0.10, 0.08, 0.06, 0.05];

/// Sellers' qualities, marginal costs and cost-plus prices.
///
/// Sellers are indexed in strictly descending quality, so index 0 is always
/// the best product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    quality: Vec<f64>,
    cost: Vec<f64>,
    price: Vec<f64>,
    mu_base: f64,
    mu_q: f64,
}

/// `p = c + mu_base + mu_q * q`.
pub fn cost_plus_price(quality: f64, cost: f64, mu_base: f64, mu_q: f64) -> f64 {
    cost + mu_base + mu_q * quality
}

impl Catalog {
    pub fn new(quality: Vec<f64>, cost: Vec<f64>) -> Result<Self> {
        Self::with_markups(quality, cost, BASE_MARKUP, QUALITY_PREMIUM)
    }

    pub fn with_markups(quality: Vec<f64>, cost: Vec<f64>, mu_base: f64, mu_q: f64) -> Result<Self> {
        if quality.is_empty() || quality.len() != cost.len() {
            return Err(Error::InputDomain(format!(
                "need equal, non-empty quality and cost vectors (got {} and {})",
                quality.len(),
                cost.len()
            )));
        }
        if quality.iter().any(|q| !(q.is_finite() && *q > 0.0 && *q <= 1.0)) {
            return Err(Error::InputDomain("quality must lie in (0, 1]".into()));
        }
        if cost.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::InputDomain("cost must be finite and non-negative".into()));
        }
        if quality.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::InputDomain("quality must be strictly descending".into()));
        }
        let price = quality
            .iter()
            .zip(&cost)
            .map(|(&q, &c)| cost_plus_price(q, c, mu_base, mu_q))
            .collect();
        Ok(Self { quality, cost, price, mu_base, mu_q })
    }

    /// The six-seller reference market.
    pub fn reference() -> Self {
        Self::new(REFERENCE_QUALITY.to_vec(), REFERENCE_COST.to_vec()).expect("reference catalog is valid")
    }

    /// An `n`-seller market spanning the reference quality and cost range.
    ///
    /// Qualities and costs are read off the reference table by piecewise
    /// linear interpolation at evenly spaced points, so `n = 6` returns the
    /// reference market exactly.
    pub fn with_sellers(n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::UnsupportedMarketSize(n));
        }
        let last = (REFERENCE_QUALITY.len() - 1) as f64;
        let lerp = |table: &[f64; 6], x: f64| {
            let lo = x.floor() as usize;
            if lo >= table.len() - 1 {
                return table[table.len() - 1];
            }
            let frac = x - lo as f64;
            table[lo] + frac * (table[lo + 1] - table[lo])
        };
        let (quality, cost) = (0..n)
            .map(|i| {
                let x = i as f64 * last / (n - 1) as f64;
                (lerp(&REFERENCE_QUALITY, x), lerp(&REFERENCE_COST, x))
            })
            .unzip();
        Self::new(quality, cost)
    }

    pub fn len(&self) -> usize {
        self.quality.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quality.is_empty()
    }

    pub fn quality(&self) -> &[f64] {
        &self.quality
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    pub fn price(&self) -> &[f64] {
        &self.price
    }

    pub fn mu_base(&self) -> f64 {
        self.mu_base
    }

    pub fn mu_q(&self) -> f64 {
        self.mu_q
    }

    /// Consumer surplus `q - p` if seller `i` is bought.
    pub fn surplus(&self, i: usize) -> f64 {
        self.quality[i] - self.price[i]
    }

    /// Seller `i`'s gross margin `p - c`.
    pub fn margin(&self, i: usize) -> f64 {
        self.price[i] - self.cost[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cost_plus_examples() {
        assert_abs_diff_eq!(cost_plus_price(0.90, 0.15, 0.25, 0.10), 0.49, epsilon = 1e-12);
        assert_abs_diff_eq!(cost_plus_price(0.20, 0.05, 0.25, 0.10), 0.32, epsilon = 1e-12);
        assert_eq!(cost_plus_price(0.0, 0.0, 0.25, 0.10), 0.25);
    }

    #[test]
    fn reference_prices_match_seller_table() {
        let cat = Catalog::reference();
        let expected = [0.49, 0.445, 0.41, 0.375, 0.34, 0.32];
        for (p, e) in cat.price().iter().zip(expected) {
            assert_abs_diff_eq!(*p, e, epsilon = 1e-12);
        }
        for i in 0..cat.len() {
            assert_eq!(cat.price()[i], cat.cost()[i] + 0.25 + 0.10 * cat.quality()[i]);
        }
    }

    #[test]
    fn rejects_unsorted_quality() {
        assert!(Catalog::new(vec![0.5, 0.6], vec![0.1, 0.1]).is_err());
        assert!(Catalog::new(vec![0.5, 0.5], vec![0.1, 0.1]).is_err());
        assert!(Catalog::new(vec![0.5], vec![]).is_err());
    }

    #[test]
    fn interpolated_markets() {
        assert_eq!(Catalog::with_sellers(6).unwrap(), Catalog::reference());
        for n in [4, 10, 18, 36] {
            let cat = Catalog::with_sellers(n).unwrap();
            assert_eq!(cat.len(), n);
            assert_abs_diff_eq!(cat.quality()[0], 0.90, epsilon = 1e-12);
            assert_abs_diff_eq!(cat.quality()[n - 1], 0.20, epsilon = 1e-12);
        }
        assert_eq!(Catalog::with_sellers(3), Err(Error::UnsupportedMarketSize(3)));
    }
}

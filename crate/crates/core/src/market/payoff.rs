use super::catalog::Catalog;
use super::params::PayoffParams;

/// Realized welfare of one transaction.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundPayoffs {
    /// `q_w - p_w`.
    pub consumer_surplus: f64,
    pub platform: f64,
    pub sellers: Vec<f64>,
}

/// Writes seller profits into `sellers` and returns `(cs, platform)`.
///
/// The platform earns its commission on the winner's bid cost plus the take
/// rate on the sale price. The winner keeps `(p - c)(1 - take_rate)` minus
/// its bid cost; every loser pays the smaller per-level participation cost.
pub fn payoffs_into(catalog: &Catalog, bids: &[u8], winner: usize, params: &PayoffParams, sellers: &mut [f64]) -> (f64, f64) {
    let bw = bids[winner] as f64;
    let price = catalog.price()[winner];
    for (i, s) in sellers.iter_mut().enumerate() {
        *s = if i == winner {
            catalog.margin(winner) * (1.0 - params.take_rate) - bw * params.phi_w
        } else {
            -(bids[i] as f64) * params.phi_l
        };
    }
    let platform = bw * params.phi_w * params.kappa + params.take_rate * price;
    (catalog.surplus(winner), platform)
}

pub fn round_payoffs(catalog: &Catalog, bids: &[u8], winner: usize, params: &PayoffParams) -> RoundPayoffs {
    let mut sellers = vec![0.0; catalog.len()];
    let (consumer_surplus, platform) = payoffs_into(catalog, bids, winner, params, &mut sellers);
    RoundPayoffs { consumer_surplus, platform, sellers }
}

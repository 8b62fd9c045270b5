//! Single-round market mechanics: prices, action decoding, ranking, the
//! agent's biased utilities, its softmax choice, and payoffs.
//!
//! Everything here is a pure function of its inputs plus, where sampling is
//! involved, an explicit rng.

mod catalog;
mod choice;
mod decision;
pub mod display;
mod params;
mod payoff;

pub use catalog::{cost_plus_price, Catalog, BASE_MARKUP, QUALITY_PREMIUM};
pub use choice::{
    apply_override, bias_term, choice_distribution, perceived_utilities, sample_winner, softmax_into, utilities_into,
    Display, ListingView, SPONSORED_BID,
};
pub use decision::{
    EndorsementRule, PlatformDecision, SellerDecision, BID_WEIGHT_GRID, MAX_BID, MAX_MANIPULATION, PLATFORM_ACTIONS,
    SELLER_ACTIONS,
};
pub use display::{
    assign_decoy, assign_endorsement, bid_targets, position_visibility, rank_products, ranking_score, TieBreak, TiePriority,
};
pub use params::{BiasParams, ManipulationForm, PayoffParams};
pub use payoff::{payoffs_into, round_payoffs, RoundPayoffs};

/// Closed-form expectations of a single round under a fixed display.
pub mod expected {
    use super::*;
    use crate::error::Result;

    /// Choice probabilities, expected consumer surplus and expected total
    /// seller profit for a display whose sellers all play `sellers`.
    pub fn round_expectation(
        catalog: &Catalog,
        display: &Display,
        sellers: &[SellerDecision],
        bias: &BiasParams,
        payoff: &PayoffParams,
    ) -> Result<(Vec<f64>, f64, f64)> {
        let u = perceived_utilities(catalog, display, sellers, bias);
        let probs = choice_distribution(&u, bias.temperature)?;
        let bids: Vec<u8> = sellers.iter().map(|s| s.bid).collect();
        let mut cs = 0.0;
        let mut profit = 0.0;
        for (w, &p) in probs.iter().enumerate() {
            let r = round_payoffs(catalog, &bids, w, payoff);
            cs += p * r.consumer_surplus;
            profit += p * r.sellers.iter().sum::<f64>();
        }
        Ok((probs, cs, profit))
    }

    /// The fair baseline display: quality ranking, quality badge, no decoy,
    /// honest non-bidding sellers.
    pub fn fair_baseline(catalog: &Catalog, bias: &BiasParams, payoff: &PayoffParams) -> Result<(Vec<f64>, f64, f64)> {
        let n = catalog.len();
        let bids = vec![0; n];
        let ties = TiePriority::by_quality(n);
        let display = Display {
            rank: rank_products(catalog, &bids, 0.0),
            endorsed: display::endorsed_seller(catalog, &bids, EndorsementRule::Quality, &ties),
            decoy_target: None,
        };
        round_expectation(catalog, &display, &vec![SellerDecision::NAIVE; n], bias, payoff)
    }
}

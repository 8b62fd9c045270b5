//! How the platform presents products: ranking, visibility, badge and decoy.

use serde::{Deserialize, Serialize};

use super::catalog::Catalog;
use super::decision::{EndorsementRule, PlatformDecision, MAX_BID};
use crate::error::{Error, Result};

/// Minimum quality for the hybrid badge rule.
pub const HYBRID_QUALITY_THRESHOLD: f64 = 0.5;

/// Scores closer than this are treated as tied.
const SCORE_RESOLUTION: f64 = 1e-9;

/// How exact ties in ranking score, bid or badge eligibility are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Higher quality first, then lower seller index, for ranking and for
    /// bid-based selections alike.
    #[default]
    QualityThenIndex,
    /// Equal ranking scores put the lower-quality seller first. The bid
    /// badge falls back to quality order when bids tie, while the hybrid
    /// badge and the decoy go only to a seller with a positive bid.
    Calibrated,
    /// A fresh uniformly random priority order every round.
    Random,
}

/// Per-round priority used to settle ties: lower value wins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TiePriority(Vec<u32>);

impl TiePriority {
    /// Quality-then-index order. Catalog indices are already sorted by
    /// strictly descending quality, so this is index order.
    pub fn by_quality(n: usize) -> Self {
        Self((0..n as u32).collect())
    }

    /// Reverse index order: the lowest-quality seller wins ties.
    pub fn by_lower_quality(n: usize) -> Self {
        Self((0..n as u32).rev().collect())
    }

    pub fn from_order(priority: Vec<u32>) -> Self {
        Self(priority)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub(crate) fn as_mut_vec(&mut self) -> &mut Vec<u32> {
        &mut self.0
    }
}

fn score_key(score: f64) -> i64 {
    (score / SCORE_RESOLUTION).round() as i64
}

/// `(1 - w) * q_i + w * b_i / 2`.
pub fn ranking_score(quality: f64, bid: u8, bid_weight: f64) -> f64 {
    (1.0 - bid_weight) * quality + bid_weight * (bid as f64 / MAX_BID as f64)
}

/// Writes 1-based display positions into `rank`, reusing `order` as scratch.
pub fn rank_into(
    catalog: &Catalog,
    bids: &[u8],
    bid_weight: f64,
    ties: &TiePriority,
    order: &mut Vec<usize>,
    rank: &mut [usize],
) {
    let q = catalog.quality();
    let pri = ties.as_slice();
    order.clear();
    order.extend(0..q.len());
    order.sort_unstable_by_key(|&i| (-score_key(ranking_score(q[i], bids[i], bid_weight)), pri[i]));
    for (pos, &i) in order.iter().enumerate() {
        rank[i] = pos + 1;
    }
}

/// Display position (1-based) of every seller under bid weight `w`, with
/// ties broken by higher quality and then lower index.
pub fn rank_products(catalog: &Catalog, bids: &[u8], bid_weight: f64) -> Vec<usize> {
    let mut rank = vec![0; catalog.len()];
    rank_into(
        catalog,
        bids,
        bid_weight,
        &TiePriority::by_quality(catalog.len()),
        &mut Vec::with_capacity(catalog.len()),
        &mut rank,
    );
    rank
}

/// Attention paid to display position `rank` in an `n`-product list.
pub fn position_visibility(rank: usize, n: usize) -> Result<f64> {
    if n < 4 {
        return Err(Error::UnsupportedMarketSize(n));
    }
    if rank == 0 || rank > n {
        return Err(Error::InputDomain(format!("rank {rank} not in 1..={n}")));
    }
    Ok(visibility_unchecked(rank, n))
}

#[inline]
pub(crate) fn visibility_unchecked(rank: usize, n: usize) -> f64 {
    match rank {
        1 => 1.0,
        2 => 0.75,
        3 => 0.55,
        r if r == n => 0.55,
        _ => 0.30,
    }
}

/// Index of the highest bidder among `eligible` sellers.
fn top_bidder(bids: &[u8], ties: &TiePriority, eligible: impl Fn(usize) -> bool) -> Option<usize> {
    let pri = ties.as_slice();
    (0..bids.len())
        .filter(|&i| eligible(i))
        .min_by_key(|&i| (std::cmp::Reverse(bids[i]), pri[i]))
}

/// Seller receiving the endorsement badge under `rule`, if any.
pub fn endorsed_seller(catalog: &Catalog, bids: &[u8], rule: EndorsementRule, ties: &TiePriority) -> Option<usize> {
    let q = catalog.quality();
    match rule {
        EndorsementRule::Quality => {
            let pri = ties.as_slice();
            (0..q.len()).min_by(|&a, &b| q[b].total_cmp(&q[a]).then(pri[a].cmp(&pri[b])))
        }
        EndorsementRule::Bid => top_bidder(bids, ties, |_| true),
        EndorsementRule::Hybrid => top_bidder(bids, ties, |i| q[i] >= HYBRID_QUALITY_THRESHOLD),
        EndorsementRule::None => None,
    }
}

/// Badge flags under `rule` with quality-then-index tie-breaking.
pub fn assign_endorsement(catalog: &Catalog, bids: &[u8], rule: EndorsementRule) -> Vec<bool> {
    let mut flags = vec![false; catalog.len()];
    if let Some(i) = endorsed_seller(catalog, bids, rule, &TiePriority::by_quality(catalog.len())) {
        flags[i] = true;
    }
    flags
}

/// Seller receiving the decoy boost: the highest bidder when a decoy is
/// placed. All-zero bids still produce a target through the tie-break.
pub fn decoy_seller(bids: &[u8], decoy: bool, ties: &TiePriority) -> Option<usize> {
    if decoy {
        top_bidder(bids, ties, |_| true)
    } else {
        None
    }
}

/// Badge and decoy targets for one round under `policy`.
pub fn bid_targets(
    catalog: &Catalog,
    bids: &[u8],
    decision: &PlatformDecision,
    policy: TieBreak,
    ties: &TiePriority,
) -> (Option<usize>, Option<usize>) {
    let mut endorsed = endorsed_seller(catalog, bids, decision.endorsement, ties);
    let mut decoy = decoy_seller(bids, decision.decoy, ties);
    if policy == TieBreak::Calibrated {
        let bidding = |s: Option<usize>| s.filter(|&i| bids[i] > 0);
        if decision.endorsement == EndorsementRule::Hybrid {
            endorsed = bidding(endorsed);
        }
        decoy = bidding(decoy);
    }
    (endorsed, decoy)
}

pub fn assign_decoy(bids: &[u8], decoy: bool) -> Vec<bool> {
    let mut flags = vec![false; bids.len()];
    if let Some(i) = decoy_seller(bids, decoy, &TiePriority::by_quality(bids.len())) {
        flags[i] = true;
    }
    flags
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn ranking_examples() {
        let cat = Catalog::reference();
        assert_eq!(rank_products(&cat, &[2, 0, 1, 2, 0, 1], 0.0), vec![1, 2, 3, 4, 5, 6]);
        let r = rank_products(&cat, &[0, 0, 2, 0, 0, 0], 1.0);
        assert_eq!(r[2], 1);

        let two = Catalog::new(vec![0.9, 0.2], vec![0.15, 0.05]).unwrap();
        let w = 2.0 / 3.0;
        assert_abs_diff_eq!(ranking_score(0.9, 0, w), 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(ranking_score(0.2, 2, w), 0.7333333333333, epsilon = 1e-12);
        assert_eq!(rank_products(&two, &[0, 2], w), vec![2, 1]);
    }

    #[test]
    fn ties_fall_back_to_quality() {
        let cat = Catalog::reference();
        // w = 1 with equal bids: every score ties.
        assert_eq!(rank_products(&cat, &[1; 6], 1.0), vec![1, 2, 3, 4, 5, 6]);
        // w = 1/3: seller 4 (q=0.45, b=0) and seller 6 (q=0.20, b=1) both score 0.3.
        let r = rank_products(&cat, &[0, 0, 0, 0, 0, 1], 1.0 / 3.0);
        assert!(r[3] < r[5]);
        let reversed = TiePriority::from_order(vec![5, 4, 3, 2, 1, 0]);
        let mut rank = vec![0; 6];
        rank_into(&cat, &[1; 6], 1.0, &reversed, &mut Vec::new(), &mut rank);
        assert_eq!(rank, vec![6, 5, 4, 3, 2, 1]);
    }

    #[test]
    fn visibility_profile() {
        assert_eq!(position_visibility(1, 6).unwrap(), 1.0);
        assert_eq!(position_visibility(2, 6).unwrap(), 0.75);
        assert_eq!(position_visibility(3, 6).unwrap(), 0.55);
        assert_eq!(position_visibility(4, 6).unwrap(), 0.30);
        assert_eq!(position_visibility(5, 6).unwrap(), 0.30);
        assert_eq!(position_visibility(6, 6).unwrap(), 0.55);
        assert_eq!(position_visibility(1, 3), Err(Error::UnsupportedMarketSize(3)));
        assert!(position_visibility(7, 6).is_err());
    }

    #[test]
    fn endorsement_rules() {
        let cat = Catalog::reference();
        let zero = [0u8; 6];
        assert_eq!(assign_endorsement(&cat, &zero, EndorsementRule::Quality), vec![true, false, false, false, false, false]);
        assert_eq!(assign_endorsement(&cat, &zero, EndorsementRule::None), vec![false; 6]);
        let hybrid = assign_endorsement(&cat, &[0, 0, 2, 0, 0, 2], EndorsementRule::Hybrid);
        assert_eq!(hybrid, vec![false, false, true, false, false, false]);
        let bid = assign_endorsement(&cat, &[0, 1, 0, 0, 0, 2], EndorsementRule::Bid);
        assert_eq!(bid, vec![false, false, false, false, false, true]);
        // No seller with q >= 0.5.
        let low = Catalog::new(vec![0.45, 0.3, 0.2, 0.1], vec![0.1; 4]).unwrap();
        assert_eq!(assign_endorsement(&low, &[2, 1, 0, 0], EndorsementRule::Hybrid), vec![false; 4]);
    }

    #[test]
    fn decoy_targets() {
        assert_eq!(assign_decoy(&[2, 2, 2, 2, 2, 2], false), vec![false; 6]);
        assert_eq!(assign_decoy(&[0, 1, 0, 2, 0, 0], true), vec![false, false, false, true, false, false]);
        assert_eq!(assign_decoy(&[0; 6], true), vec![true, false, false, false, false, false]);
    }

    #[test]
    fn calibrated_targets_need_a_bid() {
        let cat = Catalog::reference();
        let ties = TiePriority::by_quality(6);
        let pd = |endorsement, decoy| PlatformDecision { bid_weight: 1.0, endorsement, decoy };
        let zero = [0u8; 6];
        let t = |bids: &[u8], d, p| bid_targets(&cat, bids, &d, p, &ties);
        assert_eq!(t(&zero, pd(EndorsementRule::Bid, true), TieBreak::Calibrated), (Some(0), None));
        assert_eq!(t(&zero, pd(EndorsementRule::Hybrid, true), TieBreak::Calibrated), (None, None));
        assert_eq!(t(&zero, pd(EndorsementRule::Hybrid, true), TieBreak::QualityThenIndex), (Some(0), Some(0)));
        let bids = [0, 0, 1, 0, 0, 2];
        assert_eq!(t(&bids, pd(EndorsementRule::Hybrid, true), TieBreak::Calibrated), (Some(2), Some(5)));
        assert_eq!(t(&bids, pd(EndorsementRule::Quality, false), TieBreak::Calibrated), (Some(0), None));
    }

    #[test]
    fn lower_quality_priority_reverses_ties() {
        let cat = Catalog::reference();
        let mut rank = vec![0; 6];
        rank_into(&cat, &[0; 6], 1.0, &TiePriority::by_lower_quality(6), &mut Vec::new(), &mut rank);
        assert_eq!(rank, vec![6, 5, 4, 3, 2, 1]);
        rank_into(&cat, &[0; 6], 2.0 / 3.0, &TiePriority::by_lower_quality(6), &mut Vec::new(), &mut rank);
        assert_eq!(rank, vec![1, 2, 3, 4, 5, 6]);
    }

    proptest! {
        #[test]
        fn rank_is_permutation(bids in proptest::collection::vec(0u8..=2, 6), w_idx in 0usize..4) {
            let cat = Catalog::reference();
            let w = crate::market::BID_WEIGHT_GRID[w_idx];
            let mut r = rank_products(&cat, &bids, w);
            if w == 0.0 {
                prop_assert_eq!(&r, &vec![1, 2, 3, 4, 5, 6]);
            }
            r.sort_unstable();
            prop_assert_eq!(r, vec![1, 2, 3, 4, 5, 6]);
        }
    }
}

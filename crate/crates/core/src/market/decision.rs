use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PLATFORM_ACTIONS: usize = 32;
pub const SELLER_ACTIONS: usize = 12;
pub const BID_WEIGHT_GRID: [f64; 4] = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
pub const MAX_MANIPULATION: u8 = 3;
pub const MAX_BID: u8 = 2;

/// Who receives the platform's endorsement badge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndorsementRule {
    /// Highest-quality seller.
    Quality,
    /// Highest bidder.
    Bid,
    /// Highest bidder among sellers with quality of at least 0.5.
    Hybrid,
    None,
}

impl EndorsementRule {
    pub const ALL: [EndorsementRule; 4] = [Self::Quality, Self::Bid, Self::Hybrid, Self::None];

    fn code(self) -> usize {
        match self {
            Self::Quality => 0,
            Self::Bid => 1,
            Self::Hybrid => 2,
            Self::None => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlatformDecision {
    /// Weight on normalized bids in the ranking score. Learned decisions use
    /// the four-point grid; fixed platforms may use any value in `[0, 1]`.
    pub bid_weight: f64,
    pub endorsement: EndorsementRule,
    pub decoy: bool,
}

impl PlatformDecision {
    /// Quality ranking, quality badge, no decoy.
    pub const FAIR: PlatformDecision = PlatformDecision {
        bid_weight: 0.0,
        endorsement: EndorsementRule::Quality,
        decoy: false,
    };

    pub fn decode(action: usize) -> Result<Self> {
        if action >= PLATFORM_ACTIONS {
            return Err(Error::InputDomain(format!("platform action {action} not in 0..32")));
        }
        Ok(Self {
            bid_weight: BID_WEIGHT_GRID[action / 8],
            endorsement: EndorsementRule::ALL[(action / 2) % 4],
            decoy: action % 2 == 1,
        })
    }

    /// Inverse of [`decode`](Self::decode); `None` when the bid weight is off
    /// the grid.
    pub fn encode(&self) -> Option<usize> {
        let w = BID_WEIGHT_GRID.iter().position(|&g| g == self.bid_weight)?;
        Some(w * 8 + self.endorsement.code() * 2 + usize::from(self.decoy))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct SellerDecision {
    pub manipulation: u8,
    pub bid: u8,
}

impl SellerDecision {
    pub const NAIVE: SellerDecision = SellerDecision { manipulation: 0, bid: 0 };

    pub fn new(manipulation: u8, bid: u8) -> Result<Self> {
        if manipulation > MAX_MANIPULATION || bid > MAX_BID {
            return Err(Error::InputDomain(format!(
                "seller decision (m={manipulation}, b={bid}) outside m<=3, b<=2"
            )));
        }
        Ok(Self { manipulation, bid })
    }

    pub fn decode(action: usize) -> Result<Self> {
        if action >= SELLER_ACTIONS {
            return Err(Error::InputDomain(format!("seller action {action} not in 0..12")));
        }
        Ok(Self {
            manipulation: (action / 3) as u8,
            bid: (action % 3) as u8,
        })
    }

    pub fn encode(&self) -> usize {
        self.manipulation as usize * 3 + self.bid as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn platform_examples() {
        assert_eq!(PlatformDecision::decode(0).unwrap(), PlatformDecision::FAIR);
        let d = PlatformDecision::decode(13).unwrap();
        assert_eq!(d.bid_weight, 1.0 / 3.0);
        assert_eq!(d.endorsement, EndorsementRule::Hybrid);
        assert!(d.decoy);
        let d = PlatformDecision::decode(31).unwrap();
        assert_eq!((d.bid_weight, d.endorsement, d.decoy), (1.0, EndorsementRule::None, true));
        assert!(matches!(PlatformDecision::decode(32), Err(Error::InputDomain(_))));
    }

    #[test]
    fn seller_examples() {
        assert_eq!(SellerDecision::decode(0).unwrap(), SellerDecision::NAIVE);
        assert_eq!(SellerDecision::decode(7).unwrap(), SellerDecision { manipulation: 2, bid: 1 });
        assert_eq!(SellerDecision::decode(11).unwrap(), SellerDecision { manipulation: 3, bid: 2 });
        assert!(SellerDecision::decode(12).is_err());
        assert!(SellerDecision::new(4, 0).is_err());
    }

    #[test]
    fn decoders_are_bijections() {
        let mut seen = HashSet::new();
        for a in 0..PLATFORM_ACTIONS {
            let d = PlatformDecision::decode(a).unwrap();
            assert_eq!(d.encode(), Some(a));
            let w = BID_WEIGHT_GRID.iter().position(|&g| g == d.bid_weight).unwrap();
            seen.insert((w, d.endorsement, d.decoy));
        }
        assert_eq!(seen.len(), 4 * 4 * 2);

        let seen: HashSet<_> = (0..SELLER_ACTIONS)
            .map(|a| {
                let d = SellerDecision::decode(a).unwrap();
                assert_eq!(d.encode(), a);
                d
            })
            .collect();
        assert_eq!(seen.len(), 4 * 3);
    }
}

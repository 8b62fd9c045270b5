//! The AI agent's perceived utilities and its softmax choice.

use rand::Rng;

use super::catalog::Catalog;
use super::decision::SellerDecision;
use super::display::visibility_unchecked;
use super::params::{BiasParams, ManipulationForm};
use crate::error::{Error, Result};

/// Everything about one seller's listing that the agent's biases react to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ListingView {
    /// 1-based display position.
    pub rank: usize,
    pub endorsed: bool,
    pub sponsored: bool,
    pub decoy_target: bool,
    pub manipulation: u8,
}

/// Bid levels at or above this carry the "Sponsored" label.
pub const SPONSORED_BID: u8 = 1;

/// Total bias bonus `B_i` for one listing in an `n`-product display.
pub fn bias_term(view: &ListingView, n: usize, params: &BiasParams) -> f64 {
    let r = view.rank;
    let mut b = 0.0;
    if r <= 3 {
        b += params.beta_pos;
    }
    if r == 1 {
        b += params.beta_prime;
    }
    if r == n {
        b += params.beta_rec;
    }
    if view.endorsed {
        b += params.beta_end;
    }
    if view.sponsored {
        b += params.beta_spon;
    }
    if view.decoy_target {
        b += params.beta_dec;
    }
    let m = view.manipulation as f64;
    let nu = visibility_unchecked(r, n);
    b += match params.manipulation_form {
        ManipulationForm::Multiplicative => params.beta_manip * m * ((1.0 - params.eta) + params.eta * nu),
        ManipulationForm::Additive => params.beta_manip * m + params.eta * nu,
    };
    b
}

/// The ranked, badged display a round's choice is made from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Display {
    pub rank: Vec<usize>,
    pub endorsed: Option<usize>,
    pub decoy_target: Option<usize>,
}

impl Display {
    pub fn view(&self, i: usize, seller: &SellerDecision) -> ListingView {
        ListingView {
            rank: self.rank[i],
            endorsed: self.endorsed == Some(i),
            sponsored: seller.bid >= SPONSORED_BID,
            decoy_target: self.decoy_target == Some(i),
            manipulation: seller.manipulation,
        }
    }
}

/// `U_i = alpha * q_i - beta * p_i + B_i`, written into `out`.
pub fn utilities_into(catalog: &Catalog, display: &Display, sellers: &[SellerDecision], params: &BiasParams, out: &mut [f64]) {
    let n = catalog.len();
    let (q, p) = (catalog.quality(), catalog.price());
    for i in 0..n {
        let view = display.view(i, &sellers[i]);
        out[i] = params.alpha * q[i] - params.beta * p[i] + bias_term(&view, n, params);
    }
}

pub fn perceived_utilities(catalog: &Catalog, display: &Display, sellers: &[SellerDecision], params: &BiasParams) -> Vec<f64> {
    let mut out = vec![0.0; catalog.len()];
    utilities_into(catalog, display, sellers, params, &mut out);
    out
}

/// Softmax of `utilities / temperature` written into `out`, with the maximum
/// subtracted before exponentiating.
pub fn softmax_into(utilities: &[f64], temperature: f64, out: &mut [f64]) -> Result<()> {
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(Error::NumericInput(format!("temperature {temperature}")));
    }
    let mut max = f64::NEG_INFINITY;
    for &u in utilities {
        if !u.is_finite() {
            return Err(Error::NumericInput(format!("utility {u}")));
        }
        max = max.max(u);
    }
    let mut total = 0.0;
    for (o, &u) in out.iter_mut().zip(utilities) {
        *o = ((u - max) / temperature).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
    Ok(())
}

pub fn choice_distribution(utilities: &[f64], temperature: f64) -> Result<Vec<f64>> {
    let mut out = vec![0.0; utilities.len()];
    softmax_into(utilities, temperature, &mut out)?;
    Ok(out)
}

/// Draws an index with probability `probs[i]` by inverting the CDF with one
/// uniform draw.
pub fn sample_winner<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> Result<usize> {
    let total: f64 = probs.iter().sum();
    if !(total.is_finite() && total > 0.0) || probs.iter().any(|&p| p < 0.0) {
        return Err(Error::NumericInput("choice probabilities have no valid mass".into()));
    }
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = i;
            if u < acc {
                return Ok(i);
            }
        }
    }
    Ok(last_positive)
}

/// With probability `override_p` the consumer ignores the agent and buys
/// the highest-quality product (index 0). No randomness is consumed when
/// `override_p` is zero.
pub fn apply_override<R: Rng + ?Sized>(winner: usize, override_p: f64, rng: &mut R) -> usize {
    if override_p > 0.0 && rng.random::<f64>() < override_p {
        0
    } else {
        winner
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::display::{rank_products, TiePriority};
    use crate::market::EndorsementRule;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn view(rank: usize) -> ListingView {
        ListingView { rank, ..Default::default() }
    }

    #[test]
    fn bias_examples() {
        let p = BiasParams::default();
        let top = ListingView { endorsed: true, ..view(1) };
        assert_abs_diff_eq!(bias_term(&top, 6, &p), 2.50, epsilon = 1e-12);
        let mid = ListingView { manipulation: 2, ..view(4) };
        assert_abs_diff_eq!(bias_term(&mid, 6, &p), 0.51, epsilon = 1e-12);
        let add = BiasParams { manipulation_form: ManipulationForm::Additive, ..p };
        assert_abs_diff_eq!(bias_term(&mid, 6, &add), 1.21, epsilon = 1e-12);
        let spon = ListingView { sponsored: true, decoy_target: true, ..view(6) };
        assert_abs_diff_eq!(bias_term(&spon, 6, &p), 0.15 - 0.35 + 0.40, epsilon = 1e-12);
    }

    #[test]
    fn debiased_bias_is_zero_everywhere() {
        for form in [ManipulationForm::Multiplicative, ManipulationForm::Additive] {
            let p = BiasParams { manipulation_form: form, ..Default::default() }.debiased();
            for rank in 1..=6 {
                for flags in 0..8u8 {
                    for m in 0..=3 {
                        let v = ListingView {
                            rank,
                            endorsed: flags & 1 != 0,
                            sponsored: flags & 2 != 0,
                            decoy_target: flags & 4 != 0,
                            manipulation: m,
                        };
                        assert_eq!(bias_term(&v, 6, &p), 0.0);
                    }
                }
            }
        }
    }

    fn baseline_display() -> (Catalog, Display, Vec<SellerDecision>) {
        let cat = Catalog::reference();
        let bids = [0; 6];
        let display = Display {
            rank: rank_products(&cat, &bids, 0.0),
            endorsed: crate::market::display::endorsed_seller(&cat, &bids, EndorsementRule::Quality, &TiePriority::by_quality(6)),
            decoy_target: None,
        };
        (cat, display, vec![SellerDecision::NAIVE; 6])
    }

    #[test]
    fn utility_examples() {
        let (cat, mut display, sellers) = baseline_display();
        display.endorsed = None;
        let u = perceived_utilities(&cat, &display, &sellers, &BiasParams::default());
        assert_abs_diff_eq!(u[0], 0.135 - 0.147 + 1.30, epsilon = 1e-12);
        let u = perceived_utilities(&cat, &display, &sellers, &BiasParams::default().debiased());
        assert_abs_diff_eq!(u[0], -0.012, epsilon = 1e-12);
        let zero = BiasParams { alpha: 0.0, beta: 0.0, ..BiasParams::default().debiased() };
        assert!(perceived_utilities(&cat, &display, &sellers, &zero).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn softmax_examples() {
        let p = choice_distribution(&[0.7; 6], 1.0).unwrap();
        for x in p {
            assert_abs_diff_eq!(x, 1.0 / 6.0, epsilon = 1e-15);
        }
        let p = choice_distribution(&[3f64.ln(), 0.0], 1.0).unwrap();
        assert_abs_diff_eq!(p[0], 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.25, epsilon = 1e-15);
        assert!(choice_distribution(&[f64::NAN, 0.0], 1.0).is_err());
        assert!(choice_distribution(&[1.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn baseline_top_seller_probability() {
        let (cat, display, sellers) = baseline_display();
        let u = perceived_utilities(&cat, &display, &sellers, &BiasParams::default());
        let p = choice_distribution(&u, 1.0).unwrap();
        // Independent evaluation of the six baseline utilities.
        let hand = [2.488, 0.879, 0.867, -0.045, -0.057, 0.084];
        let z: f64 = hand.iter().map(|x: &f64| x.exp()).sum();
        assert_abs_diff_eq!(p[0], hand[0].exp() / z, epsilon = 1e-12);
        assert_abs_diff_eq!(p[0], 0.607, epsilon = 1e-3);
    }

    #[test]
    fn sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut certain = vec![0.0; 6];
        certain[0] = 1.0;
        for _ in 0..1000 {
            assert_eq!(sample_winner(&certain, &mut rng).unwrap(), 0);
        }
        assert!(sample_winner(&[0.0; 6], &mut rng).is_err());

        let uniform = [1.0 / 6.0; 6];
        let draws = 60_000;
        let mut counts = [0usize; 6];
        for _ in 0..draws {
            counts[sample_winner(&uniform, &mut rng).unwrap()] += 1;
        }
        let sd = (draws as f64 * (1.0 / 6.0) * (5.0 / 6.0)).sqrt();
        for c in counts {
            assert!((c as f64 - draws as f64 / 6.0).abs() < 3.0 * sd, "{counts:?}");
        }

        let seq = |seed| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            (0..100).map(|_| sample_winner(&uniform, &mut r).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(seq(3), seq(3));
    }

    #[test]
    fn override_rates() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        assert!((0..1000).all(|_| apply_override(4, 0.0, &mut rng) == 4));
        assert!((0..1000).all(|_| apply_override(4, 1.0, &mut rng) == 0));
        let n = 10_000;
        let hits = (0..n).filter(|_| apply_override(5, 0.5, &mut rng) == 0).count();
        let sd = (n as f64 * 0.25).sqrt();
        assert!((hits as f64 - n as f64 * 0.5).abs() < 3.0 * sd);
    }
}

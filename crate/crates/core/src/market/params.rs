use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How seller manipulation interacts with display position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ManipulationForm {
    /// Manipulation is weighted by `(1 - eta) + eta * visibility(rank)`.
    #[default]
    Multiplicative,
    /// Manipulation and visibility contribute independently:
    /// `beta_manip * m + eta * visibility(rank)`.
    Additive,
}

/// Coefficients of the AI shopping agent's perceived utility.
///
/// `alpha` and `beta` form the rational quality/price part; every other
/// coefficient is a bias channel. `beta_spon` is a penalty and therefore
/// non-positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BiasParams {
    pub alpha: f64,
    pub beta: f64,
    pub beta_prime: f64,
    pub beta_pos: f64,
    pub beta_rec: f64,
    pub beta_end: f64,
    pub beta_spon: f64,
    pub beta_manip: f64,
    pub eta: f64,
    pub beta_dec: f64,
    pub temperature: f64,
    pub manipulation_form: ManipulationForm,
}

impl Default for BiasParams {
    fn default() -> Self {
        Self {
            alpha: 0.15,
            beta: 0.30,
            beta_prime: 0.40,
            beta_pos: 0.90,
            beta_rec: 0.15,
            beta_end: 1.20,
            beta_spon: -0.35,
            beta_manip: 0.50,
            eta: 0.70,
            beta_dec: 0.40,
            temperature: 1.0,
            manipulation_form: ManipulationForm::Multiplicative,
        }
    }
}

impl BiasParams {
    /// Same agent with every bias channel switched off. Quality weight,
    /// price sensitivity and temperature are kept.
    ///
    /// `eta` is zeroed as well, since under the additive form it is a
    /// stand-alone visibility bonus.
    pub fn debiased(&self) -> Self {
        Self {
            beta_prime: 0.0,
            beta_pos: 0.0,
            beta_rec: 0.0,
            beta_end: 0.0,
            beta_spon: 0.0,
            beta_manip: 0.0,
            eta: 0.0,
            beta_dec: 0.0,
            ..*self
        }
    }

    /// Multiplies every bias coefficient (not `eta`) by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            beta_prime: self.beta_prime * factor,
            beta_pos: self.beta_pos * factor,
            beta_rec: self.beta_rec * factor,
            beta_end: self.beta_end * factor,
            beta_spon: self.beta_spon * factor,
            beta_manip: self.beta_manip * factor,
            beta_dec: self.beta_dec * factor,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.alpha,
            self.beta,
            self.beta_prime,
            self.beta_pos,
            self.beta_rec,
            self.beta_end,
            self.beta_spon,
            self.beta_manip,
            self.eta,
            self.beta_dec,
            self.temperature,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Configuration("bias parameters must be finite".into()));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::Configuration(format!("eta {} outside [0, 1]", self.eta)));
        }
        if self.temperature <= 0.0 {
            return Err(Error::Configuration("temperature must be positive".into()));
        }
        if self.beta_spon > 0.0 {
            return Err(Error::Configuration("beta_spon must be non-positive".into()));
        }
        let non_negative = [
            ("beta_prime", self.beta_prime),
            ("beta_pos", self.beta_pos),
            ("beta_rec", self.beta_rec),
            ("beta_end", self.beta_end),
            ("beta_manip", self.beta_manip),
            ("beta_dec", self.beta_dec),
        ];
        for (name, v) in non_negative {
            if v < 0.0 {
                return Err(Error::Configuration(format!("{name} must be non-negative")));
            }
        }
        Ok(())
    }
}

/// Platform and seller payoff coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PayoffParams {
    /// Platform's commission on the winner's bid cost.
    pub kappa: f64,
    /// Winner's cost per bid level.
    pub phi_w: f64,
    /// Loser's cost per bid level.
    pub phi_l: f64,
    /// Fraction of the transaction price taken by the platform.
    pub take_rate: f64,
}

impl Default for PayoffParams {
    fn default() -> Self {
        Self {
            kappa: 0.50,
            phi_w: 0.30,
            phi_l: 0.02,
            take_rate: 0.0,
        }
    }
}

impl PayoffParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.kappa) {
            return Err(Error::Configuration("kappa must lie in [0, 1]".into()));
        }
        if !(self.phi_w >= self.phi_l && self.phi_l >= 0.0) {
            return Err(Error::Configuration("require phi_w >= phi_l >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.take_rate) {
            return Err(Error::Configuration("take_rate must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        BiasParams::default().validate().unwrap();
        PayoffParams::default().validate().unwrap();
    }

    #[test]
    fn debiased_keeps_rational_part() {
        let p = BiasParams::default().debiased();
        assert_eq!((p.alpha, p.beta, p.temperature), (0.15, 0.30, 1.0));
        assert_eq!(p.beta_pos + p.beta_prime + p.beta_rec + p.beta_end, 0.0);
        assert_eq!(p.beta_spon + p.beta_manip + p.beta_dec + p.eta, 0.0);
        p.validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let mut p = BiasParams::default();
        p.eta = 1.5;
        assert!(p.validate().is_err());
        let mut p = BiasParams::default();
        p.beta_spon = 0.1;
        assert!(p.validate().is_err());
        let mut p = BiasParams::default();
        p.temperature = 0.0;
        assert!(p.validate().is_err());
        let pay = PayoffParams { phi_l: 0.5, ..Default::default() };
        assert!(pay.validate().is_err());
    }
}

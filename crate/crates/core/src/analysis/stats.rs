use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub fn std_dev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)).sqrt()
}

fn spread(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData(format!("need at least 2 samples, got {}", samples.len())));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::NumericInput("non-finite sample".into()));
    }
    let m = mean(samples);
    let sd = std_dev(samples);
    if !(sd > 0.0) || sd < 1e-12 * m.abs() {
        return Err(Error::DegenerateSample("samples have zero variance".into()));
    }
    Ok((m, sd))
}

/// One-sample effect size against zero: `mean / sd`.
pub fn cohens_d(samples: &[f64]) -> Result<f64> {
    let (m, sd) = spread(samples)?;
    Ok(m / sd)
}

/// One-sample two-sided t test against zero with a Student-t confidence
/// interval for the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub se: f64,
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
    pub level: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

pub fn t_test_and_ci(samples: &[f64], level: f64) -> Result<TTest> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InputDomain(format!("confidence level {level} not in (0, 1)")));
    }
    let (m, sd) = spread(samples)?;
    let n = samples.len();
    let df = n as f64 - 1.0;
    let se = sd / (n as f64).sqrt();
    let t = m / se;
    let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
    let p_value = (2.0 * dist.sf(t.abs())).min(1.0);
    let crit = dist.inverse_cdf(0.5 + level / 2.0);
    Ok(TTest { n, mean: m, sd, se, t, df, p_value, level, ci_low: m - crit * se, ci_high: m + crit * se })
}

/// Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Pairing(format!("lengths {} and {}", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(Error::InsufficientData("correlation needs at least 3 points".into()));
    }
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let tiny = |v: &[f64]| f64::EPSILON * v.iter().map(|a| a * a).sum::<f64>();
    if sxx <= tiny(x) || syy <= tiny(y) {
        return Err(Error::DegenerateSample("correlation input has zero variance".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

//! Conjugate Gamma–Exponential inference for the departure rate.
//!
//! Interdeparture times of a stable M/G/1 queue in equilibrium are i.i.d.
//! `Exp(lambda)`. With a `Gamma(a, b)` prior in the shape/rate
//! parametrization the posterior after `d_1 .. d_n` is `Gamma(a + n, b + sum d)`.

use crate::error::{Error, Result};

/// Shape/rate pair of a Gamma law on the departure rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaPosterior {
    pub a: f64,
    pub b: f64,
}

impl Default for GammaPosterior {
    fn default() -> Self {
        Self { a: 1.0, b: 1.0 }
    }
}

impl GammaPosterior {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0 && b.is_finite() && b > 0.0) {
            return Err(Error::InvalidParameter(format!("gamma parameters must be positive, got ({a}, {b})")));
        }
        Ok(Self { a, b })
    }

    /// Conjugate update with interdeparture times; all must be positive.
    pub fn update(&self, durations: &[f64]) -> Result<Self> {
        let mut sum = 0.0;
        for (index, &value) in durations.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::NonPositiveDuration { index, value });
            }
            sum += value;
        }
        Ok(Self { a: self.a + durations.len() as f64, b: self.b + sum })
    }

    pub fn mean(&self) -> f64 {
        self.a / self.b
    }

    pub fn variance(&self) -> f64 {
        self.a / (self.b * self.b)
    }

    /// Lomax density of the next interdeparture time, `a b^a / (b + x)^(a+1)`.
    pub fn predictive_density(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::InvalidParameter(format!("duration must be non-negative, got {x}")));
        }
        let ln = self.a.ln() + self.a * self.b.ln() - (self.a + 1.0) * (self.b + x).ln();
        Ok(ln.exp())
    }

    /// Mean of the next interdeparture time, `b / (a - 1)`; undefined for `a <= 1`.
    pub fn predictive_mean(&self) -> Result<f64> {
        if self.a <= 1.0 {
            return Err(Error::UndefinedMoment(format!("predictive mean needs shape > 1, have {}", self.a)));
        }
        Ok(self.b / (self.a - 1.0))
    }

    /// Upper bound on the posterior mass outside `[target - eps, target + eps]`,
    /// by Chebyshev around the posterior mean (valid once the mean is within
    /// `eps` of `target`).
    pub fn mass_outside_bound(&self, target: f64, eps: f64) -> f64 {
        let slack = eps - (self.mean() - target).abs();
        if slack <= 0.0 {
            return 1.0;
        }
        (self.variance() / (slack * slack)).min(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_empty_update_is_identity() {
        let p = GammaPosterior::new(2.0, 1.0).unwrap();
        assert_eq!(p.update(&[]).unwrap(), p);
    }

    #[test]
    fn test_update_formula() {
        let p = GammaPosterior::new(2.0, 1.0).unwrap().update(&[0.5, 1.5]).unwrap();
        assert_eq!(p, GammaPosterior { a: 4.0, b: 3.0 });
        assert!((p.mean() - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn test_unit_prior_moments() {
        let p = GammaPosterior::default();
        assert_eq!(p.mean(), 1.0);
        assert_eq!(p.variance(), 1.0);
    }

    #[test]
    fn test_rejects_non_positive_durations() {
        let p = GammaPosterior::default();
        assert!(matches!(p.update(&[1.0, 0.0]), Err(Error::NonPositiveDuration { index: 1, .. })));
        assert!(p.update(&[-0.1]).is_err());
        assert!(p.update(&[f64::NAN]).is_err());
    }

    #[test]
    fn test_rejects_bad_parameters() {
        assert!(GammaPosterior::new(0.0, 1.0).is_err());
        assert!(GammaPosterior::new(1.0, -1.0).is_err());
    }

    #[test]
    fn test_predictive_density_at_zero() {
        let prior = GammaPosterior::new(2.0, 1.0).unwrap();
        let post = prior.update(&[0.5, 1.5]).unwrap();
        // (a + n) / (b + sum d)
        assert!((post.predictive_density(0.0).unwrap() - 4.0 / 3.0).abs() < 1e-14);
        assert!(post.predictive_density(-1.0).is_err());
    }

    #[test]
    fn test_predictive_mean_after_one_observation() {
        let (a, b, d1) = (2.5, 0.7, 1.3);
        let post = GammaPosterior::new(a, b).unwrap().update(&[d1]).unwrap();
        assert!((post.predictive_mean().unwrap() - (d1 / a + b / a)).abs() < 1e-14);
    }

    #[test]
    fn test_predictive_mean_undefined_for_small_shape() {
        assert!(matches!(GammaPosterior::new(1.0, 2.0).unwrap().predictive_mean(), Err(Error::UndefinedMoment(_))));
    }
}

//! Laws of `A_S`, the number of arrivals during one service, seen through
//! their pmf and probability generating function.
//!
//! Every row of the embedded chain's transition matrix is a shifted copy of
//! this law, so the posterior, the prior base measure and the exact law of a
//! known queue all implement [`ArrivalLaw`] and plug into the same estimators.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Geometric, Poisson};
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};
use crate::service::ServiceDist;

/// Slack kept inside a finite radius of convergence.
pub const DOMAIN_SLACK: f64 = 1e-9;

pub trait ArrivalLaw {
    fn prob(&self, k: u64) -> f64;

    /// Errors when `z` is outside the region where [`pgf`](Self::pgf) is defined.
    fn check_domain(&self, z: f64) -> Result<()>;

    /// `a(z) = sum_k z^k P(k)`.
    fn pgf(&self, z: f64) -> Result<f64>;

    /// `a'(z)`, evaluated term-wise or in closed form.
    fn pgf_deriv(&self, z: f64) -> Result<f64>;

    /// `sum_k k P(k)` accumulated over the pmf (with analytic tails where the
    /// support is unbounded).
    fn mean(&self) -> f64;

    /// Human-readable description of the pgf domain.
    fn domain_note(&self) -> String;
}

/// Prior guess `c_0` for the law of `A_S`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BasePmf {
    /// `c_0(k) = (1 - p) p^k`.
    Geometric {
        p: f64,
    },
    Poisson {
        theta: f64,
    },
}

impl BasePmf {
    pub fn geometric(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter(format!("geometric base needs p in (0, 1), got {p}")));
        }
        Ok(BasePmf::Geometric { p })
    }

    pub fn poisson(theta: f64) -> Result<Self> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(Error::InvalidParameter(format!("poisson base needs theta > 0, got {theta}")));
        }
        Ok(BasePmf::Poisson { theta })
    }

    /// Radius of convergence of the pgf series, if finite.
    pub fn radius(&self) -> Option<f64> {
        match self {
            BasePmf::Geometric { p } => Some(1.0 / p),
            BasePmf::Poisson { .. } => None,
        }
    }

    /// `sum_{k > cutoff} c_0(k)`.
    pub fn tail_mass(&self, cutoff: u64) -> f64 {
        match *self {
            BasePmf::Geometric { p } => p.powf(cutoff as f64 + 1.0),
            BasePmf::Poisson { theta } => poisson_tail(theta, cutoff),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match *self {
            // rand_distr counts failures before a success of probability 1 - p
            BasePmf::Geometric { p } => Geometric::new(1.0 - p).expect("validated p").sample(rng),
            BasePmf::Poisson { theta } => Poisson::new(theta).expect("validated theta").sample(rng) as u64,
        }
    }
}

/// `geom:<p>` or `pois:<theta>`.
impl fmt::Display for BasePmf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasePmf::Geometric { p } => write!(f, "geom:{p}"),
            BasePmf::Poisson { theta } => write!(f, "pois:{theta}"),
        }
    }
}

impl FromStr for BasePmf {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("base must be geom:<p> or pois:<theta>, got {s:?}"));
        let (family, value) = s.split_once(':').ok_or_else(bad)?;
        let value: f64 = value.trim().parse().map_err(|_| bad())?;
        match family.trim() {
            "geom" => BasePmf::geometric(value),
            "pois" => BasePmf::poisson(value),
            _ => Err(bad()),
        }
    }
}

fn poisson_pmf(theta: f64, k: u64) -> f64 {
    (-theta + k as f64 * theta.ln() - ln_factorial(k)).exp()
}

/// Upper tail of Poisson(theta) beyond `cutoff`, summed upward so that tiny
/// tails keep full relative precision.
fn poisson_tail(theta: f64, cutoff: u64) -> f64 {
    let mut k = cutoff + 1;
    let mut term = poisson_pmf(theta, k);
    let mut sum = 0.0;
    while term > 0.0 && (term > sum * 1e-18 || (k as f64) < theta) {
        sum += term;
        k += 1;
        term *= theta / k as f64;
    }
    sum
}

impl ArrivalLaw for BasePmf {
    fn prob(&self, k: u64) -> f64 {
        match *self {
            BasePmf::Geometric { p } => (1.0 - p) * p.powf(k as f64),
            BasePmf::Poisson { theta } => poisson_pmf(theta, k),
        }
    }

    fn check_domain(&self, z: f64) -> Result<()> {
        if z.is_nan() {
            return Err(Error::Domain { arg: z, bound: "argument is NaN".into() });
        }
        if let Some(r) = self.radius() {
            let bound = r - DOMAIN_SLACK;
            if z.abs() > bound {
                return Err(Error::Domain { arg: z, bound: format!("|z| <= {bound}") });
            }
        }
        Ok(())
    }

    fn pgf(&self, z: f64) -> Result<f64> {
        self.check_domain(z)?;
        Ok(match *self {
            BasePmf::Geometric { p } => (1.0 - p) / (1.0 - p * z),
            BasePmf::Poisson { theta } => (theta * (z - 1.0)).exp(),
        })
    }

    fn pgf_deriv(&self, z: f64) -> Result<f64> {
        self.check_domain(z)?;
        Ok(match *self {
            BasePmf::Geometric { p } => (1.0 - p) * p / ((1.0 - p * z) * (1.0 - p * z)),
            BasePmf::Poisson { theta } => theta * (theta * (z - 1.0)).exp(),
        })
    }

    fn mean(&self) -> f64 {
        match *self {
            BasePmf::Geometric { p } => p / (1.0 - p),
            BasePmf::Poisson { theta } => theta,
        }
    }

    fn domain_note(&self) -> String {
        match self.radius() {
            Some(r) => format!("|z| <= {}", r - DOMAIN_SLACK),
            None => "all real z".into(),
        }
    }
}

/// A pmf with finite support `0..probs.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePmf {
    probs: Vec<f64>,
}

impl DiscretePmf {
    /// Requires non-negative masses summing to one within `1e-8`.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptyInput("pmf"));
        }
        if probs.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
            return Err(Error::InvalidParameter("pmf has negative or non-finite mass".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidParameter(format!("pmf sums to {total}")));
        }
        Ok(Self { probs })
    }

    /// Normalizes non-negative weights.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidParameter("weights must have positive finite total".into()));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn point_mass(k: u64) -> Self {
        let mut probs = vec![0.0; k as usize + 1];
        probs[k as usize] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}

impl ArrivalLaw for DiscretePmf {
    fn prob(&self, k: u64) -> f64 {
        usize::try_from(k).ok().and_then(|k| self.probs.get(k)).copied().unwrap_or(0.0)
    }

    fn check_domain(&self, z: f64) -> Result<()> {
        if z.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain { arg: z, bound: "finite z".into() })
        }
    }

    fn pgf(&self, z: f64) -> Result<f64> {
        self.check_domain(z)?;
        Ok(self.probs.iter().rev().fold(0.0, |acc, &p| acc * z + p))
    }

    fn pgf_deriv(&self, z: f64) -> Result<f64> {
        self.check_domain(z)?;
        Ok(self.probs.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, &p)| acc * z + k as f64 * p))
    }

    fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(k, &p)| k as f64 * p).sum()
    }

    fn domain_note(&self) -> String {
        "all real z".into()
    }
}

/// Exact law of `A_S` for a known queue: `a(z) = g(lambda (1 - z))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceArrivalLaw {
    pub service: ServiceDist,
    pub lambda: f64,
}

impl ServiceArrivalLaw {
    pub fn new(service: ServiceDist, lambda: f64) -> Result<Self> {
        service.validate()?;
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("arrival rate must be positive, got {lambda}")));
        }
        Ok(Self { service, lambda })
    }

    /// Largest admissible argument; the LST diverges at `1 - abscissa / lambda`.
    pub fn upper_bound(&self) -> f64 {
        1.0 - self.service.lst_abscissa() / self.lambda
    }
}

/// `ln C(k + r - 1, k)` for the negative binomial.
fn ln_binomial_multiset(r: u32, k: u64) -> f64 {
    ln_factorial(k + u64::from(r) - 1) - ln_factorial(k) - ln_factorial(u64::from(r) - 1)
}

impl ArrivalLaw for ServiceArrivalLaw {
    fn prob(&self, k: u64) -> f64 {
        let lambda = self.lambda;
        let geometric = |mu: f64| {
            let q = lambda / (lambda + mu);
            (1.0 - q) * q.powf(k as f64)
        };
        match &self.service {
            ServiceDist::Exponential { rate } => geometric(*rate),
            ServiceDist::Erlang { shape, rate } => {
                let q = lambda / (lambda + rate);
                (ln_binomial_multiset(*shape, k) + f64::from(*shape) * (1.0 - q).ln() + k as f64 * q.ln()).exp()
            }
            ServiceDist::Deterministic { value } => poisson_pmf(lambda * value, k),
            ServiceDist::HyperExponential { phases } => phases.iter().map(|&(w, mu)| w * geometric(mu)).sum(),
        }
    }

    fn check_domain(&self, z: f64) -> Result<()> {
        let upper = self.upper_bound();
        if z.is_nan() || z >= upper {
            return Err(Error::Domain { arg: z, bound: format!("z < {upper}") });
        }
        Ok(())
    }

    fn pgf(&self, z: f64) -> Result<f64> {
        self.check_domain(z)?;
        self.service.lst(self.lambda * (1.0 - z))
    }

    fn pgf_deriv(&self, z: f64) -> Result<f64> {
        self.check_domain(z)?;
        Ok(-self.lambda * self.service.lst_deriv(self.lambda * (1.0 - z))?)
    }

    fn mean(&self) -> f64 {
        self.lambda * self.service.mean()
    }

    fn domain_note(&self) -> String {
        format!("z < {}", self.upper_bound())
    }
}

//! Service-time distributions `G` supported by the simulator, with their
//! moments and Laplace–Stieltjes transforms in closed form.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma};

use crate::error::{Error, Result};

/// Service-time law of the single server.
#[derive(Debug, Clone, PartialEq)]
pub enum ServiceDist {
    Exponential {
        rate: f64,
    },
    Erlang {
        shape: u32,
        rate: f64,
    },
    Deterministic {
        value: f64,
    },
    /// Mixture of exponentials, one `(weight, rate)` pair per phase.
    HyperExponential {
        phases: Vec<(f64, f64)>,
    },
}

impl ServiceDist {
    pub fn exponential(rate: f64) -> Result<Self> {
        let d = ServiceDist::Exponential { rate };
        d.validate()?;
        Ok(d)
    }

    pub fn erlang(shape: u32, rate: f64) -> Result<Self> {
        let d = ServiceDist::Erlang { shape, rate };
        d.validate()?;
        Ok(d)
    }

    pub fn deterministic(value: f64) -> Result<Self> {
        let d = ServiceDist::Deterministic { value };
        d.validate()?;
        Ok(d)
    }

    pub fn hyper_exponential(phases: Vec<(f64, f64)>) -> Result<Self> {
        let d = ServiceDist::HyperExponential { phases };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match self {
            ServiceDist::Exponential { rate } => positive("exponential rate", *rate),
            ServiceDist::Erlang { shape, rate } => {
                if *shape == 0 {
                    return Err(Error::InvalidParameter("erlang shape must be at least 1".into()));
                }
                positive("erlang rate", *rate)
            }
            ServiceDist::Deterministic { value } => positive("deterministic service time", *value),
            ServiceDist::HyperExponential { phases } => {
                if phases.is_empty() {
                    return Err(Error::InvalidParameter("hyper-exponential needs at least one phase".into()));
                }
                let mut total = 0.0;
                for &(w, mu) in phases {
                    if !(w.is_finite() && w >= 0.0) {
                        return Err(Error::InvalidParameter(format!("phase weight must be non-negative, got {w}")));
                    }
                    positive("phase rate", mu)?;
                    total += w;
                }
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidParameter(format!("phase weights sum to {total}, expected 1")));
                }
                Ok(())
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            ServiceDist::Exponential { rate } => 1.0 / rate,
            ServiceDist::Erlang { shape, rate } => f64::from(*shape) / rate,
            ServiceDist::Deterministic { value } => *value,
            ServiceDist::HyperExponential { phases } => phases.iter().map(|(w, mu)| w / mu).sum(),
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            ServiceDist::Exponential { rate } => 1.0 / (rate * rate),
            ServiceDist::Erlang { shape, rate } => f64::from(*shape) / (rate * rate),
            ServiceDist::Deterministic { .. } => 0.0,
            ServiceDist::HyperExponential { phases } => {
                let second: f64 = phases.iter().map(|(w, mu)| 2.0 * w / (mu * mu)).sum();
                let m = self.mean();
                second - m * m
            }
        }
    }

    /// Infimum of the arguments where the LST integral converges
    /// (`-min rate` for the exponential families, `-inf` for point masses).
    pub fn lst_abscissa(&self) -> f64 {
        match self {
            ServiceDist::Exponential { rate } | ServiceDist::Erlang { rate, .. } => -rate,
            ServiceDist::Deterministic { .. } => f64::NEG_INFINITY,
            ServiceDist::HyperExponential { phases } => -phases.iter().map(|&(_, mu)| mu).fold(f64::INFINITY, f64::min),
        }
    }

    fn check_lst_arg(&self, s: f64) -> Result<()> {
        let abscissa = self.lst_abscissa();
        if s.is_nan() || s <= abscissa {
            return Err(Error::Domain { arg: s, bound: format!("LST requires s > {abscissa}") });
        }
        Ok(())
    }

    /// `g(s) = E[exp(-s S)]`.
    pub fn lst(&self, s: f64) -> Result<f64> {
        self.check_lst_arg(s)?;
        Ok(match self {
            ServiceDist::Exponential { rate } => rate / (rate + s),
            ServiceDist::Erlang { shape, rate } => (rate / (rate + s)).powi(*shape as i32),
            ServiceDist::Deterministic { value } => (-s * value).exp(),
            ServiceDist::HyperExponential { phases } => phases.iter().map(|(w, mu)| w * mu / (mu + s)).sum(),
        })
    }

    /// `g'(s)`.
    pub fn lst_deriv(&self, s: f64) -> Result<f64> {
        self.check_lst_arg(s)?;
        Ok(match self {
            ServiceDist::Exponential { rate } => -rate / ((rate + s) * (rate + s)),
            ServiceDist::Erlang { shape, rate } => {
                let k = f64::from(*shape);
                -k / rate * (rate / (rate + s)).powi(*shape as i32 + 1)
            }
            ServiceDist::Deterministic { value } => -value * (-s * value).exp(),
            ServiceDist::HyperExponential { phases } => {
                phases.iter().map(|(w, mu)| -w * mu / ((mu + s) * (mu + s))).sum()
            }
        })
    }

    /// Natural logarithm of the Lebesgue density; `None` for the point mass.
    pub fn ln_density(&self, t: f64) -> Option<f64> {
        if t < 0.0 {
            return Some(f64::NEG_INFINITY);
        }
        match self {
            ServiceDist::Exponential { rate } => Some(rate.ln() - rate * t),
            ServiceDist::Erlang { shape, rate } => {
                let k = f64::from(*shape);
                let ln_fact: f64 = (1..*shape).map(|i| f64::from(i).ln()).sum();
                if t == 0.0 {
                    return Some(if *shape == 1 { rate.ln() } else { f64::NEG_INFINITY });
                }
                Some(k * rate.ln() + (k - 1.0) * t.ln() - rate * t - ln_fact)
            }
            ServiceDist::Deterministic { .. } => None,
            ServiceDist::HyperExponential { phases } => {
                let d: f64 = phases.iter().map(|(w, mu)| w * mu * (-mu * t).exp()).sum();
                Some(d.ln())
            }
        }
    }

    /// `P(S > t)`.
    pub fn survival(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 1.0;
        }
        match self {
            ServiceDist::Exponential { rate } => (-rate * t).exp(),
            ServiceDist::Erlang { shape, rate } => {
                // Poisson(rate t) has fewer than `shape` points in [0, t].
                let x = rate * t;
                let mut term = (-x).exp();
                let mut sum = term;
                for i in 1..*shape {
                    term *= x / f64::from(i);
                    sum += term;
                }
                sum
            }
            ServiceDist::Deterministic { value } => {
                if t < *value {
                    1.0
                } else {
                    0.0
                }
            }
            ServiceDist::HyperExponential { phases } => phases.iter().map(|(w, mu)| w * (-mu * t).exp()).sum(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ServiceDist::Exponential { rate } => Exp::new(*rate).expect("validated rate").sample(rng),
            ServiceDist::Erlang { shape, rate } => {
                Gamma::new(f64::from(*shape), 1.0 / rate).expect("validated erlang").sample(rng)
            }
            ServiceDist::Deterministic { value } => *value,
            ServiceDist::HyperExponential { phases } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut chosen = phases[phases.len() - 1].1;
                for &(w, mu) in phases {
                    acc += w;
                    if u < acc {
                        chosen = mu;
                        break;
                    }
                }
                Exp::new(chosen).expect("validated rate").sample(rng)
            }
        }
    }
}

impl fmt::Display for ServiceDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ServiceDist::Exponential { rate } => write!(f, "exp:{rate}"),
            ServiceDist::Erlang { shape, rate } => write!(f, "erlang:{shape},{rate}"),
            ServiceDist::Deterministic { value } => write!(f, "det:{value}"),
            ServiceDist::HyperExponential { phases } => {
                write!(f, "hyper:")?;
                for (i, (w, mu)) in phases.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{w},{mu}")?;
                }
                Ok(())
            }
        }
    }
}

fn parse_f64(field: &str, what: &str) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| Error::InvalidParameter(format!("cannot parse {what} from {field:?}")))
}

/// Parses `exp:<mu>`, `erlang:<k>,<mu>`, `det:<d>` or `hyper:<w1>,<mu1>;<w2>,<mu2>[;...]`.
impl FromStr for ServiceDist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (family, params) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidParameter(format!("service spec {s:?} lacks a family prefix")))?;
        match family.trim() {
            "exp" => ServiceDist::exponential(parse_f64(params, "exponential rate")?),
            "erlang" => {
                let (k, mu) =
                    params.split_once(',').ok_or_else(|| Error::InvalidParameter("erlang expects <k>,<mu>".into()))?;
                let k = k
                    .trim()
                    .parse::<u32>()
                    .map_err(|_| Error::InvalidParameter(format!("cannot parse erlang shape from {k:?}")))?;
                ServiceDist::erlang(k, parse_f64(mu, "erlang rate")?)
            }
            "det" => ServiceDist::deterministic(parse_f64(params, "deterministic value")?),
            "hyper" => {
                let phases = params
                    .split(';')
                    .map(|phase| {
                        let (w, mu) = phase.split_once(',').ok_or_else(|| {
                            Error::InvalidParameter(format!("hyper phase {phase:?} expects <w>,<mu>"))
                        })?;
                        Ok((parse_f64(w, "phase weight")?, parse_f64(mu, "phase rate")?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                ServiceDist::hyper_exponential(phases)
            }
            other => Err(Error::InvalidParameter(format!("unknown service family {other:?}"))),
        }
    }
}

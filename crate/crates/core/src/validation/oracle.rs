//! Quadrature oracle for the law of `A_S` and the exact-input checks.

use statrs::function::factorial::ln_factorial;

use super::{linspace, ExperimentReport};
use crate::error::{Error, Result};
use crate::pgf::{ArrivalLaw, DiscretePmf, ServiceArrivalLaw};
use crate::quadrature::integrate_split;
use crate::service::ServiceDist;
use crate::transforms::{EstimatorContext, FixedPointOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub abs_tol: f64,
    /// Integration horizon in service standard deviations past the mean.
    pub sd_multiple: f64,
    pub horizon_cap: f64,
    pub initial_splits: usize,
    pub max_intervals: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { abs_tol: 1e-12, sd_multiple: 40.0, horizon_cap: 1e6, initial_splits: 16, max_intervals: 20_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AOracle {
    pub value: f64,
    /// Quadrature error estimate on `[0, horizon]`.
    pub quad_error: f64,
    /// Bound on the neglected mass beyond the horizon, `P(S > horizon)`.
    pub tail_bound: f64,
    pub horizon: f64,
}

/// `P(A_S = k) = (1/k!) int_0^inf e^{-lambda t} (lambda t)^k G(dt)`.
pub fn oracle_a_pmf(service: &ServiceDist, lambda: f64, k: u64) -> Result<f64> {
    Ok(oracle_a_pmf_detailed(service, lambda, k, &OracleConfig::default())?.value)
}

pub fn oracle_a_pmf_detailed(service: &ServiceDist, lambda: f64, k: u64, cfg: &OracleConfig) -> Result<AOracle> {
    service.validate()?;
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("arrival rate must be positive, got {lambda}")));
    }
    let ln_k_fact = ln_factorial(k);
    let ln_poisson = |t: f64| {
        let x = lambda * t;
        if k == 0 {
            -x
        } else {
            -x + k as f64 * x.ln() - ln_k_fact
        }
    };
    if let ServiceDist::Deterministic { value } = service {
        return Ok(AOracle { value: ln_poisson(*value).exp(), quad_error: 0.0, tail_bound: 0.0, horizon: *value });
    }
    let horizon = (service.mean() + cfg.sd_multiple * service.variance().sqrt()).min(cfg.horizon_cap);
    let integrand = |t: f64| match service.ln_density(t) {
        Some(ln_g) if t > 0.0 => (ln_poisson(t) + ln_g).exp(),
        Some(ln_g) if k == 0 => ln_g.exp(),
        _ => 0.0,
    };
    let integral = integrate_split(integrand, 0.0, horizon, cfg.initial_splits, cfg.abs_tol, cfg.max_intervals)?;
    Ok(AOracle { value: integral.value, quad_error: integral.error, tail_bound: service.survival(horizon), horizon })
}

/// The quadrature pmf, computed until the accumulated mass is within
/// `1e-12` of one.
pub fn oracle_arrival_law(service: &ServiceDist, lambda: f64) -> Result<DiscretePmf> {
    const MAX_SUPPORT: u64 = 5_000;
    let cfg = OracleConfig::default();
    let mut probs = Vec::new();
    let mut total = 0.0;
    for k in 0..MAX_SUPPORT {
        let p = oracle_a_pmf_detailed(service, lambda, k, &cfg)?.value;
        probs.push(p);
        total += p;
        if 1.0 - total < 1e-12 {
            return DiscretePmf::new(probs);
        }
    }
    Err(Error::NoConvergence { iterations: MAX_SUPPORT as usize, residual: 1.0 - total })
}

fn max_abs_diff(pairs: impl Iterator<Item = Result<(f64, f64)>>) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for pair in pairs {
        let (a, b) = pair?;
        worst = worst.max((a - b).abs());
    }
    Ok(worst)
}

/// Oracle agreement on closed forms and exact-input transform identities for
/// M/M/1 with `lambda = 1`, `mu = 2`.
pub fn oracle_checks() -> Result<ExperimentReport> {
    const PMF_TOL: f64 = 1e-10;
    const NORM_TOL: f64 = 1e-8;
    const TRANSFORM_TOL: f64 = 1e-8;

    let mut report = ExperimentReport::new("oracles", None);
    let (lambda, mu, d) = (1.0, 2.0, 0.5);
    report.param("lambda", lambda);
    report.param("mu", mu);
    report.param("det", d);

    let exp = ServiceDist::exponential(mu)?;
    let q = lambda / (lambda + mu);
    let exp_err = max_abs_diff((0..=20).map(|k| Ok((oracle_a_pmf(&exp, lambda, k)?, (1.0 - q) * q.powi(k as i32)))))?;
    report.metric("exp_vs_geometric_max_err", exp_err);
    report.check_at_most("exp_vs_geometric", exp_err, PMF_TOL);

    let det = ServiceDist::deterministic(d)?;
    let mut poisson = (-lambda * d).exp();
    let mut det_err: f64 = 0.0;
    for k in 0..=20u64 {
        det_err = det_err.max((oracle_a_pmf(&det, lambda, k)? - poisson).abs());
        poisson *= lambda * d / (k + 1) as f64;
    }
    report.metric("det_vs_poisson_max_err", det_err);
    report.check_at_most("det_vs_poisson", det_err, PMF_TOL);

    let erlang = ServiceDist::erlang(2, 4.0)?;
    let erlang_law = ServiceArrivalLaw::new(erlang.clone(), lambda)?;
    let erlang_err = max_abs_diff((0..=20).map(|k| Ok((oracle_a_pmf(&erlang, lambda, k)?, erlang_law.prob(k)))))?;
    report.metric("erlang_vs_negbin_max_err", erlang_err);
    report.check_at_most("erlang_vs_negbin", erlang_err, PMF_TOL);

    for (name, service) in [("exp", &exp), ("erlang", &erlang)] {
        let mut total = 0.0;
        for k in 0..=200 {
            total += oracle_a_pmf(service, lambda, k)?;
        }
        report.metric(format!("{name}_mass_to_200_err"), (1.0 - total).abs());
        report.check_at_most(format!("{name}_normalization"), (1.0 - total).abs(), NORM_TOL);
    }

    let ctx = EstimatorContext::new(lambda, ServiceArrivalLaw::new(exp, lambda)?)?;
    let rho = lambda / mu;
    let g_err = max_abs_diff(linspace(0.0, 5.0, 101).into_iter().map(|z| Ok((ctx.g_hat(z)?, mu / (mu + z)))))?;
    let pi_err =
        max_abs_diff(linspace(0.0, 1.0, 101).into_iter().map(|z| Ok((ctx.pi_hat(z)?, (1.0 - rho) / (1.0 - rho * z)))))?;
    let opts = FixedPointOptions::default();
    let b_err = (ctx.busy_b(1.0, opts)? - (2.0 - 2f64.sqrt())).abs();
    let mb_err = (ctx.served_mb(0.5, opts)? - (3.0 - 5f64.sqrt()) / 2.0).abs();
    for (name, err) in [("g_hat", g_err), ("pi_hat", pi_err), ("busy_b", b_err), ("served_mb", mb_err)] {
        report.metric(format!("{name}_max_err"), err);
        report.check_at_most(name, err, TRANSFORM_TOL);
    }
    Ok(report)
}

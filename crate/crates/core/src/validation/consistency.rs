//! Posterior consistency along one simulated path observed at growing sizes.

use super::{linspace, oracle_arrival_law, ExperimentReport, PriorParams};
use crate::error::Result;
use crate::pgf::ArrivalLaw;
use crate::service::ServiceDist;
use crate::sim::{simulate_path, SimConfig, DEFAULT_WARMUP};
use crate::transforms::EstimatorContext;

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyConfig {
    pub lambda: f64,
    pub service: ServiceDist,
    /// Prefix sizes of the path at which the posteriors are evaluated.
    pub n_list: Vec<usize>,
    pub prior: PriorParams,
    pub seed: u64,
    pub warmup: usize,
    /// `g_hat` is compared with the true LST on `[0, r]`.
    pub r: f64,
    /// `gamma_n` is compared with the true pgf on `[0, tau]`.
    pub tau: f64,
    pub grid_steps: usize,
    pub rate_tol: f64,
    pub g_tol: f64,
    pub gamma_tol: f64,
}

impl ConsistencyConfig {
    pub fn new(lambda: f64, service: ServiceDist, seed: u64) -> Self {
        Self {
            lambda,
            service,
            n_list: vec![100, 1_000, 10_000, 50_000],
            prior: PriorParams::default(),
            seed,
            warmup: DEFAULT_WARMUP,
            r: 5.0,
            tau: 1.0,
            grid_steps: 101,
            rate_tol: 0.05,
            g_tol: 0.02,
            gamma_tol: 0.02,
        }
    }
}

/// Finite and non-increasing; an infinite sup carries no trend.
fn non_increasing(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite()) && values.windows(2).all(|w| w[1] <= w[0])
}

/// Simulates one path and reports, per prefix size, the rate error and the
/// sup distances `|gamma_n - a_0|` on `[0, tau]` and `|g_hat - g_0|` on
/// `[0, r]`. A grid point outside the estimator's domain makes the sup
/// infinite. `g_unit` restricts the second sup to `|1 - z/lambda_bar| <= 1`,
/// where the plug-in series is guaranteed to converge.
pub fn consistency_experiment(config: &ConsistencyConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("consistency", Some(config.seed));
    report.param("lambda", config.lambda);
    report.param("service", &config.service);
    report.param("n_list", config.n_list.iter().map(ToString::to_string).collect::<Vec<_>>().join(","));
    report.param("gamma_a", config.prior.gamma.a);
    report.param("gamma_b", config.prior.gamma.b);
    report.param("alpha", config.prior.alpha);
    report.param("base", format!("{:?}", config.prior.base));
    report.param("warmup", config.warmup);
    report.param("r", config.r);
    report.param("tau", config.tau);

    let n_max = config.n_list.iter().copied().max().unwrap_or(0);
    let records = if n_max == 0 {
        Vec::new()
    } else {
        let sim = SimConfig::new(config.lambda, config.service.clone(), n_max, config.seed).with_warmup(config.warmup);
        simulate_path(&sim)?.records
    };
    let a0 = oracle_arrival_law(&config.service, config.lambda)?;
    let z_gamma = linspace(0.0, config.tau, config.grid_steps);
    let z_g = linspace(0.0, config.r, config.grid_steps);

    let (mut rate_errs, mut g_errs) = (Vec::new(), Vec::new());
    let mut gamma_final = f64::INFINITY;
    for &n in &config.n_list {
        let (gamma, dp) = config.prior.posteriors(&records[..n])?;
        let ctx = EstimatorContext::from_posteriors(&gamma, dp)?;
        let rate_err = (ctx.lambda_bar() - config.lambda).abs();

        let mut gamma_err: f64 = 0.0;
        for &z in &z_gamma {
            gamma_err = gamma_err.max(match ctx.gamma_n(z) {
                Ok(v) => (v - a0.pgf(z)?).abs(),
                Err(_) => f64::INFINITY,
            });
        }

        let (mut g_err, mut g_unit, mut failures): (f64, f64, usize) = (0.0, 0.0, 0);
        for &z in &z_g {
            let err = match ctx.g_hat(z) {
                Ok(v) => (v - config.service.lst(z)?).abs(),
                Err(_) => {
                    failures += 1;
                    f64::INFINITY
                }
            };
            g_err = g_err.max(err);
            if z <= 2.0 * ctx.lambda_bar() {
                g_unit = g_unit.max(err);
            }
        }

        let key = format!("n{n}");
        report.metric(format!("{key}.lambda_bar"), ctx.lambda_bar());
        report.metric(format!("{key}.rate_err"), rate_err);
        report.metric(format!("{key}.sup_gamma_err"), gamma_err);
        report.metric(format!("{key}.sup_g_err"), g_err);
        report.metric(format!("{key}.sup_g_err_unit"), g_unit);
        report.metric(format!("{key}.g_domain_failures"), failures as f64);
        gamma_final = gamma_err;
        if n > 0 {
            rate_errs.push(rate_err);
            g_errs.push(g_err);
        }
    }

    let last = |v: &[f64]| v.last().copied().unwrap_or(f64::INFINITY);
    report.check_at_most("rate_final", last(&rate_errs), config.rate_tol);
    report.check("g_monotone", format!("{g_errs:?}"), non_increasing(&g_errs));
    report.check_at_most("g_final", last(&g_errs), config.g_tol);
    report.check_at_most("gamma_final", gamma_final, config.gamma_tol);
    Ok(report)
}

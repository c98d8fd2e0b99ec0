//! Estimated stationary pgf against the empirical pgf of the observed marks.

use super::{linspace, ExperimentReport, PriorParams};
use crate::error::{Error, Result};
use crate::pgf::ArrivalLaw;
use crate::service::ServiceDist;
use crate::sim::{simulate_path, SimConfig};
use crate::transforms::EstimatorContext;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiCheckConfig {
    pub grid_steps: usize,
    pub sup_tol: f64,
    pub zero_tol: f64,
    /// Traffic intensity of the generating queue, when known.
    pub true_rho: Option<f64>,
}

impl Default for PiCheckConfig {
    fn default() -> Self {
        Self { grid_steps: 101, sup_tol: 0.02, zero_tol: 0.01, true_rho: None }
    }
}

fn empirical_pgf(marks: &[u64], z: f64) -> f64 {
    marks.iter().map(|&n| z.powf(n as f64)).sum::<f64>() / marks.len() as f64
}

pub fn pi_empirical_check<L: ArrivalLaw>(
    marks: &[u64],
    ctx: &EstimatorContext<L>,
    config: &PiCheckConfig,
) -> Result<ExperimentReport> {
    if marks.is_empty() {
        return Err(Error::EmptyInput("mark sequence"));
    }
    let mut report = ExperimentReport::new("pi-check", None);
    report.param("marks", marks.len());
    report.param("grid_steps", config.grid_steps);

    let mut sup_gap: f64 = 0.0;
    for z in linspace(0.0, 1.0, config.grid_steps) {
        sup_gap = sup_gap.max((ctx.pi_hat(z)? - empirical_pgf(marks, z)).abs());
    }
    let pi0 = ctx.pi_hat(0.0)?;
    let zero_frac = marks.iter().filter(|&&n| n == 0).count() as f64 / marks.len() as f64;
    report.metric("rho_hat", ctx.rho_hat());
    report.metric("sup_gap", sup_gap);
    report.metric("pi0", pi0);
    report.metric("zero_fraction", zero_frac);
    report.check_at_most("sup_gap", sup_gap, config.sup_tol);
    report.check_at_most("pi0_vs_zero_fraction", (pi0 - zero_frac).abs(), config.zero_tol);
    if let Some(rho) = config.true_rho {
        report.param("true_rho", rho);
        report.metric("pi0_vs_idle_err", (pi0 - (1.0 - rho)).abs());
        report.check_at_most("pi0_vs_idle", (pi0 - (1.0 - rho)).abs(), config.zero_tol);
    }
    report.check(
        "unit_value",
        "pi_hat(1) = empirical(1) = 1",
        ctx.pi_hat(1.0)? == 1.0 && empirical_pgf(marks, 1.0) == 1.0,
    );
    Ok(report)
}

/// Simulates a path of `n` departures and runs [`pi_empirical_check`] on it
/// with the true traffic intensity filled in.
pub fn pi_check_experiment(
    lambda: f64,
    service: ServiceDist,
    n: usize,
    seed: u64,
    prior: &PriorParams,
    config: &PiCheckConfig,
) -> Result<ExperimentReport> {
    let sim = SimConfig::new(lambda, service.clone(), n, seed);
    let path = simulate_path(&sim)?;
    let (gamma, dp) = prior.posteriors(&path.records)?;
    let ctx = EstimatorContext::from_posteriors(&gamma, dp)?;
    let config = PiCheckConfig { true_rho: Some(sim.rho()), ..*config };
    let mut report = pi_empirical_check(&path.marks(), &ctx, &config)?;
    report.seed = Some(seed);
    report.param("lambda", lambda);
    report.param("service", service);
    Ok(report)
}

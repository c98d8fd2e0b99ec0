//! Posterior normality of the random pgf and of the rate.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use super::{normality_distance, sample_covariance, ExperimentReport, PriorParams};
use crate::error::{Error, Result};
use crate::pgf::{ArrivalLaw, ServiceArrivalLaw};
use crate::service::ServiceDist;
use crate::sim::{simulate_path, SimConfig, DEFAULT_WARMUP};

/// Posterior draw `i` uses stream `DRAW_STREAM_BASE + i` of the experiment seed,
/// clear of the simulator's streams.
const DRAW_STREAM_BASE: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq)]
pub struct BvmConfig {
    pub lambda: f64,
    pub service: ServiceDist,
    pub n: usize,
    pub draws: usize,
    pub z_grid: Vec<f64>,
    pub truncation: usize,
    pub seed: u64,
    pub warmup: usize,
    pub prior: PriorParams,
    pub cov_rel_tol: f64,
    pub rate_var_rel_tol: f64,
    pub normality_threshold: f64,
}

impl BvmConfig {
    pub fn new(lambda: f64, service: ServiceDist, seed: u64) -> Self {
        Self {
            lambda,
            service,
            n: 10_000,
            draws: 2_000,
            z_grid: vec![0.2, 0.5, 0.8],
            truncation: 200,
            seed,
            warmup: DEFAULT_WARMUP,
            prior: PriorParams::default(),
            cov_rel_tol: 0.15,
            rate_var_rel_tol: 0.15,
            normality_threshold: 0.05,
        }
    }
}

/// `H(u, v) = a_0(uv) - a_0(u) a_0(v)`.
pub fn covariance_h<L: ArrivalLaw + ?Sized>(a0: &L, u: f64, v: f64) -> Result<f64> {
    Ok(a0.pgf(u * v)? - a0.pgf(u)? * a0.pgf(v)?)
}

/// `K(u, v) = H(1 - u/l, 1 - v/l) + u v l^-6 a_0'(1 - u/l) a_0'(1 - v/l)` with `l = lambda0`.
pub fn covariance_k<L: ArrivalLaw + ?Sized>(a0: &L, lambda0: f64, u: f64, v: f64) -> Result<f64> {
    let (x, y) = (1.0 - u / lambda0, 1.0 - v / lambda0);
    Ok(covariance_h(a0, x, y)? + u * v * lambda0.powi(-6) * a0.pgf_deriv(x)? * a0.pgf_deriv(y)?)
}

/// [`covariance_k`] evaluated from the pmf `p_0, p_1, ..` by explicit power sums.
pub fn covariance_k_series(pmf: &[f64], lambda0: f64, u: f64, v: f64) -> f64 {
    let series = |t: f64| -> f64 {
        let mut sum = 0.0;
        let mut power = 1.0;
        for &p in pmf {
            sum += p * power;
            power *= t;
        }
        sum
    };
    let slope = |t: f64| -> f64 {
        let mut sum = 0.0;
        let mut power = 1.0;
        for (k, &p) in pmf.iter().enumerate().skip(1) {
            sum += k as f64 * p * power;
            power *= t;
        }
        sum
    };
    let x = 1.0 - u / lambda0;
    let y = 1.0 - v / lambda0;
    let h = series(x * y) - series(x) * series(y);
    let scale = 1.0 / (lambda0 * lambda0 * lambda0 * lambda0 * lambda0 * lambda0);
    h + u * v * scale * slope(x) * slope(y)
}

fn draw_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(DRAW_STREAM_BASE + index as u64);
    rng
}

/// Fixes one simulated path of `n` departures, samples the posteriors and
/// compares the spread of `sqrt(n)(a(z) - gamma_n(z))` and
/// `sqrt(n)(lambda - lambda_bar)` with their Gaussian limits.
pub fn bvm_experiment(config: &BvmConfig) -> Result<ExperimentReport> {
    if config.draws < 2 || config.z_grid.is_empty() {
        return Err(Error::InvalidParameter("need at least two draws and one grid point".into()));
    }
    let mut report = ExperimentReport::new("bvm", Some(config.seed));
    report.param("lambda", config.lambda);
    report.param("service", &config.service);
    report.param("n", config.n);
    report.param("draws", config.draws);
    report.param("z_grid", config.z_grid.iter().map(ToString::to_string).collect::<Vec<_>>().join(","));
    report.param("truncation", config.truncation);
    report.param("warmup", config.warmup);

    let sim = SimConfig::new(config.lambda, config.service.clone(), config.n, config.seed).with_warmup(config.warmup);
    let path = simulate_path(&sim)?;
    let (gamma, dp) = config.prior.posteriors(&path.records)?;
    let lambda_bar = gamma.mean();
    let root_n = (config.n as f64).sqrt();
    let centers: Vec<f64> = config.z_grid.iter().map(|&z| dp.pgf(z)).collect::<Result<_>>()?;
    let rate_law = Gamma::new(gamma.a, 1.0 / gamma.b).map_err(|e| Error::InvalidParameter(e.to_string()))?;

    let sample_pgf = |truncation: usize| -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
        let mut pgf_draws = Vec::with_capacity(config.draws);
        let mut rate_draws = Vec::with_capacity(config.draws);
        for i in 0..config.draws {
            let mut rng = draw_rng(config.seed, i);
            let pmf = dp.sample_posterior_pmf(truncation, &mut rng)?;
            let row = config
                .z_grid
                .iter()
                .zip(&centers)
                .map(|(&z, c)| Ok(root_n * (pmf.pgf(z)? - c)))
                .collect::<Result<Vec<f64>>>()?;
            pgf_draws.push(row);
            rate_draws.push(root_n * (rate_law.sample(&mut rng) - lambda_bar));
        }
        Ok((pgf_draws, rate_draws))
    };

    let (pgf_draws, rate_draws) = sample_pgf(config.truncation)?;
    let cov = sample_covariance(&pgf_draws);
    let a0 = ServiceArrivalLaw::new(config.service.clone(), config.lambda)?;
    let z = &config.z_grid;
    let d = z.len();
    let mut max_rel: f64 = 0.0;
    for (i, &u) in z.iter().enumerate() {
        for (j, &v) in z.iter().enumerate().skip(i) {
            let h = covariance_h(&a0, u, v)?;
            let rel = (cov[i][j] - h).abs() / h.abs();
            report.metric(format!("cov.{i}{j}.empirical"), cov[i][j]);
            report.metric(format!("cov.{i}{j}.h"), h);
            report.metric(format!("cov.{i}{j}.rel_err"), rel);
            max_rel = max_rel.max(rel);
        }
    }
    report.metric("cov.max_rel_err", max_rel);

    let rate_var = sample_covariance(&rate_draws.iter().map(|&r| vec![r]).collect::<Vec<_>>())[0][0];
    // limiting variance of the rate as stated for the departure-rate posterior
    let rate_target = config.lambda.powi(-2);
    let rate_rel = (rate_var - rate_target).abs() / rate_target;
    report.metric("rate.var", rate_var);
    report.metric("rate.target", rate_target);
    report.metric("rate.rel_err", rate_rel);

    let mut normality = Vec::with_capacity(d + 1);
    for i in 0..d {
        let column: Vec<f64> = pgf_draws.iter().map(|r| r[i]).collect();
        let dist = normality_distance(&column);
        report.metric(format!("normality.z{i}"), dist);
        normality.push((format!("normality_z{i}"), dist));
    }
    let rate_dist = normality_distance(&rate_draws);
    report.metric("normality.rate", rate_dist);
    normality.push(("normality_rate".into(), rate_dist));

    let (doubled, _) = sample_pgf(2 * config.truncation)?;
    let cov2 = sample_covariance(&doubled);
    let doubling = (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .map(|(i, j)| (cov[i][j] - cov2[i][j]).abs() / cov[i][j].abs())
        .fold(0.0, f64::max);
    report.metric("truncation_doubling.cov_max_rel_diff", doubling);

    report.check_at_most("covariance", max_rel, config.cov_rel_tol);
    report.check_at_most("rate_variance", rate_rel, config.rate_var_rel_tol);
    for (name, dist) in normality {
        report.check_at_most(name, dist, config.normality_threshold);
    }
    Ok(report)
}

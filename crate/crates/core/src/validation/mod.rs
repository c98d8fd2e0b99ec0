//! Independent oracles and desk-scale experiments for the asymptotic claims.
//!
//! Every experiment returns an [`ExperimentReport`] whose verdict is a pure
//! function of its metrics and the thresholds held in its config.

mod bvm;
mod consistency;
mod oracle;
mod pi_check;

use std::fmt::Write as _;

use statrs::function::erf::erfc;

pub use bvm::{bvm_experiment, covariance_h, covariance_k, covariance_k_series, BvmConfig};
pub use consistency::{consistency_experiment, ConsistencyConfig};
pub use oracle::{oracle_a_pmf, oracle_a_pmf_detailed, oracle_arrival_law, oracle_checks, AOracle, OracleConfig};
pub use pi_check::{pi_check_experiment, pi_empirical_check, PiCheckConfig};

use crate::error::Result;
use crate::matrix::DeltaDirichletPosterior;
use crate::pgf::BasePmf;
use crate::rate::GammaPosterior;
use crate::sim::{interdeparture_times, marks_of, MarkedDeparture};
use crate::tau::{run_exhaustive, ExhaustiveConfig};

/// Priors of both models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorParams {
    pub gamma: GammaPosterior,
    pub alpha: f64,
    pub base: BasePmf,
}

impl Default for PriorParams {
    fn default() -> Self {
        Self { gamma: GammaPosterior::default(), alpha: 1.0, base: BasePmf::Geometric { p: 0.5 } }
    }
}

impl PriorParams {
    /// Rate and matrix posteriors after observing `records`.
    pub fn posteriors(&self, records: &[MarkedDeparture]) -> Result<(GammaPosterior, DeltaDirichletPosterior)> {
        let gamma = self.gamma.update(&interdeparture_times(records))?;
        let dp = DeltaDirichletPosterior::new(self.alpha, self.base)?.update_with_marks(&marks_of(records))?;
        Ok((gamma, dp))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub detail: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub name: String,
    pub seed: Option<u64>,
    pub parameters: Vec<(String, String)>,
    pub metrics: Vec<(String, f64)>,
    pub checks: Vec<Check>,
}

impl ExperimentReport {
    pub fn new(name: impl Into<String>, seed: Option<u64>) -> Self {
        Self { name: name.into(), seed, parameters: Vec::new(), metrics: Vec::new(), checks: Vec::new() }
    }

    pub fn param(&mut self, key: impl Into<String>, value: impl ToString) {
        self.parameters.push((key.into(), value.to_string()));
    }

    pub fn metric(&mut self, key: impl Into<String>, value: f64) {
        self.metrics.push((key.into(), value));
    }

    pub fn metric_value(&self, key: &str) -> Option<f64> {
        self.metrics.iter().find(|(k, _)| k == key).map(|&(_, v)| v)
    }

    /// Records `value <= threshold` as a named check.
    pub fn check_at_most(&mut self, name: impl Into<String>, value: f64, threshold: f64) -> bool {
        let pass = value <= threshold;
        self.checks.push(Check { name: name.into(), detail: format!("{value:.6e} <= {threshold:.6e}"), pass });
        pass
    }

    pub fn check(&mut self, name: impl Into<String>, detail: impl Into<String>, pass: bool) -> bool {
        self.checks.push(Check { name: name.into(), detail: detail.into(), pass });
        pass
    }

    pub fn check_passed(&self, name: &str) -> Option<bool> {
        self.checks.iter().find(|c| c.name == name).map(|c| c.pass)
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Machine-readable `key=value` lines.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "name={}", self.name);
        if let Some(seed) = self.seed {
            let _ = writeln!(out, "seed={seed}");
        }
        for (k, v) in &self.parameters {
            let _ = writeln!(out, "param.{k}={v}");
        }
        for (k, v) in &self.metrics {
            let _ = writeln!(out, "metric.{k}={v}");
        }
        for c in &self.checks {
            let _ = writeln!(out, "check.{}={}", c.name, c.pass);
        }
        let _ = writeln!(out, "pass={}", self.pass());
        out
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}{}", self.name, self.seed.map(|s| format!(" (seed {s})")).unwrap_or_default());
        let width = self
            .metrics
            .iter()
            .map(|(k, _)| k.len())
            .chain(self.checks.iter().map(|c| c.name.len()))
            .max()
            .unwrap_or(0);
        for (k, v) in &self.metrics {
            let _ = writeln!(out, "  {k:<width$}  {v:.6e}");
        }
        for c in &self.checks {
            let verdict = if c.pass { "PASS" } else { "FAIL" };
            let _ = writeln!(out, "  {:<width$}  {verdict}  {}", c.name, c.detail);
        }
        let _ = writeln!(out, "  {:<width$}  {}", "overall", if self.pass() { "PASS" } else { "FAIL" });
        out
    }
}

/// Exhaustive check of the combinatorial properties of the statistic.
pub fn tau_exhaustive_report(config: ExhaustiveConfig) -> ExperimentReport {
    let result = run_exhaustive(config);
    let mut report = ExperimentReport::new("tau-exhaustive", None);
    report.param("max_len", config.max_len);
    report.param("max_state", config.max_state);
    for row in &result.rows {
        let key = row.property.replace(' ', "_");
        report.metric(format!("{key}.checked"), row.checked as f64);
        report.metric(format!("{key}.violations"), row.violations as f64);
        report.check(key, format!("{} violations in {} checks", row.violations, row.checked), row.violations == 0);
    }
    report
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Kolmogorov distance between the standardized sample and `N(0, 1)`.
pub fn normality_distance(sample: &[f64]) -> f64 {
    let m = sample.len();
    if m < 2 {
        return f64::INFINITY;
    }
    let mean = sample.iter().sum::<f64>() / m as f64;
    let sd = (sample.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1) as f64).sqrt();
    if !(sd > 0.0) {
        return 1.0;
    }
    let mut z: Vec<f64> = sample.iter().map(|x| (x - mean) / sd).collect();
    z.sort_by(f64::total_cmp);
    z.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal_cdf(x);
            (f - i as f64 / m as f64).max((i + 1) as f64 / m as f64 - f)
        })
        .fold(0.0, f64::max)
}

/// Unbiased sample covariance matrix of the rows of `samples`.
pub fn sample_covariance(samples: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = samples.len();
    let d = samples.first().map_or(0, Vec::len);
    let mean: Vec<f64> = (0..d).map(|j| samples.iter().map(|s| s[j]).sum::<f64>() / m as f64).collect();
    let mut cov = vec![vec![0.0; d]; d];
    for s in samples {
        for i in 0..d {
            for j in 0..d {
                cov[i][j] += (s[i] - mean[i]) * (s[j] - mean[j]);
            }
        }
    }
    let denom = (m.max(2) - 1) as f64;
    cov.iter_mut().flatten().for_each(|c| *c /= denom);
    cov
}

pub(crate) fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_normal_cdf_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-11);
    }

    #[test]
    fn test_normality_distance_of_quantiles_is_small() {
        // midpoint quantiles of N(0,1) via bisection on the cdf
        let m = 400;
        let sample: Vec<f64> = (0..m)
            .map(|i| {
                let p = (i as f64 + 0.5) / m as f64;
                let (mut lo, mut hi) = (-10.0, 10.0);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if normal_cdf(mid) < p {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            })
            .collect();
        assert!(normality_distance(&sample) < 0.01);
        let skewed: Vec<f64> = (0..m).map(|i| (i as f64 / 40.0).exp()).collect();
        assert!(normality_distance(&skewed) > 0.1);
    }

    #[test]
    fn test_sample_covariance() {
        let s = vec![vec![1.0, 2.0], vec![3.0, 6.0], vec![5.0, 10.0]];
        let c = sample_covariance(&s);
        assert!((c[0][0] - 4.0).abs() < 1e-12);
        assert!((c[0][1] - 8.0).abs() < 1e-12);
        assert!((c[1][1] - 16.0).abs() < 1e-12);
    }

    #[test]
    fn test_report_kv_and_verdict() {
        let mut r = ExperimentReport::new("demo", Some(3));
        r.param("n", 10);
        r.metric("err", 0.5);
        assert!(r.check_at_most("err_small", 0.5, 0.5));
        assert!(r.pass());
        assert!(!r.check_at_most("err_tiny", 0.5, 0.1));
        assert!(!r.pass());
        let kv = r.to_kv();
        assert!(kv.contains("seed=3\n"));
        assert!(kv.contains("param.n=10\n"));
        assert!(kv.contains("metric.err=0.5\n"));
        assert!(kv.contains("check.err_tiny=false\n"));
        assert!(kv.ends_with("pass=false\n"));
    }

    #[test]
    fn test_linspace() {
        assert_eq!(linspace(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
        assert_eq!(linspace(2.0, 5.0, 1), vec![2.0]);
    }
}

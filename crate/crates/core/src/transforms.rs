//! Plug-in estimators of queueing transforms.
//!
//! Everything is driven by a rate `lambda_bar` and a law `gamma` of `A_S`
//! (in practice the posterior means). The service LST estimate inverts
//! `a(z) = g(lambda (1 - z))`:
//!
//! ```text
//! g_hat(z)  = gamma(1 - z / lambda_bar)
//! q_hat(z)  = (1 - rho)(1 - z) / (g_hat(lambda_bar (1 - z)) - z)
//! m_hat(z)  = g_hat(lambda_bar (1 - z)) q_hat(z)
//! w_hat(s)  = s (1 - rho) / (s - lambda_bar + lambda_bar g_hat(s))
//! pi_hat(z) = gamma(z)(1 - z)(1 - gamma'(1)) / (gamma(z) - z)
//! b(s)      = g_hat(s + lambda_bar (1 - b(s)))
//! m_b(z)    = z g_hat(lambda_bar (1 - m_b(z)))
//! ```

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matrix::{pi_pgf, DeltaDirichletPosterior, UNIT_BAND};
use crate::pgf::ArrivalLaw;
use crate::rate::GammaPosterior;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER }
    }
}

#[derive(Debug, Clone)]
pub struct EstimatorContext<L> {
    lambda_bar: f64,
    law: L,
    rho_hat: f64,
}

impl EstimatorContext<DeltaDirichletPosterior> {
    /// Context built from the posterior means of both models.
    pub fn from_posteriors(rate: &GammaPosterior, matrix: DeltaDirichletPosterior) -> Result<Self> {
        Self::new(rate.mean(), matrix)
    }
}

impl<L: ArrivalLaw> EstimatorContext<L> {
    pub fn new(lambda_bar: f64, law: L) -> Result<Self> {
        if !(lambda_bar.is_finite() && lambda_bar > 0.0) {
            return Err(Error::InvalidParameter(format!("rate estimate must be positive, got {lambda_bar}")));
        }
        let rho_hat = law.mean();
        Ok(Self { lambda_bar, law, rho_hat })
    }

    pub fn lambda_bar(&self) -> f64 {
        self.lambda_bar
    }

    pub fn law(&self) -> &L {
        &self.law
    }

    /// `sum_k k gamma(k)`. Values of one or more are returned as is; the
    /// stationary transforms refuse them.
    pub fn rho_hat(&self) -> f64 {
        self.rho_hat
    }

    pub fn is_stable(&self) -> bool {
        self.rho_hat < 1.0
    }

    fn require_stable(&self) -> Result<()> {
        if self.is_stable() {
            Ok(())
        } else {
            Err(Error::Unstable { rho: self.rho_hat })
        }
    }

    pub fn gamma_n(&self, z: f64) -> Result<f64> {
        if z == 1.0 {
            return Ok(1.0);
        }
        self.law.pgf(z)
    }

    pub fn g_hat(&self, z: f64) -> Result<f64> {
        if !(z >= 0.0) {
            return Err(Error::Domain { arg: z, bound: "z >= 0".into() });
        }
        self.gamma_n(1.0 - z / self.lambda_bar)
    }

    pub fn g_hat_deriv(&self, z: f64) -> Result<f64> {
        if !(z >= 0.0) {
            return Err(Error::Domain { arg: z, bound: "z >= 0".into() });
        }
        Ok(-self.law.pgf_deriv(1.0 - z / self.lambda_bar)? / self.lambda_bar)
    }

    /// Mean service time estimate `-g_hat'(0)`.
    pub fn sigma_hat(&self) -> Result<f64> {
        Ok(-self.g_hat_deriv(0.0)?)
    }

    /// `lambda_bar sigma_hat`, the route through the LST derivative.
    pub fn rho_hat_via_lst(&self) -> Result<f64> {
        Ok(self.lambda_bar * self.sigma_hat()?)
    }

    pub fn q_hat(&self, z: f64) -> Result<f64> {
        self.require_stable()?;
        check_unit_interval(z)?;
        if (1.0 - z).abs() < UNIT_BAND {
            return Ok(1.0);
        }
        let denom = self.g_hat(self.lambda_bar * (1.0 - z))? - z;
        if denom.abs() < f64::EPSILON {
            return Err(Error::Singular { arg: z });
        }
        Ok((1.0 - self.rho_hat) * (1.0 - z) / denom)
    }

    pub fn m_hat(&self, z: f64) -> Result<f64> {
        let q = self.q_hat(z)?;
        Ok(self.g_hat(self.lambda_bar * (1.0 - z))? * q)
    }

    pub fn w_hat(&self, s: f64) -> Result<f64> {
        self.require_stable()?;
        if !(s >= 0.0) {
            return Err(Error::Domain { arg: s, bound: "s >= 0".into() });
        }
        if s < UNIT_BAND {
            return Ok(1.0);
        }
        let denom = s - self.lambda_bar + self.lambda_bar * self.g_hat(s)?;
        if denom.abs() < f64::EPSILON {
            return Err(Error::Singular { arg: s });
        }
        Ok(s * (1.0 - self.rho_hat) / denom)
    }

    pub fn pi_hat(&self, z: f64) -> Result<f64> {
        pi_pgf(&self.law, z)
    }

    /// Minimal solution of `b = g_hat(s + lambda_bar (1 - b))`, iterated from 0.
    pub fn busy_b(&self, s: f64, opts: FixedPointOptions) -> Result<f64> {
        self.require_stable()?;
        if !(s >= 0.0) {
            return Err(Error::Domain { arg: s, bound: "s >= 0".into() });
        }
        if s < UNIT_BAND {
            return Ok(1.0);
        }
        fixed_point(|x| self.g_hat(s + self.lambda_bar * (1.0 - x)), opts)
    }

    /// Minimal solution of `m = z g_hat(lambda_bar (1 - m))`, iterated from 0.
    pub fn served_mb(&self, z: f64, opts: FixedPointOptions) -> Result<f64> {
        self.require_stable()?;
        check_unit_interval(z)?;
        if (1.0 - z).abs() < UNIT_BAND {
            return Ok(1.0);
        }
        fixed_point(|m| Ok(z * self.g_hat(self.lambda_bar * (1.0 - m))?), opts)
    }

    /// Evaluates one transform at one argument (`rho` ignores it).
    pub fn evaluate(&self, kind: TransformKind, x: f64) -> Result<f64> {
        let opts = FixedPointOptions::default();
        match kind {
            TransformKind::G => self.g_hat(x),
            TransformKind::W => self.w_hat(x),
            TransformKind::Q => self.q_hat(x),
            TransformKind::M => self.m_hat(x),
            TransformKind::Pi => self.pi_hat(x),
            TransformKind::B => self.busy_b(x, opts),
            TransformKind::Mb => self.served_mb(x, opts),
            TransformKind::Rho => Ok(self.rho_hat),
        }
    }

    /// Validity bound of a transform's argument, for report headers.
    pub fn domain_note(&self, kind: TransformKind) -> String {
        let law = self.law.domain_note();
        match kind {
            TransformKind::G => format!("z >= 0 with 1 - z/{} in {law}", self.lambda_bar),
            TransformKind::W | TransformKind::B => {
                format!("s >= 0 with 1 - s/{} in {law}; requires rho_hat < 1", self.lambda_bar)
            }
            TransformKind::Q | TransformKind::M | TransformKind::Pi | TransformKind::Mb => {
                "z in [0, 1]; requires rho_hat < 1".into()
            }
            TransformKind::Rho => "no argument".into(),
        }
    }

    pub fn estimate(&self, kind: TransformKind, grid: &Grid) -> TransformEstimate {
        let args = if kind == TransformKind::Rho { vec![f64::NAN] } else { grid.points() };
        let mut values = Vec::with_capacity(args.len());
        let mut warnings = Vec::new();
        for &x in &args {
            match self.evaluate(kind, x) {
                Ok(v) => values.push(Some(v)),
                Err(e) => {
                    warnings.push(format!("{kind}({x}): {e}"));
                    values.push(None);
                }
            }
        }
        TransformEstimate { kind, grid: args, values, domain_note: self.domain_note(kind), warnings }
    }
}

fn check_unit_interval(z: f64) -> Result<()> {
    if (0.0..=1.0).contains(&z) {
        Ok(())
    } else {
        Err(Error::Domain { arg: z, bound: "z in [0, 1]".into() })
    }
}

/// Plain iteration `x <- f(x)` from 0 until successive iterates differ by
/// less than `tol`.
pub fn fixed_point<F: Fn(f64) -> Result<f64>>(f: F, opts: FixedPointOptions) -> Result<f64> {
    let mut x = 0.0;
    let mut residual = f64::INFINITY;
    for _ in 0..opts.max_iter {
        let next = f(x)?;
        residual = (next - x).abs();
        x = next;
        if residual < opts.tol {
            return Ok(x);
        }
    }
    Err(Error::NoConvergence { iterations: opts.max_iter, residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransformKind {
    G,
    W,
    Q,
    M,
    Pi,
    B,
    Mb,
    Rho,
}

impl TransformKind {
    pub const ALL: [TransformKind; 8] = [
        TransformKind::G,
        TransformKind::W,
        TransformKind::Q,
        TransformKind::M,
        TransformKind::Pi,
        TransformKind::B,
        TransformKind::Mb,
        TransformKind::Rho,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TransformKind::G => "g",
            TransformKind::W => "w",
            TransformKind::Q => "q",
            TransformKind::M => "m",
            TransformKind::Pi => "pi",
            TransformKind::B => "b",
            TransformKind::Mb => "mb",
            TransformKind::Rho => "rho",
        }
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TransformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TransformKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown transform {s:?}; expected g|w|q|m|pi|b|mb|rho")))
    }
}

/// Evenly spaced evaluation grid `lo:hi:steps`; one step yields just `lo`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl Grid {
    pub fn new(lo: f64, hi: f64, steps: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || hi < lo || steps == 0 {
            return Err(Error::InvalidParameter(format!("bad grid {lo}:{hi}:{steps}")));
        }
        Ok(Self { lo, hi, steps })
    }

    pub fn points(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.lo];
        }
        let last = (self.steps - 1) as f64;
        (0..self.steps).map(|i| self.lo + (self.hi - self.lo) * i as f64 / last).collect()
    }
}

impl FromStr for Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("grid must be lo:hi:steps, got {s:?}"));
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, steps] = parts.as_slice() else { return Err(bad()) };
        Grid::new(
            lo.trim().parse().map_err(|_| bad())?,
            hi.trim().parse().map_err(|_| bad())?,
            steps.trim().parse().map_err(|_| bad())?,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformEstimate {
    pub kind: TransformKind,
    pub grid: Vec<f64>,
    /// `None` where the argument fell outside the domain.
    pub values: Vec<Option<f64>>,
    pub domain_note: String,
    pub warnings: Vec<String>,
}

impl TransformEstimate {
    pub fn succeeded(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pgf::{BasePmf, DiscretePmf, ServiceArrivalLaw};
    use crate::service::ServiceDist;

    fn mm1() -> EstimatorContext<ServiceArrivalLaw> {
        let law = ServiceArrivalLaw::new(ServiceDist::exponential(2.0).unwrap(), 1.0).unwrap();
        EstimatorContext::new(1.0, law).unwrap()
    }

    fn fresh_geometric() -> EstimatorContext<DeltaDirichletPosterior> {
        let post = DeltaDirichletPosterior::new(1.0, BasePmf::geometric(0.5).unwrap()).unwrap();
        EstimatorContext::new(1.0, post).unwrap()
    }

    #[test]
    fn test_unit_values() {
        let ctx = mm1();
        assert_eq!(ctx.g_hat(0.0).unwrap(), 1.0);
        assert_eq!(ctx.q_hat(1.0).unwrap(), 1.0);
        assert_eq!(ctx.m_hat(1.0).unwrap(), 1.0);
        assert_eq!(ctx.w_hat(0.0).unwrap(), 1.0);
        assert_eq!(ctx.pi_hat(1.0).unwrap(), 1.0);
        assert_eq!(ctx.busy_b(0.0, FixedPointOptions::default()).unwrap(), 1.0);
        assert_eq!(ctx.served_mb(0.0, FixedPointOptions::default()).unwrap(), 0.0);
    }

    #[test]
    fn test_gamma_n_fresh_geometric() {
        let ctx = fresh_geometric();
        for z in [-1.5, 0.0, 0.5, 1.0, 1.9] {
            assert!((ctx.gamma_n(z).unwrap() - 0.5 / (1.0 - 0.5 * z)).abs() < 1e-15);
        }
        assert!(matches!(ctx.gamma_n(2.5), Err(Error::Domain { .. })));
        assert_eq!(ctx.rho_hat(), 1.0);
        assert!(matches!(ctx.q_hat(0.5), Err(Error::Unstable { .. })));
    }

    #[test]
    fn test_rho_of_point_mass_at_zero() {
        let ctx = EstimatorContext::new(2.0, DiscretePmf::point_mass(0)).unwrap();
        assert_eq!(ctx.rho_hat(), 0.0);
        assert_eq!(ctx.rho_hat_via_lst().unwrap(), 0.0);
    }

    #[test]
    fn test_mm1_closed_forms() {
        let ctx = mm1();
        let (lambda, mu, rho) = (1.0, 2.0, 0.5);
        for i in 0..=50 {
            let s = i as f64 / 10.0;
            let w = (1.0 - rho) * (mu + s) / (mu + s - lambda);
            assert!((ctx.w_hat(s).unwrap() - w).abs() < 1e-12, "s = {s}");
            assert!((ctx.g_hat(s).unwrap() - mu / (mu + s)).abs() < 1e-14);
        }
        for i in 0..=20 {
            let z = i as f64 / 20.0;
            let q = ctx.q_hat(z).unwrap();
            let g = ctx.g_hat(lambda * (1.0 - z)).unwrap();
            assert!((ctx.m_hat(z).unwrap() - g * q).abs() < 1e-15);
            assert!((ctx.m_hat(z).unwrap() - (1.0 - rho) / (1.0 - rho * z)).abs() < 1e-12);
        }
    }

    #[test]
    fn test_busy_period_quadratic() {
        let ctx = mm1();
        let opts = FixedPointOptions::default();
        let b1 = ctx.busy_b(1.0, opts).unwrap();
        assert!((b1 - (2.0 - 2f64.sqrt())).abs() < 1e-9);
        let again = fixed_point(|x| ctx.g_hat(1.0 + (1.0 - x)), opts).unwrap();
        assert!((again - b1).abs() < 1e-9);
        assert!(ctx.busy_b(10.0, opts).unwrap() < 0.2);
    }

    #[test]
    fn test_served_count_quadratic() {
        let ctx = mm1();
        let m = ctx.served_mb(0.5, FixedPointOptions::default()).unwrap();
        assert!((m - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn test_non_convergence_reports_residual() {
        let err = fixed_point(|x| Ok(x + 1.0), FixedPointOptions { tol: 1e-10, max_iter: 5 }).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { iterations: 5, residual } if residual == 1.0));
    }

    #[test]
    fn test_grid_parsing() {
        assert_eq!("0:0:1".parse::<Grid>().unwrap().points(), vec![0.0]);
        assert_eq!("0:1:3".parse::<Grid>().unwrap().points(), vec![0.0, 0.5, 1.0]);
        assert!("0:1".parse::<Grid>().is_err());
        assert!("1:0:3".parse::<Grid>().is_err());
        assert!("0:1:0".parse::<Grid>().is_err());
    }

    #[test]
    fn test_transform_kind_round_trip() {
        for k in TransformKind::ALL {
            assert_eq!(k.name().parse::<TransformKind>().unwrap(), k);
        }
        assert!("x".parse::<TransformKind>().is_err());
    }

    #[test]
    fn test_estimate_records_domain_failures() {
        let post = DeltaDirichletPosterior::new(1.0, BasePmf::geometric(0.5).unwrap())
            .unwrap()
            .update_with_marks(&[1, 0, 0, 2, 3, 4, 5, 4, 3])
            .unwrap();
        let ctx = EstimatorContext::new(1.0, post).unwrap();
        let est = ctx.estimate(TransformKind::G, &Grid::new(0.0, 4.0, 5).unwrap());
        assert_eq!(est.values.len(), 5);
        // |1 - z| must stay below 2 for the geometric base
        assert_eq!(est.succeeded(), 3);
        assert_eq!(est.warnings.len(), 2);
        assert!(est.values[3].is_none() && est.values[4].is_none());
    }
}

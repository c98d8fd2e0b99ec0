//! Dirichlet-process posterior over homogeneous delta matrices.
//!
//! The transition matrix `M` of the embedded chain is determined by its
//! first row, the law of `A_S`: row `i >= 1` is that row shifted right by
//! `i - 1` places and row 0 equals row 1. The prior draws the row from a
//! Dirichlet process `DP(alpha c_0)`; observing marks `X_1 .. X_n` adds one
//! atom per zero-adjusted increment, so the posterior is `DP(c_n)` with
//!
//! ```text
//! c_n = alpha c_0 + sum_{i < n} delta_{X_{i+1} - X_i + (1 - [X_i == 0])}
//! ```
//!
//! and posterior mean row `c_n / (alpha + n - 1)`.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma};

use crate::error::{Error, Result};
use crate::pgf::{ArrivalLaw, BasePmf, DiscretePmf};
use crate::tau::zero_adjusted_increment;

/// Support cut-off used for normalization checks and explicit pmf vectors.
pub const DEFAULT_TRUNCATION: u64 = 256;

/// Removable-singularity band around `z = 1`.
pub(crate) const UNIT_BAND: f64 = 1e-6;

fn check_marks(marks: &[u64]) -> Result<()> {
    if let Some(p) = marks.windows(2).position(|w| w[0] > w[1] + 1) {
        return Err(Error::NotDownSkipFree { position: p, from: marks[p], to: marks[p + 1] });
    }
    Ok(())
}

/// Multiset of zero-adjusted increments of a mark sequence.
pub fn increments_of(marks: &[u64]) -> Result<BTreeMap<u64, u64>> {
    check_marks(marks)?;
    let mut out = BTreeMap::new();
    for w in marks.windows(2) {
        *out.entry(zero_adjusted_increment(w[0], w[1])).or_insert(0) += 1;
    }
    Ok(out)
}

/// Entry `m_ij` of the homogeneous delta matrix whose first row is `row`.
pub fn delta_entry<L: ArrivalLaw + ?Sized>(row: &L, i: u64, j: u64) -> f64 {
    if i <= 1 {
        row.prob(j)
    } else if j + 1 >= i {
        row.prob(j + 1 - i)
    } else {
        0.0
    }
}

/// `ln P(x_2 .. x_n | x_1)` under the chain with first row `row`.
pub fn path_likelihood<L: ArrivalLaw + ?Sized>(row: &L, marks: &[u64]) -> Result<f64> {
    if marks.is_empty() {
        return Err(Error::EmptyInput("mark sequence"));
    }
    check_marks(marks)?;
    Ok(marks.windows(2).map(|w| delta_entry(row, w[0], w[1]).ln()).sum())
}

/// Stationary system-size pgf `pi(z) = a(z) (1 - z)(1 - a'(1)) / (a(z) - z)`
/// for `z` in `[0, 1]`, with `pi(1) = 1`.
pub fn pi_pgf<L: ArrivalLaw + ?Sized>(law: &L, z: f64) -> Result<f64> {
    let rho = law.mean();
    if !(rho < 1.0) {
        return Err(Error::Unstable { rho });
    }
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::Domain { arg: z, bound: "z in [0, 1]".into() });
    }
    if (1.0 - z).abs() < UNIT_BAND {
        return Ok(1.0);
    }
    let a = law.pgf(z)?;
    let denom = a - z;
    if denom.abs() < f64::EPSILON {
        return Err(Error::Singular { arg: z });
    }
    Ok(a * (1.0 - z) * (1.0 - rho) / denom)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaDirichletPosterior {
    alpha: f64,
    base: BasePmf,
    counts: BTreeMap<u64, u64>,
    n_obs: u64,
}

impl DeltaDirichletPosterior {
    pub fn new(alpha: f64, base: BasePmf) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter(format!("concentration must be positive, got {alpha}")));
        }
        Ok(Self { alpha, base, counts: BTreeMap::new(), n_obs: 0 })
    }

    /// Rebuilds a posterior from stored parts, checking the count invariant.
    pub fn from_parts(alpha: f64, base: BasePmf, counts: BTreeMap<u64, u64>, n_obs: u64) -> Result<Self> {
        let mut post = Self::new(alpha, base)?;
        let total: u64 = counts.values().sum();
        if total != n_obs.saturating_sub(1) {
            return Err(Error::CorruptData(format!("{total} increments recorded for {n_obs} marks")));
        }
        post.counts = counts.into_iter().filter(|&(_, c)| c > 0).collect();
        post.n_obs = n_obs;
        Ok(post)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn base(&self) -> BasePmf {
        self.base
    }

    pub fn counts(&self) -> &BTreeMap<u64, u64> {
        &self.counts
    }

    pub fn count(&self, k: u64) -> u64 {
        self.counts.get(&k).copied().unwrap_or(0)
    }

    pub fn n_obs(&self) -> u64 {
        self.n_obs
    }

    /// Total mass `alpha + n - 1` of `c_n`.
    pub fn total_mass(&self) -> f64 {
        self.alpha + self.n_obs.saturating_sub(1) as f64
    }

    /// Explicit support bound: the default truncation or the largest observed increment.
    pub fn truncation(&self) -> u64 {
        self.counts.keys().next_back().copied().unwrap_or(0).max(DEFAULT_TRUNCATION)
    }

    /// Folds a chunk of marks into the posterior.
    ///
    /// The first chunk contributes all its marks. Every later chunk must begin
    /// with the last mark of the previous one, since increments across a chunk
    /// boundary are only seen when the boundary mark is re-supplied.
    pub fn update_with_marks(&self, marks: &[u64]) -> Result<Self> {
        if marks.is_empty() {
            return Ok(self.clone());
        }
        let increments = increments_of(marks)?;
        let mut next = self.clone();
        for (k, c) in increments {
            *next.counts.entry(k).or_insert(0) += c;
        }
        next.n_obs += if self.n_obs == 0 { marks.len() as u64 } else { marks.len() as u64 - 1 };
        Ok(next)
    }

    /// `c_n(k) / (alpha + n - 1)`; the prior guess `c_0(k)` while at most one
    /// mark has been seen.
    pub fn posterior_mean_pmf(&self, k: u64) -> f64 {
        if self.n_obs <= 1 {
            return self.base.prob(k);
        }
        (self.alpha * self.base.prob(k) + self.count(k) as f64) / self.total_mass()
    }

    pub fn matrix_entry(&self, i: u64, j: u64) -> f64 {
        delta_entry(self, i, j)
    }

    /// Posterior predictive law of the next mark given the current one, as a
    /// pmf over states `0 ..= current + truncation`.
    pub fn predictive_next_state(&self, current: u64) -> DiscretePmf {
        let top = current + self.truncation();
        let probs: Vec<f64> = (0..=top).map(|x| self.matrix_entry(current, x)).collect();
        // The base tail beyond the truncation is below 1e-30 for every supported
        // parameter; DiscretePmf::new checks the residual.
        DiscretePmf::from_weights(probs).expect("posterior mean row has positive mass")
    }

    /// One realization of the random first row from `DP(c_n)`.
    ///
    /// The posterior splits as `W_0 Q + sum_k W_k delta_k` with
    /// `(W_0, W_k..) ~ Dirichlet(alpha, counts_k..)` and an independent
    /// `Q ~ DP(alpha c_0)`. `Q` is drawn by stick-breaking truncated at
    /// `truncation` atoms and renormalized; the observed atoms are exact.
    pub fn sample_posterior_pmf<R: Rng + ?Sized>(&self, truncation: usize, rng: &mut R) -> Result<DiscretePmf> {
        if truncation == 0 {
            return Err(Error::InvalidParameter("stick-breaking truncation must be at least 1".into()));
        }
        let sticks = Beta::new(1.0, self.alpha).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let mut atoms: Vec<(u64, f64)> = Vec::with_capacity(truncation);
        let mut remaining = 1.0;
        for _ in 0..truncation {
            let v = sticks.sample(rng);
            atoms.push((self.base.sample(rng), remaining * v));
            remaining *= 1.0 - v;
        }
        let stick_total: f64 = atoms.iter().map(|&(_, w)| w).sum();

        let mut data_weights: Vec<(u64, f64)> = Vec::with_capacity(self.counts.len());
        let mut prior_weight = 1.0;
        if self.n_obs > 1 {
            prior_weight = Gamma::new(self.alpha, 1.0).expect("positive alpha").sample(rng);
            for (&k, &c) in &self.counts {
                data_weights.push((k, Gamma::new(c as f64, 1.0).expect("positive count").sample(rng)));
            }
        }
        let total = prior_weight + data_weights.iter().map(|&(_, w)| w).sum::<f64>();

        let top = atoms.iter().chain(&data_weights).map(|&(k, _)| k).max().unwrap_or(0);
        let mut probs = vec![0.0; top as usize + 1];
        if stick_total > 0.0 {
            for (k, w) in atoms {
                probs[k as usize] += prior_weight / total * w / stick_total;
            }
        } else {
            probs[atoms[0].0 as usize] += prior_weight / total;
        }
        for (k, w) in data_weights {
            probs[k as usize] += w / total;
        }
        DiscretePmf::from_weights(probs)
    }
}

impl ArrivalLaw for DeltaDirichletPosterior {
    fn prob(&self, k: u64) -> f64 {
        self.posterior_mean_pmf(k)
    }

    fn check_domain(&self, z: f64) -> Result<()> {
        self.base.check_domain(z)
    }

    /// `gamma_n(z) = (alpha c_0(z) + sum_k counts_k z^k) / (alpha + n - 1)`.
    fn pgf(&self, z: f64) -> Result<f64> {
        let base = self.base.pgf(z)?;
        if self.n_obs <= 1 {
            return Ok(base);
        }
        let data: f64 = self.counts.iter().map(|(&k, &c)| c as f64 * z.powf(k as f64)).sum();
        Ok((self.alpha * base + data) / self.total_mass())
    }

    fn pgf_deriv(&self, z: f64) -> Result<f64> {
        let base = self.base.pgf_deriv(z)?;
        if self.n_obs <= 1 {
            return Ok(base);
        }
        let data: f64 = self
            .counts
            .iter()
            .filter(|(&k, _)| k > 0)
            .map(|(&k, &c)| c as f64 * k as f64 * z.powf(k as f64 - 1.0))
            .sum();
        Ok((self.alpha * base + data) / self.total_mass())
    }

    /// `sum_k k cbar_n(k)`, summed explicitly up to the truncation with the
    /// base tail added in closed form.
    fn mean(&self) -> f64 {
        if self.n_obs <= 1 {
            return self.base.mean();
        }
        let data: u128 = self.counts.iter().map(|(&k, &c)| k as u128 * c as u128).sum();
        (data as f64 + self.alpha * self.base.mean()) / self.total_mass()
    }

    fn domain_note(&self) -> String {
        self.base.domain_note()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pgf::ServiceArrivalLaw;
    use crate::service::ServiceDist;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const G: [u64; 9] = [1, 0, 0, 2, 3, 4, 5, 4, 3];

    fn fresh() -> DeltaDirichletPosterior {
        DeltaDirichletPosterior::new(1.0, BasePmf::geometric(0.5).unwrap()).unwrap()
    }

    #[test]
    fn test_increments_of_path_g() {
        assert_eq!(increments_of(&G).unwrap(), BTreeMap::from([(0, 4), (2, 4)]));
        assert_eq!(increments_of(&[0; 6]).unwrap(), BTreeMap::from([(0, 5)]));
        assert!(increments_of(&[3, 1]).is_err());
    }

    #[test]
    fn test_update_with_example_marks() {
        let post = fresh().update_with_marks(&G).unwrap();
        assert_eq!(post.counts(), &BTreeMap::from([(0, 4), (2, 4)]));
        assert_eq!(post.n_obs(), 9);
        assert_eq!(fresh().update_with_marks(&[]).unwrap(), fresh());
        assert!(matches!(fresh().update_with_marks(&[4, 2]), Err(Error::NotDownSkipFree { .. })));
    }

    #[test]
    fn test_chunked_update_with_overlap_matches_batch() {
        let batch = fresh().update_with_marks(&G).unwrap();
        let chunked = fresh().update_with_marks(&G[..4]).unwrap().update_with_marks(&G[3..]).unwrap();
        assert_eq!(batch, chunked);
    }

    #[test]
    fn test_posterior_mean_pmf() {
        let post = fresh();
        for k in 0..5 {
            assert_eq!(post.posterior_mean_pmf(k), BasePmf::geometric(0.5).unwrap().prob(k));
        }
        let post = post.update_with_marks(&G).unwrap();
        assert!((post.posterior_mean_pmf(2) - (0.125 + 4.0) / 9.0).abs() < 1e-15);
        let total: f64 = (0..=post.truncation()).map(|k| post.posterior_mean_pmf(k)).sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn test_mean_matches_explicit_sum() {
        // (4*0 + 4*2 + 1*1) / 9 is exactly one: the boundary case stays unstable
        let post = fresh().update_with_marks(&G).unwrap();
        assert_eq!(post.mean(), 1.0);
        let post = post.update_with_marks(&[3, 3, 2, 6]).unwrap();
        let explicit: f64 = (1..=2000).map(|k| k as f64 * post.posterior_mean_pmf(k)).sum();
        assert!((post.mean() - explicit).abs() < 1e-12);
    }

    #[test]
    fn test_matrix_structure() {
        let post = fresh().update_with_marks(&G).unwrap();
        for j in 0..20 {
            assert_eq!(post.matrix_entry(0, j), post.matrix_entry(1, j));
        }
        assert_eq!(post.matrix_entry(5, 3), 0.0);
        assert_eq!(post.matrix_entry(5, 4), post.posterior_mean_pmf(0));
        for i in 0..6 {
            let row: f64 = (0..=i + post.truncation()).map(|j| post.matrix_entry(i, j)).sum();
            assert!((row - 1.0).abs() < 1e-8, "row {i} sums to {row}");
        }
    }

    #[test]
    fn test_predictive_next_state() {
        let post = fresh();
        let pmf = post.predictive_next_state(0);
        for x in 0..10 {
            assert!((pmf.prob(x) - BasePmf::geometric(0.5).unwrap().prob(x)).abs() < 1e-15);
        }
        let post = post.update_with_marks(&G).unwrap();
        let pmf = post.predictive_next_state(3);
        assert_eq!(pmf.prob(0), 0.0);
        assert_eq!(pmf.prob(1), 0.0);
        assert!(pmf.prob(2) > 0.0);
        assert!((pmf.total() - 1.0).abs() < 1e-10);
        // next = current + r - 1 for an occupied system
        assert!((pmf.prob(4) - post.posterior_mean_pmf(2)).abs() < 1e-15);
    }

    #[test]
    fn test_pi_pgf_mm1() {
        let law = ServiceArrivalLaw::new(ServiceDist::exponential(2.0).unwrap(), 1.0).unwrap();
        for i in 0..=20 {
            let z = i as f64 / 20.0;
            let expected = 0.5 / (1.0 - 0.5 * z);
            assert!((pi_pgf(&law, z).unwrap() - expected).abs() < 1e-12, "z = {z}");
        }
        assert_eq!(pi_pgf(&law, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn test_pi_pgf_empty_system_and_instability() {
        let empty = DiscretePmf::point_mass(0);
        for z in [0.0, 0.3, 0.9, 1.0] {
            assert!((pi_pgf(&empty, z).unwrap() - 1.0).abs() < 1e-15);
        }
        let unstable = DiscretePmf::point_mass(1);
        assert!(matches!(pi_pgf(&unstable, 0.5), Err(Error::Unstable { .. })));
        assert!(pi_pgf(&empty, 1.5).is_err());
    }

    #[test]
    fn test_single_symbol_likelihood_is_zero() {
        let row = DiscretePmf::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(path_likelihood(&row, &[3]).unwrap(), 0.0);
        assert!(path_likelihood(&row, &[]).is_err());
    }

    #[test]
    fn test_likelihood_shift_invariance() {
        let row = DiscretePmf::new(vec![0.3, 0.25, 0.2, 0.15, 0.1]).unwrap();
        let x = [2u64, 1, 3, 3, 2, 4, 3];
        let base = path_likelihood(&row, &x).unwrap();
        for r in 1..5 {
            let y: Vec<u64> = x.iter().map(|v| v + r).collect();
            assert!((path_likelihood(&row, &y).unwrap() - base).abs() < 1e-12);
        }
    }

    #[test]
    fn test_single_stick_is_point_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pmf = fresh().sample_posterior_pmf(1, &mut rng).unwrap();
        assert_eq!(pmf.probs().iter().filter(|&&p| p > 0.0).count(), 1);
        assert!(fresh().sample_posterior_pmf(0, &mut rng).is_err());
    }

    #[test]
    fn test_from_parts_checks_invariant() {
        let base = BasePmf::geometric(0.5).unwrap();
        assert!(DeltaDirichletPosterior::from_parts(1.0, base, BTreeMap::from([(0, 3)]), 4).is_ok());
        assert!(DeltaDirichletPosterior::from_parts(1.0, base, BTreeMap::from([(0, 3)]), 5).is_err());
        assert!(DeltaDirichletPosterior::from_parts(1.0, base, BTreeMap::new(), 1).is_ok());
    }
}

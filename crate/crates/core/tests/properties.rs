//! Property tests for the invariants of the statistic, the posteriors and the
//! plug-in transforms.

use std::collections::BTreeMap;

use mg1_bayes::matrix::{path_likelihood, DeltaDirichletPosterior};
use mg1_bayes::pgf::{ArrivalLaw, BasePmf, DiscretePmf, ServiceArrivalLaw};
use mg1_bayes::rate::GammaPosterior;
use mg1_bayes::service::ServiceDist;
use mg1_bayes::snapshot::{PosteriorSnapshot, Provenance};
use mg1_bayes::tau::{
    admissible_transformations, apply_transformations, enumerate_dss, tau_classes, tau_equiv, transformation_orbit,
    DssString,
};
use mg1_bayes::transforms::{EstimatorContext, FixedPointOptions};
use proptest::prelude::*;
use proptest::sample::Index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn dss(max_len: usize) -> impl Strategy<Value = Vec<u64>> {
    (0u64..5, prop::collection::vec(-1i64..=3, 0..max_len)).prop_map(|(start, steps)| {
        let mut out = vec![start];
        for step in steps {
            let next = (*out.last().unwrap() as i64 + step).max(0);
            out.push(next as u64);
        }
        out
    })
}

fn base() -> impl Strategy<Value = BasePmf> {
    prop_oneof![
        (0.05f64..0.95).prop_map(|p| BasePmf::geometric(p).unwrap()),
        (0.1f64..5.0).prop_map(|t| BasePmf::poisson(t).unwrap()),
    ]
}

fn posterior() -> impl Strategy<Value = DeltaDirichletPosterior> {
    (0.01f64..10.0, base(), prop::collection::btree_map(0u64..40, 1u64..60, 0..12)).prop_map(|(alpha, base, counts)| {
        let n_obs = counts.values().sum::<u64>() + 1;
        DeltaDirichletPosterior::from_parts(alpha, base, counts, n_obs).unwrap()
    })
}

fn row() -> impl Strategy<Value = DiscretePmf> {
    prop::collection::vec(0.01f64..1.0, 12).prop_map(|w| DiscretePmf::from_weights(w).unwrap())
}

/// A law with mean below 0.95, so every queueing transform is defined.
fn stable_law() -> impl Strategy<Value = DiscretePmf> {
    prop::collection::vec(0.0f64..1.0, 2..8)
        .prop_map(|mut w| {
            w[0] += 1.0;
            DiscretePmf::from_weights(w).unwrap()
        })
        .prop_filter("stable", |law| law.mean() < 0.95)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn test_increment_total_is_length_minus_one(s in dss(12)) {
        let s = DssString::new(s).unwrap();
        prop_assert_eq!(s.tau().total_increments(), s.len() - 1);
        prop_assert!(tau_equiv(&s, &s));
    }

    #[test]
    fn test_transformations_preserve_tau(s in dss(10), pick in any::<Index>()) {
        let s = DssString::new(s).unwrap();
        let options = admissible_transformations(&s);
        prop_assume!(!options.is_empty());
        let t = options[pick.index(options.len())].clone();
        let out = apply_transformations(&s, &[t]).unwrap();
        prop_assert!(tau_equiv(&s, &out), "{} -> {}", s, out);
    }

    #[test]
    fn test_likelihood_depends_on_marks_only_through_tau(s in dss(8), pick in any::<Index>(), row in row()) {
        let s = DssString::new(s).unwrap();
        let orbit: Vec<_> = transformation_orbit(&s).into_iter().collect();
        let other = &orbit[pick.index(orbit.len())];
        let (a, b) = (path_likelihood(&row, s.symbols()).unwrap(), path_likelihood(&row, other.symbols()).unwrap());
        prop_assert!(close(a, b, 1e-12), "{} {} vs {} {}", s, a, other, b);
    }

    #[test]
    fn test_likelihood_shift_invariance(s in dss(10), shift in 1u64..5, row in row()) {
        let positive: Vec<u64> = s.iter().map(|&x| x + 1).collect();
        let shifted: Vec<u64> = positive.iter().map(|&x| x + shift).collect();
        let (a, b) = (path_likelihood(&row, &positive).unwrap(), path_likelihood(&row, &shifted).unwrap());
        prop_assert!(close(a, b, 1e-12));
    }

    #[test]
    fn test_gamma_update_split_equals_batch(
        a in 0.1f64..5.0,
        b in 0.1f64..5.0,
        xs in prop::collection::vec(0.001f64..10.0, 0..40),
        ys in prop::collection::vec(0.001f64..10.0, 0..40),
    ) {
        let prior = GammaPosterior::new(a, b).unwrap();
        let all: Vec<f64> = xs.iter().chain(&ys).copied().collect();
        let batch = prior.update(&all).unwrap();
        let split = prior.update(&xs).unwrap().update(&ys).unwrap();
        prop_assert!(close(batch.a, split.a, 1e-13));
        prop_assert!(close(batch.b, split.b, 1e-13));
    }

    #[test]
    fn test_chunked_matrix_update_with_overlap_equals_batch(s in dss(30), pick in any::<Index>(), base in base()) {
        prop_assume!(s.len() >= 2);
        let k = 1 + pick.index(s.len() - 1);
        let fresh = DeltaDirichletPosterior::new(1.5, base).unwrap();
        let batch = fresh.update_with_marks(&s).unwrap();
        let chunked = fresh.update_with_marks(&s[..k]).unwrap().update_with_marks(&s[k - 1..]).unwrap();
        prop_assert_eq!(batch.counts().values().sum::<u64>() + 1, batch.n_obs());
        prop_assert_eq!(batch, chunked);
    }

    #[test]
    fn test_snapshot_text_round_trip(post in posterior(), a in 0.1f64..100.0, b in 0.1f64..100.0) {
        let snap = PosteriorSnapshot {
            prior_gamma: GammaPosterior::default(),
            gamma: GammaPosterior::new(a, b).unwrap(),
            dp: post,
            provenance: Provenance { data_sha256: "00".repeat(32), tool_version: "0.1.0".into() },
        };
        let text = snap.to_text();
        let back = PosteriorSnapshot::parse(&text).unwrap();
        prop_assert_eq!(&back, &snap);
        prop_assert_eq!(back.to_text(), text);
    }

    #[test]
    fn test_transform_boundary_values_and_ranges(law in stable_law(), lambda in 0.2f64..5.0) {
        let ctx = EstimatorContext::new(lambda, law).unwrap();
        let opts = FixedPointOptions::default();
        prop_assert_eq!(ctx.g_hat(0.0).unwrap(), 1.0);
        prop_assert_eq!(ctx.w_hat(0.0).unwrap(), 1.0);
        prop_assert_eq!(ctx.busy_b(0.0, opts).unwrap(), 1.0);
        prop_assert_eq!(ctx.pi_hat(1.0).unwrap(), 1.0);
        prop_assert_eq!(ctx.q_hat(1.0).unwrap(), 1.0);
        prop_assert_eq!(ctx.m_hat(1.0).unwrap(), 1.0);
        prop_assert_eq!(ctx.served_mb(1.0, opts).unwrap(), 1.0);

        let mut last_mb = 0.0;
        for i in 0..20 {
            let z = i as f64 / 20.0;
            let mb = ctx.served_mb(z, opts).unwrap();
            prop_assert!((0.0..=1.0).contains(&mb));
            prop_assert!(mb + 1e-9 >= last_mb);
            last_mb = mb;
            let residual = mb - z * ctx.g_hat(lambda * (1.0 - mb)).unwrap();
            prop_assert!(residual.abs() < 1e-8);
            let s = lambda * z;
            let b = ctx.busy_b(s, opts).unwrap();
            let residual = b - ctx.g_hat(s + lambda * (1.0 - b)).unwrap();
            prop_assert!(residual.abs() < 1e-8);
        }

        // non-negative coefficients: monotone and convex while 1 - z/lambda stays in [0, 1]
        let g: Vec<f64> = (0..=40).map(|i| ctx.g_hat(lambda * i as f64 / 40.0).unwrap()).collect();
        for w in g.windows(3) {
            prop_assert!(w[1] <= w[0] + 1e-12);
            prop_assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-12);
        }
    }

    #[test]
    fn test_busy_period_in_unit_interval_for_exact_laws(mu in 1.1f64..5.0, shape in 1u32..4, s in 0.0f64..20.0) {
        let service = ServiceDist::erlang(shape, mu * shape as f64).unwrap();
        let ctx = EstimatorContext::new(1.0, ServiceArrivalLaw::new(service.clone(), 1.0).unwrap()).unwrap();
        let opts = FixedPointOptions::default();
        let b = ctx.busy_b(s, opts).unwrap();
        prop_assert!((0.0..=1.0).contains(&b));
        prop_assert!((b - service.lst(s + 1.0 - b).unwrap()).abs() < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn test_rho_hat_dual_identity(post in posterior(), lambda in 0.05f64..20.0) {
        let ctx = EstimatorContext::new(lambda, post).unwrap();
        let via_lst = ctx.rho_hat_via_lst().unwrap();
        prop_assert!((via_lst - ctx.rho_hat()).abs() <= 1e-8, "{} vs {}", via_lst, ctx.rho_hat());
    }
}

#[test]
fn test_likelihood_equal_across_exhaustive_classes() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let row =
        DiscretePmf::from_weights((0..10).map(|_| rand::Rng::random_range(&mut rng, 0.01..1.0)).collect()).unwrap();
    for len in 2..=6 {
        for class in tau_classes(&enumerate_dss(len, 3)) {
            let first = path_likelihood(&row, class[0].symbols()).unwrap();
            for s in &class[1..] {
                assert!(close(first, path_likelihood(&row, s.symbols()).unwrap(), 1e-12), "{s}");
            }
        }
    }
}

#[test]
fn test_posterior_draws_average_to_posterior_mean() {
    let counts = BTreeMap::from([(0, 30), (1, 10), (3, 5)]);
    let post = DeltaDirichletPosterior::from_parts(2.0, BasePmf::geometric(0.5).unwrap(), counts, 46).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let draws = 10_000;
    let ks = 0..6u64;
    let mut sum = [0.0; 6];
    let mut sum_sq = [0.0; 6];
    for _ in 0..draws {
        let pmf = post.sample_posterior_pmf(100, &mut rng).unwrap();
        for k in ks.clone() {
            let p = pmf.probs().get(k as usize).copied().unwrap_or(0.0);
            sum[k as usize] += p;
            sum_sq[k as usize] += p * p;
        }
    }
    for k in ks {
        let i = k as usize;
        let mean = sum[i] / draws as f64;
        let sd = ((sum_sq[i] / draws as f64 - mean * mean) / draws as f64).sqrt();
        let target = post.posterior_mean_pmf(k);
        assert!((mean - target).abs() <= 3.0 * sd, "k={k}: {mean} vs {target} (sd {sd})");
    }
}

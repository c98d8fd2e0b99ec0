//! Distributional checks on simulated paths against independent closed forms.

use mg1_bayes::service::ServiceDist;
use mg1_bayes::sim::{parse_departures, sample_arrivals_during_service, simulate_path, SimConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::function::factorial::ln_factorial;

fn ks_against(empirical: &[f64], cdf: impl Fn(usize) -> f64) -> f64 {
    let mut acc = 0.0;
    let mut worst: f64 = 0.0;
    for (k, p) in empirical.iter().enumerate() {
        acc += p;
        worst = worst.max((acc - cdf(k)).abs());
    }
    worst
}

fn frequencies(values: &[u64], len: usize) -> Vec<f64> {
    let mut freq = vec![0.0; len];
    for &v in values {
        if (v as usize) < len {
            freq[v as usize] += 1.0 / values.len() as f64;
        }
    }
    freq
}

#[test]
fn test_mm1_interdeparture_mean_is_one_over_lambda() {
    let path = simulate_path(&SimConfig::new(1.0, ServiceDist::exponential(2.0).unwrap(), 1_000_000, 17)).unwrap();
    let gaps = path.interdeparture_times();
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    assert!((mean - 1.0).abs() < 0.01, "mean interdeparture time {mean}");
}

#[test]
fn test_mm1_mark_pmf_is_geometric() {
    let n = 50_000;
    let path = simulate_path(&SimConfig::new(1.0, ServiceDist::exponential(2.0).unwrap(), n, 42)).unwrap();
    let freq = frequencies(&path.marks(), 60);
    // (1 - rho) rho^k with rho = 1/2
    let ks = ks_against(&freq, |k| 1.0 - 0.5f64.powi(k as i32 + 1));
    assert!(ks < 0.01, "KS distance {ks}");
}

#[test]
fn test_marks_are_down_skip_free_and_times_increase() {
    let path = simulate_path(&SimConfig::new(0.8, ServiceDist::erlang(2, 2.0).unwrap(), 20_000, 5)).unwrap();
    for w in path.records.windows(2) {
        assert!(w[1].t > w[0].t);
        assert!(w[1].n + 1 >= w[0].n);
    }
}

#[test]
fn test_same_seed_same_bytes() {
    let config = SimConfig::new(1.0, ServiceDist::deterministic(0.7).unwrap(), 2_000, 99);
    let a = simulate_path(&config).unwrap().to_csv();
    let b = simulate_path(&config).unwrap().to_csv();
    assert_eq!(a, b);
    let other = simulate_path(&SimConfig::new(1.0, ServiceDist::deterministic(0.7).unwrap(), 2_000, 100)).unwrap();
    assert_ne!(a, other.to_csv());
}

#[test]
fn test_csv_round_trip_is_exact() {
    let path = simulate_path(&SimConfig::new(1.0, ServiceDist::exponential(3.0).unwrap(), 500, 1)).unwrap();
    assert_eq!(parse_departures(&path.to_csv()).unwrap(), path.records);
}

#[test]
fn test_arrivals_per_exponential_service_are_geometric() {
    let service = ServiceDist::exponential(2.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let draws: Vec<u64> =
        (0..200_000).map(|_| sample_arrivals_during_service(service.sample(&mut rng), 1.0, &mut rng)).collect();
    let freq = frequencies(&draws, 40);
    // P(A = k) = (2/3)(1/3)^k
    for (k, f) in freq.iter().take(6).enumerate() {
        let p = (2.0 / 3.0) * (1.0f64 / 3.0).powi(k as i32);
        let sd = (p * (1.0 - p) / draws.len() as f64).sqrt();
        assert!((f - p).abs() < 5.0 * sd, "k={k}: {f} vs {p}");
    }
}

#[test]
fn test_arrivals_per_deterministic_service_are_poisson() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let draws: Vec<u64> = (0..200_000).map(|_| sample_arrivals_during_service(0.5, 1.0, &mut rng)).collect();
    let freq = frequencies(&draws, 20);
    for (k, f) in freq.iter().take(5).enumerate() {
        let p = (-0.5 + k as f64 * 0.5f64.ln() - ln_factorial(k as u64)).exp();
        let sd = (p * (1.0 - p) / draws.len() as f64).sqrt();
        assert!((f - p).abs() < 5.0 * sd, "k={k}: {f} vs {p}");
    }
}

#[test]
fn test_unstable_and_empty_configs_rejected() {
    assert!(simulate_path(&SimConfig::new(2.0, ServiceDist::exponential(2.0).unwrap(), 10, 0)).is_err());
    assert!(simulate_path(&SimConfig::new(1.0, ServiceDist::exponential(2.0).unwrap(), 0, 0)).is_err());
}

//! Simulates an M/M/1 queue and summarizes the marked departure process.
//!
//! `cargo run --example simulate_mm1 -- [n] [seed]`

use mg1_bayes::service::ServiceDist;
use mg1_bayes::sim::{simulate_path, SimConfig};

fn main() -> mg1_bayes::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(100_000);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(7);

    let config = SimConfig::new(1.0, ServiceDist::exponential(2.0)?, n, seed);
    let path = simulate_path(&config)?;
    let gaps = path.interdeparture_times();
    let marks = path.marks();

    println!("lambda=1 service={} rho={}", config.service, config.rho());
    println!("mean interdeparture time {:.4} (expected 1)", gaps.iter().sum::<f64>() / gaps.len() as f64);
    println!("{:>3} {:>9} {:>9}", "k", "empirical", "(1-rho)rho^k");
    for k in 0..6u64 {
        let freq = marks.iter().filter(|&&m| m == k).count() as f64 / n as f64;
        println!("{k:>3} {freq:>9.4} {:>9.4}", 0.5 * 0.5f64.powi(k as i32));
    }
    Ok(())
}

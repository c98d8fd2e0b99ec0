//! Conjugate Gamma posterior for the arrival rate from inter-departure times.
//! The last column bounds the posterior mass outside `[0.95, 1.05]`.

use mg1_bayes::rate::GammaPosterior;
use mg1_bayes::service::ServiceDist;
use mg1_bayes::sim::{simulate_path, SimConfig};

fn main() -> mg1_bayes::Result<()> {
    let lambda = 1.0;
    let path = simulate_path(&SimConfig::new(lambda, ServiceDist::erlang(2, 4.0)?, 50_000, 3))?;
    let gaps = path.interdeparture_times();
    let prior = GammaPosterior::default();
    println!("{:>7} {:>9} {:>11} {:>12}", "n", "mean", "sd", "Chebyshev");
    for n in [10, 100, 1_000, 10_000, gaps.len()] {
        let post = prior.update(&gaps[..n])?;
        println!(
            "{n:>7} {:>9.4} {:>11.5} {:>12.2e}",
            post.mean(),
            post.variance().sqrt(),
            post.mass_outside_bound(lambda, 0.05)
        );
    }
    Ok(())
}

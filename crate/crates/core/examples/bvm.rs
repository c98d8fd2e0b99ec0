//! Posterior normality of the random pgf and of the arrival rate.

use mg1_bayes::service::ServiceDist;
use mg1_bayes::validation::{bvm_experiment, covariance_h, oracle_arrival_law, BvmConfig};

fn main() -> mg1_bayes::Result<()> {
    let service = ServiceDist::exponential(2.0)?;
    let a0 = oracle_arrival_law(&service, 1.0)?;
    for z in [0.2, 0.5, 0.8] {
        println!("H({z}, {z}) = {:.6}", covariance_h(&a0, z, z)?);
    }
    let report = bvm_experiment(&BvmConfig::new(1.0, service, 42))?;
    print!("{}", report.table());
    Ok(())
}

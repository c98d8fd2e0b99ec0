//! Posterior consistency along growing prefixes of one M/M/1 path.

use mg1_bayes::service::ServiceDist;
use mg1_bayes::validation::{consistency_experiment, ConsistencyConfig};

fn main() -> mg1_bayes::Result<()> {
    let config = ConsistencyConfig::new(1.0, ServiceDist::exponential(2.0)?, 42);
    let report = consistency_experiment(&config)?;
    print!("{}", report.table());
    Ok(())
}

//! Arrivals-per-service probabilities by adaptive quadrature, checked against
//! the closed forms for exponential and Erlang service.

use mg1_bayes::service::ServiceDist;
use mg1_bayes::validation::{oracle_a_pmf_detailed, oracle_checks, OracleConfig};

fn main() -> mg1_bayes::Result<()> {
    let service = ServiceDist::erlang(3, 2.0)?;
    let cfg = OracleConfig::default();
    println!("Erlang(3, 2) service, lambda = 1");
    for k in [0, 1, 5, 20] {
        let a = oracle_a_pmf_detailed(&service, 1.0, k, &cfg)?;
        println!(
            "  A({k:>2}) = {:.12e}  quad err {:.1e}  tail {:.1e}  horizon {:.1}",
            a.value, a.quad_error, a.tail_bound, a.horizon
        );
    }
    print!("{}", oracle_checks()?.table());
    Ok(())
}

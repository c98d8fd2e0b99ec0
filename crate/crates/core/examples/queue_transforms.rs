//! Plug-in estimates of the queueing transforms from one simulated path,
//! next to the exact M/M/1 values.

use mg1_bayes::service::ServiceDist;
use mg1_bayes::sim::{simulate_path, SimConfig};
use mg1_bayes::transforms::{EstimatorContext, FixedPointOptions};
use mg1_bayes::validation::PriorParams;

fn main() -> mg1_bayes::Result<()> {
    let path = simulate_path(&SimConfig::new(1.0, ServiceDist::exponential(2.0)?, 50_000, 11))?;
    let (gamma, dp) = PriorParams::default().posteriors(&path.records)?;
    let ctx = EstimatorContext::from_posteriors(&gamma, dp)?;
    println!("lambda_bar {:.4}  rho_hat {:.4}  via LST {:.4}", ctx.lambda_bar(), ctx.rho_hat(), ctx.rho_hat_via_lst()?);

    let opts = FixedPointOptions::default();
    println!("{:>5} {:>8} {:>8} {:>8} {:>8}", "x", "g_hat", "g", "w_hat", "w");
    for s in [0.0, 0.5, 1.0, 1.5] {
        println!(
            "{s:>5} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
            ctx.g_hat(s)?,
            2.0 / (2.0 + s),
            ctx.w_hat(s)?,
            (2.0 - 1.0) / (2.0 - 1.0 + s)
        );
    }
    println!("{:>5} {:>8} {:>8} {:>8} {:>8}", "z", "pi_hat", "pi", "mb_hat", "mb");
    for z in [0.0f64, 0.25, 0.5, 0.75] {
        let mb = (3.0 - (9.0 - 8.0 * z).sqrt()) / 2.0;
        println!(
            "{z:>5} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
            ctx.pi_hat(z)?,
            0.5 / (1.0 - 0.5 * z),
            ctx.served_mb(z, opts)?,
            mb
        );
    }
    let b1 = (4.0 - 8f64.sqrt()) / 2.0;
    println!("busy period LST at 1: {:.4} (exact {b1:.4})", ctx.busy_b(1.0, opts)?);
    Ok(())
}

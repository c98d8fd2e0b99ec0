//! Dirichlet-process posterior over the arrivals-per-service law, its mean
//! transition matrix and predictive.

use mg1_bayes::matrix::DeltaDirichletPosterior;
use mg1_bayes::pgf::{ArrivalLaw, BasePmf};

fn main() -> mg1_bayes::Result<()> {
    let marks = [1, 0, 0, 2, 3, 4, 5, 4, 3];
    let post = DeltaDirichletPosterior::new(1.0, BasePmf::geometric(0.5)?)?.update_with_marks(&marks)?;
    println!("marks {marks:?}");
    println!("increment counts {:?}, total mass {}", post.counts(), post.total_mass());
    for k in 0..5 {
        println!("  cbar({k}) = {:.5}", post.posterior_mean_pmf(k));
    }
    println!("posterior mean of A: {}", post.mean());

    println!("mean transition matrix, rows 0..4, columns 0..6:");
    for i in 0..4 {
        let row: Vec<String> = (0..6).map(|j| format!("{:.3}", post.matrix_entry(i, j))).collect();
        println!("  {}", row.join(" "));
    }
    let next = post.predictive_next_state(3);
    println!("P(next = j | current = 3) for j = 2..6: {:?}", (2..7).map(|j| next.prob(j)).collect::<Vec<_>>());
    Ok(())
}

//! The sufficient statistic of a down-skip-free mark string and the rewrites
//! that preserve it.

use mg1_bayes::tau::{count_tau_class, tau_equiv, tau_tilde_equiv, transformation_orbit, DssString};

fn main() -> mg1_bayes::Result<()> {
    let g: DssString = "100234543".parse()?;
    let t = g.tau();
    println!(
        "{g}: length {} initial {} zeros {} increments {:?}",
        t.length,
        t.initial,
        t.zero_count,
        t.increments_map()
    );

    let h: DssString = "100002345".parse()?;
    println!("{g} vs {h}: tau {} tilde-tau {}", tau_equiv(&g, &h), tau_tilde_equiv(&g, &h));

    let a: DssString = "121211100".parse()?;
    for other in ["102232101", "123332100"] {
        let b: DssString = other.parse()?;
        println!("{a} vs {b}: tau {}", tau_equiv(&a, &b));
    }
    let orbit = transformation_orbit(&a);
    println!("{a}: {} strings reachable by block switches and increment permutations", orbit.len());
    println!("{a}: class size over states 0..=5 is {}", count_tau_class(&a, 5)?);
    Ok(())
}

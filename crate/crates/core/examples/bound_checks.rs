// Pair, decomposed, two-tree and global bounds on a random graph.

use mjp_poisson::bounds;
use mjp_poisson::graph::{ScalarField, StateSet};
use mjp_poisson::random::{self, RandomGraphConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = random::instance_rng(3, 0);
    let g = random::random_graph(&mut rng, &RandomGraphConfig::with_states(5));
    let f = random::random_field(&mut rng, g.n());

    let pair = bounds::all_pair_bounds(&g, &f)?;
    println!("{}", pair.to_table());
    let two = bounds::two_tree_bound(&g, &f)?;
    println!("two-tree bound holds: {} (min slack {:.3e})", two.passed, two.min_slack());
    let global = bounds::global_bound(&g, &f)?;
    println!("literal global bound holds: {}", global.passed);

    // f = LE leaves h = 0 and the decomposed bound is an equality
    let e = ScalarField::new(vec![0.0, 1.0, -0.5, 0.25, 2.0]);
    let f = ScalarField::new(g.generator().apply(e.values()));
    let d = StateSet::from_indices(g.n(), &[0])?;
    let rep = bounds::decomposed_bound(&g, &f, &e, &d)?;
    println!("decomposed: h_sup {:.1e}, min slack {:.1e}", rep.details["h_sup"], rep.min_slack());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("bounds example");
}

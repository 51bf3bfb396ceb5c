// Stationary distribution of a small chain, by null space and by in-tree
// weights.

use mjp_poisson::forest::{self, ForestOptions};
use mjp_poisson::graph::RateGraph;
use mjp_poisson::spectral;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let g = RateGraph::from_indexed(
        vec!["a".into(), "b".into(), "c".into()],
        [(0, 1, 2.0), (1, 2, 1.0), (2, 0, 3.0), (1, 0, 0.5)],
    )?;
    let rho = spectral::stationary_distribution(&g.generator())?;
    let (trees, total) = forest::tree_weight_vector(&g, &ForestOptions::enumerate())?;
    println!("state  rho(null space)  w(x)/W");
    for x in 0..g.n() {
        println!("{:5}  {:15.12}  {:.12}", g.state_name(x), rho[x], trees[x] / total);
        assert!((rho[x] - trees[x] / total).abs() < 1e-12);
    }
    println!("W = {total}");
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("stationary example");
}

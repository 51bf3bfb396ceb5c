// Mean first-passage matrix by three routes, and the Kemeny constant.

use mjp_poisson::forest::ForestOptions;
use mjp_poisson::graph::RateGraph;
use mjp_poisson::potential::{self, MfptMethod};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let g = RateGraph::with_numbered_states(
        4,
        [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 0.5), (3, 0, 1.5), (2, 0, 1.0), (0, 2, 0.3)],
    )?;
    let opts = ForestOptions::default();
    let linear = potential::mfpt_matrix(&g, MfptMethod::Linear, &opts)?;
    println!("tau(x, z):");
    for x in 0..g.n() {
        let row: Vec<String> = (0..g.n()).map(|z| format!("{:8.4}", linear.get(x, z))).collect();
        println!("  {}", row.join(" "));
    }
    for m in [MfptMethod::Forest, MfptMethod::GroupInverse] {
        let other = potential::mfpt_matrix(&g, m, &opts)?;
        let d = linear.max_relative_difference(&other);
        println!("{:13} max relative difference {d:.1e}", m.name());
        assert!(d < 1e-8);
    }
    let k = potential::kemeny_functional(&g, &opts)?;
    println!(
        "Kemeny constant {:.10} (forest ratio {:.10}, spread {:.1e})",
        k.value, k.forest_value, k.max_spread
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("first passage example");
}

// Escape times from a subset, the sum rule, and a stopped Poisson problem.

use mjp_poisson::graph::{RateGraph, ScalarField, StateSet};
use mjp_poisson::potential::{self, AbsorbingProblem};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let g = RateGraph::with_numbered_states(3, [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)])?;
    let h = StateSet::from_indices(3, &[0, 1])?;
    let s = potential::mean_escape_time(&g, &h)?;
    println!("mean escape time from {{0, 1}}: {:?}", s.values());
    assert_eq!(s.values(), &[2.0, 1.0, 0.0]);
    println!("sum rule residual {:.1e}", potential::escape_sum_rule_residual(&g, &h)?);
    println!("slowest decay rate in H {:.6}", -potential::stopped_spectral_bound(&g, &h));

    // accumulate f = (1, 2, ·) until exit, with boundary value 5 on state 2
    let p = AbsorbingProblem::new(
        h,
        ScalarField::new(vec![1.0, 2.0, 0.0]),
        ScalarField::new(vec![0.0, 0.0, 5.0]),
    )?;
    let u = potential::solve_general_poisson(&g, &p)?;
    println!("u = {:?}  residual {:.1e}", u.values(), potential::poisson_residual(&g, &p, &u));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("escape example");
}

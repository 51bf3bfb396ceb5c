// Simulated paths checked against the linear solves.

use mjp_poisson::graph::{RateGraph, ScalarField};
use mjp_poisson::potential::{self, QuasipotentialMethod};
use mjp_poisson::trajectory::{self, Start, StopRule};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let g = RateGraph::with_numbered_states(3, [(0, 1, 1.0), (1, 2, 2.0), (2, 0, 1.0), (1, 0, 1.0)])?;
    let seed = 2024;
    let path = trajectory::sample_path(&g, 0, &StopRule::HitTarget(2), seed);
    println!("one path to 2: {:?} in time {:.3}", path.states(), path.duration());

    let tau = potential::mfpt_matrix(&g, potential::MfptMethod::Linear, &Default::default())?;
    let est = trajectory::estimate_mfpt(&g, 0, 2, 5000, seed)?;
    println!("tau(0,2) = {:.4}, estimate {:.4} ± {:.4}", tau.get(0, 2), est.mean, est.std_error);

    let rho = mjp_poisson::spectral::stationary_distribution(&g.generator())?;
    let f = ScalarField::new(vec![1.0, -1.0, 0.5]).centered(rho.values());
    let v = potential::quasipotential(&g, &f, QuasipotentialMethod::Linear, &Default::default())?;
    let ex = trajectory::estimate_excess(&g, Start::State(0), &f, 20.0, 5000, seed)?;
    println!(
        "V(0) = {:.4}, excess estimate {:.4} ± {:.4} (truncation {:.1e})",
        v.values[0], ex.estimate.mean, ex.estimate.std_error, ex.truncation_allowance
    );
    let occ = trajectory::occupation_fractions(&g, 0, 200.0, 200, seed)?;
    for (x, o) in occ.iter().enumerate() {
        println!("state {x}: occupation {:.4} vs rho {:.4}", o.mean, rho[x]);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("monte carlo example");
}

// Global bound across an Arrhenius family `k(λ) = a e^{−λb}`.

use mjp_poisson::bounds::{self, SweepSource};
use mjp_poisson::graph::{ParamRateGraph, ScalarField};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let pg = ParamRateGraph::from_indexed(
        vec!["a".into(), "b".into(), "c".into()],
        [
            (0, 1, 1.0, 1.0),
            (1, 0, 1.0, 0.0),
            (0, 2, 1.0, 1.0),
            (2, 0, 1.0, 0.0),
            (1, 2, 1.0, 1.0),
            (2, 1, 1.0, 1.0),
        ],
    )?;
    let f = ScalarField::new(vec![1.0, 0.0, -1.0]);
    let grid: Vec<f64> = (0..=10).map(|i| 2.0 * i as f64).collect();
    let rep = bounds::uniform_bound_sweep(&pg, &SweepSource(f.clone()), &grid)?;
    println!("lambda  W            best tree  bound      max|V|");
    for r in &rep.rows {
        println!(
            "{:6.1}  {:11.4e}  {:9.4}  {:9.4}  {:9.4e}",
            r.lambda, r.w, r.best_tree_w, r.bound, r.attained
        );
    }
    if let Some(c) = bounds::analytic_sweep_constant(&pg, &f) {
        println!("analytic constant {c}");
    }
    rep.write_sweep_csv(std::io::sink())?;
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("sweep example");
}

// Solves LV + f = 0 three ways and checks they agree.

use mjp_poisson::graph::{RateGraph, ScalarField};
use mjp_poisson::potential::{self, QuasipotentialMethod};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let g = RateGraph::from_indexed(vec!["a".into(), "b".into()], [(0, 1, 2.0), (1, 0, 1.0)])?;
    // indicator of `a`; its stationary mean 1/3 is removed automatically
    let f = ScalarField::new(vec![1.0, 0.0]);
    let mut first: Option<Vec<f64>> = None;
    for m in QuasipotentialMethod::ALL {
        let q = potential::quasipotential(&g, &f, m, &Default::default())?;
        println!(
            "{:9} V = {:?}  removed mean {:.6}  residual {:.1e}",
            m.name(),
            q.values.values(),
            q.source_mean_removed,
            q.residual
        );
        match &first {
            None => first = Some(q.values.into_values()),
            Some(v) => {
                for (a, b) in v.iter().zip(q.values.values()) {
                    assert!((a - b).abs() < 1e-7);
                }
            }
        }
    }
    // V = (2/9, -1/9)
    let v = first.unwrap();
    assert!((v[0] - 2.0 / 9.0).abs() < 1e-12);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("quasipotential example");
}

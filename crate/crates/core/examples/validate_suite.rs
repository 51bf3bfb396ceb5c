// Runs the identity suite on a handful of random graphs.

use mjp_poisson::validate::{self, ValidationConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ValidationConfig {
        n_random: 5,
        seed: 1,
        mc_samples: 500,
        ..ValidationConfig::default()
    };
    let report = validate::validate_suite(&cfg, None)?;
    let failed: Vec<_> = report.failures().map(|c| c.name.clone()).collect();
    println!("{} checks, {} failed", report.checks.len(), failed.len());
    for w in &report.warnings {
        println!("warning: {w}");
    }
    if !failed.is_empty() {
        return Err(format!("failed: {failed:?}").into());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("validation example");
}

//! Decay exponents of projection norms along truncations of a rapidly decreasing diagonal.

use smoothlab::diagnostics::characterize;
use smoothlab::models::ModelSpec;

fn main() -> smoothlab::Result<()> {
    let spec = ModelSpec::diag_exp(1.0, 8);
    let family = [8, 16, 24, 32].map(|n| spec.with_dim(n).generate()).into_iter().collect::<Result<Vec<_>, _>>()?;
    let report = characterize(&family, &[0, 1], &[0.5, 1.0])?;
    for (key, fit) in &report.fitted_exponents {
        println!("{key:<24} slope {:+.3} over {} points", fit.slope, fit.points);
    }
    for (key, ok) in &report.verdicts {
        println!("{key:<24} {ok}");
    }
    println!("passed: {}", report.passed);
    Ok(())
}

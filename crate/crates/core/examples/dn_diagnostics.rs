//! Interpolation inequality `||x||_q <= ||x||_0^{1-θ} ||x||_r^θ` on random smooth matrices.

use smoothlab::diagnostics::dn_check;
use smoothlab::models::ModelSpec;

fn main() -> smoothlab::Result<()> {
    let samples = (0..20)
        .map(|seed| ModelSpec::smooth_random(4.0, seed, 24).generate())
        .collect::<Result<Vec<_>, _>>()?;
    for (q, r, theta) in [(1, 2, 0.5), (1, 4, 0.25), (2, 3, 0.75)] {
        let report = dn_check(&samples, q, r, theta)?;
        println!(
            "q={q} r={r} theta={theta}: fitted C = {:.4}, violations {}",
            report.fitted_constant, report.violations
        );
    }
    Ok(())
}

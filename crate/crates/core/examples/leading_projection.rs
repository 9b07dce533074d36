//! Power iteration towards the leading spectral projection, with its bound.

use smoothlab::models::ModelSpec;
use smoothlab::spectral::extract_leading_projection;

fn main() -> smoothlab::Result<()> {
    let x = ModelSpec::diag_power(1.0, 12).generate()?;
    let trace = extract_leading_projection(&x, 12, &[0, 2])?;
    println!("|lambda_1| = {}  gap ratio = {}", trace.leading_modulus, trace.gap_ratio);
    println!("{:>3} {:>11} {:>11} {:>11} {:>11}", "k", "err_0", "bound_0", "err_2", "bound_2");
    for (i, it) in trace.iterates.iter().enumerate() {
        println!(
            "{:>3} {:>11.3e} {:>11.3e} {:>11.3e} {:>11.3e}",
            it.k, it.error[&0], trace.bound[&0][i], it.error[&2], trace.bound[&2][i]
        );
    }
    println!("violations above rounding floor: {}", trace.violations_above_floor(1e-6).len());
    Ok(())
}

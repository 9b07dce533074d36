//! Apply `t ↦ |t|^θ` and a polynomial through the spectral decomposition.

use smoothlab::calculus::{apply, continuity_estimate, estimate_holder_on, fractional_power, polynomial_of_matrix, SpectralFunction};
use smoothlab::models::ModelSpec;
use smoothlab::spectral::decompose_default;
use num_complex::Complex64;

fn main() -> smoothlab::Result<()> {
    let x = ModelSpec::smooth_random(3.0, 11, 10).generate()?;
    let x = x.multiply(&x.involution())?;
    let d = decompose_default(&x)?;

    let root = fractional_power(&x, 0.5)?;
    let back = root.multiply(&root)?.sub(&x)?.op_norm_q(0)?;
    println!("||sqrt(x)^2 - x||_0 = {back:.2e}");

    let f = SpectralFunction::power(0.5)?;
    let h = estimate_holder_on(&f, &d, 24)?;
    println!("Hölder fit: theta = {:.3}, C = {:.3}", h.theta, h.constant);
    for q in [1, 2] {
        let c = continuity_estimate(&f, &d, q, q + 2)?;
        println!("q = {q}: ||f(x)||_q = {:.4e} <= {:.4e}", c.lhs, c.rhs);
    }

    let coeffs = [0.0, 2.0, -1.0].map(|v| Complex64::new(v, 0.0));
    let via_spectrum = apply(&SpectralFunction::polynomial(&coeffs)?, &d)?;
    let direct = polynomial_of_matrix(&coeffs, &x)?;
    println!("polynomial routes differ by {:.2e}", via_spectrum.sub(&direct)?.op_norm_q(0)?);
    Ok(())
}

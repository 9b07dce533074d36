//! Recover the idempotents of `a = Σ c_n P_n` knowing only `a` and a spanning set.

use num_complex::Complex64;
use smoothlab::matrix::GradedMatrix;
use smoothlab::spectral::recover_idempotents;

fn main() -> smoothlab::Result<()> {
    let dim = 5;
    let span: Vec<GradedMatrix> = (1..=dim).map(|n| GradedMatrix::unit_projection(dim, n)).collect::<Result<_, _>>()?;
    let coeffs = [1.0, 0.8, 0.8, -0.5, 0.3];
    let mut a = GradedMatrix::zeros(dim)?;
    for (c, p) in coeffs.iter().zip(&span) {
        a = a.add_scaled(Complex64::new(*c, 0.0), p)?;
    }

    for r in recover_idempotents(&a, &span)? {
        let diag: Vec<String> = (1..=dim).map(|j| format!("{:.3}", r.idempotent.get(j, j).re)).collect();
        println!("c = {:+.3}  diag(E) = [{}]", r.coefficient.re, diag.join(", "));
    }
    Ok(())
}

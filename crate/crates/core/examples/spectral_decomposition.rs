//! Decompose a conjugated diagonal and rebuild it from its projections.

use num_complex::Complex64;
use smoothlab::models::{random_rotations, ModelSpec, SeededRng};
use smoothlab::spectral::{decompose_default, reconstruct};

fn main() -> smoothlab::Result<()> {
    let values = [2.0, -1.0, 0.5, 0.5, 0.0, 0.0].map(|v| Complex64::new(v, 0.0));
    let rotations = random_rotations(6, 12, &mut SeededRng::new(7));
    let x = ModelSpec::givens_conjugated(ModelSpec::diagonal(&values, 6), rotations).generate()?;

    let d = decompose_default(&x)?;
    for ((lambda, p), m) in d.eigenvalues().iter().zip(d.projections()).zip(d.multiplicities()) {
        println!("lambda = {:+.6}  multiplicity {m}  ||P||_1 = {:.4}", lambda.re, p.op_norm_q(1)?);
    }
    let err = reconstruct(&d).sub(&x)?.op_norm_q(0)?;
    println!("reconstruction error {err:.2e}");
    Ok(())
}

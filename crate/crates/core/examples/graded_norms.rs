//! Graded norms of a unit vector, its projection, and a diagonal.

use smoothlab::graded::GradedVector;
use smoothlab::matrix::GradedMatrix;

fn main() -> smoothlab::Result<()> {
    let e3 = GradedVector::unit(8, 3)?;
    let p3 = GradedMatrix::unit_projection(8, 3)?;
    let d = GradedMatrix::real_diagonal(&(1..=8).map(|n| 1.0 / (n * n * n) as f64).collect::<Vec<_>>())?;

    println!("{:>2} {:>12} {:>12} {:>12} {:>12}", "q", "|e3|_q", "||P3||_q", "||d||_q", "|||d|||_q");
    for q in 0..=4 {
        println!(
            "{q:>2} {:>12.4} {:>12.4} {:>12.4e} {:>12.4e}",
            e3.norm_q(q)?,
            p3.op_norm_q(q)?,
            d.op_norm_q(q)?,
            d.matrix_norm_q(q)?
        );
    }
    Ok(())
}

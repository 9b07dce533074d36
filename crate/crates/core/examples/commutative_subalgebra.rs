//! Minimal projections, characters and maximality of a generated subalgebra.

use smoothlab::matrix::GradedMatrix;
use smoothlab::subalgebra::{characters, koethe_representation, maximality_check, minimal_basis, single_generator};

fn main() -> smoothlab::Result<()> {
    let dim = 4;
    let p12 = GradedMatrix::unit_projection(dim, 1)?.add(&GradedMatrix::unit_projection(dim, 2)?)?;
    let p2 = GradedMatrix::unit_projection(dim, 2)?;
    let family = minimal_basis(&[p12, p2])?;
    println!("minimal projections: {} with ranks {:?}", family.len(), family.ranks());

    let check = maximality_check(&family)?;
    println!("commutant dimension {} vs family size {}", check.commutant_dimension, check.family_size);

    let full = family.completed()?;
    println!("completed family ranks {:?}, maximal: {}", full.ranks(), maximality_check(&full)?.by_commutant());

    let (g, norms) = single_generator(&full, &[0, 1, 2])?;
    let chi = characters(&full)?;
    let values: Vec<f64> = chi.iter().map(|c| c.value(&g).map(|v| v.re)).collect::<Result<_, _>>()?;
    println!("single generator norms {norms:?}, character values {values:?}");

    let k = koethe_representation(&full, &[0, 1, 2], &[(0, 1), (1, 2)])?;
    for (row, p) in k.norm_table.iter().zip(1..) {
        println!("||P_{p}||_q = {row:?}");
    }
    Ok(())
}

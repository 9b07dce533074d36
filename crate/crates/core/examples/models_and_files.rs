//! Generate a seeded model, write it to JSON and CSV, and read it back.

use smoothlab::io::{matrix_from_csv, matrix_from_json, matrix_to_csv, matrix_to_json};
use smoothlab::models::ModelSpec;

fn main() -> smoothlab::Result<()> {
    let spec = ModelSpec::parse_flag("smooth-random:p=2,seed=5,dim=6")?;
    let x = spec.generate()?;
    assert_eq!(x, spec.generate()?);

    let json = matrix_to_json(&x);
    let csv = matrix_to_csv(&x);
    println!("{json}");
    let from_json = matrix_from_json(&json)?;
    let from_csv = matrix_from_csv(&csv)?;
    println!("json round trip exact: {}", from_json == x);
    println!("csv round trip error: {:.1e}", from_csv.sub(&x)?.max_abs());
    Ok(())
}

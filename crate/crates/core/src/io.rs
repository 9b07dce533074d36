//! JSON and CSV forms of vectors and matrices.
//!
//! Vectors: `{"dim": N, "re": [...], "im": [...]}`.
//! Matrices: `{"dim": N, "re": [[...]], "im": [[...]]}` (row-major), or CSV as
//! two `N × N` blocks (real part, imaginary part) separated by a blank line.
//! Floats are written with the shortest representation that round-trips.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graded::GradedVector;
use crate::matrix::GradedMatrix;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VectorJson {
    pub dim: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl TryFrom<VectorJson> for GradedVector {
    type Error = Error;

    fn try_from(v: VectorJson) -> Result<Self> {
        if v.re.len() != v.dim || v.im.len() != v.dim {
            return Err(Error::Parse(format!(
                "vector dim {} but re has {} and im has {} entries",
                v.dim,
                v.re.len(),
                v.im.len()
            )));
        }
        GradedVector::new(v.re.iter().zip(&v.im).map(|(a, b)| Complex64::new(*a, *b)).collect())
    }
}

impl From<GradedVector> for VectorJson {
    fn from(v: GradedVector) -> Self {
        Self {
            dim: v.dim(),
            re: v.entries().iter().map(|z| z.re).collect(),
            im: v.entries().iter().map(|z| z.im).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl TryFrom<MatrixJson> for GradedMatrix {
    type Error = Error;

    fn try_from(m: MatrixJson) -> Result<Self> {
        if m.re.len() != m.dim || m.im.len() != m.dim {
            return Err(Error::Parse(format!("matrix dim {} but {} re rows / {} im rows", m.dim, m.re.len(), m.im.len())));
        }
        let mut data = Vec::with_capacity(m.dim * m.dim);
        for (row, (re, im)) in m.re.iter().zip(&m.im).enumerate() {
            if re.len() != m.dim || im.len() != m.dim {
                return Err(Error::Parse(format!("row {} has {} re / {} im entries, expected {}", row + 1, re.len(), im.len(), m.dim)));
            }
            data.extend(re.iter().zip(im).map(|(a, b)| Complex64::new(*a, *b)));
        }
        GradedMatrix::new(m.dim, data)
    }
}

impl From<GradedMatrix> for MatrixJson {
    fn from(m: GradedMatrix) -> Self {
        let rows = m.rows();
        Self {
            dim: m.dim(),
            re: rows.iter().map(|r| r.iter().map(|z| z.re).collect()).collect(),
            im: rows.iter().map(|r| r.iter().map(|z| z.im).collect()).collect(),
        }
    }
}

/// `{"re": .., "im": ..}`, the element form used in reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexJson {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<ComplexJson> for Complex64 {
    fn from(z: ComplexJson) -> Self {
        Complex64::new(z.re, z.im)
    }
}

pub fn matrix_to_csv(m: &GradedMatrix) -> String {
    let mut out = String::new();
    for part in 0..2 {
        if part == 1 {
            out.push('\n');
        }
        for row in m.rows() {
            let cells: Vec<String> = row.iter().map(|z| format!("{:?}", if part == 0 { z.re } else { z.im })).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
    }
    out
}

pub fn matrix_from_csv(text: &str) -> Result<GradedMatrix> {
    let mut blocks: Vec<Vec<Vec<f64>>> = vec![Vec::new()];
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            if !blocks.last().expect("nonempty").is_empty() {
                blocks.push(Vec::new());
            }
            continue;
        }
        let row = line
            .split(',')
            .enumerate()
            .map(|(col, cell)| {
                cell.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}, field {}: {e}", lineno + 1, col + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        blocks.last_mut().expect("nonempty").push(row);
    }
    blocks.retain(|b| !b.is_empty());
    if blocks.len() != 2 {
        return Err(Error::Parse(format!("expected two blocks (re, im), found {}", blocks.len())));
    }
    let dim = blocks[0].len();
    MatrixJson { dim, re: blocks[0].clone(), im: blocks[1].clone() }.try_into()
}

pub fn matrix_to_json(m: &GradedMatrix) -> String {
    serde_json::to_string(m).expect("matrix serialization is infallible")
}

pub fn matrix_from_json(text: &str) -> Result<GradedMatrix> {
    serde_json::from_str(text).map_err(json_diagnostic)
}

/// Parse error carrying the line and column when serde_json knows them.
pub fn json_diagnostic(e: serde_json::Error) -> Error {
    if e.line() == 0 {
        let msg = e.to_string();
        Error::Parse(msg.strip_prefix("parse error: ").unwrap_or(&msg).to_string())
    } else {
        Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column()))
    }
}

/// Reads a matrix from `.csv` or JSON (any other extension).
pub fn read_matrix(path: &Path) -> Result<GradedMatrix> {
    let text = fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        matrix_from_csv(&text)
    } else {
        matrix_from_json(&text)
    }
}

/// Writes `contents` to `path` through a temporary file in the same directory
/// followed by a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    use std::io::Write;
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_json_shape() {
        let m = GradedMatrix::from_rows(&[
            vec![Complex64::new(1.0, 0.5), Complex64::new(0.1, 0.0)],
            vec![Complex64::new(0.0, -2.0), Complex64::new(1e-300, 0.0)],
        ])
        .unwrap();
        let text = matrix_to_json(&m);
        assert_eq!(text, r#"{"dim":2,"re":[[1.0,0.1],[0.0,1e-300]],"im":[[0.5,0.0],[-2.0,0.0]]}"#);
        assert_eq!(matrix_from_json(&text).unwrap(), m);
    }

    #[test]
    fn matrix_csv_round_trip() {
        let m = GradedMatrix::from_rows(&[
            vec![Complex64::new(0.1 + 0.2, 3.0), Complex64::new(-1.0 / 3.0, 0.0)],
            vec![Complex64::new(0.0, 1.0 / 7.0), Complex64::new(2.0, -0.0)],
        ])
        .unwrap();
        let back = matrix_from_csv(&matrix_to_csv(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn parse_errors_name_location() {
        let err = matrix_from_csv("1,2\n3,x\n\n0,0\n0,0\n").unwrap_err();
        assert!(err.to_string().contains("line 2, field 2"), "{err}");
        assert!(matrix_from_csv("1,2\n3,4\n").is_err());
        assert!(matrix_from_json(r#"{"dim":2,"re":[[1,2]],"im":[[0,0]]}"#).is_err());
        let v: std::result::Result<GradedVector, _> = serde_json::from_str(r#"{"dim":2,"re":[1],"im":[0,0]}"#);
        assert!(v.is_err());
    }

    #[test]
    fn vector_json_round_trip() {
        let v = GradedVector::new(vec![Complex64::new(1.0, -1.0), Complex64::new(0.25, 0.0)]).unwrap();
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"{"dim":2,"re":[1.0,0.25],"im":[-1.0,0.0]}"#);
        let back: GradedVector = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }
}

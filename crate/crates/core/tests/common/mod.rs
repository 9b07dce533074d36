//! Oracles shared by the integration tests, built directly from a known
//! eigenbasis rather than through the library's decompositions.

#![allow(dead_code)]

use num_complex::Complex64;
use smoothlab::matrix::GradedMatrix;
use smoothlab::models::Rotation;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn zero() -> Complex64 {
    c(0.0, 0.0)
}

/// `R e_n` for `R = G_m ⋯ G_1`, applying the plane rotations in order.
pub fn rotated_basis_vector(dim: usize, n: usize, rots: &[Rotation]) -> Vec<Complex64> {
    let mut v = vec![zero(); dim];
    v[n - 1] = c(1.0, 0.0);
    for r in rots {
        let (i, j) = (r.i - 1, r.j - 1);
        let (cs, sn) = (r.angle.cos(), r.angle.sin());
        let (vi, vj) = (v[i], v[j]);
        v[i] = vi * cs - vj * sn;
        v[j] = vi * sn + vj * cs;
    }
    v
}

/// `Σ_u u u*` entry by entry.
pub fn projection_onto(dim: usize, vectors: &[Vec<Complex64>]) -> GradedMatrix {
    let mut data = vec![zero(); dim * dim];
    for u in vectors {
        for j in 0..dim {
            for k in 0..dim {
                data[j * dim + k] += u[j] * u[k].conj();
            }
        }
    }
    GradedMatrix::new(dim, data).unwrap()
}

/// `Σ_n d_n u_n u_n*` for the rotated basis `u_n = R e_n`.
pub fn rotated_diagonal(diag: &[Complex64], rots: &[Rotation]) -> GradedMatrix {
    let dim = diag.len();
    let mut data = vec![zero(); dim * dim];
    for (n, d) in diag.iter().enumerate() {
        let u = rotated_basis_vector(dim, n + 1, rots);
        for j in 0..dim {
            for k in 0..dim {
                data[j * dim + k] += *d * u[j] * u[k].conj();
            }
        }
    }
    GradedMatrix::new(dim, data).unwrap()
}

/// `||a - b||_q / ||b||_q` (absolute when `b = 0`).
pub fn rel(a: &GradedMatrix, b: &GradedMatrix, q: u32) -> f64 {
    let diff = a.sub(b).unwrap().op_norm_q(q).unwrap();
    let scale = b.op_norm_q(q).unwrap();
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

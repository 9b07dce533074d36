//! Dense complex kernels: cyclic Jacobi for Hermitian matrices, one-sided
//! (Hestenes) Jacobi for singular values, and a Gram-Schmidt subspace used for
//! least-squares residuals. Storage is row-major throughout.

use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Off-diagonal stopping threshold relative to the Frobenius norm.
pub(crate) const JACOBI_TOL: f64 = 1e-14;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Plane rotation annihilating the `(p, q)` entry of the Hermitian 2×2 block
/// `[[app, apq], [conj(apq), aqq]]`. Returns `V` as `[vpp, vpq, vqp, vqq]`.
fn jacobi_rotation(app: f64, aqq: f64, apq: Complex64) -> [Complex64; 4] {
    let mag = apq.norm();
    let phase = apq / mag;
    let theta = (aqq - app) / (2.0 * mag);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let cs = 1.0 / (t * t + 1.0).sqrt();
    let sn = t * cs;
    let pc = phase.conj();
    [Complex64::new(cs, 0.0), Complex64::new(sn, 0.0), -pc * sn, pc * cs]
}

/// Eigenvalues (descending) and eigenvectors (column `i` of the row-major
/// `n × n` array belongs to `values[i]`) of a Hermitian matrix.
#[derive(Debug, Clone)]
pub(crate) struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Complex64>,
}

impl HermitianEigen {
    pub fn vector(&self, i: usize) -> Vec<Complex64> {
        let n = self.values.len();
        (0..n).map(|r| self.vectors[r * n + i]).collect()
    }
}

pub(crate) fn hermitian_eigen(n: usize, h: &[Complex64]) -> Result<HermitianEigen> {
    debug_assert_eq!(h.len(), n * n);
    let mut a = vec![zero(); n * n];
    for r in 0..n {
        for c in 0..n {
            a[r * n + c] = (h[r * n + c] + h[c * n + r].conj()) * 0.5;
        }
        a[r * n + r].im = 0.0;
    }
    let mut w = vec![zero(); n * n];
    for i in 0..n {
        w[i * n + i] = Complex64::new(1.0, 0.0);
    }
    let frob = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if frob == 0.0 || n == 1 {
        return Ok(sorted_eigen(n, a, w));
    }
    let limit = JACOBI_TOL * frob;
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[p * n + q].norm());
            }
        }
        if off < limit {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.norm() == 0.0 {
                    continue;
                }
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                let v = jacobi_rotation(app, aqq, apq);
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = akp * v[0] + akq * v[2];
                    a[k * n + q] = akp * v[1] + akq * v[3];
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = v[0].conj() * apk + v[2].conj() * aqk;
                    a[q * n + k] = v[1].conj() * apk + v[3].conj() * aqk;
                }
                a[p * n + q] = zero();
                a[q * n + p] = zero();
                a[p * n + p].im = 0.0;
                a[q * n + q].im = 0.0;
                for k in 0..n {
                    let wkp = w[k * n + p];
                    let wkq = w[k * n + q];
                    w[k * n + p] = wkp * v[0] + wkq * v[2];
                    w[k * n + q] = wkp * v[1] + wkq * v[3];
                }
            }
        }
    }
    if !converged {
        return Err(Error::NotConverged(MAX_SWEEPS));
    }
    Ok(sorted_eigen(n, a, w))
}

fn sorted_eigen(n: usize, a: Vec<Complex64>, w: Vec<Complex64>) -> HermitianEigen {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].re.total_cmp(&a[i * n + i].re));
    let values = order.iter().map(|&i| a[i * n + i].re).collect();
    let mut vectors = vec![zero(); n * n];
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors[r * n + dst] = w[r * n + src];
        }
    }
    HermitianEigen { values, vectors }
}

/// Singular values (descending) and right singular vectors of a `rows × cols`
/// matrix with `rows >= cols`. Column `i` of `right` (row-major `cols × cols`)
/// pairs with `values[i]`.
#[derive(Debug, Clone)]
pub(crate) struct Svd {
    pub values: Vec<f64>,
    pub right: Vec<Complex64>,
}

pub(crate) fn one_sided_svd(rows: usize, cols: usize, m: &[Complex64]) -> Result<Svd> {
    debug_assert!(rows >= cols);
    debug_assert_eq!(m.len(), rows * cols);
    let mut u = m.to_vec();
    let mut v = vec![zero(); cols * cols];
    for i in 0..cols {
        v[i * cols + i] = Complex64::new(1.0, 0.0);
    }
    let col_norm_sqr = |u: &[Complex64], c: usize| -> f64 { (0..rows).map(|r| u[r * cols + c].norm_sqr()).sum() };
    // Columns below this are rounding noise; their directions never settle.
    let negligible = (cols as f64 * f64::EPSILON).powi(2) * m.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha = col_norm_sqr(&u, p);
                let beta = col_norm_sqr(&u, q);
                let gamma: Complex64 = (0..rows).map(|r| u[r * cols + p].conj() * u[r * cols + q]).sum();
                if gamma.norm() <= 1e-15 * (alpha * beta).sqrt() || gamma.norm() == 0.0 || alpha.min(beta) <= negligible {
                    continue;
                }
                rotated = true;
                let rot = jacobi_rotation(alpha, beta, gamma);
                for r in 0..rows {
                    let up = u[r * cols + p];
                    let uq = u[r * cols + q];
                    u[r * cols + p] = up * rot[0] + uq * rot[2];
                    u[r * cols + q] = up * rot[1] + uq * rot[3];
                }
                for r in 0..cols {
                    let vp = v[r * cols + p];
                    let vq = v[r * cols + q];
                    v[r * cols + p] = vp * rot[0] + vq * rot[2];
                    v[r * cols + q] = vp * rot[1] + vq * rot[3];
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NotConverged(MAX_SWEEPS));
    }
    let norms: Vec<f64> = (0..cols).map(|c| col_norm_sqr(&u, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let values = order.iter().map(|&i| norms[i]).collect();
    let mut right = vec![zero(); cols * cols];
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..cols {
            right[r * cols + dst] = v[r * cols + src];
        }
    }
    Ok(Svd { values, right })
}

pub(crate) fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn l2(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Orthonormal basis of the span of a list of vectors, built by modified
/// Gram-Schmidt with one reorthogonalization pass.
#[derive(Debug, Clone, Default)]
pub(crate) struct Subspace {
    basis: Vec<Vec<Complex64>>,
    // r[i] holds the coordinates of accepted input vector i in `basis`.
    r: Vec<Vec<Complex64>>,
}

impl Subspace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn spanned_by<'a, I: IntoIterator<Item = &'a [Complex64]>>(vectors: I, tol: f64) -> Self {
        let mut s = Self::new();
        for v in vectors {
            s.push(v, tol);
        }
        s
    }

    #[cfg(test)]
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Component of `v` orthogonal to the subspace, and the coordinates of its
    /// projection.
    fn split(&self, v: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let mut w = v.to_vec();
        let mut coords = vec![zero(); self.basis.len()];
        for _ in 0..2 {
            for (i, b) in self.basis.iter().enumerate() {
                let c = inner(b, &w);
                coords[i] += c;
                for (wk, bk) in w.iter_mut().zip(b) {
                    *wk -= c * bk;
                }
            }
        }
        (w, coords)
    }

    /// Adds `v` if its residual exceeds `tol * |v|`. Returns whether the span grew.
    pub fn push(&mut self, v: &[Complex64], tol: f64) -> bool {
        let norm = l2(v);
        if norm == 0.0 {
            return false;
        }
        let (w, mut coords) = self.split(v);
        let rn = l2(&w);
        if rn <= tol * norm {
            return false;
        }
        self.basis.push(w.iter().map(|z| z / rn).collect());
        coords.push(Complex64::new(rn, 0.0));
        self.r.push(coords);
        true
    }

    /// Relative least-squares residual `|v - P v| / |v|` (0 for `v = 0`).
    pub fn residual(&self, v: &[Complex64]) -> f64 {
        let norm = l2(v);
        if norm == 0.0 {
            return 0.0;
        }
        let (w, _) = self.split(v);
        l2(&w) / norm
    }

    /// Least-squares coefficients of `v` with respect to the accepted input
    /// vectors (in insertion order), by back substitution on the triangular
    /// Gram-Schmidt factor.
    pub fn coefficients(&self, v: &[Complex64]) -> Vec<Complex64> {
        let (_, c) = self.split(v);
        let k = self.basis.len();
        let mut x = vec![zero(); k];
        for i in (0..k).rev() {
            let mut s = c[i];
            for j in (i + 1)..k {
                s -= self.r[j][i] * x[j];
            }
            x[i] = s / self.r[i][i];
        }
        x
    }
}

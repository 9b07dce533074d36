//! Truncated matrices of smooth operators.
//!
//! A [`GradedMatrix`] holds the `dim × dim` block `(⟨x e_k, e_j⟩)` of an
//! operator. The graded operator norm is evaluated as the largest singular
//! value of `D_q X D_q` with `D_q = diag(j^q)`; the substitution `η = D_q^{-1} ξ`
//! turns the supremum over the dual unit ball into this spectral norm.
//!
//! The unitized algebra is represented by [`UnitizedElement`], which keeps the
//! scalar part separate. Invertibility at finite scale is the `l_2` criterion
//! (smallest singular value above a threshold). The set of invertible
//! elements being open has no separate check: it is the continuity of the
//! smallest singular value.

use std::fmt;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graded::{check_dim, check_grade, WeightDiagonal, MAX_GRADE};
use crate::linalg;

const CACHE_SLOTS: usize = MAX_GRADE as usize + 1;

/// Write-once per-grade cache of `||x||_q`.
struct NormCache([OnceLock<f64>; CACHE_SLOTS]);

impl NormCache {
    fn new() -> Self {
        Self(std::array::from_fn(|_| OnceLock::new()))
    }
}

impl Clone for NormCache {
    fn clone(&self) -> Self {
        let out = Self::new();
        for (dst, src) in out.0.iter().zip(&self.0) {
            if let Some(v) = src.get() {
                let _ = dst.set(*v);
            }
        }
        out
    }
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(try_from = "crate::io::MatrixJson", into = "crate::io::MatrixJson")]
pub struct GradedMatrix {
    dim: usize,
    data: Vec<Complex64>,
    #[serde(skip)]
    cache: NormCache,
}

impl fmt::Debug for GradedMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GradedMatrix").field("dim", &self.dim).field("data", &self.data).finish()
    }
}

impl PartialEq for GradedMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.data == other.data
    }
}

fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

impl GradedMatrix {
    /// Row-major `dim × dim` entries.
    pub fn new(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        check_dim(dim)?;
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch { left: dim * dim, right: data.len() });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("matrix entries must be finite".into()));
        }
        Ok(Self { dim, data, cache: NormCache::new() })
    }

    pub(crate) fn from_raw(dim: usize, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), dim * dim);
        Self { dim, data, cache: NormCache::new() }
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let dim = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch { left: dim, right: bad.len() });
        }
        Self::new(dim, rows.concat())
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<Complex64>> =
            rows.iter().map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect()).collect();
        Self::from_rows(&rows)
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::new(dim, vec![czero(); dim * dim])
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::diagonal(&vec![Complex64::new(1.0, 0.0); dim])
    }

    pub fn diagonal(values: &[Complex64]) -> Result<Self> {
        let dim = values.len();
        let mut data = vec![czero(); dim * dim];
        for (i, v) in values.iter().enumerate() {
            data[i * dim + i] = *v;
        }
        Self::new(dim, data)
    }

    pub fn real_diagonal(values: &[f64]) -> Result<Self> {
        Self::diagonal(&values.iter().map(|&x| Complex64::new(x, 0.0)).collect::<Vec<_>>())
    }

    /// The coordinate projection `E_n ξ = ξ_n e_n` (1-based `n`).
    pub fn unit_projection(dim: usize, n: usize) -> Result<Self> {
        if n == 0 || n > dim {
            return Err(Error::InvalidArgument(format!("projection index {n} outside 1..={dim}")));
        }
        let mut m = Self::zeros(dim)?;
        m.data[(n - 1) * dim + (n - 1)] = Complex64::new(1.0, 0.0);
        Ok(m)
    }

    /// `v v*`.
    pub fn outer(v: &[Complex64]) -> Result<Self> {
        let dim = v.len();
        let mut data = vec![czero(); dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                data[r * dim + c] = v[r] * v[c].conj();
            }
        }
        Self::new(dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    /// Entry `(j, k)`, 1-based.
    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.data[(j - 1) * self.dim + (k - 1)]
    }

    pub(crate) fn at(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.dim + c]
    }

    pub fn rows(&self) -> Vec<Vec<Complex64>> {
        self.data.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { left: self.dim, right: other.dim });
        }
        Ok(())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        self.check_same_dim(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect();
        Ok(Self::from_raw(self.dim, data))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::from_raw(self.dim, self.data.iter().map(|z| z * s).collect())
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    /// `self + s·other`.
    pub fn add_scaled(&self, s: Complex64, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + s * b)
    }

    /// Matrix product; composition `x ∘ j ∘ y` of the represented operators.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        let n = self.dim;
        let mut out = vec![czero(); n * n];
        for i in 0..n {
            let row = &mut out[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == czero() {
                    continue;
                }
                let brow = &other.data[k * n..(k + 1) * n];
                for (o, b) in row.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(Self::from_raw(n, out))
    }

    /// Conjugate transpose.
    pub fn involution(&self) -> Self {
        let n = self.dim;
        let mut out = vec![czero(); n * n];
        for r in 0..n {
            for c in 0..n {
                out[c * n + r] = self.data[r * n + c].conj();
            }
        }
        Self::from_raw(n, out)
    }

    /// `xy - yx`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.multiply(other)?.sub(&other.multiply(self)?)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    pub fn frobenius(&self) -> f64 {
        linalg::l2(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let n = self.dim;
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        (0..n).all(|r| (r..n).all(|c| (self.at(r, c) - self.at(c, r).conj()).norm() <= tol * scale))
    }

    /// `D_q X D_q`.
    pub fn weighted(&self, q: u32) -> Result<Vec<Complex64>> {
        check_grade(q)?;
        let w = WeightDiagonal::new(self.dim, q as i32)?;
        let n = self.dim;
        let mut out = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                let z = self.data[r * n + c] * (w.values()[r] * w.values()[c]);
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::Range(format!("weighted entry ({}, {}) overflows at grade {q}", r + 1, c + 1)));
                }
                out.push(z);
            }
        }
        Ok(out)
    }

    /// `||x||_q`, computed once per grade and cached.
    pub fn op_norm_q(&self, q: u32) -> Result<f64> {
        check_grade(q)?;
        if let Some(v) = self.cache.0[q as usize].get() {
            return Ok(*v);
        }
        let v = self.op_norm_q_uncached(q)?;
        Ok(*self.cache.0[q as usize].get_or_init(|| v))
    }

    /// Cached value for grade `q`, if already computed.
    pub fn cached_op_norm(&self, q: u32) -> Option<f64> {
        self.cache.0.get(q as usize).and_then(|c| c.get().copied())
    }

    /// Largest singular value of `D_q X D_q` through the Jacobi
    /// eigendecomposition of its Gram matrix. The weighted matrix is rescaled
    /// by its largest entry first so the Gram matrix cannot overflow.
    pub fn op_norm_q_uncached(&self, q: u32) -> Result<f64> {
        let m = self.weighted(q)?;
        largest_singular_value(self.dim, &m)
    }

    /// `|||x|||_q = sup_{j,k} |x_{jk}| j^q k^q`.
    pub fn matrix_norm_q(&self, q: u32) -> Result<f64> {
        let m = self.weighted(q)?;
        Ok(m.iter().map(|z| z.norm()).fold(0.0, f64::max))
    }

    /// Smallest singular value, from one-sided Jacobi on the matrix itself.
    pub fn smallest_singular_value(&self) -> Result<f64> {
        let svd = linalg::one_sided_svd(self.dim, self.dim, &self.data)?;
        Ok(*svd.values.last().expect("dim >= 1"))
    }
}

pub(crate) fn largest_singular_value(n: usize, m: &[Complex64]) -> Result<f64> {
    let peak = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(0.0);
    }
    let s: Vec<Complex64> = m.iter().map(|z| z / peak).collect();
    let mut gram = vec![czero(); n * n];
    for i in 0..n {
        for j in i..n {
            let g: Complex64 = (0..n).map(|k| s[k * n + i].conj() * s[k * n + j]).sum();
            gram[i * n + j] = g;
            gram[j * n + i] = g.conj();
        }
    }
    let eig = linalg::hermitian_eigen(n, &gram)?;
    Ok(peak * eig.values[0].max(0.0).sqrt())
}

pub fn op_norm_q(x: &GradedMatrix, q: u32) -> Result<f64> {
    x.op_norm_q(q)
}

pub fn matrix_norm_q(x: &GradedMatrix, q: u32) -> Result<f64> {
    x.matrix_norm_q(q)
}

pub fn multiply(x: &GradedMatrix, y: &GradedMatrix) -> Result<GradedMatrix> {
    x.multiply(y)
}

pub fn involution(x: &GradedMatrix) -> GradedMatrix {
    x.involution()
}

/// `x + λ·1` with the identity kept implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitizedElement {
    pub base: GradedMatrix,
    pub scalar: Complex64,
}

impl UnitizedElement {
    pub fn new(base: GradedMatrix, scalar: Complex64) -> Self {
        Self { base, scalar }
    }

    /// The `dim × dim` matrix `base + scalar·I`.
    pub fn materialize(&self) -> GradedMatrix {
        let n = self.base.dim();
        let mut data = self.base.as_slice().to_vec();
        for i in 0..n {
            data[i * n + i] += self.scalar;
        }
        GradedMatrix::from_raw(n, data)
    }

    /// Invertibility with the scale-relative default threshold
    /// `1e-10 · ||base + scalar·I||_0`.
    pub fn is_invertible(&self) -> Result<bool> {
        let m = self.materialize();
        let tol = DEFAULT_INVERTIBILITY_TOL * m.op_norm_q(0)?;
        if tol == 0.0 {
            return Ok(false);
        }
        is_invertible_unitized(self, tol)
    }
}

pub const DEFAULT_INVERTIBILITY_TOL: f64 = 1e-10;

/// Relative zero threshold used by [`spectrum_default`].
pub const DEFAULT_SPECTRUM_ZERO_TOL: f64 = 1e-10;

/// `true` iff the smallest singular value of `base + scalar·I` exceeds `tol`.
pub fn is_invertible_unitized(u: &UnitizedElement, tol: f64) -> Result<bool> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    Ok(u.materialize().smallest_singular_value()? > tol)
}

/// Nonzero eigenvalues (`|λ| > tol`, absolute) of a normal matrix, repeated
/// according to multiplicity and ordered by decreasing modulus with the
/// argument tie-break of [`crate::spectral::order_eigenvalues`].
///
/// Zero always belongs to the spectrum of the infinite-dimensional operator;
/// it is not listed here.
pub fn spectrum(x: &GradedMatrix, tol: f64) -> Result<Vec<Complex64>> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    crate::spectral::ensure_normal(x, crate::spectral::DEFAULT_NORMAL_TOL)?;
    let scale = x.op_norm_q(0)?;
    let mut values: Vec<Complex64> = crate::spectral::normal_eigenpairs(x)?
        .into_iter()
        .map(|(l, _)| l)
        .filter(|l| l.norm() > tol)
        .collect();
    crate::spectral::order_eigenvalues(&mut values, crate::spectral::DEFAULT_CLUSTER_TOL * scale);
    Ok(values)
}

/// [`spectrum`] with the threshold `1e-10 · ||x||_0`.
pub fn spectrum_default(x: &GradedMatrix) -> Result<Vec<Complex64>> {
    let scale = x.op_norm_q(0)?;
    if scale == 0.0 {
        return Ok(Vec::new());
    }
    spectrum(x, DEFAULT_SPECTRUM_ZERO_TOL * scale)
}

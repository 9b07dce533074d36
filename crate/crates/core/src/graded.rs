//! Truncated sequence spaces.
//!
//! A [`GradedVector`] of dimension `N` stands for the sequence whose first `N`
//! coordinates are stored and whose remaining coordinates are zero, so every
//! weighted norm below is exact on this representation. Coordinates are
//! 1-based in all formulas: entry `j` carries the weight `j^q`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest grade accepted by the weighted norms.
pub const MAX_GRADE: u32 = 16;

/// Largest truncation dimension accepted by the weighted norms.
pub const MAX_DIM: usize = 4096;

pub(crate) fn check_grade(q: u32) -> Result<()> {
    if q > MAX_GRADE {
        return Err(Error::Range(format!("grade {q} exceeds the configured maximum {MAX_GRADE}")));
    }
    Ok(())
}

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    if dim > MAX_DIM {
        return Err(Error::Range(format!("dimension {dim} exceeds the configured maximum {MAX_DIM}")));
    }
    Ok(())
}

/// The diagonal `values[j] = j^q`, `j = 1..=dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightDiagonal {
    q: i32,
    values: Vec<f64>,
}

impl WeightDiagonal {
    pub fn new(dim: usize, q: i32) -> Result<Self> {
        check_dim(dim)?;
        if q.unsigned_abs() > MAX_GRADE {
            return Err(Error::Range(format!("grade {q} exceeds the configured maximum {MAX_GRADE}")));
        }
        let values: Vec<f64> = (1..=dim).map(|j| (j as f64).powi(q)).collect();
        if values.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::Range(format!("weight j^{q} not representable for dim {dim}")));
        }
        Ok(Self { q, values })
    }

    pub fn grade(&self) -> i32 {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Weight of the 1-based coordinate `j`.
    pub fn weight(&self, j: usize) -> f64 {
        self.values[j - 1]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Euclidean norm of `w_j * |v_j|` computed with scaling, so that only a truly
/// unrepresentable weighted entry produces a range error.
fn weighted_l2(entries: &[Complex64], weights: &[f64]) -> Result<f64> {
    let mut peak = 0.0f64;
    for (v, w) in entries.iter().zip(weights) {
        let m = v.norm() * w;
        if !m.is_finite() {
            return Err(Error::Range("weighted coordinate overflows f64".into()));
        }
        peak = peak.max(m);
    }
    if peak == 0.0 {
        return Ok(0.0);
    }
    let sum: f64 = entries
        .iter()
        .zip(weights)
        .map(|(v, w)| {
            let s = v.norm() * w / peak;
            s * s
        })
        .sum();
    Ok(peak * sum.sqrt())
}

/// A truncated complex sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "crate::io::VectorJson", into = "crate::io::VectorJson")]
pub struct GradedVector {
    entries: Vec<Complex64>,
}

impl GradedVector {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        check_dim(entries.len())?;
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("vector entries must be finite".into()));
        }
        Ok(Self { entries })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); dim])
    }

    /// The `n`-th unit vector `e_n` (1-based).
    pub fn unit(dim: usize, n: usize) -> Result<Self> {
        if n == 0 || n > dim {
            return Err(Error::InvalidArgument(format!("unit index {n} outside 1..={dim}")));
        }
        let mut v = Self::zeros(dim)?;
        v.entries[n - 1] = Complex64::new(1.0, 0.0);
        Ok(v)
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// Coordinate `j` (1-based).
    pub fn get(&self, j: usize) -> Complex64 {
        self.entries[j - 1]
    }

    /// `|v|_q = (Σ |v_j|² j^{2q})^{1/2}`.
    pub fn norm_q(&self, q: u32) -> Result<f64> {
        check_grade(q)?;
        let w = WeightDiagonal::new(self.dim(), q as i32)?;
        weighted_l2(&self.entries, w.values())
    }

    /// `|v|'_q = (Σ |v_j|² j^{-2q})^{1/2}`, the norm of the dual tower.
    pub fn dual_norm_q(&self, q: u32) -> Result<f64> {
        check_grade(q)?;
        let w = WeightDiagonal::new(self.dim(), -(q as i32))?;
        weighted_l2(&self.entries, w.values())
    }

    /// `⟨x, y⟩ = Σ x_j conj(y_j)`.
    pub fn pairing(&self, other: &GradedVector) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { left: self.dim(), right: other.dim() });
        }
        Ok(self.entries.iter().zip(&other.entries).map(|(x, y)| x * y.conj()).sum())
    }
}

pub fn norm_q(v: &GradedVector, q: u32) -> Result<f64> {
    v.norm_q(q)
}

pub fn dual_norm_q(v: &GradedVector, q: u32) -> Result<f64> {
    v.dual_norm_q(q)
}

pub fn pairing(x: &GradedVector, y: &GradedVector) -> Result<Complex64> {
    x.pairing(y)
}

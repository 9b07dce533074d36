//! Spectral representation `x = Σ λ_n P_n` of normal truncated operators.
//!
//! Eigenvalues are distinct and nonzero, listed by decreasing modulus; equal
//! moduli are ordered by increasing principal argument in `[0, 2π)` and then
//! by increasing real part. Each `P_n` is the orthogonal projection onto the
//! eigenspace of `λ_n`, and its rank is the number of times `λ_n` occurs in
//! the eigenvalue sequence. For a normal matrix the geometric and algebraic
//! multiplicities coincide, so this rank is both.
//!
//! The eigenpairs come from two Hermitian problems: with `x = a + ib`,
//! `a = (x + x*)/2`, `b = (x - x*)/(2i)`, the matrix `a` is diagonalized by
//! Jacobi rotations and `b` is then diagonalized on each eigenspace of `a`.
//! Since `x` is normal, `a` and `b` commute and the second step does not
//! disturb the first.

mod extract;
mod recover;

pub use extract::{extract_leading_projection, ExtractionTrace, Iterate};
pub use recover::{recover_idempotents, RecoveredIdempotent, DISTINCTNESS_TOL as RECOVERY_DISTINCTNESS_TOL, RECOVERY_TOL};

use std::cmp::Ordering;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{ComplexJson, MatrixJson};
use crate::linalg;
use crate::matrix::GradedMatrix;

/// Relative tolerance of [`is_normal`] used when a caller gives none.
pub const DEFAULT_NORMAL_TOL: f64 = 1e-9;
/// Eigenvalues closer than this (relative to `||x||_0`) are merged.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-8;
/// Eigenvalues of modulus at most this (relative to `||x||_0`) are dropped.
pub const DEFAULT_ZERO_TOL: f64 = 1e-10;
/// Eigenvalues of the Hermitian part closer than this (relative) share an
/// eigenspace on which the skew part is diagonalized.
const HERMITIAN_PART_GROUP_TOL: f64 = 1e-12;

/// `||xx* - x*x||_0 <= tol · ||x||_0²`.
pub fn is_normal(x: &GradedMatrix, tol: f64) -> Result<bool> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let (comm, limit) = normality_defect(x, tol)?;
    Ok(comm <= limit)
}

fn normality_defect(x: &GradedMatrix, tol: f64) -> Result<(f64, f64)> {
    let xs = x.involution();
    let comm = x.multiply(&xs)?.sub(&xs.multiply(x)?)?.op_norm_q(0)?;
    let n0 = x.op_norm_q(0)?;
    Ok((comm, tol * n0 * n0))
}

pub(crate) fn ensure_normal(x: &GradedMatrix, tol: f64) -> Result<()> {
    let (commutator, limit) = normality_defect(x, tol)?;
    if commutator > limit {
        return Err(Error::NonNormal { commutator, limit });
    }
    Ok(())
}

fn arg_key(z: Complex64, tie_tol: f64) -> f64 {
    if z.im.abs() <= tie_tol {
        return if z.re >= 0.0 { 0.0 } else { std::f64::consts::PI };
    }
    let a = z.arg();
    if a < 0.0 {
        a + 2.0 * std::f64::consts::PI
    } else {
        a
    }
}

/// Permutation sorting `values` by decreasing modulus; moduli within
/// `tie_tol` of each other (chained) form a tie group ordered by argument in
/// `[0, 2π)`, then by real part.
pub fn eigenvalue_order(values: &[Complex64], tie_tol: f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[j].norm().total_cmp(&values[i].norm()));
    let mut out = Vec::with_capacity(idx.len());
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end - 1]].norm() - values[idx[end]].norm() <= tie_tol {
            end += 1;
        }
        let mut group = idx[start..end].to_vec();
        group.sort_by(|&i, &j| {
            let (a, b) = (values[i], values[j]);
            arg_key(a, tie_tol)
                .total_cmp(&arg_key(b, tie_tol))
                .then(a.re.total_cmp(&b.re))
                .then(Ordering::Equal)
        });
        out.extend(group);
        start = end;
    }
    out
}

/// Sorts eigenvalues in place by [`eigenvalue_order`].
pub fn order_eigenvalues(values: &mut [Complex64], tie_tol: f64) {
    let order = eigenvalue_order(values, tie_tol);
    let sorted: Vec<Complex64> = order.iter().map(|&i| values[i]).collect();
    values.copy_from_slice(&sorted);
}

/// Eigenpairs `(λ, v)` of a normal matrix with orthonormal `v`; `λ` is the
/// Rayleigh quotient `v* x v`. Includes zero eigenvalues.
pub(crate) fn normal_eigenpairs(x: &GradedMatrix) -> Result<Vec<(Complex64, Vec<Complex64>)>> {
    let n = x.dim();
    let xs = x.involution();
    let a = x.add(&xs)?.scale_real(0.5);
    let b = x.sub(&xs)?.scale(Complex64::new(0.0, -0.5));
    let eig_a = linalg::hermitian_eigen(n, a.as_slice())?;
    let scale = x.op_norm_q(0)?;
    let group_tol = HERMITIAN_PART_GROUP_TOL * scale;

    let mut vectors: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && eig_a.values[end - 1] - eig_a.values[end] <= group_tol {
            end += 1;
        }
        let basis: Vec<Vec<Complex64>> = (start..end).map(|i| eig_a.vector(i)).collect();
        if basis.len() == 1 {
            vectors.extend(basis);
        } else {
            let g = basis.len();
            let bv: Vec<Vec<Complex64>> = basis.iter().map(|v| apply(&b, v)).collect();
            let mut comp = vec![Complex64::new(0.0, 0.0); g * g];
            for i in 0..g {
                for j in 0..g {
                    comp[i * g + j] = linalg::inner(&basis[i], &bv[j]);
                }
            }
            let eig_b = linalg::hermitian_eigen(g, &comp)?;
            for col in 0..g {
                let mut v = vec![Complex64::new(0.0, 0.0); n];
                for (i, bi) in basis.iter().enumerate() {
                    let w = eig_b.vectors[i * g + col];
                    for (vk, bk) in v.iter_mut().zip(bi) {
                        *vk += w * bk;
                    }
                }
                vectors.push(v);
            }
        }
        start = end;
    }
    Ok(vectors
        .into_iter()
        .map(|v| {
            let xv = apply(x, &v);
            (linalg::inner(&v, &xv), v)
        })
        .collect())
}

pub(crate) fn apply(m: &GradedMatrix, v: &[Complex64]) -> Vec<Complex64> {
    let n = m.dim();
    m.as_slice().chunks(n).map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// `Σ v v*` over a set of orthonormal vectors, made exactly Hermitian.
pub(crate) fn projection_from_vectors(dim: usize, vs: &[&Vec<Complex64>]) -> GradedMatrix {
    let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
    for r in 0..dim {
        for c in r..dim {
            let z: Complex64 = vs.iter().map(|v| v[r] * v[c].conj()).sum();
            data[r * dim + c] = z;
            data[c * dim + r] = z.conj();
        }
        data[r * dim + r].im = 0.0;
    }
    GradedMatrix::from_raw(dim, data)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecomposeOptions {
    pub cluster_tol: f64,
    pub zero_tol: f64,
    pub normal_tol: f64,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        Self { cluster_tol: DEFAULT_CLUSTER_TOL, zero_tol: DEFAULT_ZERO_TOL, normal_tol: DEFAULT_NORMAL_TOL }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DecompositionJson", into = "DecompositionJson")]
pub struct SpectralDecomposition {
    dim: usize,
    eigenvalues: Vec<Complex64>,
    projections: Vec<GradedMatrix>,
    multiplicities: Vec<usize>,
}

impl SpectralDecomposition {
    /// Assembles a decomposition from given parts, validating the ordering,
    /// distinctness and projection identities at `tol`.
    pub fn from_parts(
        dim: usize,
        eigenvalues: Vec<Complex64>,
        projections: Vec<GradedMatrix>,
        tol: f64,
    ) -> Result<Self> {
        if eigenvalues.len() != projections.len() {
            return Err(Error::DimensionMismatch { left: eigenvalues.len(), right: projections.len() });
        }
        if let Some(p) = projections.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch { left: dim, right: p.dim() });
        }
        let multiplicities = projections.iter().map(|p| p.trace().re.round().max(0.0) as usize).collect();
        let d = Self { dim, eigenvalues, projections, multiplicities };
        d.check_invariants(tol)?;
        Ok(d)
    }

    pub fn empty(dim: usize) -> Self {
        Self { dim, eigenvalues: Vec::new(), projections: Vec::new(), multiplicities: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    pub fn projections(&self) -> &[GradedMatrix] {
        &self.projections
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    /// `||P_n||_q` for every term.
    pub fn projection_norms(&self, q: u32) -> Result<Vec<f64>> {
        self.projections.iter().map(|p| p.op_norm_q(q)).collect()
    }

    /// Number of leading terms whose modulus equals `|λ_1|` within `tol`
    /// (absolute).
    pub fn leading_count(&self, tol: f64) -> usize {
        match self.eigenvalues.first() {
            None => 0,
            Some(l1) => self.eigenvalues.iter().take_while(|l| l1.norm() - l.norm() <= tol).count(),
        }
    }

    /// Hermitian, idempotent, mutually orthogonal projections; ordered
    /// distinct eigenvalues; total rank at most `dim`.
    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        for (i, p) in self.projections.iter().enumerate() {
            let herm = p.sub(&p.involution())?.op_norm_q(0)?;
            let idem = p.multiply(p)?.sub(p)?.op_norm_q(0)?;
            if herm > tol || idem > tol {
                return Err(Error::Postcondition(format!("P_{} is not an orthogonal projection ({herm:e}, {idem:e})", i + 1)));
            }
            for (j, other) in self.projections.iter().enumerate().skip(i + 1) {
                let prod = p.multiply(other)?.op_norm_q(0)?;
                if prod > tol {
                    return Err(Error::Postcondition(format!("P_{} P_{} = {prod:e} is not zero", i + 1, j + 1)));
                }
            }
        }
        for w in self.eigenvalues.windows(2) {
            if w[0].norm() < w[1].norm() - tol * w[0].norm() {
                return Err(Error::Postcondition("eigenvalues are not ordered by modulus".into()));
            }
        }
        for (i, a) in self.eigenvalues.iter().enumerate() {
            if a.norm() == 0.0 {
                return Err(Error::Postcondition(format!("λ_{} is zero", i + 1)));
            }
            if self.eigenvalues[i + 1..].iter().any(|b| b == a) {
                return Err(Error::Postcondition(format!("λ_{} repeated", i + 1)));
            }
        }
        if self.multiplicities.iter().sum::<usize>() > self.dim {
            return Err(Error::Postcondition("total rank exceeds dimension".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DecompositionJson {
    dim: usize,
    eigenvalues: Vec<ComplexJson>,
    multiplicities: Vec<usize>,
    projections: Vec<MatrixJson>,
}

impl From<SpectralDecomposition> for DecompositionJson {
    fn from(d: SpectralDecomposition) -> Self {
        Self {
            dim: d.dim,
            eigenvalues: d.eigenvalues.into_iter().map(Into::into).collect(),
            multiplicities: d.multiplicities,
            projections: d.projections.into_iter().map(Into::into).collect(),
        }
    }
}

impl TryFrom<DecompositionJson> for SpectralDecomposition {
    type Error = Error;

    fn try_from(j: DecompositionJson) -> Result<Self> {
        let projections = j.projections.into_iter().map(GradedMatrix::try_from).collect::<Result<Vec<_>>>()?;
        if j.multiplicities.len() != projections.len() || j.eigenvalues.len() != projections.len() {
            return Err(Error::Parse("eigenvalue, multiplicity and projection lists differ in length".into()));
        }
        if let Some(p) = projections.iter().find(|p| p.dim() != j.dim) {
            return Err(Error::DimensionMismatch { left: j.dim, right: p.dim() });
        }
        Ok(Self {
            dim: j.dim,
            eigenvalues: j.eigenvalues.into_iter().map(Into::into).collect(),
            projections,
            multiplicities: j.multiplicities,
        })
    }
}

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut r = i;
    while parent[r] != r {
        r = parent[r];
    }
    let mut k = i;
    while parent[k] != r {
        let next = parent[k];
        parent[k] = r;
        k = next;
    }
    r
}

/// Single-linkage groups of points closer than `tol`, in order of first
/// appearance.
pub(crate) fn cluster_points(points: &[Complex64], tol: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            if (points[i] - points[j]).norm() <= tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[rj.max(ri)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_slot: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        match root_slot[r] {
            Some(s) => groups[s].push(i),
            None => {
                root_slot[r] = Some(groups.len());
                groups.push(vec![i]);
            }
        }
    }
    groups
}

/// Spectral representation of a normal matrix.
///
/// `cluster_tol` and `zero_tol` are relative to `||x||_0`. A cluster whose
/// diameter exceeds `10 · cluster_tol` is rejected as ambiguous.
pub fn decompose(x: &GradedMatrix, cluster_tol: f64, zero_tol: f64) -> Result<SpectralDecomposition> {
    decompose_with(x, &DecomposeOptions { cluster_tol, zero_tol, ..Default::default() })
}

pub fn decompose_default(x: &GradedMatrix) -> Result<SpectralDecomposition> {
    decompose_with(x, &DecomposeOptions::default())
}

pub fn decompose_with(x: &GradedMatrix, opts: &DecomposeOptions) -> Result<SpectralDecomposition> {
    if !(opts.cluster_tol > 0.0) || !(opts.zero_tol > 0.0) {
        return Err(Error::InvalidArgument("cluster and zero tolerances must be positive".into()));
    }
    ensure_normal(x, opts.normal_tol)?;
    let dim = x.dim();
    let scale = x.op_norm_q(0)?;
    if scale == 0.0 {
        return Ok(SpectralDecomposition::empty(dim));
    }
    let pairs = normal_eigenpairs(x)?;
    let values: Vec<Complex64> = pairs.iter().map(|(l, _)| *l).collect();
    let merge = opts.cluster_tol * scale;

    let mut centroids = Vec::new();
    let mut projections = Vec::new();
    let mut multiplicities = Vec::new();
    for group in cluster_points(&values, merge) {
        let mut spread = 0.0f64;
        for (a, &i) in group.iter().enumerate() {
            for &j in &group[a + 1..] {
                spread = spread.max((values[i] - values[j]).norm());
            }
        }
        if spread > 10.0 * merge {
            return Err(Error::ClusterAmbiguity { spread, limit: 10.0 * merge });
        }
        let centroid = group.iter().map(|&i| values[i]).sum::<Complex64>() / group.len() as f64;
        if centroid.norm() <= opts.zero_tol * scale {
            continue;
        }
        let vs: Vec<&Vec<Complex64>> = group.iter().map(|&i| &pairs[i].1).collect();
        centroids.push(centroid);
        projections.push(projection_from_vectors(dim, &vs));
        multiplicities.push(group.len());
    }
    let order = eigenvalue_order(&centroids, merge);
    Ok(SpectralDecomposition {
        dim,
        eigenvalues: order.iter().map(|&i| centroids[i]).collect(),
        projections: order.iter().map(|&i| projections[i].clone()).collect(),
        multiplicities: order.iter().map(|&i| multiplicities[i]).collect(),
    })
}

/// `Σ λ_n P_n`.
pub fn reconstruct(d: &SpectralDecomposition) -> GradedMatrix {
    let mut acc = vec![Complex64::new(0.0, 0.0); d.dim * d.dim];
    for (l, p) in d.eigenvalues.iter().zip(&d.projections) {
        for (a, z) in acc.iter_mut().zip(p.as_slice()) {
            *a += l * z;
        }
    }
    GradedMatrix::from_raw(d.dim, acc)
}

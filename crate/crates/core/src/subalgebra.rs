//! Commutative *-subalgebras generated by commuting normal matrices.
//!
//! The algebra generated by a commuting set of normal matrices is spanned by
//! its minimal projections, which are pairwise orthogonal. They play the role
//! of a canonical basis: every element is `Σ μ_n P_n`, and `y ↦ μ_n` is a
//! multiplicative functional. The algebra is not assumed unital, so the
//! projection onto the common kernel of the generators is not a member.
//!
//! An orthonormal basis whose first vector is not rapidly decreasing has no
//! counterpart in a finite truncation, where every vector has finite graded
//! norms, so that situation is not modelled.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graded::{check_grade, GradedVector, MAX_GRADE};
use crate::io::MatrixJson;
use crate::linalg::{self, Subspace};
use crate::matrix::GradedMatrix;
use crate::spectral::{decompose_default, ensure_normal, projection_from_vectors, DEFAULT_NORMAL_TOL};

/// Hermitian and idempotent defects allowed in a family member.
pub const PROJECTION_TOL: f64 = 1e-9;
/// `||[g_i, g_j]||_0 <= COMMUTING_TOL · ||g_i||_0 ||g_j||_0`.
pub const COMMUTING_TOL: f64 = 1e-8;
/// Singular values below this fraction of the largest span the commutant.
pub const NULLSPACE_TOL: f64 = 1e-10;
/// Relative slack of the rank-one norm chain.
pub const CHAIN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FamilyJson", into = "FamilyJson")]
pub struct ProjectionFamily {
    dim: usize,
    projections: Vec<GradedMatrix>,
    ranks: Vec<usize>,
    minimal: bool,
    complete: bool,
}

#[derive(Serialize, Deserialize)]
struct FamilyJson {
    dim: usize,
    projections: Vec<MatrixJson>,
    minimal: bool,
    complete: bool,
}

impl From<ProjectionFamily> for FamilyJson {
    fn from(f: ProjectionFamily) -> Self {
        Self {
            dim: f.dim,
            projections: f.projections.into_iter().map(Into::into).collect(),
            minimal: f.minimal,
            complete: f.complete,
        }
    }
}

impl TryFrom<FamilyJson> for ProjectionFamily {
    type Error = Error;

    fn try_from(j: FamilyJson) -> Result<Self> {
        let ps = j.projections.into_iter().map(GradedMatrix::try_from).collect::<Result<Vec<_>>>()?;
        let f = ProjectionFamily::new(j.dim, ps, j.minimal)?;
        if f.complete != j.complete {
            return Err(Error::Parse(format!("family declares complete = {} but ranks say {}", j.complete, f.complete)));
        }
        Ok(f)
    }
}

fn rank_of(p: &GradedMatrix) -> usize {
    p.trace().re.round().max(0.0) as usize
}

impl ProjectionFamily {
    /// Validates that every member is an orthogonal projection and, when
    /// `minimal` is set, that members are mutually orthogonal.
    pub fn new(dim: usize, projections: Vec<GradedMatrix>, minimal: bool) -> Result<Self> {
        for (i, p) in projections.iter().enumerate() {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch { left: dim, right: p.dim() });
            }
            let herm = p.sub(&p.involution())?.op_norm_q(0)?;
            let idem = p.multiply(p)?.sub(p)?.op_norm_q(0)?;
            if herm > PROJECTION_TOL || idem > PROJECTION_TOL {
                return Err(Error::InvalidArgument(format!("member {} is not an orthogonal projection", i + 1)));
            }
            if rank_of(p) == 0 {
                return Err(Error::InvalidArgument(format!("member {} is zero", i + 1)));
            }
        }
        if minimal {
            for i in 0..projections.len() {
                for j in (i + 1)..projections.len() {
                    let prod = projections[i].multiply(&projections[j])?.op_norm_q(0)?;
                    if prod > PROJECTION_TOL {
                        return Err(Error::InvalidArgument(format!("members {} and {} are not orthogonal", i + 1, j + 1)));
                    }
                }
            }
        }
        let ranks: Vec<usize> = projections.iter().map(rank_of).collect();
        let complete = ranks.iter().sum::<usize>() == dim;
        Ok(Self { dim, projections, ranks, minimal, complete })
    }

    /// `{E_1, ..., E_n}` restricted to the listed indices.
    pub fn unit_projections(dim: usize, indices: &[usize]) -> Result<Self> {
        let ps = indices.iter().map(|&n| GradedMatrix::unit_projection(dim, n)).collect::<Result<Vec<_>>>()?;
        Self::new(dim, ps, true)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.projections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projections.is_empty()
    }

    pub fn projections(&self) -> &[GradedMatrix] {
        &self.projections
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn is_minimal(&self) -> bool {
        self.minimal
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    /// Relative Frobenius residual of `y` against the span of the family.
    pub fn span_residual(&self, y: &GradedMatrix) -> Result<f64> {
        if y.dim() != self.dim {
            return Err(Error::DimensionMismatch { left: self.dim, right: y.dim() });
        }
        let s = Subspace::spanned_by(self.projections.iter().map(|p| p.as_slice()), 1e-12);
        Ok(s.residual(y.as_slice()))
    }

    /// Whether every spectral projection of `x` lies in the span of the
    /// family, which for a minimal family is membership of `x` in the
    /// generated algebra.
    pub fn contains(&self, x: &GradedMatrix, tol: f64) -> Result<bool> {
        let d = decompose_default(x)?;
        for p in d.projections() {
            if self.span_residual(p)? > tol {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Smallest singular value of the Frobenius Gram matrix of the members,
    /// relative to the largest. Positive iff the members are independent.
    pub fn gram_condition(&self) -> Result<f64> {
        let m = self.projections.len();
        if m == 0 {
            return Ok(1.0);
        }
        let mut g = vec![Complex64::new(0.0, 0.0); m * m];
        for i in 0..m {
            for j in 0..m {
                g[i * m + j] = linalg::inner(self.projections[i].as_slice(), self.projections[j].as_slice());
            }
        }
        let svd = linalg::one_sided_svd(m, m, &g)?;
        Ok(svd.values[m - 1] / svd.values[0])
    }

    /// Appends rank-one projections onto an orthonormal basis of the common
    /// kernel, so the ranks sum to `dim`.
    pub fn completed(&self) -> Result<Self> {
        let mut rest = GradedMatrix::identity(self.dim)?;
        for p in &self.projections {
            rest = rest.sub(p)?;
        }
        let eig = linalg::hermitian_eigen(self.dim, rest.as_slice())?;
        let mut ps = self.projections.clone();
        for i in 0..self.dim {
            if eig.values[i] > 0.5 {
                let v = eig.vector(i);
                ps.push(projection_from_vectors(self.dim, &[&v]));
            }
        }
        Self::new(self.dim, ps, self.minimal)
    }
}

/// Orthogonal projection onto the eigenvectors of `p` with eigenvalue above
/// one half. Removes drift from products of nearly exact projections.
fn snap(p: &GradedMatrix) -> Result<Option<GradedMatrix>> {
    let eig = linalg::hermitian_eigen(p.dim(), p.as_slice())?;
    let vs: Vec<Vec<Complex64>> = (0..p.dim()).filter(|&i| eig.values[i] > 0.5).map(|i| eig.vector(i)).collect();
    if vs.is_empty() {
        return Ok(None);
    }
    let refs: Vec<&Vec<Complex64>> = vs.iter().collect();
    Ok(Some(projection_from_vectors(p.dim(), &refs)))
}

fn check_generators(generators: &[GradedMatrix]) -> Result<usize> {
    let dim = match generators.first() {
        Some(g) => g.dim(),
        None => return Err(Error::InvalidArgument("no generators given".into())),
    };
    let norms = generators
        .iter()
        .map(|g| {
            if g.dim() != dim {
                return Err(Error::DimensionMismatch { left: dim, right: g.dim() });
            }
            g.op_norm_q(0)
        })
        .collect::<Result<Vec<_>>>()?;
    for (i, gi) in generators.iter().enumerate() {
        ensure_normal(gi, DEFAULT_NORMAL_TOL)?;
        for (j, gj) in generators.iter().enumerate().skip(i + 1) {
            let value = gi.commutator(gj)?.op_norm_q(0)?;
            if value > COMMUTING_TOL * norms[i] * norms[j] {
                return Err(Error::NonCommuting { i: i + 1, j: j + 1, value });
            }
        }
    }
    Ok(dim)
}

/// Position of the first diagonal entry above `1 / (2 dim)`, used to order
/// the minimal projections.
fn leading_index(p: &GradedMatrix) -> usize {
    let threshold = 0.5 / p.dim() as f64;
    (1..=p.dim()).find(|&j| p.get(j, j).re > threshold).unwrap_or(p.dim())
}

/// Minimal projections of the *-algebra generated by commuting normal
/// matrices.
///
/// Each generator's spectral projections refine a running list of pairwise
/// orthogonal atoms: an atom `A` is split into `AQ` and `A - AQ`, and the part
/// `Q - Σ AQ` of `Q` outside every atom becomes a new atom. Every product is
/// snapped back to an exact projection. Atoms are listed by the first
/// coordinate they charge.
pub fn minimal_basis(generators: &[GradedMatrix]) -> Result<ProjectionFamily> {
    let dim = check_generators(generators)?;
    let mut atoms: Vec<GradedMatrix> = Vec::new();
    for g in generators {
        let d = decompose_default(g)?;
        for q in d.projections() {
            let mut next = Vec::with_capacity(atoms.len() + 1);
            let mut outside = q.clone();
            for a in &atoms {
                let aq = a.multiply(q)?;
                outside = outside.sub(&aq)?;
                if let Some(inner) = snap(&aq)? {
                    next.push(inner);
                }
                if let Some(rest) = snap(&a.sub(&aq)?)? {
                    next.push(rest);
                }
            }
            if let Some(o) = snap(&outside)? {
                next.push(o);
            }
            atoms = next;
        }
    }
    atoms.sort_by_key(leading_index);
    ProjectionFamily::new(dim, atoms, true)
}

/// The coefficient functional `y ↦ trace(P y) / rank(P)` of one minimal
/// projection.
#[derive(Debug, Clone, PartialEq)]
pub struct Character {
    pub index: usize,
    pub rank: usize,
    projection: GradedMatrix,
}

impl Character {
    pub fn value(&self, y: &GradedMatrix) -> Result<Complex64> {
        Ok(self.projection.multiply(y)?.trace() / self.rank as f64)
    }

    /// `|φ(xy) - φ(x) φ(y)|`.
    pub fn multiplicativity_defect(&self, x: &GradedMatrix, y: &GradedMatrix) -> Result<f64> {
        Ok((self.value(&x.multiply(y)?)? - self.value(x)? * self.value(y)?).norm())
    }
}

pub fn characters(family: &ProjectionFamily) -> Result<Vec<Character>> {
    if !family.minimal {
        return Err(Error::InvalidArgument("characters need a minimal family".into()));
    }
    Ok(family
        .projections
        .iter()
        .zip(&family.ranks)
        .enumerate()
        .map(|(i, (p, &rank))| Character { index: i + 1, rank, projection: p.clone() })
        .collect())
}

/// One row of the chain `1 <= |e|_q <= ||P||_q = |e|_q² <= |e|_{2q}` for a
/// rank-one projection `P = e e*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankOneChain {
    pub n: usize,
    pub q: u32,
    pub vector_norm_q: f64,
    pub projection_norm_q: f64,
    pub vector_norm_2q: f64,
    pub holds: bool,
}

/// The family's norm table `||P_n||_q` and the partial sums of
/// `||P_n||_q / ||P_n||_r`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KoetheRepresentation {
    pub grades: Vec<u32>,
    /// `norm_table[n][i] = ||P_{n+1}||_{grades[i]}`.
    pub norm_table: Vec<Vec<f64>>,
    /// Keyed by `"q,r"`.
    pub ratios: BTreeMap<String, Vec<f64>>,
    /// Present for the rank-one members, for each grade `q` with `2q` in range.
    pub rank_one_chain: Vec<RankOneChain>,
}

impl KoetheRepresentation {
    pub fn chain_holds(&self) -> bool {
        self.rank_one_chain.iter().all(|c| c.holds)
    }
}

/// Unit vector spanning a rank-one projection, read off its largest column.
fn rank_one_vector(p: &GradedMatrix) -> Result<GradedVector> {
    let n = p.dim();
    let k = (1..=n).max_by(|&a, &b| p.get(a, a).re.total_cmp(&p.get(b, b).re)).expect("dim > 0");
    let s = p.get(k, k).re.sqrt();
    GradedVector::new((1..=n).map(|j| p.get(j, k) / s).collect())
}

pub fn koethe_representation(
    family: &ProjectionFamily,
    grades: &[u32],
    ratio_pairs: &[(u32, u32)],
) -> Result<KoetheRepresentation> {
    if family.is_empty() {
        return Err(Error::InvalidArgument("empty projection family".into()));
    }
    for &q in grades.iter().chain(ratio_pairs.iter().flat_map(|(a, b)| [a, b])) {
        check_grade(q)?;
    }
    let norm_table = family
        .projections
        .iter()
        .map(|p| grades.iter().map(|&q| p.op_norm_q(q)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;

    let mut ratios = BTreeMap::new();
    for &(q, r) in ratio_pairs {
        let mut acc = 0.0;
        let mut partial = Vec::with_capacity(family.len());
        for p in &family.projections {
            acc += p.op_norm_q(q)? / p.op_norm_q(r)?;
            partial.push(acc);
        }
        ratios.insert(format!("{q},{r}"), partial);
    }

    let mut rank_one_chain = Vec::new();
    for (i, (p, &rank)) in family.projections.iter().zip(&family.ranks).enumerate() {
        if rank != 1 {
            continue;
        }
        let e = rank_one_vector(p)?;
        for &q in grades.iter().filter(|&&q| 2 * q <= MAX_GRADE) {
            let vq = e.norm_q(q)?;
            let pq = p.op_norm_q(q)?;
            let v2q = e.norm_q(2 * q)?;
            let slack = 1.0 + CHAIN_TOL;
            let holds = 1.0 <= vq * slack
                && vq <= pq * slack
                && (pq - vq * vq).abs() <= CHAIN_TOL * pq
                && pq <= v2q * slack;
            rank_one_chain.push(RankOneChain {
                n: i + 1,
                q,
                vector_norm_q: vq,
                projection_norm_q: pq,
                vector_norm_2q: v2q,
                holds,
            });
        }
    }
    Ok(KoetheRepresentation { grades: grades.to_vec(), norm_table, ratios, rank_one_chain })
}

/// `x = Σ λ_n P_n` with `λ_1 = 1` and
/// `λ_n = min((1/n²) inf_q C_q / ||P_n||_q, λ_{n-1} / 2)`, where
/// `C_q = max_{n <= max(q, 1)} ||P_n||_q` and `q` runs over `grades`.
///
/// The `λ_n` decrease strictly, so the spectral projections of `x` are exactly
/// the members of the family, and `Σ λ_n ||P_n||_q <= C_q Σ 1/n²`.
pub fn single_generator(family: &ProjectionFamily, grades: &[u32]) -> Result<(GradedMatrix, Vec<f64>)> {
    if family.is_empty() {
        return Err(Error::InvalidArgument("empty projection family".into()));
    }
    if !family.minimal {
        return Err(Error::InvalidArgument("single generator needs a minimal family".into()));
    }
    if grades.is_empty() {
        return Err(Error::InvalidArgument("no grades given".into()));
    }
    let table = koethe_representation(family, grades, &[])?.norm_table;
    let c: Vec<f64> = grades
        .iter()
        .enumerate()
        .map(|(i, &q)| {
            let upto = (q.max(1) as usize).min(family.len());
            table[..upto].iter().map(|row| row[i]).fold(0.0, f64::max)
        })
        .collect();

    let mut lambdas: Vec<f64> = Vec::with_capacity(family.len());
    for (idx, row) in table.iter().enumerate() {
        let n = (idx + 1) as f64;
        let l = if idx == 0 {
            1.0
        } else {
            let inf = row.iter().zip(&c).map(|(pn, cq)| cq / pn).fold(f64::INFINITY, f64::min);
            (inf / (n * n)).min(lambdas[idx - 1] / 2.0)
        };
        lambdas.push(l);
    }

    let mut x = GradedMatrix::zeros(family.dim)?;
    for (l, p) in lambdas.iter().zip(&family.projections) {
        x = x.add_scaled(Complex64::new(*l, 0.0), p)?;
    }

    if lambdas.windows(2).any(|w| !(w[1] < w[0]) || w[1] <= 0.0) {
        return Err(Error::Postcondition("λ is not strictly decreasing and positive".into()));
    }
    let basel: f64 = (1..=family.len()).map(|n| 1.0 / (n * n) as f64).sum();
    for (i, &cq) in c.iter().enumerate() {
        let s: f64 = lambdas.iter().zip(&table).map(|(l, row)| l * row[i]).sum();
        if s > cq * basel * (1.0 + 1e-12) {
            return Err(Error::Postcondition(format!("Σ λ_n ||P_n||_{} exceeds C_q Σ 1/n²", grades[i])));
        }
    }
    Ok((x, lambdas))
}

/// Frobenius-orthonormal basis of `{X : X G = G X for every generator G}`.
///
/// The maps `X ↦ XG - GX` are stacked into one `(k·dim²) × dim²` matrix
/// whose right singular vectors with singular value at most
/// `NULLSPACE_TOL · σ_max` span the nullspace.
pub fn commutant(generators: &[GradedMatrix]) -> Result<Vec<GradedMatrix>> {
    let dim = match generators.first() {
        Some(g) => g.dim(),
        None => return Err(Error::InvalidArgument("no generators given".into())),
    };
    if let Some(g) = generators.iter().find(|g| g.dim() != dim) {
        return Err(Error::DimensionMismatch { left: dim, right: g.dim() });
    }
    let n2 = dim * dim;
    let rows = generators.len() * n2;
    let mut m = vec![Complex64::new(0.0, 0.0); rows.max(n2) * n2];
    // Row (j, k) of block b is (XG - GX)_{jk} = Σ_l X_{jl} G_{lk} - G_{jl} X_{lk}.
    for (b, g) in generators.iter().enumerate() {
        for j in 0..dim {
            for k in 0..dim {
                let row = b * n2 + j * dim + k;
                for l in 0..dim {
                    m[row * n2 + j * dim + l] += g.get(l + 1, k + 1);
                    m[row * n2 + l * dim + k] -= g.get(j + 1, l + 1);
                }
            }
        }
    }
    let svd = linalg::one_sided_svd(rows.max(n2), n2, &m)?;
    let top = svd.values[0];
    let mut basis = Vec::new();
    for i in 0..n2 {
        if svd.values[i] <= NULLSPACE_TOL * top || top == 0.0 {
            let v: Vec<Complex64> = (0..n2).map(|r| svd.right[r * n2 + i]).collect();
            basis.push(GradedMatrix::new(dim, v)?);
        }
    }
    Ok(basis)
}

/// Result of both maximality criteria for a minimal family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaximalityCheck {
    /// Every member has rank one and the ranks sum to `dim`.
    pub structural: bool,
    pub commutant_dimension: usize,
    pub family_size: usize,
}

impl MaximalityCheck {
    /// The algebra equals its commutant.
    pub fn by_commutant(&self) -> bool {
        self.commutant_dimension == self.family_size
    }
}

pub fn maximality_check(family: &ProjectionFamily) -> Result<MaximalityCheck> {
    if !family.minimal {
        return Err(Error::InvalidArgument("maximality is defined for minimal families".into()));
    }
    let structural = family.complete && family.ranks.iter().all(|&r| r == 1);
    let commutant_dimension = if family.is_empty() {
        family.dim * family.dim
    } else {
        commutant(&family.projections)?.len()
    };
    Ok(MaximalityCheck { structural, commutant_dimension, family_size: family.len() })
}

/// Whether the family spans a maximal commutative subalgebra. Fails with a
/// postcondition error if the rank criterion and the commutant criterion
/// disagree.
pub fn is_maximal_commutative(family: &ProjectionFamily) -> Result<bool> {
    let c = maximality_check(family)?;
    if c.structural != c.by_commutant() {
        return Err(Error::Postcondition(format!(
            "rank criterion says {} but commutant has dimension {} for {} projections",
            c.structural, c.commutant_dimension, c.family_size
        )));
    }
    Ok(c.structural)
}

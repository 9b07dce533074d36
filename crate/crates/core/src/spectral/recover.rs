//! Recovery of the idempotents `a_j` from `a = Σ λ_j a_j` using only algebra
//! operations on `a`.
//!
//! The coefficients are the nonzero roots of the minimal polynomial of `a`,
//! read off the first linear dependency among `a, a², a³, ...`. The
//! idempotents then follow by induction on `N`: with the pivot `λ_N`,
//! `a² - λ_N a = Σ_{j<N} λ_j (λ_j - λ_N) a_j` has fewer terms. When the new
//! coefficients collide, indices are grouped into classes of equal
//! `λ_j (λ_j - λ_N)`; the sum of idempotents of one class is recovered first,
//! its product with `a` splits off that class, and both parts recurse.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::Subspace;
use crate::matrix::GradedMatrix;
use crate::spectral::{cluster_points, eigenvalue_order};

/// Coefficients must differ by more than this times `max |λ|`.
pub const DISTINCTNESS_TOL: f64 = 1e-6;
/// Tolerance of the a-posteriori identity and span checks.
pub const RECOVERY_TOL: f64 = 1e-8;
const KRYLOV_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct RecoveredIdempotent {
    pub coefficient: Complex64,
    pub idempotent: GradedMatrix,
}

fn poly_eval(coeffs: &[Complex64], t: Complex64) -> (Complex64, Complex64) {
    // coeffs low to high; returns p(t), p'(t)
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        dp = dp * t + p;
        p = p * t + c;
    }
    (p, dp)
}

/// Roots of a monic polynomial (coefficients low to high, leading 1 included)
/// by simultaneous Weierstrass iteration followed by Newton polishing.
fn poly_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let deg = coeffs.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    let radius = 1.0 + coeffs[..deg].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..deg).map(|k| seed.powu(k as u32) * radius / (1.0 + k as f64).sqrt()).collect();
    for _ in 0..2000 {
        let mut shift = 0.0f64;
        for i in 0..deg {
            let (p, _) = poly_eval(coeffs, roots[i]);
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..deg {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom.norm() == 0.0 {
                roots[i] += Complex64::new(1e-9 * radius, 1e-9 * radius);
                continue;
            }
            let step = p / denom;
            roots[i] -= step;
            shift = shift.max(step.norm());
        }
        if shift <= 1e-15 * radius {
            break;
        }
    }
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = poly_eval(coeffs, *r);
            if dp.norm() == 0.0 {
                break;
            }
            *r -= p / dp;
        }
    }
    roots
}

/// Nonzero coefficients of `a` from its minimal polynomial, plus the Krylov
/// subspace `span{a, ..., a^N}` used for the span check.
fn coefficients(a: &GradedMatrix) -> Result<(Vec<Complex64>, Subspace)> {
    let scale = a.op_norm_q(0)?;
    let unit = a.scale_real(1.0 / scale);
    let mut krylov = Subspace::new();
    let mut power = unit.clone();
    for _ in 0..=a.dim() {
        if !krylov.push(power.as_slice(), KRYLOV_TOL) {
            // unit^{N+1} = Σ c_i unit^i, so the λ/scale are roots of
            // t^N - Σ c_i t^{i-1}.
            let c = krylov.coefficients(power.as_slice());
            let mut monic: Vec<Complex64> = c.iter().map(|z| -z).collect();
            monic.push(Complex64::new(1.0, 0.0));
            let roots = poly_roots(&monic).into_iter().map(|r| r * scale).collect();
            return Ok((roots, krylov));
        }
        power = power.multiply(&unit)?;
    }
    Err(Error::IllPosed("powers of a never become linearly dependent".into()))
}

/// Idempotents aligned with `lambdas`, for `a = Σ lambdas[j] a_j`.
fn split(a: &GradedMatrix, lambdas: &[Complex64]) -> Result<Vec<GradedMatrix>> {
    let n = lambdas.len();
    if n == 1 {
        return Ok(vec![a.scale(Complex64::new(1.0, 0.0) / lambdas[0])]);
    }
    // pivot on the coefficient of largest modulus
    let pivot_idx = (0..n).max_by(|&i, &j| lambdas[i].norm().total_cmp(&lambdas[j].norm())).expect("n >= 2");
    let pivot = lambdas[pivot_idx];
    let others: Vec<usize> = (0..n).filter(|&i| i != pivot_idx).collect();
    let reduced = a.multiply(a)?.sub(&a.scale(pivot))?;
    let mus: Vec<Complex64> = others.iter().map(|&i| lambdas[i] * (lambdas[i] - pivot)).collect();
    let mu_scale = mus.iter().map(|m| m.norm()).fold(0.0, f64::max);
    let classes = cluster_points(&mus, DISTINCTNESS_TOL * mu_scale);

    let mut out: Vec<Option<GradedMatrix>> = vec![None; n];
    if classes.iter().all(|c| c.len() == 1) {
        let parts = split(&reduced, &mus)?;
        let mut rest = a.clone();
        for (k, &i) in others.iter().enumerate() {
            rest = rest.add_scaled(-lambdas[i], &parts[k])?;
            out[i] = Some(parts[k].clone());
        }
        out[pivot_idx] = Some(rest.scale(Complex64::new(1.0, 0.0) / pivot));
    } else {
        let class_mus: Vec<Complex64> = classes.iter().map(|c| mus[c[0]]).collect();
        let class_parts = split(&reduced, &class_mus)?;
        let first = classes.iter().position(|c| c.len() >= 2).expect("a class with two members");
        let members: Vec<usize> = classes[first].iter().map(|&k| others[k]).collect();
        let inside = class_parts[first].multiply(a)?;
        let inner = split(&inside, &members.iter().map(|&i| lambdas[i]).collect::<Vec<_>>())?;
        for (k, &i) in members.iter().enumerate() {
            out[i] = Some(inner[k].clone());
        }
        let complement: Vec<usize> = (0..n).filter(|i| !members.contains(i)).collect();
        let outside = a.sub(&inside)?;
        let outer = split(&outside, &complement.iter().map(|&i| lambdas[i]).collect::<Vec<_>>())?;
        for (k, &i) in complement.iter().enumerate() {
            out[i] = Some(outer[k].clone());
        }
    }
    Ok(out.into_iter().map(|m| m.expect("every index assigned")).collect())
}

/// Recovers `(λ_j, a_j)` with `a = Σ λ_j a_j`, `a_j² = a_j`, `a_j a_k = 0`.
///
/// Each `a_j` is checked to lie in `span{a, a², ...}` and, when `span` is
/// nonempty, in the linear span of the given matrices. The result is ordered
/// like spectral decompositions (decreasing modulus).
pub fn recover_idempotents(a: &GradedMatrix, span: &[GradedMatrix]) -> Result<Vec<RecoveredIdempotent>> {
    if let Some(m) = span.iter().find(|m| m.dim() != a.dim()) {
        return Err(Error::DimensionMismatch { left: a.dim(), right: m.dim() });
    }
    let scale = a.op_norm_q(0)?;
    if scale == 0.0 {
        return Ok(Vec::new());
    }
    let (lambdas, krylov) = coefficients(a)?;
    let lmax = lambdas.iter().map(|l| l.norm()).fold(0.0, f64::max);
    for (i, l) in lambdas.iter().enumerate() {
        if l.norm() <= DISTINCTNESS_TOL * lmax {
            return Err(Error::IllPosed(format!("coefficient {l} is numerically zero")));
        }
        if let Some(m) = lambdas[i + 1..].iter().find(|m| (*m - l).norm() <= DISTINCTNESS_TOL * lmax) {
            return Err(Error::IllPosed(format!("coefficients {l} and {m} are not distinct")));
        }
    }

    let parts = split(a, &lambdas)?;

    let provided = Subspace::spanned_by(span.iter().map(|m| m.as_slice()), 1e-12);
    let mut sum = GradedMatrix::zeros(a.dim())?;
    for (j, (l, p)) in lambdas.iter().zip(&parts).enumerate() {
        let pn = p.op_norm_q(0)?;
        let idem = p.multiply(p)?.sub(p)?.op_norm_q(0)?;
        if idem > RECOVERY_TOL * pn.max(1.0) {
            return Err(Error::NonIdempotent(format!("a_{} satisfies ||a² - a||_0 = {idem:e}", j + 1)));
        }
        for (k, other) in parts.iter().enumerate().skip(j + 1) {
            let prod = p.multiply(other)?.op_norm_q(0)?.max(other.multiply(p)?.op_norm_q(0)?);
            if prod > RECOVERY_TOL * pn.max(1.0) * other.op_norm_q(0)?.max(1.0) {
                return Err(Error::NonIdempotent(format!("a_{} a_{} = {prod:e} is not zero", j + 1, k + 1)));
            }
        }
        let r = krylov.residual(p.as_slice());
        if r > RECOVERY_TOL {
            return Err(Error::NonIdempotent(format!("a_{} leaves span{{a, a², ...}} (residual {r:e})", j + 1)));
        }
        if !span.is_empty() {
            let r = provided.residual(p.as_slice());
            if r > RECOVERY_TOL {
                return Err(Error::NonIdempotent(format!("a_{} leaves the provided span (residual {r:e})", j + 1)));
            }
        }
        sum = sum.add_scaled(*l, p)?;
    }
    let defect = sum.sub(a)?.op_norm_q(0)?;
    if defect > RECOVERY_TOL * scale {
        return Err(Error::NonIdempotent(format!("Σ λ_j a_j differs from a by {defect:e}")));
    }

    let order = eigenvalue_order(&lambdas, DISTINCTNESS_TOL * lmax);
    Ok(order
        .into_iter()
        .map(|i| RecoveredIdempotent { coefficient: lambdas[i], idempotent: parts[i].clone() })
        .collect())
}

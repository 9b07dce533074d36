//! Functional calculus `Φ(f) = Σ f(λ_n) P_n` over a spectral decomposition.
//!
//! Functions are a closed set of kinds so that `f(0) = 0` holds by
//! construction and every function can be written to JSON:
//!
//! ```json
//! {"kind": "power", "theta": 0.5}
//! {"kind": "polynomial", "coeffs": [{"re": 0, "im": 0}, {"re": 1, "im": 0}]}
//! {"kind": "table", "pairs": [{"lambda": {"re": 1, "im": 0}, "value": {"re": 2, "im": 0}}]}
//! ```
//!
//! Polynomial coefficients are listed from the constant term up, and the
//! constant term must vanish.
//!
//! The topology on functions over the spectrum enters only through
//! [`continuity_estimate`]; there is no separate function-space type.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graded::check_grade;
use crate::io::ComplexJson;
use crate::matrix::GradedMatrix;
use crate::spectral::{decompose_default, ensure_normal, SpectralDecomposition, DEFAULT_NORMAL_TOL};

/// Table keys match an eigenvalue when they agree to this relative distance.
pub const TABLE_MATCH_TOL: f64 = 1e-10;
/// Eigenvalues above `-NEGATIVE_CLAMP_TOL · scale` count as nonnegative.
pub const NEGATIVE_CLAMP_TOL: f64 = 1e-10;
/// Slack on the Hölder domination invariant.
pub const DOMINATION_SLACK: f64 = 1e-9;
/// Smallest exponent a Hölder fit is clamped to.
pub const MIN_HOLDER_EXPONENT: f64 = 1e-6;
/// Ratio between the smallest and largest Hölder sample point.
pub const HOLDER_GRID_SPAN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TablePair {
    pub lambda: ComplexJson,
    pub value: ComplexJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FunctionKind {
    Power { theta: f64 },
    Polynomial { coeffs: Vec<ComplexJson> },
    Table { pairs: Vec<TablePair> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FunctionJson", into = "FunctionJson")]
pub struct SpectralFunction {
    kind: FunctionKind,
    description: String,
}

#[derive(Serialize, Deserialize)]
struct FunctionJson {
    #[serde(flatten)]
    kind: FunctionKind,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    description: String,
}

impl TryFrom<FunctionJson> for SpectralFunction {
    type Error = Error;

    fn try_from(j: FunctionJson) -> Result<Self> {
        Self::new(j.kind, j.description)
    }
}

impl From<SpectralFunction> for FunctionJson {
    fn from(f: SpectralFunction) -> Self {
        Self { kind: f.kind, description: f.description }
    }
}

impl SpectralFunction {
    pub fn new(kind: FunctionKind, description: impl Into<String>) -> Result<Self> {
        match &kind {
            FunctionKind::Power { theta } => {
                if !(theta.is_finite() && *theta > 0.0) {
                    return Err(Error::InvalidArgument(format!("power exponent must be positive, got {theta}")));
                }
            }
            FunctionKind::Polynomial { coeffs } => {
                if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                    return Err(Error::InvalidArgument("polynomial coefficients must be finite".into()));
                }
                if coeffs.first().is_some_and(|c| c.re != 0.0 || c.im != 0.0) {
                    return Err(Error::InvalidArgument("polynomial constant term must be zero".into()));
                }
            }
            FunctionKind::Table { pairs } => {
                for p in pairs {
                    let l = Complex64::from(p.lambda);
                    let v = Complex64::from(p.value);
                    if !l.is_finite() || !v.is_finite() {
                        return Err(Error::InvalidArgument("table entries must be finite".into()));
                    }
                    if l == Complex64::new(0.0, 0.0) && v != Complex64::new(0.0, 0.0) {
                        return Err(Error::InvalidArgument("table maps 0 to a nonzero value".into()));
                    }
                }
            }
        }
        Ok(Self { kind, description: description.into() })
    }

    pub fn power(theta: f64) -> Result<Self> {
        Self::new(FunctionKind::Power { theta }, format!("t^{theta}"))
    }

    /// `Σ_i coeffs[i] t^i`.
    pub fn polynomial(coeffs: &[Complex64]) -> Result<Self> {
        Self::new(FunctionKind::Polynomial { coeffs: coeffs.iter().map(|&c| c.into()).collect() }, "polynomial")
    }

    pub fn real_polynomial(coeffs: &[f64]) -> Result<Self> {
        let c: Vec<Complex64> = coeffs.iter().map(|&a| Complex64::new(a, 0.0)).collect();
        Self::polynomial(&c)
    }

    pub fn table(pairs: &[(Complex64, Complex64)]) -> Result<Self> {
        let pairs = pairs.iter().map(|&(l, v)| TablePair { lambda: l.into(), value: v.into() }).collect();
        Self::new(FunctionKind::Table { pairs }, "table")
    }

    /// The identity `t ↦ t`.
    pub fn identity() -> Self {
        Self::real_polynomial(&[0.0, 1.0]).expect("identity polynomial is valid")
    }

    pub fn kind(&self) -> &FunctionKind {
        &self.kind
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.description = description.into();
        self
    }

    /// `f(t)`. `scale` sets the tolerance for the nonnegativity test of the
    /// power kind and the key match of the table kind.
    pub fn eval(&self, t: Complex64, scale: f64) -> Result<Complex64> {
        match &self.kind {
            FunctionKind::Power { theta } => {
                let tol = NEGATIVE_CLAMP_TOL * scale.max(t.norm());
                if t.im.abs() > tol || t.re < -tol {
                    return Err(Error::NegativeSpectrum(t));
                }
                Ok(Complex64::new(t.re.max(0.0).powf(*theta), 0.0))
            }
            FunctionKind::Polynomial { coeffs } => {
                Ok(coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * t + Complex64::from(*c)))
            }
            FunctionKind::Table { pairs } => {
                if t == Complex64::new(0.0, 0.0) {
                    return Ok(t);
                }
                pairs
                    .iter()
                    .filter(|p| (Complex64::from(p.lambda) - t).norm() <= TABLE_MATCH_TOL * t.norm())
                    .min_by(|a, b| {
                        let da = (Complex64::from(a.lambda) - t).norm();
                        let db = (Complex64::from(b.lambda) - t).norm();
                        da.total_cmp(&db)
                    })
                    .map(|p| p.value.into())
                    .ok_or(Error::MissingTableEntry(t))
            }
        }
    }

    /// `f(λ_n)` for every term of `d`.
    pub fn values_on(&self, d: &SpectralDecomposition) -> Result<Vec<Complex64>> {
        let scale = spectral_radius(d);
        d.eigenvalues().iter().map(|&l| self.eval(l, scale)).collect()
    }

    /// `f` restricted to the spectrum of `d`, as a table.
    pub fn table_on(&self, d: &SpectralDecomposition) -> Result<Self> {
        let values = self.values_on(d)?;
        let pairs: Vec<(Complex64, Complex64)> = d.eigenvalues().iter().copied().zip(values).collect();
        Ok(Self::table(&pairs)?.with_description(format!("{} on spectrum", self.description)))
    }

    /// `conj ∘ f` on the spectrum of `d`.
    pub fn conjugate_on(&self, d: &SpectralDecomposition) -> Result<Self> {
        let values = self.values_on(d)?;
        let pairs: Vec<(Complex64, Complex64)> = d.eigenvalues().iter().copied().zip(values.iter().map(|v| v.conj())).collect();
        Ok(Self::table(&pairs)?.with_description(format!("conj({})", self.description)))
    }

    /// Pointwise product on the spectrum of `d`.
    pub fn product_on(&self, other: &Self, d: &SpectralDecomposition) -> Result<Self> {
        self.combine_on(other, d, |a, b| a * b, "·")
    }

    /// Pointwise sum on the spectrum of `d`.
    pub fn sum_on(&self, other: &Self, d: &SpectralDecomposition) -> Result<Self> {
        self.combine_on(other, d, |a, b| a + b, "+")
    }

    fn combine_on(
        &self,
        other: &Self,
        d: &SpectralDecomposition,
        op: impl Fn(Complex64, Complex64) -> Complex64,
        sym: &str,
    ) -> Result<Self> {
        let a = self.values_on(d)?;
        let b = other.values_on(d)?;
        let pairs: Vec<(Complex64, Complex64)> =
            d.eigenvalues().iter().zip(a.iter().zip(&b)).map(|(&l, (&x, &y))| (l, op(x, y))).collect();
        Ok(Self::table(&pairs)?.with_description(format!("({}) {sym} ({})", self.description, other.description)))
    }
}

fn spectral_radius(d: &SpectralDecomposition) -> f64 {
    d.eigenvalues().first().map_or(0.0, |l| l.norm())
}

/// `Σ f(λ_n) P_n`.
pub fn apply(f: &SpectralFunction, d: &SpectralDecomposition) -> Result<GradedMatrix> {
    let values = f.values_on(d)?;
    let mut acc = GradedMatrix::zeros(d.dim())?;
    for (v, p) in values.iter().zip(d.projections()) {
        acc = acc.add_scaled(*v, p)?;
    }
    Ok(acc)
}

/// `C` and `θ` with `|f(t)| <= C |t|^θ` on the sampled points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderEstimate {
    pub theta: f64,
    pub constant: f64,
    /// `(t, |f(t)|)` pairs.
    pub sample_points: Vec<(f64, f64)>,
    /// Root-mean-square residual of the unclamped log-log fit.
    pub residual: f64,
}

impl HolderEstimate {
    pub fn dominates(&self, t: f64, value: f64) -> bool {
        value <= self.constant * t.powf(self.theta) * (1.0 + DOMINATION_SLACK)
    }
}

/// `t_i = radius · span^{(n-1-i)/(n-1)}`, increasing, ending at `radius`.
pub fn holder_grid(radius: f64, n_samples: usize) -> Vec<f64> {
    let m = (n_samples - 1) as f64;
    (0..n_samples).map(|i| radius * HOLDER_GRID_SPAN.powf((m - i as f64) / m)).collect()
}

/// Fits `log|f(t)| ≈ log C + θ log t` by least squares on a log-spaced grid
/// of `(0, radius]`, clamps `θ` into `(0, 1]`, then sets `C` to the largest
/// observed ratio `|f(t)| / t^θ` so that domination holds at every sample.
///
/// Table functions are sampled at their own keys with `0 < |λ| <= radius`.
pub fn estimate_holder(f: &SpectralFunction, radius: f64, n_samples: usize) -> Result<HolderEstimate> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
    }
    if n_samples < 8 {
        return Err(Error::InvalidArgument(format!("at least 8 samples required, got {n_samples}")));
    }
    let samples = match f.kind() {
        FunctionKind::Table { pairs } => pairs
            .iter()
            .map(|p| (Complex64::from(p.lambda).norm(), Complex64::from(p.value).norm()))
            .filter(|(t, _)| *t > 0.0 && *t <= radius)
            .collect(),
        _ => holder_grid(radius, n_samples)
            .into_iter()
            .map(|t| Ok((t, f.eval(Complex64::new(t, 0.0), radius)?.norm())))
            .collect::<Result<Vec<_>>>()?,
    };
    fit_holder(samples)
}

/// As [`estimate_holder`] with `radius = |λ_1|`, but the eigenvalues of `d`
/// (at their true complex location) join the samples, so the estimate
/// dominates `f` on the whole spectrum.
pub fn estimate_holder_on(f: &SpectralFunction, d: &SpectralDecomposition, n_samples: usize) -> Result<HolderEstimate> {
    let radius = spectral_radius(d);
    if radius == 0.0 {
        return Err(Error::Vanishing);
    }
    let mut samples = match f.kind() {
        FunctionKind::Table { .. } => Vec::new(),
        _ => estimate_holder(f, radius, n_samples)?.sample_points,
    };
    for (l, v) in d.eigenvalues().iter().zip(f.values_on(d)?) {
        samples.push((l.norm(), v.norm()));
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    fit_holder(samples)
}

fn fit_holder(samples: Vec<(f64, f64)>) -> Result<HolderEstimate> {
    let logs: Vec<(f64, f64)> = samples.iter().filter(|(_, v)| *v > 0.0).map(|(t, v)| (t.ln(), v.ln())).collect();
    if logs.is_empty() {
        return Err(Error::Vanishing);
    }
    let (slope, residual) = if logs.len() == 1 {
        (1.0, 0.0)
    } else {
        let (a, _, res) = least_squares_line(&logs);
        (a, res)
    };
    let theta = slope.clamp(MIN_HOLDER_EXPONENT, 1.0);
    let constant = samples.iter().map(|(t, v)| v / t.powf(theta)).fold(0.0, f64::max);
    Ok(HolderEstimate { theta, constant, sample_points: samples, residual })
}

/// Ordinary least squares `y ≈ a x + b`; returns `(a, b, rms residual)`.
pub(crate) fn least_squares_line(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let a = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let b = my - a * mx;
    let ss: f64 = points.iter().map(|p| (p.1 - a * p.0 - b).powi(2)).sum();
    (a, b, (ss / n).sqrt())
}

/// `(Σ |f(λ_n)| ||P_n||_q, C Σ |λ_n|^θ ||P_n||_q)`. The first never exceeds
/// the second when `h` dominates `f` on the spectrum.
pub fn membership_bound(f: &SpectralFunction, d: &SpectralDecomposition, h: &HolderEstimate, q: u32) -> Result<(f64, f64)> {
    check_grade(q)?;
    let values = f.values_on(d)?;
    let norms = d.projection_norms(q)?;
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for ((v, l), pn) in values.iter().zip(d.eigenvalues()).zip(&norms) {
        lhs += v.norm() * pn;
        rhs += l.norm().powf(h.theta) * pn;
    }
    Ok((lhs, h.constant * rhs))
}

/// Both sides of `||Φ(f)||_q <= (Σ_n ||P_n||_q / ||P_n||_r) · max_n |f(λ_n)| ||P_n||_r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuityEstimate {
    pub q: u32,
    pub r: u32,
    pub lhs: f64,
    pub ratio_sum: f64,
    /// `max_n |f(λ_n)| ||P_n||_r`.
    pub weighted_sup: f64,
    pub rhs: f64,
}

impl ContinuityEstimate {
    pub fn holds(&self, rel_slack: f64) -> bool {
        self.lhs <= self.rhs * (1.0 + rel_slack)
    }
}

pub fn continuity_estimate(f: &SpectralFunction, d: &SpectralDecomposition, q: u32, r: u32) -> Result<ContinuityEstimate> {
    check_grade(q)?;
    check_grade(r)?;
    if r < q {
        return Err(Error::InvalidArgument(format!("need r >= q, got q = {q}, r = {r}")));
    }
    let lhs = apply(f, d)?.op_norm_q(q)?;
    let nq = d.projection_norms(q)?;
    let nr = d.projection_norms(r)?;
    let ratio_sum: f64 = nq.iter().zip(&nr).map(|(a, b)| a / b).sum();
    let values = f.values_on(d)?;
    let weighted_sup = values.iter().zip(&nr).map(|(v, b)| v.norm() * b).fold(0.0, f64::max);
    Ok(ContinuityEstimate { q, r, lhs, ratio_sum, weighted_sup, rhs: ratio_sum * weighted_sup })
}

/// `x^θ` for normal `x` with spectrum in `[0, ∞)`, computed as
/// `x^{⌊θ⌋} · x^{θ - ⌊θ⌋}`: the integer part by repeated multiplication and
/// the fractional part through the calculus.
pub fn fractional_power(x: &GradedMatrix, theta: f64) -> Result<GradedMatrix> {
    if !(theta.is_finite() && theta > 0.0) {
        return Err(Error::InvalidArgument(format!("exponent must be positive, got {theta}")));
    }
    ensure_normal(x, DEFAULT_NORMAL_TOL)?;
    let d = decompose_default(x)?;
    let scale = spectral_radius(&d);
    for &l in d.eigenvalues() {
        let tol = NEGATIVE_CLAMP_TOL * scale;
        if l.im.abs() > tol || l.re < -tol {
            return Err(Error::NegativeSpectrum(l));
        }
    }
    let whole = theta.floor();
    let frac = theta - whole;
    let mut out: Option<GradedMatrix> = None;
    if whole >= 1.0 {
        let mut acc = x.clone();
        for _ in 1..(whole as u64) {
            acc = acc.multiply(x)?;
        }
        out = Some(acc);
    }
    if frac > 0.0 {
        let part = apply(&SpectralFunction::power(frac)?, &d)?;
        out = Some(match out {
            Some(acc) => acc.multiply(&part)?,
            None => part,
        });
    }
    Ok(out.expect("theta > 0 gives an integer or fractional part"))
}

/// `p(x)` by Horner's rule in matrix arithmetic, independent of any
/// decomposition.
pub fn polynomial_of_matrix(coeffs: &[Complex64], x: &GradedMatrix) -> Result<GradedMatrix> {
    let mut acc = GradedMatrix::zeros(x.dim())?;
    let id = GradedMatrix::identity(x.dim())?;
    for c in coeffs.iter().rev() {
        acc = acc.multiply(x)?.add_scaled(*c, &id)?;
    }
    Ok(acc)
}

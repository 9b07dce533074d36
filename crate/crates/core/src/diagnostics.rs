//! Finite-scale checks of the interpolation inequalities behind the decay
//! characterization of smooth normal operators.
//!
//! Statements about membership in a sequence space cannot be decided from a
//! finite prefix. The surrogates used here are fixed configuration: a
//! log-log decay exponent of at most `-1` (fitted from `n = 3` on) and less
//! than 1% growth of suprema and sums between the two largest truncations.
//!
//! [`dn_check`] tests the multiplicative form of the inequality. The additive
//! form `||x||_q <= C (h^θ ||x||_r + ||x||_0 / h)` follows from it by choosing
//! `h`, so it is reported per sample but not counted separately.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::calculus::least_squares_line;
use crate::error::{Error, Result};
use crate::graded::check_grade;
use crate::matrix::GradedMatrix;
use crate::spectral::{decompose_default, SpectralDecomposition};

/// Slack on the DN inequality with the reference constant.
pub const DN_SLACK: f64 = 1e-9;
/// Growth of a supremum (over the last quarter, or across truncations)
/// still counted as stable.
pub const STABILITY_GROWTH: f64 = 0.01;
/// Largest decay exponent accepted as evidence of rapid decay.
pub const DECAY_EXPONENT_LIMIT: f64 = -1.0;
/// Leading terms left out of the decay fit.
pub const FIT_SKIP: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DnSample {
    pub norm_q: f64,
    pub norm_0: f64,
    pub norm_r: f64,
    /// `||x||_q / (||x||_0^{1-θ} ||x||_r^θ)`; absent for the zero matrix.
    pub constant: Option<f64>,
    /// `||x||_q / (h^θ ||x||_r + ||x||_0 / h)` at the minimizing `h`.
    pub additive_constant: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DNReport {
    pub q: u32,
    pub r: u32,
    pub theta: f64,
    pub samples: Vec<DnSample>,
    /// Smallest `C` with `||x||_q <= C ||x||_0^{1-θ} ||x||_r^θ` on every sample.
    pub fitted_constant: f64,
    /// Constant against which violations are counted.
    pub reference_constant: f64,
    pub violations: usize,
    pub skipped: usize,
    pub notes: Vec<String>,
}

impl DNReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Evaluates `||x||_q <= C ||x||_0^{1-θ} ||x||_r^θ` over the samples and
/// counts violations of it with `C = 1`. For `q <= θ r` the inequality with
/// `C = 1` holds for every matrix.
pub fn dn_check(samples: &[GradedMatrix], q: u32, r: u32, theta: f64) -> Result<DNReport> {
    check_grade(q)?;
    check_grade(r)?;
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidArgument(format!("theta must lie in (0, 1), got {theta}")));
    }
    if r <= q {
        return Err(Error::InvalidArgument(format!("need r > q, got q = {q}, r = {r}")));
    }
    let reference_constant = 1.0;
    let mut out = Vec::with_capacity(samples.len());
    let mut fitted = 0.0f64;
    let mut violations = 0;
    let mut skipped = 0;
    let mut notes = Vec::new();
    for (i, x) in samples.iter().enumerate() {
        let (nq, n0, nr) = (x.op_norm_q(q)?, x.op_norm_q(0)?, x.op_norm_q(r)?);
        if n0 == 0.0 {
            skipped += 1;
            notes.push(format!("sample {} is zero and was skipped", i + 1));
            out.push(DnSample { norm_q: nq, norm_0: n0, norm_r: nr, constant: None, additive_constant: None });
            continue;
        }
        let geometric = n0.powf(1.0 - theta) * nr.powf(theta);
        let c = nq / geometric;
        fitted = fitted.max(c);
        if nq > reference_constant * geometric * (1.0 + DN_SLACK) {
            violations += 1;
        }
        let h = (n0 / (theta * nr)).powf(1.0 / (theta + 1.0));
        let additive = h.powf(theta) * nr + n0 / h;
        out.push(DnSample { norm_q: nq, norm_0: n0, norm_r: nr, constant: Some(c), additive_constant: Some(nq / additive) });
    }
    Ok(DNReport { q, r, theta, samples: out, fitted_constant: fitted, reference_constant, violations, skipped, notes })
}

/// Slope of `log value` against `log n` and its residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub residual: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub grades: Vec<u32>,
    pub thetas: Vec<f64>,
    pub sequences: BTreeMap<String, Vec<f64>>,
    pub fitted_exponents: BTreeMap<String, ExponentFit>,
    pub verdicts: BTreeMap<String, bool>,
    /// Reference bounds, keyed like the sequences they bound.
    pub reference: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub passed: bool,
}

fn sup(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

/// The supremum over the whole sequence exceeds the supremum over its first
/// three quarters by less than [`STABILITY_GROWTH`].
fn stabilizes(v: &[f64]) -> bool {
    let head = v.len() - v.len() / 4;
    let (h, all) = (sup(&v[..head]), sup(v));
    all <= h * (1.0 + STABILITY_GROWTH)
}

/// Least-squares decay exponent of `values[n-1]` in `n`, skipping the first
/// [`FIT_SKIP`] terms and any zero values. `None` with fewer than two points.
pub fn fit_exponent(values: &[f64]) -> Option<ExponentFit> {
    let pts: Vec<(f64, f64)> = values
        .iter()
        .enumerate()
        .skip(FIT_SKIP)
        .filter(|(_, v)| **v > 0.0)
        .map(|(i, v)| (((i + 1) as f64).ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let (slope, _, residual) = least_squares_line(&pts);
    Some(ExponentFit { slope, residual, points: pts.len() })
}

/// Running suprema of `|λ_n|^θ · row_q[n]` and of the pair products
/// `|λ_n|^θ · row_q[n] · row_{q'}[n]` for `q <= q'`. A sequence passes when
/// its supremum is already reached, up to 1%, in the first three quarters.
///
/// When grade 0 and grade `r = q/θ` are both present the reference value
/// `C_1^{1-θ} C_2^θ` is reported, with `C_1 = sup row_0` and
/// `C_2 = sup |λ_n| row_r`.
pub fn interpolation_check(lambdas: &[f64], norm_rows: &BTreeMap<u32, Vec<f64>>, theta: f64) -> Result<DecayReport> {
    if lambdas.is_empty() {
        return Err(Error::InvalidArgument("empty λ sequence".into()));
    }
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidArgument(format!("theta must lie in (0, 1], got {theta}")));
    }
    for (q, row) in norm_rows {
        check_grade(*q)?;
        if row.len() != lambdas.len() {
            return Err(Error::DimensionMismatch { left: lambdas.len(), right: row.len() });
        }
    }
    let weights: Vec<f64> = lambdas.iter().map(|l| l.abs().powf(theta)).collect();
    let mut sequences = BTreeMap::new();
    let mut verdicts = BTreeMap::new();
    let mut reference = BTreeMap::new();
    sequences.insert("abs_lambda".to_string(), lambdas.iter().map(|l| l.abs()).collect::<Vec<_>>());

    for (&q, row) in norm_rows {
        let label = format!("product_q{q}");
        let prod: Vec<f64> = weights.iter().zip(row).map(|(w, p)| w * p).collect();
        verdicts.insert(label.clone(), stabilizes(&prod));
        sequences.insert(format!("running_sup_q{q}"), running_sup(&prod));
        sequences.insert(label.clone(), prod);

        let r = q as f64 / theta;
        if r.fract() == 0.0 {
            if let (Some(row0), Some(row_r)) = (norm_rows.get(&0), norm_rows.get(&(r as u32))) {
                let c1 = sup(row0);
                let c2 = sup(&lambdas.iter().zip(row_r).map(|(l, p)| l.abs() * p).collect::<Vec<_>>());
                reference.insert(label, c1.powf(1.0 - theta) * c2.powf(theta));
            }
        }
    }
    for (&q, row_q) in norm_rows {
        for (&q2, row_q2) in norm_rows.range(q..) {
            let prod: Vec<f64> = weights.iter().zip(row_q.iter().zip(row_q2)).map(|(w, (a, b))| w * a * b).collect();
            let label = format!("pair_q{q}_q{q2}");
            verdicts.insert(label.clone(), stabilizes(&prod));
            sequences.insert(label, prod);
        }
    }
    let passed = verdicts.values().all(|v| *v);
    Ok(DecayReport {
        grades: norm_rows.keys().copied().collect(),
        thetas: vec![theta],
        sequences,
        fitted_exponents: BTreeMap::new(),
        verdicts,
        reference,
        notes: Vec::new(),
        passed,
    })
}

fn running_sup(v: &[f64]) -> Vec<f64> {
    let mut m = 0.0f64;
    v.iter()
        .map(|x| {
            m = m.max(*x);
            m
        })
        .collect()
}

fn theta_label(theta: f64, q: u32) -> String {
    format!("theta={theta},q={q}")
}

fn growth_ok(prev: f64, last: f64) -> bool {
    if prev == 0.0 {
        last == 0.0
    } else {
        (last - prev) / prev < STABILITY_GROWTH
    }
}

/// Decay diagnostics for increasing truncations of one model.
///
/// At the largest truncation it records `|λ_n|`, `||P_n||_q` and the
/// products `|λ_n|^θ ||P_n||_q`, and fits their decay exponents. Across
/// truncations it tracks `sup_n |λ_n| ||P_n||_q` and `Σ_n |λ_n| ||P_n||_q`.
/// The verdict requires every exponent to be at most `-1` and both tracked
/// quantities to grow by less than 1% between the two largest truncations.
///
/// If the two largest truncations have the same number of terms and the same
/// total rank, the operator is treated as finite rank: it belongs to the
/// smooth class exactly when its projections do, which holds at every
/// truncation, and only the stability test applies.
pub fn characterize(x_family: &[GradedMatrix], grades: &[u32], thetas: &[f64]) -> Result<DecayReport> {
    if x_family.is_empty() {
        return Err(Error::InvalidArgument("empty model family".into()));
    }
    if grades.is_empty() || thetas.is_empty() {
        return Err(Error::InvalidArgument("need at least one grade and one theta".into()));
    }
    for &q in grades {
        check_grade(q)?;
    }
    if let Some(t) = thetas.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
        return Err(Error::InvalidArgument(format!("theta must lie in (0, 1], got {t}")));
    }
    if x_family.windows(2).any(|w| w[1].dim() <= w[0].dim()) {
        return Err(Error::InvalidArgument("family dimensions must increase strictly".into()));
    }

    let decs = x_family.iter().map(decompose_default).collect::<Result<Vec<SpectralDecomposition>>>()?;
    let mut sequences = BTreeMap::new();
    let mut fitted_exponents = BTreeMap::new();
    let mut verdicts = BTreeMap::new();
    let mut notes = Vec::new();

    for &q in grades {
        let mut sups = Vec::with_capacity(decs.len());
        let mut sums = Vec::with_capacity(decs.len());
        for d in &decs {
            let norms = d.projection_norms(q)?;
            let terms: Vec<f64> = d.eigenvalues().iter().zip(&norms).map(|(l, p)| l.norm() * p).collect();
            sups.push(sup(&terms));
            sums.push(terms.iter().sum());
        }
        if sups.len() >= 2 {
            let k = sups.len();
            verdicts.insert(format!("sup_stable_q{q}"), growth_ok(sups[k - 2], sups[k - 1]));
            verdicts.insert(format!("sum_stable_q{q}"), growth_ok(sums[k - 2], sums[k - 1]));
        }
        sequences.insert(format!("sup_q{q}"), sups);
        sequences.insert(format!("sum_q{q}"), sums);
    }
    if decs.len() < 2 {
        notes.push("single truncation: stability across truncations not assessed".into());
    }

    let last = decs.last().expect("nonempty");
    let finite = decs.len() >= 2 && {
        let prev = &decs[decs.len() - 2];
        prev.len() == last.len()
            && prev.multiplicities().iter().sum::<usize>() == last.multiplicities().iter().sum::<usize>()
    };
    if finite {
        notes.push("finite case: x is smooth iff each spectral projection is, which holds in every truncation".into());
    }

    let abs_lambda: Vec<f64> = last.eigenvalues().iter().map(|l| l.norm()).collect();
    for &q in grades {
        let norms = last.projection_norms(q)?;
        for &theta in thetas {
            let label = theta_label(theta, q);
            let prod: Vec<f64> = abs_lambda.iter().zip(&norms).map(|(l, p)| l.powf(theta) * p).collect();
            if !finite {
                let fit = fit_exponent(&prod);
                verdicts.insert(format!("decay_{label}"), fit.is_some_and(|f| f.slope <= DECAY_EXPONENT_LIMIT));
                match fit {
                    Some(f) => {
                        fitted_exponents.insert(label.clone(), f);
                    }
                    None => notes.push(format!("{label}: too few terms to fit a decay exponent")),
                }
            }
            sequences.insert(format!("product_{label}"), prod);
        }
        sequences.insert(format!("norm_q{q}"), norms);
    }
    sequences.insert("abs_lambda".into(), abs_lambda);

    let passed = verdicts.values().all(|v| *v);
    Ok(DecayReport {
        grades: grades.to_vec(),
        thetas: thetas.to_vec(),
        sequences,
        fitted_exponents,
        verdicts,
        reference: BTreeMap::new(),
        notes,
        passed,
    })
}

/// One row per `n`, one column per sequence; shorter sequences leave blanks.
pub fn decay_report_csv(report: &DecayReport) -> String {
    let labels: Vec<&String> = report.sequences.keys().collect();
    let rows = report.sequences.values().map(Vec::len).max().unwrap_or(0);
    let mut out = String::from("n");
    for l in &labels {
        out.push(',');
        out.push_str(l);
    }
    out.push('\n');
    for i in 0..rows {
        out.push_str(&(i + 1).to_string());
        for l in &labels {
            out.push(',');
            if let Some(v) = report.sequences[*l].get(i) {
                out.push_str(&format!("{v:?}"));
            }
        }
        out.push('\n');
    }
    out
}

/// One row per sample.
pub fn dn_report_csv(report: &DNReport) -> String {
    let mut out = String::from("sample,norm_q,norm_0,norm_r,constant,additive_constant\n");
    let opt = |v: Option<f64>| v.map(|c| format!("{c:?}")).unwrap_or_default();
    for (i, s) in report.samples.iter().enumerate() {
        out.push_str(&format!(
            "{},{:?},{:?},{:?},{},{}\n",
            i + 1,
            s.norm_q,
            s.norm_0,
            s.norm_r,
            opt(s.constant),
            opt(s.additive_constant)
        ));
    }
    out
}

use std::collections::BTreeMap;

use serde::ser::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graded::check_grade;
use crate::matrix::GradedMatrix;
use crate::spectral::{decompose_default, ensure_normal, DEFAULT_CLUSTER_TOL, DEFAULT_NORMAL_TOL};

#[derive(Debug, Clone)]
pub struct Iterate {
    pub k: usize,
    pub y: GradedMatrix,
    /// `||y_k - Π||_q` per recorded grade.
    pub error: BTreeMap<u32, f64>,
}

/// Iterates `y_k = (x x* / |λ_1|²)^k` converging to the projection `Π` onto
/// the eigenspaces of maximal modulus, with the per-step decay bound
/// `(1/|λ_1|) (|λ_{N_1+1}| / |λ_1|)^{2k-1} Σ_{n > N_1} |λ_n| ||P_n||_q`.
#[derive(Debug, Clone)]
pub struct ExtractionTrace {
    pub grades: Vec<u32>,
    pub iterates: Vec<Iterate>,
    pub bound: BTreeMap<u32, Vec<f64>>,
    pub leading_modulus: f64,
    /// `|λ_{N_1+1}| / |λ_1|`, zero when every eigenvalue has maximal modulus.
    pub gap_ratio: f64,
    pub leading_count: usize,
    pub leading_projection: GradedMatrix,
    /// Size of the rounding noise in `||y_k - Π||_q`; the bound is only
    /// meaningful above it.
    pub rounding_floor: BTreeMap<u32, f64>,
}

impl ExtractionTrace {
    pub fn errors(&self, q: u32) -> Vec<f64> {
        self.iterates.iter().map(|it| it.error[&q]).collect()
    }

    /// `(k, q)` pairs with `error > bound · (1 + rel_slack)`.
    pub fn violations(&self, rel_slack: f64) -> Vec<(usize, u32)> {
        self.violations_with_floor(rel_slack, false)
    }

    /// As [`Self::violations`], but an error below the rounding floor never counts.
    pub fn violations_above_floor(&self, rel_slack: f64) -> Vec<(usize, u32)> {
        self.violations_with_floor(rel_slack, true)
    }

    fn violations_with_floor(&self, rel_slack: f64, use_floor: bool) -> Vec<(usize, u32)> {
        let mut out = Vec::new();
        for (i, it) in self.iterates.iter().enumerate() {
            for &q in &self.grades {
                let err = it.error[&q];
                let allowed = self.bound[&q][i] * (1.0 + rel_slack);
                let floor = if use_floor { self.rounding_floor[&q] } else { 0.0 };
                if err > allowed && err > floor {
                    out.push((it.k, q));
                }
            }
        }
        out
    }

    /// Errors never increase after the first iterate (up to the rounding floor).
    pub fn is_monotone(&self) -> bool {
        self.grades.iter().all(|&q| {
            let e = self.errors(q);
            let floor = self.rounding_floor[&q];
            e.windows(2).skip(1).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + floor)
        })
    }
}

#[derive(serde::Serialize)]
struct TraceJson<'a> {
    grades: &'a [u32],
    k: Vec<usize>,
    error: BTreeMap<String, Vec<f64>>,
    bound: BTreeMap<String, Vec<f64>>,
    rounding_floor: BTreeMap<String, f64>,
    leading_modulus: f64,
    gap_ratio: f64,
    leading_count: usize,
}

impl Serialize for ExtractionTrace {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TraceJson {
            grades: &self.grades,
            k: self.iterates.iter().map(|it| it.k).collect(),
            error: self.grades.iter().map(|q| (q.to_string(), self.errors(*q))).collect(),
            bound: self.bound.iter().map(|(q, b)| (q.to_string(), b.clone())).collect(),
            rounding_floor: self.rounding_floor.iter().map(|(q, f)| (q.to_string(), *f)).collect(),
            leading_modulus: self.leading_modulus,
            gap_ratio: self.gap_ratio,
            leading_count: self.leading_count,
        }
        .serialize(s)
    }
}

/// Builds `y_k` for `k = 1..=k_max` from products, adjoints and scalings only.
/// The eigendecomposition serves as the oracle for `Π` and the bound.
pub fn extract_leading_projection(x: &GradedMatrix, k_max: usize, grades: &[u32]) -> Result<ExtractionTrace> {
    if k_max < 1 {
        return Err(Error::InvalidArgument("k_max must be at least 1".into()));
    }
    for &q in grades {
        check_grade(q)?;
    }
    ensure_normal(x, DEFAULT_NORMAL_TOL)?;
    let lead = x.op_norm_q(0)?;
    if lead == 0.0 {
        return Err(Error::IllPosed("leading projection of the zero operator".into()));
    }

    let d = decompose_default(x)?;
    let n1 = d.leading_count(DEFAULT_CLUSTER_TOL * lead);
    let lambda1 = d.eigenvalues()[0].norm();
    let mut pi = GradedMatrix::zeros(x.dim())?;
    for p in &d.projections()[..n1] {
        pi = pi.add(p)?;
    }
    let gap_ratio = d.eigenvalues().get(n1).map_or(0.0, |l| l.norm() / lambda1);

    let mut tail_sums = BTreeMap::new();
    let mut floors = BTreeMap::new();
    let z = x.multiply(&x.involution())?.scale_real(1.0 / (lead * lead));
    for &q in grades {
        let mut s = 0.0;
        for (l, p) in d.eigenvalues().iter().zip(d.projections()).skip(n1) {
            s += l.norm() * p.op_norm_q(q)?;
        }
        tail_sums.insert(q, s);
        let scale = pi.op_norm_q(q)?.max(z.op_norm_q(q)?);
        floors.insert(q, 100.0 * x.dim() as f64 * f64::EPSILON * scale);
    }

    let mut iterates = Vec::with_capacity(k_max);
    let mut bound: BTreeMap<u32, Vec<f64>> = grades.iter().map(|&q| (q, Vec::with_capacity(k_max))).collect();
    let mut y = z.clone();
    for k in 1..=k_max {
        if k > 1 {
            y = y.multiply(&z)?;
        }
        let diff = y.sub(&pi)?;
        let mut error = BTreeMap::new();
        for &q in grades {
            error.insert(q, diff.op_norm_q(q)?);
            let b = gap_ratio.powi(2 * k as i32 - 1) * tail_sums[&q] / lambda1;
            bound.get_mut(&q).expect("grade present").push(b);
        }
        iterates.push(Iterate { k, y: y.clone(), error });
    }

    Ok(ExtractionTrace {
        grades: grades.to_vec(),
        iterates,
        bound,
        leading_modulus: lambda1,
        gap_ratio,
        leading_count: n1,
        leading_projection: pi,
        rounding_floor: floors,
    })
}

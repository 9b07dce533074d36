//! Model operators for tests and experiments.
//!
//! Randomness comes from SplitMix64 (state `= seed`, increment
//! `0x9e3779b97f4a7c15`, the standard output mix). A uniform double in
//! `[0, 1)` is `(next_u64 >> 11) · 2^-53`. Any reimplementation of that
//! contract reproduces the fixtures bit for bit.
//!
//! Specs are written as JSON (`{"kind": "diag_power", "alpha": 2, "dim": 64}`)
//! or, for the flat kinds, as a flag string `diag-power:alpha=2,dim=64`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graded::check_dim;
use crate::io::ComplexJson;
use crate::matrix::GradedMatrix;

/// Seeded source of uniform doubles.
#[derive(Debug, Clone)]
pub struct SeededRng(SplitMix64);

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self(SplitMix64::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }

    /// Uniform in `lo..=hi`.
    pub fn int_in(&mut self, lo: usize, hi: usize) -> usize {
        lo + self.below(hi - lo + 1)
    }

    /// A complex number in the unit disc, `(a + ib) / √2` with `a, b` uniform
    /// in `[-1, 1)`.
    pub fn disc(&mut self) -> Complex64 {
        let a = self.uniform_in(-1.0, 1.0);
        let b = self.uniform_in(-1.0, 1.0);
        Complex64::new(a, b) / 2f64.sqrt()
    }
}

/// The plane rotation by `angle` in coordinates `i < j` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rotation {
    pub i: usize,
    pub j: usize,
    pub angle: f64,
}

/// `count` rotations in uniformly chosen planes with angles in `[0, 2π)`.
pub fn random_rotations(dim: usize, count: usize, rng: &mut SeededRng) -> Vec<Rotation> {
    if dim < 2 {
        return Vec::new();
    }
    (0..count)
        .map(|_| {
            let i = rng.int_in(1, dim - 1);
            let j = rng.int_in(i + 1, dim);
            Rotation { i, j, angle: rng.uniform_in(0.0, 2.0 * PI) }
        })
        .collect()
}

/// `x ↦ R x Rᵀ` for each rotation in order.
pub fn conjugate_by_rotations(x: &GradedMatrix, rotations: &[Rotation]) -> Result<GradedMatrix> {
    let n = x.dim();
    let mut a = x.as_slice().to_vec();
    for r in rotations {
        if r.i == 0 || r.i >= r.j || r.j > n {
            return Err(Error::InvalidArgument(format!("rotation plane ({}, {}) invalid for dim {n}", r.i, r.j)));
        }
        let (i, j) = (r.i - 1, r.j - 1);
        let (c, s) = (r.angle.cos(), r.angle.sin());
        for k in 0..n {
            let (ai, aj) = (a[i * n + k], a[j * n + k]);
            a[i * n + k] = ai * c - aj * s;
            a[j * n + k] = ai * s + aj * c;
        }
        for k in 0..n {
            let (ai, aj) = (a[k * n + i], a[k * n + j]);
            a[k * n + i] = ai * c - aj * s;
            a[k * n + j] = ai * s + aj * c;
        }
    }
    GradedMatrix::new(n, a)
}

/// Direction of a rank-one projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VectorSpec {
    /// `v_j = j^{-alpha}`.
    Decay { alpha: f64 },
    /// `v_j = disc() · j^{-p}`.
    Random { p: f64, seed: u64 },
    Explicit { entries: Vec<ComplexJson> },
}

impl VectorSpec {
    fn generate(&self, dim: usize) -> Result<Vec<Complex64>> {
        let v: Vec<Complex64> = match self {
            VectorSpec::Decay { alpha } => (1..=dim).map(|j| Complex64::new((j as f64).powf(-alpha), 0.0)).collect(),
            VectorSpec::Random { p, seed } => {
                let mut rng = SeededRng::new(*seed);
                (1..=dim).map(|j| rng.disc() * (j as f64).powf(-p)).collect()
            }
            VectorSpec::Explicit { entries } => {
                if entries.len() != dim {
                    return Err(Error::DimensionMismatch { left: dim, right: entries.len() });
                }
                entries.iter().map(|&z| z.into()).collect()
            }
        };
        if v.iter().all(|z| z.norm() == 0.0) {
            return Err(Error::InvalidArgument("rank-one direction is zero".into()));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    /// `diag(n^{-alpha})`.
    DiagPower { alpha: f64 },
    /// `diag(e^{-beta n})`.
    DiagExp { beta: f64 },
    /// `E_n`.
    UnitProjection { n: usize },
    /// Orthogonal projection onto the span of one vector.
    RankOne { vector: VectorSpec },
    /// Hermitian with `|x_jk| <= 1 / (j^p k^p)`.
    SmoothRandom { p: f64, seed: u64 },
    /// `diag(values)`, padded with zeros up to `dim`.
    Diagonal { values: Vec<ComplexJson> },
    /// `R base Rᵀ` for the listed rotations.
    GivensConjugated { base: Box<ModelSpec>, rotations: Vec<Rotation> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub kind: ModelKind,
    pub dim: usize,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, dim: usize) -> Self {
        Self { kind, dim }
    }

    pub fn diag_power(alpha: f64, dim: usize) -> Self {
        Self::new(ModelKind::DiagPower { alpha }, dim)
    }

    pub fn diag_exp(beta: f64, dim: usize) -> Self {
        Self::new(ModelKind::DiagExp { beta }, dim)
    }

    pub fn unit_projection(n: usize, dim: usize) -> Self {
        Self::new(ModelKind::UnitProjection { n }, dim)
    }

    pub fn smooth_random(p: f64, seed: u64, dim: usize) -> Self {
        Self::new(ModelKind::SmoothRandom { p, seed }, dim)
    }

    pub fn diagonal(values: &[Complex64], dim: usize) -> Self {
        Self::new(ModelKind::Diagonal { values: values.iter().map(|&z| z.into()).collect() }, dim)
    }

    pub fn givens_conjugated(base: ModelSpec, rotations: Vec<Rotation>) -> Self {
        let dim = base.dim;
        Self::new(ModelKind::GivensConjugated { base: Box::new(base), rotations }, dim)
    }

    /// The same model truncated at another dimension. The rotations of a
    /// conjugated model are kept only where both planes fit.
    pub fn with_dim(&self, dim: usize) -> Self {
        let kind = match &self.kind {
            ModelKind::GivensConjugated { base, rotations } => ModelKind::GivensConjugated {
                base: Box::new(base.with_dim(dim)),
                rotations: rotations.iter().copied().filter(|r| r.j <= dim).collect(),
            },
            k => k.clone(),
        };
        Self { kind, dim }
    }

    /// Parses `kind:key=value,...` for the kinds without nested structure:
    /// `diag-power:alpha=..`, `diag-exp:beta=..`, `unit-projection:n=..`,
    /// `smooth-random:p=..,seed=..` and `rank-one:alpha=..` (or `p=..,seed=..`).
    /// Every kind takes `dim=..`.
    pub fn parse_flag(s: &str) -> Result<Self> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut args = BTreeMap::new();
        for kv in rest.split(',').filter(|kv| !kv.trim().is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("model argument '{kv}' is not key=value")))?;
            args.insert(k.trim().to_string(), v.trim().to_string());
        }
        let mut take = |key: &str| -> Result<String> {
            args.remove(key).ok_or_else(|| Error::Parse(format!("model '{name}' needs {key}=")))
        };
        let num = |key: &str, v: String| -> Result<f64> {
            v.parse::<f64>().map_err(|e| Error::Parse(format!("{key}={v}: {e}")))
        };
        let int = |key: &str, v: String| -> Result<u64> {
            v.parse::<u64>().map_err(|e| Error::Parse(format!("{key}={v}: {e}")))
        };
        let dim = int("dim", take("dim")?)? as usize;
        let kind = match name {
            "diag-power" => ModelKind::DiagPower { alpha: num("alpha", take("alpha")?)? },
            "diag-exp" => ModelKind::DiagExp { beta: num("beta", take("beta")?)? },
            "unit-projection" => ModelKind::UnitProjection { n: int("n", take("n")?)? as usize },
            "smooth-random" => ModelKind::SmoothRandom { p: num("p", take("p")?)?, seed: int("seed", take("seed")?)? },
            "rank-one" => {
                let vector = match take("alpha") {
                    Ok(a) => VectorSpec::Decay { alpha: num("alpha", a)? },
                    Err(_) => VectorSpec::Random { p: num("p", take("p")?)?, seed: int("seed", take("seed")?)? },
                };
                ModelKind::RankOne { vector }
            }
            other => return Err(Error::Parse(format!("unknown model kind '{other}'"))),
        };
        if let Some(k) = args.keys().next() {
            return Err(Error::Parse(format!("model '{name}' does not take {k}=")));
        }
        Ok(Self { kind, dim })
    }

    pub fn generate(&self) -> Result<GradedMatrix> {
        generate(self)
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
    }
}

/// Builds the matrix described by `spec`. Deterministic in the spec.
///
/// `smooth_random` draws entries in shells `max(j, k) = m = 1, 2, ...`, so a
/// smaller dimension yields the leading block of a larger one.
pub fn generate(spec: &ModelSpec) -> Result<GradedMatrix> {
    let dim = spec.dim;
    check_dim(dim)?;
    match &spec.kind {
        ModelKind::DiagPower { alpha } => {
            positive("alpha", *alpha)?;
            GradedMatrix::real_diagonal(&(1..=dim).map(|n| (n as f64).powf(-alpha)).collect::<Vec<_>>())
        }
        ModelKind::DiagExp { beta } => {
            positive("beta", *beta)?;
            GradedMatrix::real_diagonal(&(1..=dim).map(|n| (-beta * n as f64).exp()).collect::<Vec<_>>())
        }
        ModelKind::UnitProjection { n } => {
            if *n == 0 || *n > dim {
                return Err(Error::InvalidArgument(format!("unit projection index {n} outside 1..={dim}")));
            }
            GradedMatrix::unit_projection(dim, *n)
        }
        ModelKind::RankOne { vector } => {
            let v = vector.generate(dim)?;
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let u: Vec<Complex64> = v.iter().map(|z| z / norm).collect();
            GradedMatrix::outer(&u)
        }
        ModelKind::SmoothRandom { p, seed } => {
            positive("p", *p)?;
            let mut rng = SeededRng::new(*seed);
            let mut y = vec![Complex64::new(0.0, 0.0); dim * dim];
            for m in 0..dim {
                for l in 0..=m {
                    y[l * dim + m] = rng.disc();
                    if l < m {
                        y[m * dim + l] = rng.disc();
                    }
                }
            }
            let mut x = vec![Complex64::new(0.0, 0.0); dim * dim];
            for j in 0..dim {
                for k in 0..dim {
                    let w = ((j + 1) as f64).powf(-p) * ((k + 1) as f64).powf(-p);
                    x[j * dim + k] = (y[j * dim + k] + y[k * dim + j].conj()) * (0.5 * w);
                }
                x[j * dim + j].im = 0.0;
            }
            GradedMatrix::new(dim, x)
        }
        ModelKind::Diagonal { values } => {
            if values.len() > dim {
                return Err(Error::DimensionMismatch { left: dim, right: values.len() });
            }
            let mut d: Vec<Complex64> = values.iter().map(|&z| z.into()).collect();
            d.resize(dim, Complex64::new(0.0, 0.0));
            GradedMatrix::diagonal(&d)
        }
        ModelKind::GivensConjugated { base, rotations } => {
            if base.dim != dim {
                return Err(Error::DimensionMismatch { left: dim, right: base.dim });
            }
            conjugate_by_rotations(&generate(base)?, rotations)
        }
    }
}

/// Pairwise orthogonal rank-one projections `u_n u_n*`, where `u_n` are the
/// columns of a product of `rotations` random plane rotations.
pub fn rotated_unit_projections(dim: usize, count: usize, rotations: usize, seed: u64) -> Result<Vec<GradedMatrix>> {
    check_dim(dim)?;
    if count > dim {
        return Err(Error::InvalidArgument(format!("{count} projections do not fit in dimension {dim}")));
    }
    let mut rng = SeededRng::new(seed);
    let rot = random_rotations(dim, rotations, &mut rng);
    (1..=count).map(|n| conjugate_by_rotations(&GradedMatrix::unit_projection(dim, n)?, &rot)).collect()
}

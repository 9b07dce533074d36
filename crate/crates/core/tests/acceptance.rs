//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints its verdict line under a plain `cargo test`.
//!
//! Each criterion builds its instances from fixed seeds, checks them against
//! an oracle assembled here from the construction (known eigenvectors,
//! eigenvalues and projections) and returns a JSON summary. Criterion 11
//! reruns everything and compares the serialized summaries byte for byte.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use serde_json::{json, Value};

use smoothlab::calculus::{self, SpectralFunction};
use smoothlab::cli::{execute, RunConfig};
use smoothlab::diagnostics::dn_check;
use smoothlab::matrix::GradedMatrix;
use smoothlab::models::{conjugate_by_rotations, generate, random_rotations, ModelSpec, Rotation, SeededRng};
use smoothlab::spectral::{decompose_default, extract_leading_projection, recover_idempotents, reconstruct};
use smoothlab::subalgebra::{self, koethe_representation, maximality_check, minimal_basis, single_generator, ProjectionFamily};

use clap::Parser;

mod common;
use common::{c, projection_onto, rel, rotated_basis_vector, rotated_diagonal, zero};

struct Outcome {
    pass: bool,
    detail: String,
    data: Value,
}

/// `|v|_q = (Σ |v_j|² j^{2q})^{1/2}`.
fn vector_norm(v: &[Complex64], q: u32) -> f64 {
    v.iter().enumerate().map(|(j, z)| z.norm_sqr() * ((j + 1) as f64).powi(2 * q as i32)).sum::<f64>().sqrt()
}

/// Two-sided bracket on `σ_max(D_q X D_q)`: a power-iteration Rayleigh
/// quotient from below and the Frobenius norm from above.
fn sigma_bracket(x: &GradedMatrix, q: u32) -> (f64, f64) {
    let n = x.dim();
    let w: Vec<Complex64> = (0..n * n)
        .map(|i| {
            let (j, k) = (i / n + 1, i % n + 1);
            x.get(j, k) * ((j * k) as f64).powi(q as i32)
        })
        .collect();
    let frob = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut v: Vec<Complex64> = (0..n).map(|i| c(1.0 + 0.1 * i as f64, 0.05 * i as f64)).collect();
    let mut lower = 0.0f64;
    for _ in 0..60 {
        let nv = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nv == 0.0 {
            break;
        }
        v.iter_mut().for_each(|z| *z /= nv);
        let wv: Vec<Complex64> = (0..n).map(|j| (0..n).map(|k| w[j * n + k] * v[k]).sum()).collect();
        lower = lower.max(wv.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
        v = (0..n).map(|k| (0..n).map(|j| w[j * n + k].conj() * wv[j]).sum()).collect();
    }
    (lower, frob)
}

fn random_matrix(dim: usize, rng: &mut SeededRng) -> GradedMatrix {
    let p = rng.uniform_in(0.0, 2.0);
    let data = (0..dim * dim)
        .map(|i| rng.disc() * (((i / dim + 1) * (i % dim + 1)) as f64).powf(-p))
        .collect();
    GradedMatrix::new(dim, data).unwrap()
}

// 1 ------------------------------------------------------------------------

fn exact_norm_identity() -> Outcome {
    let mut worst = 0.0f64;
    let mut worst_entrywise = 0.0f64;
    for dim in [32usize, 40] {
        for n in 1..=32 {
            let e = GradedMatrix::unit_projection(dim, n).unwrap();
            for q in 0..=4u32 {
                let expect = (n as f64).powi(2 * q as i32);
                worst = worst.max((e.op_norm_q(q).unwrap() - expect).abs() / expect);
                worst_entrywise = worst_entrywise.max((e.matrix_norm_q(q).unwrap() - expect).abs() / expect);
            }
        }
    }
    Outcome {
        pass: worst <= 1e-12 && worst_entrywise <= 1e-12,
        detail: format!("max relative deviation from n^(2q): {worst:.2e}"),
        data: json!({ "max_rel_error": worst, "max_rel_error_entrywise": worst_entrywise }),
    }
}

// 2 ------------------------------------------------------------------------

fn submultiplicativity() -> Outcome {
    let mut rng = SeededRng::new(2);
    let mut violations = 0;
    let mut bracket_failures = 0;
    let mut worst_ratio = 0.0f64;
    for _ in 0..200 {
        let dim = rng.int_in(4, 32);
        let q = rng.int_in(0, 4) as u32;
        let x = random_matrix(dim, &mut rng);
        let y = random_matrix(dim, &mut rng);
        let xy = x.multiply(&y).unwrap();
        let lhs = xy.op_norm_q(q).unwrap();
        let rhs = x.op_norm_q(q).unwrap() * y.op_norm_q(q).unwrap();
        worst_ratio = worst_ratio.max(lhs / rhs);
        if lhs > rhs * (1.0 + 1e-9) {
            violations += 1;
        }
        for m in [&x, &y, &xy] {
            let (lo, hi) = sigma_bracket(m, q);
            let s = m.op_norm_q(q).unwrap();
            if lo > s * (1.0 + 1e-12) || s > hi * (1.0 + 1e-12) {
                bracket_failures += 1;
            }
        }
    }
    Outcome {
        pass: violations == 0 && bracket_failures == 0,
        detail: format!("{violations} violations, max ratio {worst_ratio:.6}, {bracket_failures} norm bracket failures"),
        data: json!({ "violations": violations, "max_ratio": worst_ratio, "bracket_failures": bracket_failures }),
    }
}

// 3 ------------------------------------------------------------------------

fn dn_heinz() -> Outcome {
    let mut rng = SeededRng::new(3);
    let samples: Vec<GradedMatrix> = (0..100u64)
        .map(|seed| {
            let dim = rng.int_in(4, 24);
            let p = rng.uniform_in(1.0, 3.0);
            generate(&ModelSpec::smooth_random(p, seed, dim)).unwrap()
        })
        .collect();
    let hermitian = samples.iter().all(|x| x.is_hermitian(0.0));
    let mut per_q = BTreeMap::new();
    let mut pass = hermitian;
    let mut worst = 0.0f64;
    for q in 1..=4u32 {
        let rep = dn_check(&samples, q, 2 * q, 0.5).unwrap();
        // Independent evaluation of the same constant from the bracketing oracle.
        let mut oracle_worst = 0.0f64;
        for x in &samples {
            let (lo_q, _) = sigma_bracket(x, q);
            let (_, hi_0) = sigma_bracket(x, 0);
            let (_, hi_r) = sigma_bracket(x, 2 * q);
            oracle_worst = oracle_worst.max(lo_q / (hi_0 * hi_r).sqrt());
        }
        pass &= rep.fitted_constant <= 1.0 + 1e-9 && rep.violations == 0 && rep.skipped == 0 && oracle_worst <= 1.0 + 1e-9;
        worst = worst.max(rep.fitted_constant);
        per_q.insert(q.to_string(), json!({ "fitted_constant": rep.fitted_constant, "violations": rep.violations, "oracle_lower_constant": oracle_worst }));
    }
    Outcome {
        pass,
        detail: format!("largest fitted C over q = 1..4: {worst:.6}"),
        data: json!({ "per_q": per_q, "hermitian": hermitian }),
    }
}

// 4 ------------------------------------------------------------------------

struct NormalInstance {
    x: GradedMatrix,
    /// Distinct nonzero values with their coordinate slots.
    values: Vec<(Complex64, Vec<usize>)>,
    rots: Vec<Rotation>,
}

impl NormalInstance {
    fn oracle_projection(&self, slots: &[usize]) -> GradedMatrix {
        let dim = self.x.dim();
        let us: Vec<Vec<Complex64>> = slots.iter().map(|&s| rotated_basis_vector(dim, s, &self.rots)).collect();
        projection_onto(dim, &us)
    }
}

/// `R D Rᵀ` with `D` a smooth complex diagonal: `k` distinct values of modulus
/// in `[2^{-i}, 1.5·2^{-i})`, spread over the slots with repeats, plus
/// optional zero slots.
fn normal_instance(rng: &mut SeededRng, dim: usize, allow_zero: bool) -> NormalInstance {
    let k = rng.int_in(1, dim);
    let distinct: Vec<Complex64> = (0..k)
        .map(|i| {
            let r = 2f64.powi(-(i as i32)) * (1.0 + 0.5 * rng.uniform());
            Complex64::from_polar(r, rng.uniform_in(0.0, 2.0 * PI))
        })
        .collect();
    let zeros = if allow_zero && dim > k { rng.int_in(0, 1) } else { 0 };
    let mut slot_values: Vec<Option<usize>> = (0..k).map(Some).collect();
    while slot_values.len() < dim - zeros {
        slot_values.push(Some(rng.below(k)));
    }
    slot_values.resize(dim, None);
    for i in (1..dim).rev() {
        let j = rng.below(i + 1);
        slot_values.swap(i, j);
    }
    let diag: Vec<Complex64> = slot_values.iter().map(|s| s.map_or(zero(), |i| distinct[i])).collect();
    let rots = random_rotations(dim, 3 * dim, rng);
    let x = conjugate_by_rotations(&GradedMatrix::diagonal(&diag).unwrap(), &rots).unwrap();
    let values = distinct
        .iter()
        .enumerate()
        .map(|(i, &l)| (l, (1..=dim).filter(|&s| slot_values[s - 1] == Some(i)).collect()))
        .collect();
    NormalInstance { x, values, rots }
}

fn spectral_round_trip() -> Outcome {
    let mut rng = SeededRng::new(4);
    let mut worst_reconstruction = 0.0f64;
    let mut worst_projection = 0.0f64;
    let mut mismatches = 0;
    let mut repeated = 0;
    for _ in 0..100 {
        let dim = rng.int_in(3, 16);
        let inst = normal_instance(&mut rng, dim, true);
        if inst.values.iter().any(|(_, s)| s.len() > 1) {
            repeated += 1;
        }
        let d = decompose_default(&inst.x).unwrap();
        let back = reconstruct(&d);
        for q in 0..=4 {
            worst_reconstruction = worst_reconstruction.max(rel(&back, &inst.x, q));
        }
        if d.len() != inst.values.len() {
            mismatches += 1;
            continue;
        }
        for (l, slots) in &inst.values {
            let found = d.eigenvalues().iter().position(|m| (m - l).norm() <= 1e-9);
            match found {
                Some(i) if d.multiplicities()[i] == slots.len() => {
                    let p = inst.oracle_projection(slots);
                    worst_projection = worst_projection.max(d.projections()[i].sub(&p).unwrap().op_norm_q(0).unwrap());
                }
                _ => mismatches += 1,
            }
        }
    }
    Outcome {
        pass: worst_reconstruction <= 1e-8 && worst_projection <= 1e-8 && mismatches == 0 && repeated > 0,
        detail: format!(
            "max reconstruction error {worst_reconstruction:.2e}, max projection error {worst_projection:.2e}, {repeated} instances with repeated eigenvalues"
        ),
        data: json!({
            "max_reconstruction_error": worst_reconstruction,
            "max_projection_error": worst_projection,
            "mismatches": mismatches,
            "repeated_instances": repeated,
        }),
    }
}

// 5 ------------------------------------------------------------------------

fn extraction_bound() -> Outcome {
    let mut rng = SeededRng::new(5);
    let grades = [0u32, 1, 2];
    let mut above_floor = 0;
    let mut below_floor_only = 0;
    let mut oracle_mismatch = 0;
    let mut checked = 0;
    let mut gaps = Vec::new();
    for _ in 0..20 {
        let dim = rng.int_in(3, 12);
        let n1 = if rng.uniform() < 0.3 { 2 } else { 1 };
        let g = rng.uniform_in(0.3, 0.9);
        let mut diag = Vec::with_capacity(dim);
        diag.push(c(1.0, 0.0));
        if n1 == 2 {
            diag.push(Complex64::from_polar(1.0, rng.uniform_in(0.5, 2.0 * PI - 0.5)));
        }
        for i in 0..dim - n1 {
            let r = g * 0.8f64.powi(i as i32) * if i == 0 { 1.0 } else { 1.0 - 0.1 * rng.uniform() };
            diag.push(Complex64::from_polar(r, rng.uniform_in(0.0, 2.0 * PI)));
        }
        gaps.push(g);
        let rots = random_rotations(dim, 3 * dim, &mut rng);
        let x = rotated_diagonal(&diag, &rots);
        let t = extract_leading_projection(&x, 40, &grades).unwrap();

        let us: Vec<Vec<Complex64>> = (1..=dim).map(|n| rotated_basis_vector(dim, n, &rots)).collect();
        let pi = projection_onto(dim, &us[..n1]);
        for &q in &grades {
            let tail: f64 = (n1..dim).map(|n| diag[n].norm() * projection_onto(dim, &us[n..=n]).op_norm_q(q).unwrap()).sum();
            let floor = t.rounding_floor[&q];
            for it in &t.iterates {
                let bound = g.powi(2 * it.k as i32 - 1) * tail;
                let error = it.y.sub(&pi).unwrap().op_norm_q(q).unwrap();
                let reported = t.bound[&q][it.k - 1];
                if (reported - bound).abs() > 1e-9 * bound || (it.error[&q] - error).abs() > 1e-9 * error + floor {
                    oracle_mismatch += 1;
                }
                checked += 1;
                if error > bound * (1.0 + 1e-6) {
                    if error > floor {
                        above_floor += 1;
                    } else {
                        below_floor_only += 1;
                    }
                }
            }
        }
    }
    Outcome {
        pass: above_floor == 0 && oracle_mismatch == 0,
        detail: format!(
            "{checked} (k, q) pairs, {above_floor} violations above the rounding floor, {below_floor_only} where the bound has fallen below the floor"
        ),
        data: json!({
            "pairs": checked,
            "violations_above_floor": above_floor,
            "bound_below_rounding_floor": below_floor_only,
            "oracle_mismatches": oracle_mismatch,
            "gap_ratios": gaps,
        }),
    }
}

// 6 ------------------------------------------------------------------------

fn recovery() -> Outcome {
    let mut rng = SeededRng::new(6);
    let mut worst_match = 0.0f64;
    let mut worst_reconstruction = 0.0f64;
    let mut failures = 0;
    let mut collisions = 0;
    for inst in 0..50 {
        let dim = rng.int_in(3, 10);
        let n = rng.int_in(1, dim.min(6));
        let rots = random_rotations(dim, 3 * dim, &mut rng);
        // Consecutive slot blocks, one per idempotent, some slots left out.
        let mut ranks = vec![1usize; n];
        for _ in n..dim {
            if rng.uniform() < 0.5 {
                let j = rng.below(n);
                ranks[j] += 1;
            }
        }
        let mut lambdas: Vec<Complex64> = Vec::with_capacity(n);
        loop {
            lambdas.clear();
            for _ in 0..n {
                lambdas.push(Complex64::from_polar(rng.uniform_in(0.3, 1.0), rng.uniform_in(0.0, 2.0 * PI)));
            }
            if inst % 2 == 0 && n >= 3 {
                // λ_i + λ_j = λ_pivot makes λ_i(λ_i - λ_pivot) = λ_j(λ_j - λ_pivot).
                let pivot = c(1.5, 0.0);
                lambdas[0] = pivot;
                let w = Complex64::from_polar(rng.uniform_in(0.2, 0.5), rng.uniform_in(0.0, 2.0 * PI));
                lambdas[1] = pivot * 0.5 + w;
                lambdas[2] = pivot * 0.5 - w;
            }
            let separated = (0..n).all(|i| (i + 1..n).all(|j| (lambdas[i] - lambdas[j]).norm() > 1e-2));
            if separated {
                break;
            }
        }
        if inst % 2 == 0 && n >= 3 {
            collisions += 1;
        }
        let mut slot = 1;
        let idempotents: Vec<GradedMatrix> = ranks
            .iter()
            .map(|&r| {
                let us: Vec<Vec<Complex64>> = (slot..slot + r).map(|s| rotated_basis_vector(dim, s, &rots)).collect();
                slot += r;
                projection_onto(dim, &us)
            })
            .collect();
        let mut a = GradedMatrix::zeros(dim).unwrap();
        for (l, p) in lambdas.iter().zip(&idempotents) {
            a = a.add_scaled(*l, p).unwrap();
        }
        let span = if inst % 3 == 0 { idempotents.clone() } else { Vec::new() };
        let parts = match recover_idempotents(&a, &span) {
            Ok(p) => p,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        let d = decompose_default(&a).unwrap();
        if parts.len() != n || d.len() != n {
            failures += 1;
            continue;
        }
        let mut sum = GradedMatrix::zeros(dim).unwrap();
        for (p, (l, proj)) in parts.iter().zip(d.eigenvalues().iter().zip(d.projections())) {
            sum = sum.add_scaled(p.coefficient, &p.idempotent).unwrap();
            worst_match = worst_match.max((p.coefficient - l).norm()).max(p.idempotent.sub(proj).unwrap().op_norm_q(0).unwrap());
            // The constructed idempotent with the same coefficient.
            let j = lambdas.iter().position(|m| (m - p.coefficient).norm() < 1e-6);
            match j {
                Some(j) => worst_match = worst_match.max(p.idempotent.sub(&idempotents[j]).unwrap().op_norm_q(0).unwrap()),
                None => failures += 1,
            }
        }
        worst_reconstruction = worst_reconstruction.max(rel(&sum, &a, 0));
    }
    Outcome {
        pass: failures == 0 && worst_match <= 1e-7 && worst_reconstruction <= 1e-8 && collisions > 0,
        detail: format!(
            "max deviation from oracle {worst_match:.2e}, max reconstruction error {worst_reconstruction:.2e}, {collisions} instances with colliding reduced coefficients"
        ),
        data: json!({
            "failures": failures,
            "max_oracle_deviation": worst_match,
            "max_reconstruction_error": worst_reconstruction,
            "collision_instances": collisions,
        }),
    }
}

// 7 ------------------------------------------------------------------------

fn minimal_basis_suite() -> Outcome {
    let mut rng = SeededRng::new(7);
    let palette = [c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0), c(-1.0, 0.0), c(0.5, 1.0)];
    let mut worst_residual = 0.0f64;
    let mut worst_orthogonality = 0.0f64;
    let mut disagreements = 0;
    let mut oracle_mismatch = 0;
    let mut maximal = 0;
    for _ in 0..30 {
        let dim = rng.int_in(2, 7);
        let rots = random_rotations(dim, 3 * dim, &mut rng);
        let us: Vec<Vec<Complex64>> = (1..=dim).map(|n| rotated_basis_vector(dim, n, &rots)).collect();
        // Hidden blocks of consecutive slots.
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut s = 0;
        while s < dim {
            let r = if rng.uniform() < 0.7 { 1 } else { rng.int_in(1, dim - s) };
            blocks.push((s..s + r).collect());
            s += r;
        }
        let n_gen = rng.int_in(1, 3);
        let coeffs: Vec<Vec<Complex64>> =
            (0..n_gen).map(|_| blocks.iter().map(|_| palette[rng.below(palette.len())]).collect()).collect();
        let generators: Vec<GradedMatrix> = coeffs
            .iter()
            .map(|cs| {
                let mut g = GradedMatrix::zeros(dim).unwrap();
                for (cb, b) in cs.iter().zip(&blocks) {
                    let vs: Vec<Vec<Complex64>> = b.iter().map(|&i| us[i].clone()).collect();
                    g = g.add_scaled(*cb, &projection_onto(dim, &vs)).unwrap();
                }
                g
            })
            .collect();

        // Oracle atoms: blocks grouped by their coefficient column, the
        // all-zero column excluded.
        let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (bi, b) in blocks.iter().enumerate() {
            if coeffs.iter().all(|cs| cs[bi] == zero()) {
                continue;
            }
            let key = coeffs.iter().map(|cs| format!("{},{};", cs[bi].re, cs[bi].im)).collect::<String>();
            groups.entry(key).or_default().extend(b.iter().copied());
        }
        let oracle: Vec<GradedMatrix> = groups
            .values()
            .map(|slots| projection_onto(dim, &slots.iter().map(|&i| us[i].clone()).collect::<Vec<_>>()))
            .collect();
        let oracle_ranks: Vec<usize> = groups.values().map(Vec::len).collect();
        let covered: usize = oracle_ranks.iter().sum();
        let oracle_commutant = oracle_ranks.iter().map(|r| r * r).sum::<usize>() + (dim - covered).pow(2);
        let oracle_maximal = covered == dim && oracle_ranks.iter().all(|&r| r == 1);

        let family = match minimal_basis(&generators) {
            Ok(f) => f,
            Err(_) => {
                oracle_mismatch += 1;
                continue;
            }
        };
        if family.len() != oracle.len()
            || !oracle.iter().all(|p| family.projections().iter().any(|f| f.sub(p).unwrap().op_norm_q(0).unwrap() <= 1e-8))
        {
            oracle_mismatch += 1;
        }
        for g in &generators {
            for p in decompose_default(g).unwrap().projections() {
                worst_residual = worst_residual.max(family.span_residual(p).unwrap());
            }
        }
        let ps = family.projections();
        for i in 0..ps.len() {
            for j in 0..ps.len() {
                if i != j {
                    worst_orthogonality = worst_orthogonality.max(ps[i].multiply(&ps[j]).unwrap().op_norm_q(0).unwrap());
                }
            }
        }
        if family.is_empty() {
            continue;
        }
        let m = maximality_check(&family).unwrap();
        let api = subalgebra::is_maximal_commutative(&family);
        if m.structural != m.by_commutant() || m.commutant_dimension != oracle_commutant || api.ok() != Some(oracle_maximal) {
            disagreements += 1;
        }
        maximal += oracle_maximal as usize;
    }
    Outcome {
        pass: worst_residual <= 1e-8 && worst_orthogonality <= 1e-9 && disagreements == 0 && oracle_mismatch == 0,
        detail: format!(
            "max span residual {worst_residual:.2e}, max |P_i P_j| {worst_orthogonality:.2e}, {disagreements} maximality disagreements, {maximal} maximal instances"
        ),
        data: json!({
            "max_span_residual": worst_residual,
            "max_orthogonality_defect": worst_orthogonality,
            "maximality_disagreements": disagreements,
            "oracle_mismatches": oracle_mismatch,
            "maximal_instances": maximal,
        }),
    }
}

// 8 ------------------------------------------------------------------------

fn single_generator_suite() -> Outcome {
    let mut rng = SeededRng::new(8);
    let grades: Vec<u32> = (0..=4).collect();
    let mut failures = 0;
    let mut worst = 0.0f64;
    let mut lambdas_out = Vec::new();
    for _ in 0..20 {
        let dim = rng.int_in(2, 10);
        let rots = random_rotations(dim, 3 * dim, &mut rng);
        let us: Vec<Vec<Complex64>> = (1..=dim).map(|n| rotated_basis_vector(dim, n, &rots)).collect();
        let mut members = Vec::new();
        let mut s = 0;
        while s < dim {
            let r = if rng.uniform() < 0.6 { 1 } else { rng.int_in(1, dim - s) };
            if rng.uniform() < 0.85 {
                members.push((s..s + r).collect::<Vec<_>>());
            }
            s += r;
        }
        if members.is_empty() {
            members.push(vec![0]);
        }
        let ps: Vec<GradedMatrix> =
            members.iter().map(|m| projection_onto(dim, &m.iter().map(|&i| us[i].clone()).collect::<Vec<_>>())).collect();
        let family = ProjectionFamily::new(dim, ps.clone(), true).unwrap();
        let (x, lambdas) = match single_generator(&family, &grades) {
            Ok(v) => v,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        if lambdas.windows(2).any(|w| !(w[1] < w[0])) {
            failures += 1;
        }
        let mut oracle_x = GradedMatrix::zeros(dim).unwrap();
        for (l, p) in lambdas.iter().zip(&ps) {
            oracle_x = oracle_x.add_scaled(c(*l, 0.0), p).unwrap();
        }
        worst = worst.max(rel(&x, &oracle_x, 0));
        let d = decompose_default(&x).unwrap();
        if d.len() != ps.len() {
            failures += 1;
            continue;
        }
        for (i, p) in ps.iter().enumerate() {
            worst = worst.max(d.projections()[i].sub(p).unwrap().op_norm_q(0).unwrap());
            worst = worst.max((d.eigenvalues()[i] - lambdas[i]).norm() / lambdas[i]);
            if d.multiplicities()[i] != members[i].len() {
                failures += 1;
            }
        }
        lambdas_out.push(lambdas);
    }
    Outcome {
        pass: failures == 0 && worst <= 1e-9,
        detail: format!("{failures} failures, max deviation of the recovered family {worst:.2e}"),
        data: json!({ "failures": failures, "max_deviation": worst, "lambdas": lambdas_out }),
    }
}

// 9 ------------------------------------------------------------------------

fn random_polynomial(rng: &mut SeededRng) -> Vec<Complex64> {
    let deg = rng.int_in(1, 3);
    let mut coeffs = vec![zero()];
    coeffs.extend((0..deg).map(|_| rng.disc()));
    coeffs
}

fn functional_calculus() -> Outcome {
    let mut rng = SeededRng::new(9);
    let mut worst_identity = 0.0f64;
    let mut worst_fractional = 0.0f64;
    let mut worst_oracle = 0.0f64;
    let mut membership_failures = 0;
    let mut membership_checked = 0;
    for inst in 0..50 {
        let dim = rng.int_in(2, 10);
        let positive = inst % 2 == 0;
        let base = normal_instance(&mut rng, dim, false);
        let (x, values) = if positive {
            // Same eigenvectors with the moduli as eigenvalues.
            let mut diag = vec![zero(); dim];
            let vals: Vec<(Complex64, Vec<usize>)> = base.values.iter().map(|(l, s)| (c(l.norm(), 0.0), s.clone())).collect();
            for (l, slots) in &vals {
                for &s in slots {
                    diag[s - 1] = *l;
                }
            }
            (rotated_diagonal(&diag, &base.rots), vals)
        } else {
            (base.x.clone(), base.values.clone())
        };
        let inst_data = NormalInstance { x: x.clone(), values: values.clone(), rots: base.rots.clone() };
        let d = decompose_default(&x).unwrap();

        let f = SpectralFunction::polynomial(&random_polynomial(&mut rng)).unwrap();
        let g = if positive {
            SpectralFunction::power(rng.uniform_in(0.2, 2.5)).unwrap()
        } else {
            SpectralFunction::polynomial(&random_polynomial(&mut rng)).unwrap()
        };
        let phi = |h: &SpectralFunction| calculus::apply(h, &d).unwrap();
        let (pf, pg) = (phi(&f), phi(&g));
        for q in 0..=4 {
            worst_identity = worst_identity
                .max(rel(&phi(&f.product_on(&g, &d).unwrap()), &pf.multiply(&pg).unwrap(), q))
                .max(rel(&phi(&f.sum_on(&g, &d).unwrap()), &pf.add(&pg).unwrap(), q))
                .max(rel(&phi(&f.conjugate_on(&d).unwrap()), &pf.involution(), q));
        }
        if let calculus::FunctionKind::Polynomial { coeffs } = f.kind() {
            let cs: Vec<Complex64> = coeffs.iter().map(|&z| z.into()).collect();
            worst_identity = worst_identity.max(rel(&pf, &calculus::polynomial_of_matrix(&cs, &x).unwrap(), 0));
        }
        // Oracle Φ(g) from the construction.
        let mut oracle = GradedMatrix::zeros(dim).unwrap();
        for (l, slots) in &inst_data.values {
            oracle = oracle.add_scaled(g.eval(*l, 1.0).unwrap(), &inst_data.oracle_projection(slots)).unwrap();
        }
        worst_oracle = worst_oracle.max(rel(&pg, &oracle, 0));

        if positive {
            for theta in [1.0 / 3.0, 0.5, 2.0, 3.0] {
                let y = calculus::fractional_power(&x, theta).unwrap();
                let back = calculus::fractional_power(&y, 1.0 / theta).unwrap();
                worst_fractional = worst_fractional.max(rel(&back, &x, 0));
                let mut oracle_y = GradedMatrix::zeros(dim).unwrap();
                for (l, slots) in &inst_data.values {
                    oracle_y = oracle_y.add_scaled(c(l.re.powf(theta), 0.0), &inst_data.oracle_projection(slots)).unwrap();
                }
                worst_oracle = worst_oracle.max(rel(&y, &oracle_y, 0));
            }
        }
        for h in [&f, &g] {
            let est = match calculus::estimate_holder_on(h, &d, 32) {
                Ok(e) => e,
                Err(smoothlab::Error::Vanishing) => continue,
                Err(e) => panic!("{e}"),
            };
            for q in 0..=4 {
                let (lhs, rhs) = calculus::membership_bound(h, &d, &est, q).unwrap();
                membership_checked += 1;
                // lhs recomputed from the construction
                let mut oracle_lhs = 0.0;
                for (l, slots) in &inst_data.values {
                    oracle_lhs += h.eval(*l, 1.0).unwrap().norm() * inst_data.oracle_projection(slots).op_norm_q(q).unwrap();
                }
                if lhs > rhs * (1.0 + 1e-12) || (lhs - oracle_lhs).abs() > 1e-8 * oracle_lhs.max(1e-300) {
                    membership_failures += 1;
                }
            }
        }
    }
    Outcome {
        pass: worst_identity <= 1e-9 && worst_fractional <= 1e-7 && worst_oracle <= 1e-9 && membership_failures == 0,
        detail: format!(
            "homomorphism/involution {worst_identity:.2e}, fractional round trip {worst_fractional:.2e}, {membership_failures}/{membership_checked} membership failures"
        ),
        data: json!({
            "max_identity_error": worst_identity,
            "max_fractional_round_trip": worst_fractional,
            "max_oracle_error": worst_oracle,
            "membership_checked": membership_checked,
            "membership_failures": membership_failures,
        }),
    }
}

// 10 -----------------------------------------------------------------------

fn rank_one_chain() -> Outcome {
    let mut rng = SeededRng::new(10);
    let grades: Vec<u32> = (0..=4).collect();
    let mut failures = 0;
    let mut rows = 0;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let dim = rng.int_in(2, 12);
        let count = rng.int_in(1, dim);
        let rots = random_rotations(dim, 3 * dim, &mut rng);
        let us: Vec<Vec<Complex64>> = (1..=count).map(|n| rotated_basis_vector(dim, n, &rots)).collect();
        let ps: Vec<GradedMatrix> = us.iter().map(|u| projection_onto(dim, std::slice::from_ref(u))).collect();
        let family = ProjectionFamily::new(dim, ps, true).unwrap();
        let k = koethe_representation(&family, &grades, &[]).unwrap();
        if k.rank_one_chain.len() != count * grades.len() || !k.chain_holds() {
            failures += 1;
        }
        for row in &k.rank_one_chain {
            rows += 1;
            let u = &us[row.n - 1];
            let (vq, v2q) = (vector_norm(u, row.q), vector_norm(u, 2 * row.q));
            let dev = ((row.vector_norm_q - vq).abs() / vq)
                .max((row.vector_norm_2q - v2q).abs() / v2q)
                .max((row.projection_norm_q - vq * vq).abs() / (vq * vq));
            worst = worst.max(dev);
            let tol = 1e-10;
            let chain = 1.0 <= vq * (1.0 + tol) && vq <= row.projection_norm_q * (1.0 + tol) && row.projection_norm_q <= v2q * (1.0 + tol);
            if dev > tol || !chain {
                failures += 1;
            }
        }
    }
    Outcome {
        pass: failures == 0,
        detail: format!("{rows} chain rows, max deviation from the vector oracle {worst:.2e}"),
        data: json!({ "rows": rows, "failures": failures, "max_deviation": worst }),
    }
}

// 11 -----------------------------------------------------------------------

const CLI_RUNS: &[&[&str]] = &[
    &["norms", "--model", "unit-projection:n=2,dim=8", "--grades", "0..3"],
    &["spectral", "--model", "smooth-random:p=2,seed=11,dim=12"],
    &["extract", "--model", "diag-power:alpha=1,dim=10", "--grades", "0..2"],
    &["dn", "--model", "smooth-random:p=3,seed=1,dim=16", "--q", "2"],
    &["calculus", "--model", "diag-exp:beta=0.5,dim=8", "--fn", "power:0.5"],
    &["subalgebra", "--model", "unit-projection:n=1,dim=4", "--model", "unit-projection:n=3,dim=4"],
    &["characterize", "--model", "diag-exp:beta=1,dim=8", "--dims", "8,12,16", "--thetas", "0.5,1"],
];

fn cli_reports() -> Vec<String> {
    CLI_RUNS
        .iter()
        .map(|args| {
            let argv: Vec<String> = args.iter().map(|s| s.to_string()).collect();
            let config = RunConfig::try_parse_from(std::iter::once("smoothlab").chain(args.iter().copied())).unwrap();
            let mut report = execute(&config, &argv).unwrap();
            report.findings.remove("_csv");
            report.to_json()
        })
        .collect()
}

type Criterion = (u32, &'static str, f64, fn() -> Outcome);

const CRITERIA: [Criterion; 10] = [
    (1, "exact norm identity", 1.0, exact_norm_identity),
    (2, "submultiplicativity", 30.0, submultiplicativity),
    (3, "dominating-norm / Heinz suite", 60.0, dn_heinz),
    (4, "spectral round trip", 60.0, spectral_round_trip),
    (5, "extraction bound", 30.0, extraction_bound),
    (6, "idempotent recovery", 10.0, recovery),
    (7, "minimal basis", 60.0, minimal_basis_suite),
    (8, "single generator round trip", 20.0, single_generator_suite),
    (9, "functional calculus", 30.0, functional_calculus),
    (10, "rank-one chain", 5.0, rank_one_chain),
];

fn suite_json(outcomes: &[Value]) -> String {
    serde_json::to_string_pretty(outcomes).unwrap()
}

fn main() -> ExitCode {
    let mut all_pass = true;
    let mut first = Vec::new();
    for (n, name, limit, f) in CRITERIA {
        let start = Instant::now();
        let o = f();
        let secs = start.elapsed().as_secs_f64();
        let pass = o.pass && secs < limit;
        all_pass &= pass;
        println!("criterion {n:>2} {name}: {} ({}; {secs:.2}s of {limit}s)", if pass { "PASS" } else { "FAIL" }, o.detail);
        first.push(json!({ "criterion": n, "pass": o.pass, "data": o.data }));
    }

    let again: Vec<Value> = CRITERIA
        .iter()
        .map(|(n, _, _, f)| {
            let o = f();
            json!({ "criterion": n, "pass": o.pass, "data": o.data })
        })
        .collect();
    let suite_identical = suite_json(&first) == suite_json(&again);
    let reports_identical = cli_reports() == cli_reports();
    let pass = suite_identical && reports_identical;
    all_pass &= pass;
    println!(
        "criterion 11 determinism: {} (suite summaries identical: {suite_identical}; {} CLI reports identical: {reports_identical})",
        if pass { "PASS" } else { "FAIL" },
        CLI_RUNS.len()
    );

    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

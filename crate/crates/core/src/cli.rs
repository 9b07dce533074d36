//! Command-line front end.
//!
//! Every command except `gen` writes a JSON report:
//!
//! ```text
//! {tool, version, command, argv, config, tolerances, inputs, result, checks, findings}
//! ```
//!
//! `checks` are invariants that must hold; a failed check gives exit status 2.
//! `findings` are outcomes that may legitimately go either way. `inputs`
//! carries the SHA-256 of every file read and of every model spec, and
//! `replay` re-runs a report's `argv` and compares both maps.
//!
//! Exit status: 0 success, 1 invalid input, 2 numerical failure.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::calculus::{self, FunctionKind, SpectralFunction, TablePair};
use crate::diagnostics::{self, DNReport, DecayReport};
use crate::error::{Error, Result};
use crate::graded::MAX_GRADE;
use crate::io;
use crate::matrix::GradedMatrix;
use crate::models::{generate, ModelSpec};
use crate::spectral::{self, decompose_with, extract_leading_projection, recover_idempotents, DecomposeOptions};
use crate::subalgebra;

pub const TOOL: &str = "smoothlab";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Parser, Serialize)]
#[command(name = "smoothlab", version, about = "Graded norms, spectral representation and functional calculus of smooth operators")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,

    /// Matrix file (JSON, or CSV by extension). Repeatable.
    #[arg(long, global = true)]
    pub input: Vec<PathBuf>,

    /// Model spec such as `diag-power:alpha=2,dim=64`, or `@spec.json`. Repeatable.
    #[arg(long, global = true)]
    pub model: Vec<String>,

    /// Grades as `a..b` (inclusive) or a comma list.
    #[arg(long, global = true, default_value = "0..4")]
    pub grades: String,

    /// Relative eigenvalue merge tolerance.
    #[arg(long, global = true)]
    pub cluster_tol: Option<f64>,

    /// Relative tolerance below which eigenvalues count as zero.
    #[arg(long, global = true)]
    pub zero_tol: Option<f64>,

    /// Report path; standard output when absent.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum Command {
    /// Graded operator and entrywise norms.
    Norms,
    /// Spectral representation of normal matrices.
    Spectral,
    /// Leading-projection iterates and their error bound.
    Extract {
        #[arg(long, default_value_t = 40)]
        k_max: usize,
    },
    /// Idempotents of a combination `Σ λ_j a_j`; extra inputs give the span.
    Recover,
    /// Functional calculus of one normal matrix.
    Calculus {
        /// `power:θ`, `poly:c0,c1,...`, `table:@pairs.json` or `@function.json`.
        #[arg(long = "fn")]
        function: String,
        /// Radius of an additional Hölder fit on `(0, radius]`.
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long, default_value_t = 32)]
        samples: usize,
    },
    /// Minimal projections, Köthe table and single generator of commuting generators.
    Subalgebra,
    /// Dominating-norm inequality over sample matrices.
    Dn {
        #[arg(long, default_value_t = 1)]
        q: u32,
        /// Defaults to `2q`.
        #[arg(long)]
        r: Option<u32>,
        #[arg(long, default_value_t = 0.5)]
        theta: f64,
    },
    /// Decay diagnostics over increasing truncations.
    Characterize {
        /// Truncation sizes applied to each `--model`, e.g. `8,12,16`.
        #[arg(long)]
        dims: Option<String>,
        #[arg(long, default_value = "1")]
        thetas: String,
    },
    /// Writes the matrix of a model.
    Gen,
    /// Re-runs the command recorded in a report and compares its verdicts.
    Replay,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Norms => "norms",
            Command::Spectral => "spectral",
            Command::Extract { .. } => "extract",
            Command::Recover => "recover",
            Command::Calculus { .. } => "calculus",
            Command::Subalgebra => "subalgebra",
            Command::Dn { .. } => "dn",
            Command::Characterize { .. } => "characterize",
            Command::Gen => "gen",
            Command::Replay => "replay",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputRecord {
    pub source: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub argv: Vec<String>,
    pub config: Value,
    pub tolerances: BTreeMap<String, f64>,
    pub inputs: Vec<InputRecord>,
    pub result: Value,
    pub checks: BTreeMap<String, bool>,
    pub findings: BTreeMap<String, Value>,
}

impl Report {
    pub fn failed_checks(&self) -> Vec<&str> {
        self.checks.iter().filter(|(_, ok)| !**ok).map(|(k, _)| k.as_str()).collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization is infallible");
        s.push('\n');
        s
    }
}

/// Every tolerance the tool applies, for the report header.
pub fn tolerances(config: &RunConfig) -> BTreeMap<String, f64> {
    let opts = decompose_options(config);
    BTreeMap::from([
        ("cluster_tol".into(), opts.cluster_tol),
        ("zero_tol".into(), opts.zero_tol),
        ("normal_tol".into(), opts.normal_tol),
        ("extraction_slack".into(), EXTRACTION_SLACK),
        ("reconstruction_tol".into(), RECONSTRUCTION_TOL),
        ("recovery_tol".into(), spectral::RECOVERY_TOL),
        ("recovery_distinctness_tol".into(), spectral::RECOVERY_DISTINCTNESS_TOL),
        ("table_match_tol".into(), calculus::TABLE_MATCH_TOL),
        ("negative_clamp_tol".into(), calculus::NEGATIVE_CLAMP_TOL),
        ("domination_slack".into(), calculus::DOMINATION_SLACK),
        ("homomorphism_tol".into(), HOMOMORPHISM_TOL),
        ("fractional_round_trip_tol".into(), FRACTIONAL_ROUND_TRIP_TOL),
        ("projection_tol".into(), subalgebra::PROJECTION_TOL),
        ("commuting_tol".into(), subalgebra::COMMUTING_TOL),
        ("nullspace_tol".into(), subalgebra::NULLSPACE_TOL),
        ("chain_tol".into(), subalgebra::CHAIN_TOL),
        ("span_residual_tol".into(), SPAN_RESIDUAL_TOL),
        ("dn_slack".into(), diagnostics::DN_SLACK),
        ("stability_growth".into(), diagnostics::STABILITY_GROWTH),
        ("decay_exponent_limit".into(), diagnostics::DECAY_EXPONENT_LIMIT),
    ])
}

const EXTRACTION_SLACK: f64 = 1e-6;
const RECONSTRUCTION_TOL: f64 = 1e-8;
const HOMOMORPHISM_TOL: f64 = 1e-9;
const FRACTIONAL_ROUND_TRIP_TOL: f64 = 1e-7;
const SPAN_RESIDUAL_TOL: f64 = 1e-8;

fn decompose_options(config: &RunConfig) -> DecomposeOptions {
    let mut o = DecomposeOptions::default();
    if let Some(t) = config.cluster_tol {
        o.cluster_tol = t;
    }
    if let Some(t) = config.zero_tol {
        o.zero_tol = t;
    }
    o
}

/// `a..b` (inclusive) or `a,b,c`.
pub fn parse_grades(s: &str) -> Result<Vec<u32>> {
    let bad = |e: std::num::ParseIntError| Error::Parse(format!("grades '{s}': {e}"));
    let grades: Vec<u32> = if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (a.trim().parse::<u32>().map_err(bad)?, b.trim().parse::<u32>().map_err(bad)?);
        if a > b {
            return Err(Error::Parse(format!("grades '{s}': empty range")));
        }
        (a..=b).collect()
    } else {
        s.split(',').map(|t| t.trim().parse::<u32>().map_err(bad)).collect::<Result<_>>()?
    };
    if grades.is_empty() {
        return Err(Error::Parse("no grades given".into()));
    }
    if let Some(q) = grades.iter().find(|&&q| q > MAX_GRADE) {
        return Err(Error::InvalidArgument(format!("grade {q} exceeds the configured maximum {MAX_GRADE}")));
    }
    Ok(grades)
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(|t| t.trim().parse::<T>().map_err(|e| Error::Parse(format!("{what} '{t}': {e}"))))
        .collect()
}

fn json_err(path: &str, e: serde_json::Error) -> Error {
    match io::json_diagnostic(e) {
        Error::Parse(msg) => Error::Parse(format!("{path}: {msg}")),
        other => other,
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct Loaded {
    matrices: Vec<(String, GradedMatrix)>,
    records: Vec<InputRecord>,
}

fn load_model_spec(s: &str, records: &mut Vec<InputRecord>) -> Result<ModelSpec> {
    if let Some(path) = s.strip_prefix('@') {
        let bytes = fs::read(path)?;
        records.push(InputRecord { source: format!("model-file:{path}"), sha256: sha256_hex(&bytes) });
        serde_json::from_slice(&bytes).map_err(|e| json_err(path, e))
    } else {
        let spec = ModelSpec::parse_flag(s)?;
        let canonical = serde_json::to_vec(&spec)?;
        records.push(InputRecord { source: format!("model:{s}"), sha256: sha256_hex(&canonical) });
        Ok(spec)
    }
}

fn load_inputs(config: &RunConfig) -> Result<Loaded> {
    let mut matrices = Vec::new();
    let mut records = Vec::new();
    for path in &config.input {
        let bytes = fs::read(path)?;
        records.push(InputRecord { source: path.display().to_string(), sha256: sha256_hex(&bytes) });
        let m = io::read_matrix(path).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        matrices.push((path.display().to_string(), m));
    }
    for s in &config.model {
        let spec = load_model_spec(s, &mut records)?;
        matrices.push((s.clone(), generate(&spec)?));
    }
    Ok(Loaded { matrices, records })
}

fn require_inputs(l: &Loaded, min: usize, what: &str) -> Result<()> {
    if l.matrices.len() < min {
        return Err(Error::InvalidArgument(format!("{what} needs at least {min} input matrix (--input or --model)")));
    }
    Ok(())
}

fn complex(z: Complex64) -> Value {
    json!({"re": z.re, "im": z.im})
}

fn by_grade<T: Serialize>(grades: &[u32], values: &[T]) -> Value {
    let m: BTreeMap<String, &T> = grades.iter().map(|q| q.to_string()).zip(values).collect();
    json!(m)
}

/// Outcome of one invocation.
#[derive(Debug)]
pub struct Outcome {
    pub status: i32,
    pub report: Option<Report>,
    /// The bytes written (report, or the generated matrix for `gen`).
    pub output: String,
}

struct Body {
    result: Value,
    checks: BTreeMap<String, bool>,
    findings: BTreeMap<String, Value>,
    csv: Option<String>,
}

impl Body {
    fn new(result: Value) -> Self {
        Self { result, checks: BTreeMap::new(), findings: BTreeMap::new(), csv: None }
    }
}

fn relative_error(a: &GradedMatrix, b: &GradedMatrix, q: u32) -> Result<f64> {
    let diff = a.sub(b)?.op_norm_q(q)?;
    let scale = b.op_norm_q(q)?;
    Ok(if scale == 0.0 { diff } else { diff / scale })
}

fn cmd_norms(l: &Loaded, grades: &[u32]) -> Result<Body> {
    require_inputs(l, 1, "norms")?;
    let mut rows = Vec::new();
    let mut csv = String::from("source,grade,op_norm,matrix_norm\n");
    let mut entrywise_below = true;
    for (src, m) in &l.matrices {
        let op = grades.iter().map(|&q| m.op_norm_q(q)).collect::<Result<Vec<_>>>()?;
        let ent = grades.iter().map(|&q| m.matrix_norm_q(q)).collect::<Result<Vec<_>>>()?;
        for ((q, a), b) in grades.iter().zip(&op).zip(&ent) {
            csv.push_str(&format!("{src},{q},{a:?},{b:?}\n"));
            entrywise_below &= *b <= a * (1.0 + 1e-12);
        }
        rows.push(json!({
            "source": src,
            "dim": m.dim(),
            "op_norm": by_grade(grades, &op),
            "matrix_norm": by_grade(grades, &ent),
        }));
    }
    let mut body = Body::new(json!({ "grades": grades, "matrices": rows }));
    body.checks.insert("entrywise_norm_below_operator_norm".into(), entrywise_below);
    body.csv = Some(csv);
    Ok(body)
}

fn cmd_spectral(l: &Loaded, grades: &[u32], opts: &DecomposeOptions) -> Result<Body> {
    require_inputs(l, 1, "spectral")?;
    let mut rows = Vec::new();
    let mut csv = String::from("source,n,re,im,multiplicity\n");
    let mut invariants = true;
    let mut reconstruct_ok = true;
    for (src, m) in &l.matrices {
        let d = decompose_with(m, opts)?;
        invariants &= d.check_invariants(1e-8).is_ok();
        let back = spectral::reconstruct(&d);
        let errs = grades.iter().map(|&q| relative_error(&back, m, q)).collect::<Result<Vec<_>>>()?;
        reconstruct_ok &= errs.iter().all(|e| *e <= RECONSTRUCTION_TOL);
        for (n, (l, r)) in d.eigenvalues().iter().zip(d.multiplicities()).enumerate() {
            csv.push_str(&format!("{src},{},{:?},{:?},{r}\n", n + 1, l.re, l.im));
        }
        rows.push(json!({
            "source": src,
            "decomposition": d,
            "reconstruction_error": by_grade(grades, &errs),
        }));
    }
    let mut body = Body::new(json!({ "grades": grades, "matrices": rows }));
    body.checks.insert("projection_invariants".into(), invariants);
    body.checks.insert("reconstruction".into(), reconstruct_ok);
    body.csv = Some(csv);
    Ok(body)
}

fn cmd_extract(l: &Loaded, grades: &[u32], k_max: usize) -> Result<Body> {
    require_inputs(l, 1, "extract")?;
    let mut rows = Vec::new();
    let mut csv = String::from("source,k");
    for q in grades {
        csv.push_str(&format!(",error_{q},bound_{q}"));
    }
    csv.push('\n');
    let mut above_floor = true;
    let mut strict = true;
    for (src, m) in &l.matrices {
        let t = extract_leading_projection(m, k_max, grades)?;
        above_floor &= t.violations_above_floor(EXTRACTION_SLACK).is_empty();
        strict &= t.violations(EXTRACTION_SLACK).is_empty();
        for (i, it) in t.iterates.iter().enumerate() {
            csv.push_str(&format!("{src},{}", it.k));
            for q in grades {
                csv.push_str(&format!(",{:?},{:?}", it.error[q], t.bound[q][i]));
            }
            csv.push('\n');
        }
        rows.push(json!({ "source": src, "trace": t }));
    }
    let mut body = Body::new(json!({ "grades": grades, "k_max": k_max, "matrices": rows }));
    body.checks.insert("error_within_bound_above_rounding_floor".into(), above_floor);
    body.findings.insert("error_within_bound_strict".into(), json!(strict));
    body.csv = Some(csv);
    Ok(body)
}

fn cmd_recover(l: &Loaded) -> Result<Body> {
    require_inputs(l, 1, "recover")?;
    let a = &l.matrices[0].1;
    let span: Vec<GradedMatrix> = l.matrices[1..].iter().map(|(_, m)| m.clone()).collect();
    let parts = recover_idempotents(a, &span)?;
    let mut sum = GradedMatrix::zeros(a.dim())?;
    for p in &parts {
        sum = sum.add_scaled(p.coefficient, &p.idempotent)?;
    }
    let reconstruction = relative_error(&sum, a, 0)?;
    let items: Vec<Value> = parts
        .iter()
        .map(|p| json!({ "coefficient": complex(p.coefficient), "idempotent": p.idempotent }))
        .collect();
    let mut body = Body::new(json!({ "count": parts.len(), "idempotents": items, "reconstruction_error": reconstruction }));
    body.checks.insert("reconstruction".into(), reconstruction <= spectral::RECOVERY_TOL);
    if spectral::is_normal(a, spectral::DEFAULT_NORMAL_TOL)? {
        let d = spectral::decompose_default(a)?;
        let mut agree = d.len() == parts.len();
        if agree {
            for (p, (l, proj)) in parts.iter().zip(d.eigenvalues().iter().zip(d.projections())) {
                agree &= (p.coefficient - l).norm() <= 1e-7 * l.norm().max(1.0);
                agree &= p.idempotent.sub(proj)?.op_norm_q(0)? <= 1e-7;
            }
        }
        body.checks.insert("agrees_with_decomposition".into(), agree);
    }
    Ok(body)
}

fn parse_function(s: &str, records: &mut Vec<InputRecord>) -> Result<SpectralFunction> {
    let read = |path: &str, records: &mut Vec<InputRecord>| -> Result<Vec<u8>> {
        let bytes = fs::read(path)?;
        records.push(InputRecord { source: format!("function-file:{path}"), sha256: sha256_hex(&bytes) });
        Ok(bytes)
    };
    if let Some(path) = s.strip_prefix('@') {
        let bytes = read(path, records)?;
        return serde_json::from_slice(&bytes).map_err(|e| json_err(path, e));
    }
    let (kind, arg) = s.split_once(':').ok_or_else(|| Error::Parse(format!("function '{s}' is not kind:args")))?;
    match kind {
        "power" => SpectralFunction::power(parse_list::<f64>(arg, "power exponent")?.first().copied().unwrap_or(f64::NAN)),
        "poly" => SpectralFunction::real_polynomial(&parse_list::<f64>(arg, "coefficient")?),
        "table" => {
            let path = arg.strip_prefix('@').ok_or_else(|| Error::Parse("table expects table:@file.json".into()))?;
            let bytes = read(path, records)?;
            if let Ok(f) = serde_json::from_slice::<SpectralFunction>(&bytes) {
                return Ok(f);
            }
            let pairs: Vec<TablePair> = serde_json::from_slice(&bytes).map_err(|e| json_err(path, e))?;
            SpectralFunction::new(FunctionKind::Table { pairs }, format!("table from {path}"))
        }
        other => Err(Error::Parse(format!("unknown function kind '{other}'"))),
    }
}

fn cmd_calculus(
    l: &Loaded,
    f: &SpectralFunction,
    grades: &[u32],
    opts: &DecomposeOptions,
    radius: Option<f64>,
    samples: usize,
) -> Result<Body> {
    require_inputs(l, 1, "calculus")?;
    let x = &l.matrices[0].1;
    let d = decompose_with(x, opts)?;
    let phi = calculus::apply(f, &d)?;
    let mut body = Body::new(Value::Null);

    let conj = calculus::apply(&f.conjugate_on(&d)?, &d)?;
    body.checks.insert("involution".into(), relative_error(&conj, &phi.involution(), 0)? <= HOMOMORPHISM_TOL);
    if let FunctionKind::Polynomial { coeffs } = f.kind() {
        let c: Vec<Complex64> = coeffs.iter().map(|&z| z.into()).collect();
        let horner = calculus::polynomial_of_matrix(&c, x)?;
        body.checks.insert("polynomial_matches_matrix_arithmetic".into(), relative_error(&phi, &horner, 0)? <= HOMOMORPHISM_TOL);
    }

    let mut result = json!({ "function": f, "phi": phi, "grades": grades });
    if !d.is_empty() {
        let h = calculus::estimate_holder_on(f, &d, samples)?;
        let mut membership = BTreeMap::new();
        let mut continuity = BTreeMap::new();
        for &q in grades {
            let (lhs, rhs) = calculus::membership_bound(f, &d, &h, q)?;
            body.checks.insert(format!("membership_bound_q{q}"), lhs <= rhs * (1.0 + calculus::DOMINATION_SLACK));
            membership.insert(q.to_string(), json!({ "lhs": lhs, "rhs": rhs }));
            if q + 2 <= MAX_GRADE {
                let e = calculus::continuity_estimate(f, &d, q, q + 2)?;
                body.checks.insert(format!("continuity_estimate_q{q}"), e.holds(1e-9));
                continuity.insert(q.to_string(), json!(e));
            }
        }
        result["holder_on_spectrum"] = json!({ "theta": h.theta, "constant": h.constant, "residual": h.residual });
        result["membership_bound"] = json!(membership);
        result["continuity_estimate"] = json!(continuity);
    }
    if let Some(r) = radius {
        result["holder"] = json!(calculus::estimate_holder(f, r, samples)?);
    }
    if let FunctionKind::Power { theta } = f.kind() {
        let y = calculus::fractional_power(x, *theta)?;
        let back = calculus::fractional_power(&y, 1.0 / theta)?;
        let err = relative_error(&back, x, 0)?;
        result["fractional_power"] = json!({ "matrix": y, "round_trip_error": err });
        if (0.25..=4.0).contains(theta) {
            body.checks.insert("fractional_power_round_trip".into(), err <= FRACTIONAL_ROUND_TRIP_TOL);
        }
    }
    body.result = result;
    Ok(body)
}

fn cmd_subalgebra(l: &Loaded, grades: &[u32]) -> Result<Body> {
    require_inputs(l, 1, "subalgebra")?;
    let gens: Vec<GradedMatrix> = l.matrices.iter().map(|(_, m)| m.clone()).collect();
    let family = subalgebra::minimal_basis(&gens)?;
    let mut body = Body::new(Value::Null);

    let mut in_span = true;
    let mut projections_decompose = true;
    let chars = subalgebra::characters(&family)?;
    let mut expansions = Vec::new();
    for g in &gens {
        in_span &= family.span_residual(g)? <= SPAN_RESIDUAL_TOL;
        for p in spectral::decompose_default(g)?.projections() {
            projections_decompose &= family.span_residual(p)? <= SPAN_RESIDUAL_TOL;
        }
        let mu = chars.iter().map(|c| c.value(g).map(complex)).collect::<Result<Vec<_>>>()?;
        expansions.push(Value::Array(mu));
    }
    body.checks.insert("generators_in_span".into(), in_span);
    body.checks.insert("spectral_projections_decompose".into(), projections_decompose);
    body.checks.insert("independent".into(), family.is_empty() || family.gram_condition()? > 1e-10);

    let mut result = json!({ "family": family, "ranks": family.ranks(), "expansions": expansions });
    if !family.is_empty() {
        let pairs: Vec<(u32, u32)> = grades.iter().filter(|&&q| q + 2 <= MAX_GRADE).map(|&q| (q, q + 2)).collect();
        let k = subalgebra::koethe_representation(&family, grades, &pairs)?;
        body.checks.insert("rank_one_chain".into(), k.chain_holds());

        let (x, lambdas) = subalgebra::single_generator(&family, grades)?;
        let d = spectral::decompose_default(&x)?;
        let mut round_trip = d.len() == family.len() && d.multiplicities() == family.ranks();
        if round_trip {
            for (p, f) in d.projections().iter().zip(family.projections()) {
                round_trip &= p.sub(f)?.op_norm_q(0)? <= SPAN_RESIDUAL_TOL;
            }
        }
        body.checks.insert("single_generator_round_trip".into(), round_trip);

        let m = subalgebra::maximality_check(&family)?;
        body.checks.insert("maximality_criteria_agree".into(), m.structural == m.by_commutant());
        body.findings.insert("maximal_commutative".into(), json!(m.structural));
        body.findings.insert("complete".into(), json!(family.is_complete()));
        result["koethe"] = json!(k);
        result["single_generator"] = json!({ "lambdas": lambdas, "matrix": x });
        result["maximality"] = json!(m);
    }
    body.result = result;
    Ok(body)
}

fn cmd_dn(l: &Loaded, q: u32, r: Option<u32>, theta: f64) -> Result<(Body, DNReport)> {
    require_inputs(l, 1, "dn")?;
    let r = r.unwrap_or(2 * q);
    let samples: Vec<GradedMatrix> = l.matrices.iter().map(|(_, m)| m.clone()).collect();
    let rep = diagnostics::dn_check(&samples, q, r, theta)?;
    let mut body = Body::new(json!(rep));
    if q as f64 <= theta * r as f64 {
        body.checks.insert("dn_with_unit_constant".into(), rep.violations == 0);
    }
    body.findings.insert("fitted_constant".into(), json!(rep.fitted_constant));
    body.findings.insert("violations".into(), json!(rep.violations));
    body.csv = Some(diagnostics::dn_report_csv(&rep));
    Ok((body, rep))
}

fn cmd_characterize(config: &RunConfig, l: &Loaded, grades: &[u32], dims: Option<&str>, thetas: &str) -> Result<(Body, DecayReport)> {
    let thetas = parse_list::<f64>(thetas, "theta")?;
    let family: Vec<GradedMatrix> = match dims {
        Some(dims) => {
            if config.model.len() != 1 || !config.input.is_empty() {
                return Err(Error::InvalidArgument("--dims needs exactly one --model and no --input".into()));
            }
            let mut scratch = Vec::new();
            let spec = load_model_spec(&config.model[0], &mut scratch)?;
            parse_list::<usize>(dims, "dim")?.into_iter().map(|d| generate(&spec.with_dim(d))).collect::<Result<_>>()?
        }
        None => l.matrices.iter().map(|(_, m)| m.clone()).collect(),
    };
    let rep = diagnostics::characterize(&family, grades, &thetas)?;
    let mut body = Body::new(json!(rep));
    body.findings.insert("consistent_with_membership".into(), json!(rep.passed));
    body.csv = Some(diagnostics::decay_report_csv(&rep));
    Ok((body, rep))
}

/// Runs the command without writing anything. `gen` and `replay` are handled
/// by [`run`].
pub fn execute(config: &RunConfig, argv: &[String]) -> Result<Report> {
    let grades = parse_grades(&config.grades)?;
    let opts = decompose_options(config);
    let mut loaded = load_inputs(config)?;
    let body = match &config.command {
        Command::Norms => cmd_norms(&loaded, &grades)?,
        Command::Spectral => cmd_spectral(&loaded, &grades, &opts)?,
        Command::Extract { k_max } => cmd_extract(&loaded, &grades, *k_max)?,
        Command::Recover => cmd_recover(&loaded)?,
        Command::Calculus { function, radius, samples } => {
            let f = parse_function(function, &mut loaded.records)?;
            cmd_calculus(&loaded, &f, &grades, &opts, *radius, *samples)?
        }
        Command::Subalgebra => cmd_subalgebra(&loaded, &grades)?,
        Command::Dn { q, r, theta } => cmd_dn(&loaded, *q, *r, *theta)?.0,
        Command::Characterize { dims, thetas } => cmd_characterize(config, &loaded, &grades, dims.as_deref(), thetas)?.0,
        Command::Gen | Command::Replay => {
            return Err(Error::InvalidArgument(format!("{} does not produce a report", config.command.name())))
        }
    };
    if config.format == Format::Csv && body.csv.is_none() {
        return Err(Error::InvalidArgument(format!("--format csv is not available for {}", config.command.name())));
    }
    Ok(Report {
        tool: TOOL.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: config.command.name().into(),
        argv: argv.to_vec(),
        config: serde_json::to_value(config)?,
        tolerances: tolerances(config),
        inputs: loaded.records,
        result: body.result,
        checks: body.checks,
        findings: body.findings,
    })
    .map(|mut r| {
        if let Some(csv) = body.csv {
            r.findings.insert("_csv".into(), Value::String(csv));
        }
        r
    })
}

fn csv_of(report: &mut Report) -> Option<String> {
    match report.findings.remove("_csv") {
        Some(Value::String(s)) => Some(s),
        _ => None,
    }
}

fn emit(config: &RunConfig, text: &str) -> Result<()> {
    match &config.output {
        Some(p) => io::write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_gen(config: &RunConfig) -> Result<String> {
    if config.model.len() + config.input.len() != 1 {
        return Err(Error::InvalidArgument("gen takes exactly one --model or --input".into()));
    }
    let loaded = load_inputs(config)?;
    let m = &loaded.matrices[0].1;
    Ok(match config.format {
        Format::Json => {
            let mut s = io::matrix_to_json(m);
            s.push('\n');
            s
        }
        Format::Csv => io::matrix_to_csv(m),
    })
}

/// Re-runs the command recorded in the report at `path`.
pub fn replay(path: &Path) -> Result<Report> {
    let text = fs::read_to_string(path)?;
    let original: Report = serde_json::from_str(&text).map_err(|e| json_err(&path.display().to_string(), e))?;
    let mut args = vec![TOOL.to_string()];
    args.extend(original.argv.iter().cloned());
    let config = RunConfig::try_parse_from(&args).map_err(|e| Error::Parse(format!("recorded argv: {e}")))?;
    let mut again = execute(&config, &original.argv)?;
    csv_of(&mut again);

    let mut checks = BTreeMap::new();
    checks.insert("inputs_unchanged".to_string(), again.inputs == original.inputs);
    checks.insert("checks_reproduced".to_string(), again.checks == original.checks);
    checks.insert("findings_reproduced".to_string(), again.findings == original.findings);
    let mut findings = BTreeMap::new();
    findings.insert("result_identical".to_string(), json!(again.result == original.result));
    let bytes = fs::read(path)?;
    Ok(Report {
        tool: TOOL.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: "replay".into(),
        argv: vec!["replay".into(), "--input".into(), path.display().to_string()],
        config: json!({ "report": path.display().to_string(), "replayed_command": original.command }),
        tolerances: original.tolerances.clone(),
        inputs: vec![InputRecord { source: path.display().to_string(), sha256: sha256_hex(&bytes) }],
        result: json!({ "original_checks": original.checks, "replayed_checks": again.checks }),
        checks,
        findings,
    })
}

fn status_for(e: &Error) -> i32 {
    if e.is_numerical() {
        2
    } else {
        1
    }
}

/// Parses nothing: runs an already parsed configuration and writes its
/// output. `argv` is recorded in the report for replay.
pub fn run(config: &RunConfig, argv: &[String]) -> Outcome {
    let result = (|| -> Result<(Option<Report>, String)> {
        match &config.command {
            Command::Gen => {
                let text = run_gen(config)?;
                emit(config, &text)?;
                Ok((None, text))
            }
            Command::Replay => {
                let [path] = config.input.as_slice() else {
                    return Err(Error::InvalidArgument("replay takes exactly one --input report".into()));
                };
                let report = replay(path)?;
                let text = report.to_json();
                emit(config, &text)?;
                Ok((Some(report), text))
            }
            _ => {
                let mut report = execute(config, argv)?;
                let csv = csv_of(&mut report);
                let text = match config.format {
                    Format::Json => report.to_json(),
                    Format::Csv => csv.expect("csv presence checked in execute"),
                };
                emit(config, &text)?;
                Ok((Some(report), text))
            }
        }
    })();
    match result {
        Ok((report, output)) => {
            let failed: Vec<String> = report.iter().flat_map(|r| r.failed_checks()).map(String::from).collect();
            if !failed.is_empty() {
                eprintln!("{TOOL}: failed checks: {}", failed.join(", "));
            }
            Outcome { status: if failed.is_empty() { 0 } else { 2 }, report, output }
        }
        Err(e) => {
            eprintln!("{TOOL}: {e}");
            Outcome { status: status_for(&e), report: None, output: String::new() }
        }
    }
}

/// Entry point shared by the binary and tests: `args[0]` is the program name.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let config = match RunConfig::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    run(&config, &args[1..]).status
}

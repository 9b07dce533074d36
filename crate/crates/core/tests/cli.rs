//! End-to-end runs of the `smoothlab` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn smoothlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smoothlab")).args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn norms_of_unit_projection() {
    let out = smoothlab(&["norms", "--model", "unit-projection:n=2,dim=8", "--grades", "0..3"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let op = &r["result"]["matrices"][0]["op_norm"];
    for (q, v) in [("0", 1.0), ("1", 4.0), ("2", 16.0), ("3", 64.0)] {
        assert_eq!(op[q].as_f64().unwrap(), v);
    }
    assert_eq!(r["tool"], "smoothlab");
    assert!(r["tolerances"]["cluster_tol"].is_number());
    assert_eq!(r["config"]["grades"], "0..3");
}

#[test]
fn spectral_of_zero_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let zero = write(dir.path(), "zero.json", r#"{"dim":3,"re":[[0,0,0],[0,0,0],[0,0,0]],"im":[[0,0,0],[0,0,0],[0,0,0]]}"#);
    let out = smoothlab(&["spectral", "--input", &zero]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["result"]["matrices"][0]["decomposition"]["eigenvalues"], serde_json::json!([]));
    assert_eq!(r["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn dn_on_smooth_random() {
    let out = smoothlab(&["dn", "--model", "smooth-random:p=3,seed=1,dim=16", "--q", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["findings"]["violations"], 0);
    assert!(r["findings"]["fitted_constant"].as_f64().unwrap() <= 1.0);
    assert_eq!(r["checks"]["dn_with_unit_constant"], true);
}

#[test]
fn non_normal_input_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let shift = write(dir.path(), "shift.json", r#"{"dim":2,"re":[[0,1],[0,0]],"im":[[0,0],[0,0]]}"#);
    let out = smoothlab(&["spectral", "--input", &shift]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not normal"));
}

#[test]
fn malformed_input_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "{\"dim\": 2,\n \"re\": [[1, 0], [0, 1]],\n \"im\": oops}");
    let out = smoothlab(&["norms", "--input", &bad]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");

    let csv = write(dir.path(), "bad.csv", "1,0\n0,x\n\n0,0\n0,0\n");
    let out = smoothlab(&["norms", "--input", &csv]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2, field 2"));

    assert_eq!(smoothlab(&["norms", "--model", "diag-power:alpha=2"]).status.code(), Some(1));
    assert_eq!(smoothlab(&["norms", "--model", "unit-projection:n=1,dim=4", "--grades", "0..40"]).status.code(), Some(1));
    assert_eq!(smoothlab(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn gen_output_reads_back() {
    let dir = tempfile::tempdir().unwrap();
    for (ext, format) in [("json", "json"), ("csv", "csv")] {
        let path = dir.path().join(format!("x.{ext}")).display().to_string();
        let out = smoothlab(&["gen", "--model", "smooth-random:p=2,seed=4,dim=6", "--format", format, "--output", &path]);
        assert_eq!(out.status.code(), Some(0));
        let r = report(&smoothlab(&["norms", "--input", &path, "--grades", "0"]));
        assert!(r["result"]["matrices"][0]["op_norm"]["0"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn reports_are_byte_identical_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json").display().to_string();
    let args = ["characterize", "--model", "diag-exp:beta=1,dim=8", "--dims", "8,12,16", "--thetas", "0.5,1", "--output", &a];
    assert_eq!(smoothlab(&args).status.code(), Some(0));
    let first = std::fs::read(&a).unwrap();
    assert_eq!(smoothlab(&args).status.code(), Some(0));
    assert_eq!(first, std::fs::read(&a).unwrap());

    let out = smoothlab(&["replay", "--input", &a]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    for key in ["inputs_unchanged", "checks_reproduced", "findings_reproduced"] {
        assert_eq!(r["checks"][key], true, "{key}");
    }
    assert_eq!(r["findings"]["result_identical"], true);
}

#[test]
fn calculus_with_table_file() {
    let dir = tempfile::tempdir().unwrap();
    let table = write(
        dir.path(),
        "f.json",
        r#"[{"lambda":{"re":1,"im":0},"value":{"re":2,"im":1}},{"lambda":{"re":0.5,"im":0},"value":{"re":-1,"im":0}}]"#,
    );
    let out = smoothlab(&["calculus", "--model", "diag-power:alpha=1,dim=2", "--fn", &format!("table:@{table}")]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["checks"]["involution"], true);
    assert_eq!(r["result"]["phi"]["re"], serde_json::json!([[2.0, 0.0], [0.0, -1.0]]));
    assert_eq!(r["inputs"].as_array().unwrap().len(), 2);

    let out = smoothlab(&["calculus", "--model", "diag-power:alpha=1,dim=3", "--fn", &format!("table:@{table}")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn subalgebra_and_csv_outputs() {
    let out = smoothlab(&["subalgebra", "--model", "unit-projection:n=1,dim=3", "--model", "unit-projection:n=2,dim=3"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["result"]["maximality"]["commutant_dimension"], 3);
    assert_eq!(r["findings"]["maximal_commutative"], false);

    let out = smoothlab(&["extract", "--model", "diag-power:alpha=1,dim=4", "--grades", "0,1", "--k-max", "3", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("source,k,error_0,bound_0,error_1,bound_1\n"));
    assert_eq!(text.lines().count(), 4);
}

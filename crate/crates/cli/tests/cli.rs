use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_deltaclose");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawn deltaclose")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn ok(args: &[&str]) -> Value {
    let out = run(args);
    assert_eq!(out.status.code(), Some(0), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    json(&out)
}

fn scratch() -> PathBuf {
    static N: AtomicUsize = AtomicUsize::new(0);
    let dir = std::env::temp_dir().join(format!(
        "deltaclose-cli-{}-{}",
        std::process::id(),
        N.fetch_add(1, Ordering::Relaxed)
    ));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn all_pass(v: &Value) -> bool {
    v["certificates"].as_object().map(|m| !m.is_empty() && m.values().all(|c| c["status"] == "pass")).unwrap_or(false)
}

fn float(v: &Value) -> f64 {
    v.as_str().expect("float string").parse().unwrap()
}

const X_SQUARED: &str = r#"{"dim":1,"terms":[{"lambda":[[0,0]],"poly":[{"alpha":[2],"coeff":1}]}]}"#;
const ONE: &str = r#"{"dim":1,"terms":[{"lambda":[[0,0]],"poly":[{"alpha":[0],"coeff":1}]}]}"#;
const PROP7_E: &str =
    r#"{"dim":2,"terms":[{"lambda":[[0,0],[0,0]],"poly":[{"alpha":[2,0],"coeff":1},{"alpha":[0,1],"coeff":1}]}]}"#;
const PROP7_GENS: &str = r#"[["1","0"],["theta","0"],["0","1"]]"#;

#[test]
fn closure_of_dyadic_generators() {
    let v = ok(&["group", "closure", "--generators", r#"[["1"],["1/2"],["1/4"]]"#]);
    assert_eq!(v["dense"], false);
    assert_eq!(v["V"], serde_json::json!([]));
    assert_eq!(v["Lambda"], serde_json::json!([[{"coords": ["1/4"]}]]));
    assert!(all_pass(&v));
}

#[test]
fn dense_closure_in_quadratic_field() {
    let v = ok(&["--field", "sqrt(2)", "group", "closure", "--generators", r#"[["1"],["theta"]]"#]);
    assert_eq!(v["dense"], true);
    assert_eq!(v["Lambda"], serde_json::json!([]));
    assert!(all_pass(&v));
}

#[test]
fn expansion_identity_is_exact() {
    let v = ok(&["op", "expand", "--steps", r#"[["1"],["1/2"]]"#, "--powers", "[1,2]", "-N", "2"]);
    assert_eq!(v["identity"], "exact-pass");
    assert!(all_pass(&v));
}

#[test]
fn divide_accepts_negative_multiplier() {
    let v = ok(&["op", "divide", "--h", r#"["1"]"#, "-p", "-3", "-n", "2"]);
    assert!(all_pass(&v));
}

#[test]
fn fm_passes_grid_verification() {
    let dir = scratch();
    let f = dir.join("fm.json");
    let out = run(&["construct", "fm", "-m", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(all_pass(&json(&out)));
    fs::write(&f, &out.stdout).unwrap();
    let v = ok(&["verify", "grid", "--function", f.to_str().unwrap(), "--op", "delta h=1 m=2"]);
    assert!(all_pass(&v));
    assert!(float(&v["max_residual"]) <= 1e-9);
}

#[test]
fn triangle_certificates() {
    let v = ok(&["construct", "triangle", "--period", "1/2"]);
    assert!(all_pass(&v));
}

#[test]
fn output_is_byte_identical_across_runs() {
    let args = [
        "--field",
        "sqrt(2)",
        "construct",
        "prop7",
        "--generators",
        PROP7_GENS,
        "-m",
        "2",
        "--e",
        PROP7_E,
        "--seed",
        "7",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn exit_codes_follow_error_kind() {
    let malformed = run(&["group", "closure", "--generators", "[[1"]);
    assert_eq!(malformed.status.code(), Some(2));
    let err = json(&malformed);
    assert_eq!(err["error"]["kind"], "Malformed");
    assert_eq!(err["error"]["exit_code"], 2);

    assert_eq!(run(&["op", "expand"]).status.code(), Some(2));

    let system =
        format!(r#"{{"steps":[{{"h":["1"],"m":1,"g":{ONE}}},{{"h":["theta"],"m":1,"g":{{"dim":1,"terms":[]}}}}]}}"#);
    let inconsistent = run(&["--field", "sqrt(2)", "solve", "--system", &system]);
    assert_eq!(inconsistent.status.code(), Some(3));
    assert_eq!(json(&inconsistent)["error"]["kind"], "Inconsistent");

    let not_dense = run(&["kernel", "--steps", r#"[{"h":["1"],"m":1}]"#]);
    assert_eq!(not_dense.status.code(), Some(4));

    let space = format!(r#"{{"dim":1,"basis":[{X_SQUARED}]}}"#);
    let ops = r#"[{"op":{"delta":{"h":["1"],"m":1}},"power":1}]"#;
    let pre = run(&["space", "diamond", "--space", &space, "--ops", ops]);
    assert_eq!(pre.status.code(), Some(5));
    assert_eq!(json(&pre)["error"]["kind"], "PreconditionNotInvariant");
}

#[test]
fn diamond_of_square_under_cubed_difference() {
    let space = format!(r#"{{"dim":1,"basis":[{X_SQUARED}]}}"#);
    let ops = r#"[{"op":{"delta":{"h":["1"],"m":1}},"power":3}]"#;
    let v = ok(&["space", "diamond", "--space", &space, "--ops", ops]);
    assert_eq!(v["dim"], 3);
    assert!(all_pass(&v));
}

#[test]
fn solve_recovers_particular_and_kernel() {
    let g1 = r#"{"dim":1,"terms":[{"lambda":[[0,0]],"poly":[{"alpha":[1],"coeff":2},{"alpha":[0],"coeff":1}]}]}"#;
    let g2 = r#"{"dim":1,"terms":[{"lambda":[[0,0]],"poly":[{"alpha":[1],"coeff":{"coords":["0","2"]}},{"alpha":[0],"coeff":2}]}]}"#;
    let system = format!(r#"{{"steps":[{{"h":["1"],"m":1,"g":{g1}}},{{"h":["theta"],"m":1,"g":{g2}}}]}}"#);
    let v = ok(&["--field", "sqrt(2)", "solve", "--system", &system]);
    assert!(all_pass(&v));
}

#[test]
fn manifest_references_resolve() {
    let dir = scratch();
    let path = dir.join("manifest.json");
    let manifest = format!(
        r#"{{"version":"1","field":"Q","objects":[
            {{"id":"sq","kind":"exp_poly","value":{X_SQUARED}}},
            {{"id":"V","kind":"space","value":{{"dim":1,"basis":[{{"ref":"sq"}}]}}}}
        ]}}"#
    );
    fs::write(&path, manifest).unwrap();
    let ops = r#"[{"op":{"delta":{"h":["1"],"m":1}},"power":3}]"#;
    let v = ok(&["--manifest", path.to_str().unwrap(), "space", "diamond", "--space", "@V", "--ops", ops]);
    assert_eq!(v["dim"], 3);

    let missing = run(&["--manifest", path.to_str().unwrap(), "space", "diamond", "--space", "@nope", "--ops", ops]);
    assert_eq!(missing.status.code(), Some(2));
    let no_manifest = run(&["space", "diamond", "--space", "@V", "--ops", ops]);
    assert_eq!(no_manifest.status.code(), Some(2));
}

#[test]
fn conflicting_fields_are_rejected() {
    let dir = scratch();
    let path = dir.join("manifest.json");
    fs::write(&path, r#"{"version":"1","field":"sqrt(3)","objects":[]}"#).unwrap();
    let out = run(&[
        "--field",
        "sqrt(2)",
        "--manifest",
        path.to_str().unwrap(),
        "group",
        "closure",
        "--generators",
        r#"[["1"]]"#,
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn out_writes_csv_and_sidecar() {
    let dir = scratch();
    let csv = dir.join("tri.csv");
    let out = run(&["construct", "triangle", "--grid", "-1,1,9", "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("x1"));
    assert_eq!(lines.count(), 9);
    let side: Value = serde_json::from_str(&fs::read_to_string(dir.join("tri.csv.json")).unwrap()).unwrap();
    assert!(side.is_object());
}

#[test]
fn prop7_then_fit_cosets() {
    let dir = scratch();
    let f = dir.join("phi.json");
    let out = run(&["--field", "sqrt(2)", "construct", "prop7", "--generators", PROP7_GENS, "-m", "2", "--e", PROP7_E]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let phi = json(&out);
    assert!(all_pass(&phi));
    for name in [
        "h_invariance",
        "phi_difference_membership",
        "corner_witness",
        "hull_translation_closed",
        "frame_decomposition",
    ] {
        assert_eq!(phi["certificates"][name]["status"], "pass", "{name}");
    }
    fs::write(&f, &out.stdout).unwrap();

    let fit = ok(&["fit", "cosets", "--function", f.to_str().unwrap()]);
    assert!(all_pass(&fit));
    let slices = fit["slices"].as_array().unwrap();
    assert!(slices.len() >= 2);
}

#[test]
fn fit_cosets_on_dense_group_is_rejected() {
    let dir = scratch();
    let f = dir.join("fm.json");
    let out = run(&["--field", "sqrt(2)", "construct", "fm", "-m", "2"]);
    assert_eq!(out.status.code(), Some(0));
    fs::write(&f, &out.stdout).unwrap();
    let fit = run(&[
        "--field",
        "sqrt(2)",
        "fit",
        "cosets",
        "--function",
        f.to_str().unwrap(),
        "--closure",
        r#"{"dim":1,"generators":[["1"],["theta"]]}"#,
        "--space",
        &format!(r#"{{"dim":1,"basis":[{ONE}]}}"#),
    ]);
    assert_eq!(fit.status.code(), Some(4), "{}", String::from_utf8_lossy(&fit.stdout));
}

#[test]
fn broken_certificate_exits_six() {
    let dir = scratch();
    let f = dir.join("fm.json");
    let out = run(&["construct", "fm", "-m", "3"]);
    fs::write(&f, &out.stdout).unwrap();
    let v = run(&["verify", "grid", "--function", f.to_str().unwrap(), "--op", "delta h=1 m=1"]);
    assert_eq!(v.status.code(), Some(6));
    assert_eq!(json(&v)["certificates"]["residual_within_tolerance"]["status"], "fail");
}

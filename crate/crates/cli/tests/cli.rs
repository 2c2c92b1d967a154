//! End-to-end tests of the installed binary: spawn it exactly as a user
//! would, then check stdout, stderr, and the documented exit codes.

use std::io::Write;
use std::process::Command;
use std::str::FromStr;

use nofinetune_core::Rat;
use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nofinetune"))
}

fn data(name: &str) -> String {
    format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

/// Run the binary, returning `(exit_code, stdout, stderr)`.
fn run(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).output().expect("binary spawns");
    (
        out.status.code().expect("no signal"),
        String::from_utf8(out.stdout).expect("utf-8 stdout"),
        String::from_utf8(out.stderr).expect("utf-8 stderr"),
    )
}

fn run_json(args: &[&str]) -> Value {
    let (code, stdout, stderr) = run(args);
    assert_eq!(code, 0, "command failed: {stderr}");
    serde_json::from_str(&stdout).expect("JSON output")
}

fn write_temp(dir: &tempfile::TempDir, name: &str, content: &str) -> String {
    let path = dir.path().join(name);
    let mut f = std::fs::File::create(&path).expect("temp file");
    f.write_all(content.as_bytes()).expect("temp write");
    path.to_str().expect("utf-8 path").to_owned()
}

#[test]
fn dsep_prints_the_verdict_and_always_exits_zero() {
    let bell = data("bell_graph.json");
    let collider = data("collider.json");
    for (args, expected) in [
        (vec![bell.as_str(), "--s1", "A", "--s2", "Y", "--z", "X"], "true"),
        (vec![bell.as_str(), "--s1", "A", "--s2", "B"], "false"),
        (vec![collider.as_str(), "--s1", "A", "--s2", "C", "--z", "B"], "false"),
        (vec![collider.as_str(), "--s1", "A", "--s2", "C"], "true"),
    ] {
        let mut full = vec!["dsep"];
        full.extend(args);
        let (code, stdout, _) = run(&full);
        assert_eq!(code, 0);
        assert_eq!(stdout.trim(), expected);
    }
}

#[test]
fn overlapping_query_sets_exit_three() {
    let (code, _, stderr) = run(&[
        "dsep", &data("bell_graph.json"), "--s1", "A", "--s2", "A,B",
    ]);
    assert_eq!(code, 3);
    assert!(stderr.contains("disjoint"), "stderr: {stderr}");
}

#[test]
fn unknown_query_nodes_exit_four() {
    let (code, _, stderr) = run(&[
        "dsep", &data("bell_graph.json"), "--s1", "Q", "--s2", "Y",
    ]);
    assert_eq!(code, 4);
    assert!(stderr.contains("unknown node"), "stderr: {stderr}");
}

#[test]
fn unreadable_or_malformed_files_exit_two() {
    let (code, _, _) = run(&["dsep", "/nonexistent.json", "--s1", "A", "--s2", "B"]);
    assert_eq!(code, 2);
    // A well-formed JSON file of the wrong shape is still a parse failure.
    let (code, _, stderr) = run(&[
        "dsep", &data("chsh_functional.json"), "--s1", "A", "--s2", "B",
    ]);
    assert_eq!(code, 2, "stderr: {stderr}");
}

#[test]
fn nd_check_reports_verdicts_without_failing() {
    let report = run_json(&["nd-check", &data("pr_box.json")]);
    assert_eq!(report["holds"], json!(true));
    assert_eq!(report["violations"], json!([]));

    let report = run_json(&["nd-check", &data("tsirelson_box.json")]);
    assert_eq!(report["holds"], json!(true));

    // A signalling table: A's outcome statistics under x0 flip with the far
    // setting. The verdict is negative but the command still succeeds.
    let dir = tempfile::tempdir().expect("tempdir");
    let signalling = write_temp(
        &dir,
        "signalling.json",
        r#"{
          "scenario": {
            "measurements": ["x0", "x1", "y0", "y1"],
            "outcomes": ["0", "1"],
            "contexts": [["x0","y0"], ["x0","y1"], ["x1","y0"], ["x1","y1"]]
          },
          "table": [
            {"assignment": {"A":"0","B":"0","X":"x0","Y":"y0"}, "weight": "1/4"},
            {"assignment": {"A":"1","B":"0","X":"x0","Y":"y1"}, "weight": "1/4"},
            {"assignment": {"A":"0","B":"0","X":"x1","Y":"y0"}, "weight": "1/4"},
            {"assignment": {"A":"0","B":"0","X":"x1","Y":"y1"}, "weight": "1/4"}
          ]
        }"#,
    );
    let report = run_json(&["nd-check", &signalling]);
    assert_eq!(report["holds"], json!(false));
    assert!(!report["violations"].as_array().unwrap().is_empty());
}

#[test]
fn polytope_test_emits_reverifiable_certificates() {
    let outside = run_json(&["polytope-test", &data("pr_box.json")]);
    assert_eq!(outside["inside"], json!(false));
    assert_eq!(outside["vertices"], json!(16));
    let margin = Rat::from_str(outside["margin"].as_str().expect("exact margin")).unwrap();
    assert!(margin > Rat::from_integer(0.into()));
    assert!(outside["witness"]["coefficients"].as_array().unwrap().len() > 0);

    let inside = run_json(&["polytope-test", &data("uniform_box.json")]);
    assert_eq!(inside["inside"], json!(true));
    assert_eq!(inside["weights"].as_array().unwrap().len(), 16);

    let float_outside = run_json(&["polytope-test", &data("tsirelson_box.json")]);
    assert_eq!(float_outside["inside"], json!(false));
    assert!(float_outside["margin"].as_f64().expect("float margin") > 0.5);
}

#[test]
fn kcbs_membership_depends_on_the_vertex_semantics() {
    let global = run_json(&[
        "polytope-test", &data("kcbs_anticorrelated.json"), "--vertices", "global",
    ]);
    assert_eq!(global["inside"], json!(false));
    assert_eq!(global["vertices"], json!(32));

    let pairs = run_json(&[
        "polytope-test", &data("kcbs_anticorrelated.json"), "--vertices", "pairs",
    ]);
    assert_eq!(pairs["inside"], json!(true));
    assert_eq!(pairs["vertices"], json!(1024));
}

#[test]
fn classical_bound_matches_the_known_functionals() {
    let chsh = run_json(&[
        "classical-bound", &data("chsh_functional.json"), &data("chsh_scenario.json"),
    ]);
    assert_eq!(chsh, json!({ "bound": "2", "vertices": 16 }));

    let kcbs = run_json(&[
        "classical-bound", &data("kcbs_functional.json"), &data("kcbs_scenario.json"),
        "--vertices", "global",
    ]);
    assert_eq!(kcbs, json!({ "bound": "4", "vertices": 32 }));
}

#[test]
fn pair_vertices_need_a_two_sided_scenario() {
    let (code, _, stderr) = run(&[
        "classical-bound", &data("kcbs_functional.json"), &data("kcbs_scenario.json"),
    ]);
    assert_eq!(code, 4);
    assert!(stderr.contains("two measurement sides"), "stderr: {stderr}");
}

#[test]
fn faithful_check_flags_the_signalling_model() {
    let report = run_json(&[
        "faithful-check", &data("one_bit_signalling_model.json"), &data("pr_box.json"),
    ]);
    assert_eq!(report["faithful"], json!(false));
    let fine_tuned = report["fine_tuned"].as_array().unwrap();
    assert!(
        fine_tuned.contains(&json!({ "s1": ["B"], "s2": ["X"], "z": ["Y"] })),
        "fine_tuned: {fine_tuned:?}"
    );
}

#[test]
fn faithful_check_passes_the_generic_common_cause_model() {
    let report = run_json(&[
        "faithful-check", &data("bell_model.json"), &data("bell_phenomenon.json"),
    ]);
    assert_eq!(report["faithful"], json!(true));
    assert_eq!(report["fine_tuned"], json!([]));
}

#[test]
fn mismatched_model_and_phenomenon_exit_four() {
    let (code, _, stderr) = run(&[
        "faithful-check", &data("bell_model.json"), &data("uniform_box.json"),
    ]);
    assert_eq!(code, 4);
    assert!(stderr.contains("does not reproduce"), "stderr: {stderr}");
}

#[test]
fn ci_scan_lists_the_product_independence() {
    let dir = tempfile::tempdir().expect("tempdir");
    let table = write_temp(
        &dir,
        "product.json",
        r#"[
          {"assignment": {"A":"0","B":"0"}, "weight": "1/4"},
          {"assignment": {"A":"0","B":"1"}, "weight": "1/4"},
          {"assignment": {"A":"1","B":"0"}, "weight": "1/4"},
          {"assignment": {"A":"1","B":"1"}, "weight": "1/4"}
        ]"#,
    );
    let report = run_json(&["ci-scan", &table]);
    assert_eq!(report, json!({ "statements": [{ "s1": ["A"], "s2": ["B"], "z": [] }] }));

    let (code, stdout, _) = run(&["ci-scan", &table, "--format", "table"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("A ⫫ B"), "stdout: {stdout}");
}

#[test]
fn restricted_audit_is_clean_deterministic_and_seed_overridable() {
    let args = ["verify-theorem1", "--no-xy-links", "--trials", "1"];
    let report = run_json(&args);
    assert_eq!(report["theorem_holds"], json!(true));
    assert_eq!(report["total_candidates"], json!(211_968));
    assert!(!report["survivors"].as_array().unwrap().is_empty());

    // Identical output regardless of worker count.
    let (code, solo, _) = run(&["verify-theorem1", "--no-xy-links", "--trials", "1", "--jobs", "1"]);
    assert_eq!(code, 0);
    assert_eq!(serde_json::from_str::<Value>(&solo).unwrap(), report);

    let out = bin()
        .env("NOFINETUNE_SEED", "23")
        .args(["verify-theorem1", "--no-xy-links", "--trials", "1", "--seed", "11"])
        .output()
        .expect("binary spawns");
    assert!(out.status.success());
    let overridden: Value = serde_json::from_slice(&out.stdout).expect("JSON output");
    assert_eq!(overridden["seed"], json!(23));

    let bad = bin()
        .env("NOFINETUNE_SEED", "zero")
        .args(["verify-theorem1", "--no-xy-links", "--trials", "1"])
        .output()
        .expect("binary spawns");
    assert_eq!(bad.status.code(), Some(2));

    let (code, table, _) = run(&[
        "verify-theorem1", "--no-xy-links", "--trials", "1", "--format", "table",
    ]);
    assert_eq!(code, 0);
    assert!(table.contains("verdict: holds"), "table: {table}");
    assert!(table.contains("step1"), "table: {table}");
}

//! End-to-end tests of the `schur-radii` binary: exit codes, estimate
//! examples, report formats and determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_schur-radii");

fn run(args: &[&str], env: &[(&str, &str)]) -> Output {
    run_in(Path::new("."), args, env)
}

fn run_in(cwd: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.current_dir(cwd)
        .args(args)
        .env_remove("SCHUR_RADII_BUDGETS")
        .env_remove("SCHUR_RADII_TEST_CHAINS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&o.stdout))
    })
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const J2: &str = r#"{"rows": 2, "cols": 2, "entries": [1, 1, 1, 1]}"#;

fn pair_input(dir: &TempDir) -> PathBuf {
    write(dir, "pair.json", &format!(r#"{{"sets": [[{J2}], [{J2}]]}}"#))
}

/// `w(i) = 1.5 + 1/i` on the first superdiagonal, used twice.
fn shift_pair_input(dir: &TempDir) -> PathBuf {
    let f = r#"{"bands": [{"offset": 1, "weights": {"kind": "rational", "num": [1, 1.5], "den": [0, 1]}}]}"#;
    write(dir, "shifts.json", &format!(r#"{{"params": {{"beta": 0.3}}, "sets": [[{f}], [{f}]]}}"#))
}

#[test]
fn passing_chain_exits_zero() {
    let dir = TempDir::new().unwrap();
    let out = run(&["check", "--id", "F1", "--input", s(&pair_input(&dir))], &[]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out);
    assert_eq!(report["report"]["verdict"], "pass");
    assert_eq!(report["toolkit"], "schur-radii");
    assert!(report["config"]["budgets"]["values"].is_object());
    let terms = report["report"]["terms"].as_array().unwrap();
    let lo = |k: usize| terms[k]["lo"].as_f64().unwrap();
    assert!((lo(0) - 2.0).abs() < 1e-9 && (lo(1) - 4.0).abs() < 1e-9);
    assert!(terms.iter().all(|t| t["method"].is_string()));
}

#[test]
fn broken_test_chain_exits_one() {
    let dir = TempDir::new().unwrap();
    let input = pair_input(&dir);
    let out = run(
        &["check", "--id", "test/broken", "--input", s(&input)],
        &[("SCHUR_RADII_TEST_CHAINS", "1")],
    );
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["report"]["verdict"], "fail");
    // Without the switch the test namespace is invisible.
    let hidden = run(&["check", "--id", "test/broken", "--input", s(&input)], &[]);
    assert_eq!(code(&hidden), 2);
}

#[test]
fn starved_budget_exits_three() {
    let dir = TempDir::new().unwrap();
    let input = shift_pair_input(&dir);
    let ok = run(&["check", "--id", "E10", "--input", s(&input)], &[]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    let budgets = r#"{"ess": {"max_k": 2, "j_max": 1}}"#;
    let out = run(
        &["check", "--id", "E10", "--input", s(&input)],
        &[("SCHUR_RADII_BUDGETS", budgets)],
    );
    assert_eq!(code(&out), 3);
    let report = json(&out);
    assert_eq!(report["report"]["verdict"], "inconclusive");
    assert_eq!(report["config"]["budgets"]["source"], "SCHUR_RADII_BUDGETS");
    assert_eq!(report["config"]["budgets"]["values"]["ess"]["max_k"], 2);
}

#[test]
fn input_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", r#"{"sets": [[{"rows": 2, "cols": 2, "entries": [1, 2]}]]}"#);
    let out = run(&["check", "--id", "F1", "--input", s(&bad)], &[]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    let broken_json = write(&dir, "broken.json", "{ not json");
    assert_eq!(code(&run(&["check", "--id", "F1", "--input", s(&broken_json)], &[])), 2);
    assert_eq!(code(&run(&["check", "--id", "F99", "--random"], &[])), 2);
    let bad_env = run(
        &["check", "--id", "F1", "--input", s(&pair_input(&dir))],
        &[("SCHUR_RADII_BUDGETS", r#"{"no_such_budget": 1}"#)],
    );
    assert_eq!(code(&bad_env), 2);
}

#[test]
fn odd_length_permuted_chain_is_refused() {
    let dir = TempDir::new().unwrap();
    let f = r#"{"diagonal": {"kind": "constant", "c": 1}}"#;
    let input = write(
        &dir,
        "odd.json",
        &format!(
            r#"{{"params": {{"m": 3, "alpha": 1, "tau": [1, 2, 3], "nu": [1, 2, 3]}}, "sets": [[{f}], [{f}], [{f}]]}}"#
        ),
    );
    let out = run(&["check", "--id", "E19", "--input", s(&input)], &[]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("even"));
}

#[test]
fn random_check_is_deterministic() {
    let args = ["check", "--id", "F2", "--random", "--seed", "1"];
    let a = run(&args, &[]);
    let b = run(&args, &[]);
    assert!(matches!(code(&a), 0 | 3));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["config"]["args"]["seed"], 1);
}

fn bracket(out: &Output) -> (f64, f64) {
    assert_eq!(code(out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(out);
    (v["bracket"]["lo"].as_f64().unwrap(), v["bracket"]["hi"].as_f64().unwrap())
}

#[test]
fn estimate_examples() {
    let dir = TempDir::new().unwrap();
    let golden = write(
        &dir,
        "golden.json",
        r#"[{"rows": 2, "cols": 2, "entries": [1, 1, 0, 1]}, {"rows": 2, "cols": 2, "entries": [1, 0, 1, 1]}]"#,
    );
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let (lo, hi) = bracket(&run(&["estimate", "jsr", "--input", s(&golden), "--delta", "1e-6"], &[]));
    assert!(lo <= phi && phi <= hi && hi - lo <= 1e-6, "[{lo}, {hi}]");

    let identity = write(&dir, "identity.json", r#"{"diagonal": {"kind": "constant", "c": 1}}"#);
    let (lo, hi) = bracket(&run(&["estimate", "gamma", "--input", s(&identity)], &[]));
    assert!((lo - 1.0).abs() <= 1e-6 && (hi - 1.0).abs() <= 1e-6, "[{lo}, {hi}]");

    let perm = write(&dir, "perm2.json", r#"{"rows": 2, "cols": 2, "entries": [0, 1, 1, 0]}"#);
    let (lo, hi) = bracket(&run(&["estimate", "rho", "--input", s(&perm)], &[]));
    assert!((lo - 1.0).abs() <= 1e-10 && (hi - 1.0).abs() <= 1e-10, "[{lo}, {hi}]");
}

#[test]
fn unsupported_estimate_warns_with_trivial_bracket() {
    let dir = TempDir::new().unwrap();
    let identity = write(&dir, "identity.json", r#"{"diagonal": {"kind": "constant", "c": 1}}"#);
    let out = run(&["estimate", "rho", "--input", s(&identity)], &[]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["bracket"]["lo"], 0.0);
    // An infinite upper end has no JSON number and is written as null.
    assert!(v["bracket"]["hi"].is_null());
    assert!(v["warning"].is_string());
}

#[test]
fn sweep_reports_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let sweep = |name: &str| {
        let out = run_in(
            dir.path(),
            &["sweep", "--ids", "F1,F11,E3", "--trials", "5", "--seed", "9", "--output", "report.json"],
            &[],
        );
        // The output path is echoed in the report, so both runs use the
        // same relative name and are moved aside afterwards.
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let path = dir.path().join(name);
        std::fs::rename(dir.path().join("report.json"), &path).unwrap();
        std::fs::read(path).unwrap()
    };
    let a = sweep("a.json");
    let b = sweep("b.json");
    assert_eq!(a, b);
    let v: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["totals"]["fail"], 0);
    assert_eq!(v["chains"].as_array().unwrap().len(), 3);
}

#[test]
fn sweep_csv_has_fixed_columns() {
    let out = run(&["sweep", "--ids", "F2", "--trials", "3", "--format", "csv"], &[]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "chain_id,trial,term_index,term_label,lo,hi,slack,verdict"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().all(|r| r.starts_with("F2,")));
}

#[test]
fn sweep_rejects_bad_requests() {
    let dir = TempDir::new().unwrap();
    let unwritable = dir.path().join("missing").join("report.json");
    let out = run(&["sweep", "--ids", "F1", "--trials", "1", "--output", s(&unwritable)], &[]);
    assert_eq!(code(&out), 2);
    assert_eq!(code(&run(&["sweep", "--ids", "F1", "--trials", "0"], &[])), 2);
}

#[test]
fn catalog_lists_every_chain() {
    let out = run(&["catalog"], &[]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    for id in ["\"F1\"", "\"F16\"", "\"E1\"", "\"E21\""] {
        assert!(text.contains(id), "{id}");
    }
}

//! End-to-end checks of the `entrocone` binary: output contracts, exit
//! codes, and byte-level determinism of seeded commands.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_entrocone"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_of(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 stdout")
}

fn temp_path(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("entrocone-cli-test-{}-{name}", std::process::id()));
    p
}

#[test]
fn derive_triangle_reports_facet_counts_and_classes() {
    let text = stdout_of(&["derive", "--builtin", "ncycle:3"]);
    assert!(text.contains("facets: 12 (9 trivial, 3 nontrivial)"), "got:\n{text}");
    assert!(text.contains("classes: 3"), "got:\n{text}");
    assert!(
        text.contains("H(X1,X2) - H(X1,X3) - H(X2,X3) + H(X3) ≤ 0"),
        "nontrivial facet missing:\n{text}"
    );
}

#[test]
fn eval_flags_violations_and_prints_plain_values() {
    let text = stdout_of(&["eval", "--builtin", "pr", "--ineq", "chsh"]);
    assert!(text.contains("chsh = 4  [violated]"), "got:\n{text}");

    let text = stdout_of(&["eval", "--builtin", "pmax", "--ineq", "chsh_e"]);
    assert!(text.contains("chsh_e = 1  [violated]"), "got:\n{text}");

    let text = stdout_of(&["eval", "--builtin", "iso:0.8", "--ineq", "chsh_e"]);
    assert!(text.contains("chsh_e = -0.93799"), "got:\n{text}");
    assert!(!text.contains("[violated]"), "iso:0.8 must not violate:\n{text}");
}

#[test]
fn eval_reads_box_files() {
    let path = temp_path("prbox.json");
    std::fs::write(
        &path,
        r#"{
          "scenario": {
            "observables": ["A0", "A1", "B0", "B1"],
            "maximal_contexts": [["A0","B0"], ["A0","B1"], ["A1","B0"], ["A1","B1"]]
          },
          "tables": {
            "A0,B0": {"0,0": "1/2", "1,1": "1/2"},
            "A0,B1": {"0,0": "1/2", "1,1": "1/2"},
            "A1,B0": {"0,0": "1/2", "1,1": "1/2"},
            "A1,B1": {"0,1": "1/2", "1,0": "1/2"}
          }
        }"#,
    )
    .unwrap();
    let text = stdout_of(&["eval", "--box", path.to_str().unwrap(), "--ineq", "chsh"]);
    std::fs::remove_file(&path).ok();
    assert!(text.contains("chsh = 4  [violated]"), "got:\n{text}");
}

#[test]
fn optimize_is_deterministic_and_finds_positive_value() {
    let args = ["optimize", "--target", "klyachko_e", "--restarts", "8", "--seed", "7"];
    let first = run(&args);
    let second = run(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout, "same seed must reproduce bytes");

    let report: serde_json::Value =
        serde_json::from_slice(&first.stdout).expect("stdout is a JSON report");
    let best = report["best_value"].as_f64().unwrap();
    assert!(best > 0.08, "expected a clear positive optimum, got {best}");
    assert_eq!(report["seed"], 7);
}

#[test]
fn scan_rerun_writes_identical_csv_and_plot_script() {
    let csv = temp_path("fig4.csv");
    let gp = csv.with_extension("gp");
    let args = ["scan", "--figure", "fig4", "--grid", "0.25", "--out"];

    stdout_of(&[&args[..], &[csv.to_str().unwrap()]].concat());
    let first = std::fs::read(&csv).unwrap();
    assert!(gp.exists(), "plot script missing at {}", gp.display());

    stdout_of(&[&args[..], &[csv.to_str().unwrap()]].concat());
    let second = std::fs::read(&csv).unwrap();
    assert_eq!(first, second, "rerun must write identical bytes");

    let text = String::from_utf8(first).unwrap();
    assert!(text.starts_with("d,xi,nonlocal_content,gain_generalized"), "got:\n{text}");
    assert!(text.contains("\n2,0.5,0.5,0.125\n"), "exact midpoint row missing:\n{text}");

    std::fs::remove_file(&csv).ok();
    std::fs::remove_file(&gp).ok();
}

#[test]
fn scan_detector_threshold_is_reported() {
    let csv = temp_path("eta2.csv");
    let text = stdout_of(&["scan", "--figure", "eta_two", "--out", csv.to_str().unwrap()]);
    std::fs::remove_file(&csv).ok();
    std::fs::remove_file(csv.with_extension("gp")).ok();
    assert!(text.contains("threshold = 0.99704"), "got:\n{text}");
}

#[test]
fn unknown_box_name_is_a_domain_error() {
    let out = run(&["eval", "--builtin", "nonsense", "--ineq", "chsh"]);
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value =
        serde_json::from_slice(&out.stderr).expect("stderr is an error JSON");
    assert_eq!(err["error"]["kind"], "domain");
    assert!(err["error"]["message"].as_str().unwrap().contains("nonsense"));
}

#[test]
fn bad_flag_is_a_usage_error() {
    let out = run(&["eval", "--bogus-flag"]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value =
        serde_json::from_slice(&out.stderr).expect("stderr is an error JSON");
    assert_eq!(err["error"]["kind"], "usage");
}

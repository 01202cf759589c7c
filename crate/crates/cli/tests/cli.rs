use std::path::Path;
use std::process::{Command, Output};
use std::sync::Arc;

use serde_json::Value;
use zigzag_core::module::AInfModule;
use zigzag_core::{ZigzagAlgebra, Q};

fn zigzag(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zigzag"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn error_object(o: &Output) -> Value {
    let text = String::from_utf8(o.stderr.clone()).unwrap();
    serde_json::from_str(text.trim()).expect("stderr holds one JSON object")
}

#[test]
fn central_shift_prints_the_shift() {
    let dir = tempfile::tempdir().unwrap();
    let o = zigzag(dir.path(), &["central-shift", "--m", "2", "--n", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "P_k → P_k[8]{12} for k=1,2: PASS\n");
}

#[test]
fn algebra_new_writes_two_dimensional_algebra() {
    let dir = tempfile::tempdir().unwrap();
    let o = zigzag(dir.path(), &["algebra", "new", "--m", "1", "--n", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("a1_3.algebra.json")).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["basis"].as_array().unwrap().len(), 2);
    let a = zigzag_core::io::algebra_from_text(&text).unwrap();
    assert_eq!(zigzag_core::io::algebra_to_text(&a).unwrap(), text);
    let o = zigzag(dir.path(), &["module", "validate", "a1_3.algebra.json"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn cardy_corpus_is_deterministic_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let seq = zigzag(
        dir.path(),
        &["cardy", "--corpus", "100", "--seed", "7", "--jobs", "1"],
    );
    let par = zigzag(
        dir.path(),
        &["cardy", "--corpus", "100", "--seed", "7", "--jobs", "4"],
    );
    assert_eq!(seq.status.code(), Some(0));
    assert_eq!(stdout(&seq), stdout(&par));
    let text = stdout(&seq);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("word0,word1,euler,class0,class1,gram_product,pass")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 100);
    assert!(rows.iter().all(|r| r.ends_with(",PASS")));
}

#[test]
fn twist_output_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let o = zigzag(
        dir.path(),
        &["twist", "--word", "1 -2 1", "P2", "--out", "c.twc.json"],
    );
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("c.twc.json")).unwrap();
    let c = zigzag_core::io::twisted_from_text(&text).unwrap();
    assert_eq!(zigzag_core::io::twisted_to_text(&c).unwrap(), text);
    let again = zigzag(dir.path(), &["twist", "--word", "1 -2 1", "P2"]);
    assert_eq!(stdout(&again), text);
    let o = zigzag(dir.path(), &["module", "validate", "c.twc.json"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn equivariant_run_writes_a_loadable_action() {
    let dir = tempfile::tempdir().unwrap();
    zigzag(
        dir.path(),
        &["twist", "--word", "1 2", "P1", "--out", "c.twc.json"],
    );
    let o = zigzag(
        dir.path(),
        &[
            "equivariant",
            "run",
            "c.twc.json",
            "--out",
            "c.action.json",
            "--scramble",
            "4",
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
    keys.sort();
    assert_eq!(
        keys,
        [
            "R",
            "alpha",
            "certified_window",
            "ki_vanishes",
            "module",
            "rho_support",
            "weights"
        ]
    );
    assert_eq!(v["ki_vanishes"], Value::Bool(true));
    let o = zigzag(dir.path(), &["module", "validate", "c.action.json"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn hh_class_matches_k_class_with_transports() {
    let dir = tempfile::tempdir().unwrap();
    let o = zigzag(
        dir.path(),
        &["hh", "class", "P1", "--transports", "3", "--seed", "2"],
    );
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["alg_class"], serde_json::json!(["1/1", "0/1"]));
    assert_eq!(v["transports"].as_array().unwrap().len(), 3);
}

#[test]
fn orbit_finds_a_target_and_reports_exhaustion() {
    let dir = tempfile::tempdir().unwrap();
    let o = zigzag(
        dir.path(),
        &[
            "orbit", "--start", "P1", "--target", "P1{2}[1]", "--depth", "2",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["word"], "1");
    let o = zigzag(
        dir.path(),
        &[
            "orbit", "--start", "P1", "--target", "P2{7}[5]", "--depth", "1", "--jobs", "2",
        ],
    );
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error_object(&o)["error"]["kind"], "budget_exhausted");
}

#[test]
fn input_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["module", "validate", "missing.module.json"],
        vec!["module", "validate", "notes.txt"],
        vec!["twist", "--word", "1 x", "P1"],
        vec!["twist", "--word", "3", "P1"],
        vec!["no-such-command"],
    ] {
        let o = zigzag(dir.path(), &args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert_eq!(error_object(&o)["error"]["kind"], "input_error", "{args:?}");
    }
}

#[test]
fn broken_module_is_a_check_failure() {
    let dir = tempfile::tempdir().unwrap();
    let a = Arc::new(ZigzagAlgebra::build(2, 2).unwrap());
    let mut j = AInfModule::projective(&a, 1).to_json();
    let term =
        j.mu.iter_mut()
            .find(|t| t.d == 1)
            .expect("right multiplication terms");
    term.coeff = &term.coeff + &Q::from(1);
    let path = dir.path().join("bad.module.json");
    std::fs::write(&path, zigzag_core::io::to_canonical(&j).unwrap()).unwrap();
    let o = zigzag(dir.path(), &["module", "validate", "bad.module.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error_object(&o)["error"]["kind"], "check_failed");
}

#[test]
fn report_formats() {
    let dir = tempfile::tempdir().unwrap();
    let o = zigzag(
        dir.path(),
        &[
            "report",
            "--format",
            "csv",
            "--corpus",
            "5",
            "--pipeline",
            "1",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("name,pass,detail\n"));
    let o = zigzag(
        dir.path(),
        &[
            "report",
            "--format",
            "json",
            "--corpus",
            "5",
            "--pipeline",
            "1",
        ],
    );
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["pass"], Value::Bool(true));
}

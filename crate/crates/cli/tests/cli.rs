use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn corpus(name: &str) -> String {
    root().join("corpus").join(name).display().to_string()
}

fn opcheck(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opcheck"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn validator() -> jsonschema::Validator {
    let text = std::fs::read_to_string(root().join("schema/report.schema.json")).unwrap();
    jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap()
}

fn assert_schema_valid(json: &str) {
    let v: Value = serde_json::from_str(json).unwrap();
    let errors: Vec<String> = validator().iter_errors(&v).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}\n{json}");
}

#[test]
fn fact_cache_is_certified() {
    let o = opcheck(&["check", &corpus("factcache.op"), "--approach", "iw"]);
    assert_eq!(stdout(&o), "factCache: PURE (certified)\n");
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn counter_gets_replayed_witness() {
    let o = opcheck(&["check", &corpus("counter.op")]);
    let out = stdout(&o);
    assert!(out.contains("NOT CERTIFIED (impure: concrete witness)"), "{out}");
    assert!(out.contains("witness: c(0) returned 1 and then 2"), "{out}");
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn gen_invariant_prints_annotation() {
    let o = opcheck(&["gen-invariant", &corpus("factcache.op")]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("fixpoint at iteration 1"), "{out}");
    assert!(
        out.contains("invariant g == -1 && lastN == 0 || g == lastN * factCache(lastN - 1)"),
        "{out}"
    );
}

#[test]
fn usage_errors_exit_three() {
    assert_eq!(opcheck(&["frobnicate"]).status.code(), Some(3));
    assert_eq!(opcheck(&["check"]).status.code(), Some(3));
    assert_eq!(opcheck(&["check", "/nonexistent.op"]).status.code(), Some(3));
    assert_eq!(
        opcheck(&["check", &corpus("factcache.op"), "--timeout", "0"]).status.code(),
        Some(3)
    );
    assert_eq!(
        opcheck(&["oracle", &corpus("counter.op"), "--trials", "0"]).status.code(),
        Some(3)
    );
}

#[test]
fn missing_solver_is_an_error_not_unknown() {
    let o = opcheck(&["check", &corpus("factcache.op"), "--solver", "/nonexistent/solver"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn ea_times_out_as_unknown() {
    let o = opcheck(&["check", &corpus("factcache.op"), "--approach", "ea", "--timeout", "2"]);
    let out = stdout(&o);
    assert!(out.starts_with("factCache: UNKNOWN"), "{out}");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn check_reports_match_schema() {
    for f in ["factcache.op", "counter.op", "poison.op", "mcm.op"] {
        assert_schema_valid(&stdout(&opcheck(&["check", &corpus(f), "--json"])));
    }
    assert_schema_valid(&stdout(&opcheck(&[
        "check",
        &corpus("factcache.op"),
        "--approach",
        "ea",
        "--timeout",
        "1",
        "--json",
    ])));
}

#[test]
fn other_reports_match_schema() {
    assert_schema_valid(&stdout(&opcheck(&["gen-invariant", &corpus("factcache.op"), "--json"])));
    assert_schema_valid(&stdout(&opcheck(&[
        "gen-invariant",
        &corpus("counter.op"),
        "--max-iters",
        "2",
        "--json",
    ])));
    assert_schema_valid(&stdout(&opcheck(&["oracle", &corpus("counter.op"), "--json"])));
    assert_schema_valid(&stdout(&opcheck(&[
        "oracle",
        &corpus("fib.op"),
        "--trials",
        "50",
        "--json",
    ])));
}

#[test]
fn schema_rejects_malformed_report() {
    let good = stdout(&opcheck(&["check", &corpus("factcache.op"), "--json"]));
    let mut v: Value = serde_json::from_str(&good).unwrap();
    v["procedures"][0]["verdict"] = Value::from("maybe");
    assert!(!validator().is_valid(&v));
}

#[test]
fn emit_writes_numbered_queries_and_files() {
    let dir = tempfile::tempdir().unwrap();
    let smt = dir.path().join("smt");
    let vc = dir.path().join("vc");
    let tb = dir.path().join("tb");
    let o = opcheck(&[
        "check",
        &corpus("factcache.op"),
        "--emit-smt",
        smt.to_str().unwrap(),
        "--emit-vc",
        vc.to_str().unwrap(),
        "--emit-tb",
        tb.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let mut names: Vec<String> = std::fs::read_dir(&smt)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["0001.smt2", "0002.smt2"]);
    for n in names {
        let text = std::fs::read_to_string(smt.join(n)).unwrap();
        assert!(text.contains("(check-sat)"));
    }
    let tb_text = std::fs::read_to_string(tb.join("factCache.tb")).unwrap();
    assert!(tb_text.contains("assert"), "{tb_text}");
    assert!(tb_text.contains("havoc g;"), "{tb_text}");
    let vc_text = std::fs::read_to_string(vc.join("factCache.vc")).unwrap();
    assert!(vc_text.starts_with("procedure factCache\npost:\n"));
}

#[test]
fn emit_subcommand_prints_queries() {
    let o = opcheck(&["emit", &corpus("identity.op")]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("; query not-vc for id"));
    assert!(out.contains("; query twin for id"));
    assert_eq!(out.matches("(check-sat)").count(), 2);
}

#[test]
fn invariant_override_is_used() {
    let o = opcheck(&[
        "check",
        &corpus("factcache.op"),
        "--proc",
        "factCache",
        "--invariant",
        "true",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("NOT CERTIFIED"));
}

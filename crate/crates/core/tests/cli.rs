use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn pot(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("spsym-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn spsym(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spsym")).args(args).output().unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

#[test]
fn verify_oscillator_boost() {
    let p = pot("osc.pot", "# axis oscillator\nomega = 1\nomega^2*x3^2/2\n");
    let o = spsym(&["verify", "--potential", p.to_str().unwrap(), "--generator", "B3+(1.0)"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["pass"], true);
}

#[test]
fn verify_rejects_non_symmetry() {
    let p = pot("zero.pot", "0\n");
    let o = spsym(&["verify", "--potential", p.to_str().unwrap(), "--generator", "x1*P1"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["pass"], false);
}

#[test]
fn find_inverse_square() {
    let p = pot("invsq.pot", "1.7/r^2\n");
    let o = spsym(&["find", "--potential", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["dimension"], 7);
}

#[test]
fn classify_uses_found_algebra() {
    let p = pot("invsq2.pot", "kappa = 1.7\nkappa/r^2\n");
    let o = spsym(&["classify", "--potential", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["classification"]["label"], "sl(2,R)⊕so(3)⊕n1,1");
    let o = spsym(&["classify", "--potential", p.to_str().unwrap(), "--generator", "L1", "--generator", "L2", "--generator", "L3"]);
    assert_eq!(json(&o)["classification"]["label"], "so(3)");
}

#[test]
fn placeholder_header() {
    let p = pot("g.pot", "placeholders = G/2\nG(x1, x2)\n");
    let o = spsym(&["verify", "--potential", p.to_str().unwrap(), "--generator", "P3", "--generator", "G3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn equiv_apply_free_to_oscillator() {
    let p = pot("zero2.pot", "0\n");
    let o = spsym(&["equiv", "apply", "--kind", "et1", "--omega", "1.0", "--potential", p.to_str().unwrap(), "--generator", "P1"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["pass"], true);
    assert!(v["relative_residual"].as_f64().unwrap() < 1e-9);
    let o = spsym(&["equiv", "apply", "--kind", "et3", "--kappa", "1", "--potential", p.to_str().unwrap()]);
    assert_eq!(json(&o)["potential"][0], "x3");
}

#[test]
fn equiv_apply_reports_inapplicable_map() {
    let p = pot("x3.pot", "x3^2\n");
    let o = spsym(&["equiv", "apply", "--kind", "et3", "--kappa", "0,0,1", "--potential", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(json(&o)["error"].as_str().unwrap().contains("x3"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(spsym(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(spsym(&["verify", "--potential", "/nonexistent.pot", "--generator", "P1"]).status.code(), Some(2));
    let p = pot("bad.pot", "1/(x1\n");
    let o = spsym(&["find", "--potential", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(json(&o)["error"].is_string());
    let p = pot("ok.pot", "0\n");
    assert_eq!(spsym(&["verify", "--potential", p.to_str().unwrap(), "--generator", "Nope"]).status.code(), Some(2));
}

#[test]
fn corpus_subset() {
    let o = spsym(&["corpus", "run", "--table", "2", "--item", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["rows"], 1);
    assert!(v.get("seconds").is_none());
    assert_eq!(spsym(&["corpus", "run", "--table", "9"]).status.code(), Some(2));
}

#[test]
fn same_arguments_same_bytes() {
    let p = pot("det.pot", "kappa = 0.4\nkappa/r^2 + x3\n");
    let p = p.to_str().unwrap();
    for args in [
        vec!["find", "--potential", p, "--seed", "9"],
        vec!["verify", "--potential", p, "--generator", "P0", "--generator", "L3", "--seed", "9"],
        vec!["corpus", "run", "--table", "1", "--jobs", "2"],
    ] {
        let a = spsym(&args);
        let b = spsym(&args);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hodiff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hodiff")).args(args).output().expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    hodiff(args).status.code().expect("exit code")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["--version"]), 0);
    assert_eq!(code(&["compare", "--help"]), 0);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&[]), 1);
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["density", "--lambda", "abc"]), 1);
    assert_eq!(code(&["density", "--model", "mm1"]), 1);
    assert_eq!(code(&["density", "--variant", "v9"]), 1);
}

#[test]
fn invalid_parameters_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    // Unstable: λ ≥ nμ.
    assert_eq!(code(&["density", "--lambda", "10", "--n", "10", "--out", &out]), 1);
    assert_eq!(code(&["density", "--model", "ar1", "--alpha", "1.5", "--out", &out]), 1);
    assert_eq!(code(&["density", "--model", "ar1", "--variant", "v3", "--eta", "-1", "--out", &out]), 1);
    assert_eq!(code(&["density", "--tol", "1e-3", "--out", &out]), 1);
    assert_eq!(code(&["diag", "--model", "hospital", "--sweep", "R=25,100", "--out", &out]), 1);
}

#[test]
fn zero_length_sweep_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    assert_eq!(code(&["sweep", "--sweep", "R=25:100:0", "--out", &out]), 1);
    assert_eq!(code(&["sweep", "--out", &out]), 1);
}

#[test]
fn density_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let res = hodiff(&["density", "--model", "hospital", "--N", "16", "--variant", "v3", "--out", &out]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = fs::read_to_string(dir.path().join("density.csv")).unwrap();
    assert!(text.starts_with("# hodiff "));
    assert!(dir.path().join("coefficient.csv").exists());
}

#[test]
fn compare_and_sweep_write_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let res = hodiff(&["compare", "--model", "erlangc", "--lambda", "9", "--n", "10", "--out", &out]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    for f in ["metrics.csv", "metrics.json", "tails.csv"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("metrics.json")).unwrap()).unwrap();
    assert!(json.as_array().is_some_and(|a| !a.is_empty()));

    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let res = hodiff(&["sweep", "--model", "hospital", "--sweep", "N=16,64,256,1024", "--out", &out]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let rates = fs::read_to_string(dir.path().join("rates.csv")).unwrap();
    assert!(rates.contains("variant,metric,slope,intercept,r2"));
    assert!(rates.lines().any(|l| l.starts_with("v3,")));
}

#[test]
fn diag_writes_curves() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let res = hodiff(&["diag", "--sweep", "R=25,100,400", "--zcount", "10", "--out", &out]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    for f in ["md_v0_right.csv", "md_v1_left.csv", "md_summary.csv", "stein.csv"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = out_arg(d.path());
        let args = ["compare", "--model", "ar1", "--alpha", "0.16", "--seed", "7", "--samples", "200000", "--out", &out];
        assert!(hodiff(&args).status.success());
    }
    for f in ["metrics.csv", "metrics.json", "tails.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f} differs");
    }
}

//! Byte-for-byte comparison of every subcommand against checked-in output.
//! Regenerate with `OPTOMECH_UPDATE_GOLDEN=1 cargo test -p optomech-cli --test golden`.

use std::fs;
use std::path::PathBuf;
use std::process::Command;

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn run(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_optomech"))
        .args(args)
        .env_remove("OPTOMECH_CACHE_DIR")
        .env("RUST_LOG", "off")
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).expect("utf-8 output")
}

fn check(config: &str, subcommand: &str, extra: &[&str], expected: &str) {
    let dir = golden_dir();
    let config = dir.join(config);
    let mut args = vec![subcommand, "--config", config.to_str().unwrap(), "--threads", "2"];
    args.extend_from_slice(extra);
    let actual = run(&args);
    let path = dir.join(expected);
    if std::env::var_os("OPTOMECH_UPDATE_GOLDEN").is_some() {
        fs::write(&path, &actual).unwrap();
        return;
    }
    let want = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(actual == want, "{subcommand} output differs from {}:\n{actual}", path.display());
}

#[test]
fn drive_eval() {
    check("drive_eval.json", "drive-eval", &[], "drive_eval.csv");
}

#[test]
fn coeffs() {
    check("coeffs.json", "coeffs", &[], "coeffs.csv");
}

#[test]
fn mechanics() {
    check("mechanics.json", "mechanics", &[], "mechanics.csv");
}

#[test]
fn moments() {
    check("moments.json", "moments", &[], "moments.csv");
}

#[test]
fn nongauss() {
    check("nongauss.json", "nongauss", &[], "nongauss.csv");
}

#[test]
fn qfi() {
    check("qfi.json", "qfi", &[], "qfi.csv");
}

#[test]
fn cfi() {
    check("cfi.json", "cfi", &[], "cfi.csv");
}

#[test]
fn gravimetry() {
    check("gravimetry.json", "gravimetry", &[], "gravimetry.csv");
}

#[test]
fn gravimetry_json() {
    check("gravimetry.json", "gravimetry", &["--format", "json"], "gravimetry.out.json");
}

#[test]
fn oracle_check() {
    check("oracle_check.json", "oracle-check", &[], "oracle_check.csv");
}

#[test]
fn sweep() {
    check("sweep.json", "sweep", &[], "sweep.csv");
}

#[test]
fn validate() {
    check("validate.json", "validate", &[], "validate.txt");
}

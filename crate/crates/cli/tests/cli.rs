use std::fs;
use std::path::Path;
use std::process::Command;

fn urllc(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_urllc")).args(args).output().unwrap()
}

fn run_to(dir: &Path, cmd: &str, threads: &str, extra: &[&str]) -> String {
    let out = dir.to_str().unwrap();
    let mut args = vec![cmd, "--out", out, "--threads", threads, "--seed", "5"];
    args.extend_from_slice(extra);
    let o = urllc(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    fs::read_to_string(dir.join(format!("{cmd}.csv"))).unwrap()
}

#[test]
fn same_seed_same_bytes_across_thread_counts() {
    let cfg = tempfile::NamedTempFile::new().unwrap();
    fs::write(cfg.path(), "num_devices = 3\n").unwrap();
    let cfg = cfg.path().to_str().unwrap().to_string();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let extra = ["--config", &cfg, "--trials", "100", "--deployments", "2"];
    let one = run_to(a.path(), "devices-sweep", "1", &extra);
    let many = run_to(b.path(), "devices-sweep", "8", &extra);
    assert_eq!(one, many);
    assert!(one.contains("# seed=5\n"));
}

#[test]
fn config_errors_name_the_line() {
    let cfg = tempfile::NamedTempFile::new().unwrap();
    fs::write(cfg.path(), "# comment\nnum_devices = 3\nbandwidth_hz = fast\n").unwrap();
    let o = urllc(&["converge", "--config", cfg.path().to_str().unwrap(), "--out", "/nonexistent"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn rejects_unknown_profile_and_tiny_trial_counts() {
    assert!(!urllc(&["tightness", "--profile", "huge"]).status.success());
    let o = urllc(&["tightness", "--trials", "5", "--out", "/nonexistent"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn selftest_dump_is_an_sexpr() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("gp.sexpr");
    let o = urllc(&[
        "gp-selftest",
        "--out",
        dir.path().to_str().unwrap(),
        "--dump",
        dump.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dump).unwrap();
    assert!(text.starts_with("(gp") && text.contains("(vars pp0"));
    let csv = fs::read_to_string(dir.path().join("gp-selftest.csv")).unwrap();
    assert!(!csv.contains(",false"));
}

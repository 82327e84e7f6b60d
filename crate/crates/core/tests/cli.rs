use std::io::Write;
use std::process::Command;

fn twobubble(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_twobubble")).args(args).output().unwrap()
}

#[test]
fn constants_are_wrapped_json() {
    let out = twobubble(&["constants"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["format"], "twobubble/1");
    assert_eq!(v["config"]["N"], 13);
    assert!((v["C_N"].as_f64().unwrap() - 66279.394).abs() < 1e-3);
}

#[test]
fn check_emits_one_record_per_line() {
    let out = twobubble(&["check", "--only", "radial_core"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8(out.stdout).unwrap();
    let recs: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(recs.len(), 2);
    assert!(recs.iter().all(|r| r["pass"] == true && r["paper_ref"].is_string()));
}

#[test]
fn tampered_constant_fails_the_check() {
    let out = twobubble(&["--set", "tamper_c_tilde=1e-6", "check", "--only", "ground_state"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn ode_output_is_csv_with_header() {
    let out = twobubble(&["ode", "--t0", "-1000", "--t1", "-100"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# twobubble/1 "));
    let header = lines.next().unwrap();
    assert!(header.starts_with("t,"), "{header}");
    assert!(lines.count() >= 2);
}

#[test]
fn configuration_errors_exit_with_code_two() {
    assert_eq!(twobubble(&["ode", "--N", "11"]).status.code(), Some(2));
    assert_eq!(twobubble(&["--set", "nonsense=1", "constants"]).status.code(), Some(2));
    let mut f = tempfile();
    writeln!(f.1, "seed = 1\nseed = 2").unwrap();
    let out = twobubble(&["--config", f.0.to_str().unwrap(), "constants"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lines 1 and 2"));
    let _ = std::fs::remove_file(&f.0);
}

fn tempfile() -> (std::path::PathBuf, std::fs::File) {
    let p = std::env::temp_dir().join(format!("twobubble-cli-{}.cfg", std::process::id()));
    let f = std::fs::File::create(&p).unwrap();
    (p, f)
}

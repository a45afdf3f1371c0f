use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::tempdir;

fn qwscat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qwscat"))
        .args(args)
        .output()
        .expect("failed to launch qwscat")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn error_envelope(o: &Output) -> Value {
    let text = String::from_utf8(o.stderr.clone()).unwrap();
    serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {text}"))
}

fn rows(csv_text: &str) -> Vec<Vec<String>> {
    csv_text
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn column(table: &[Vec<String>], name: &str) -> usize {
    table[0].iter().position(|h| h == name).unwrap()
}

#[test]
fn j_table_default() {
    let o = qwscat(&["j-table"]);
    assert!(o.status.success());
    let t = rows(&stdout(&o));
    assert_eq!(t.len(), 22);
    assert_eq!(t[0], ["E", "n", "re_J", "im_J"]);
    assert_eq!(t[1][2], "1.6236666926210273");
    let again = qwscat(&["j-table"]);
    assert_eq!(o.stdout, again.stdout);
}

#[test]
fn j_table_out_of_band() {
    let o = qwscat(&["j-table", "--energy", "5"]);
    assert_eq!(o.status.code(), Some(3));
    let e = error_envelope(&o);
    assert_eq!(e["error"]["kind"], "OutOfBand");
    assert_eq!(e["error"]["exit_code"], 3);
}

#[test]
fn j_table_with_oracle() {
    let o = qwscat(&["j-table", "--oracle", "--energy", "-3", "--nmax", "6"]);
    assert!(o.status.success());
    let t = rows(&stdout(&o));
    let c = column(&t, "rel_err");
    for r in &t[1..] {
        assert!(r[c].parse::<f64>().unwrap() <= 1e-6);
    }
}

#[test]
fn usage_errors_are_json() {
    for args in [
        vec!["--bogus"],
        vec!["fidelity-scan", "--grid", "0.5:0.1:0.1"],
        vec!["fidelity-scan", "--grid", "0.1:0.5"],
        vec!["evolve", "--L", "3,4"],
        vec!["j-table", "--tol", "-1"],
    ] {
        let o = qwscat(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert_eq!(error_envelope(&o)["error"]["category"], "usage");
    }
    assert!(qwscat(&["--help"]).status.success());
}

#[test]
fn scan_near_zero_width_and_summary() {
    let dir = tempdir().unwrap();
    let csv = dir.path().join("scan.csv");
    let summary = dir.path().join("summary.json");
    let script = dir.path().join("plot.py");
    let o = qwscat(&[
        "fidelity-scan",
        "--L",
        "10",
        "--sigma",
        "1e-4,0.3,0.35,0.4",
        "--out",
        csv.to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
        "--plot-script",
        script.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t = rows(&std::fs::read_to_string(&csv).unwrap());
    assert_eq!(
        t[0],
        ["L", "sigma", "ReF", "ImF", "F_at_minus_half_pi", "phi_star", "F_max", "quad_tol", "error"]
    );
    assert_eq!(t.len(), 5);
    let f = t[1][column(&t, "F_at_minus_half_pi")].parse::<f64>().unwrap();
    assert!((f - 0.7).abs() < 5e-3);
    for r in &t[1..] {
        let target: f64 = r[4].parse().unwrap();
        let best: f64 = r[6].parse().unwrap();
        assert!(best >= target);
    }
    let s: Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(s["per_l"][0]["L"], 10);
    assert!(s["per_l"][0].get("plateau").is_some());
    assert!(std::fs::read_to_string(&script).unwrap().contains("scan.csv"));
}

#[test]
fn scan_is_independent_of_thread_count() {
    let a = qwscat(&["fidelity-scan", "--L", "3,6", "--grid", "0.1:0.3:0.1", "--threads", "1"]);
    let b = qwscat(&["fidelity-scan", "--L", "3,6", "--grid", "0.1:0.3:0.1", "--threads", "4"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "U = 0.0\nL = [4]\nsigma = [0.2]\n").unwrap();
    let from_file = qwscat(&["fidelity-scan", "--config", cfg.to_str().unwrap()]);
    assert!(from_file.status.success());
    let t = rows(&stdout(&from_file));
    assert_eq!(t.len(), 2);
    assert_eq!((t[1][0].as_str(), t[1][2].as_str(), t[1][3].as_str()), ("4", "1", "0"));

    let flagged = qwscat(&["fidelity-scan", "--config", cfg.to_str().unwrap(), "--U", "2"]);
    let t = rows(&stdout(&flagged));
    assert_ne!(t[1][2], "1");

    std::fs::write(&cfg, "colour = 3\n").unwrap();
    let bad = qwscat(&["j-table", "--config", cfg.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn convergence_synthetic_and_input() {
    let o = qwscat(&["convergence", "--synthetic", "0.24,-0.76"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["a"].as_f64().unwrap() - 0.24).abs() < 1e-12);
    assert!((v["beta"].as_f64().unwrap() + 0.76).abs() < 1e-12);
    assert_eq!(v["points"], 7);

    let noisy = |seed: &str| qwscat(&["convergence", "--synthetic", "0.24,-0.76", "--noise", "0.05", "--seed", seed]).stdout;
    assert_eq!(noisy("3"), noisy("3"));
    assert_ne!(noisy("3"), noisy("4"));

    let dir = tempdir().unwrap();
    let input = dir.path().join("inf.csv");
    std::fs::write(&input, "L,infidelity\n4,0.1\n8,0.06\n16,0.035\n").unwrap();
    let ok = qwscat(&["convergence", "--input", input.to_str().unwrap()]);
    assert!(ok.status.success());
    std::fs::write(&input, "L,infidelity\n4,0.1\n8,-0.01\n").unwrap();
    let bad = qwscat(&["convergence", "--input", input.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(3));
    assert_eq!(error_envelope(&bad)["error"]["kind"], "NonPositiveInfidelity");
}

#[test]
fn smatrix_rows() {
    let o = qwscat(&["smatrix", "--L", "5,10"]);
    assert!(o.status.success());
    let t = rows(&stdout(&o));
    assert_eq!(t.len(), 3);
    assert_eq!(t[1][column(&t, "delta_part")], "Direct");
    assert_eq!(t[1][column(&t, "im_phase")], "-1");
}

fn read_snapshot(path: &Path) -> (u64, usize) {
    let bytes = std::fs::read(path).unwrap();
    assert_eq!(&bytes[..8], b"QWSNAP1\0");
    let m = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    (m, bytes.len() - 16)
}

#[test]
fn evolve_metadata_and_snapshot() {
    let dir = tempdir().unwrap();
    let snap = dir.path().join("psi.bin");
    let o = qwscat(&["evolve", "--snapshot", snap.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    for key in ["M", "T", "U", "L", "sigma", "centers", "norm", "energy", "f_oracle"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert!(v["norm"]["drift"].as_f64().unwrap() < 1e-10);
    let (m, payload) = read_snapshot(&snap);
    assert_eq!(m, 256);
    assert_eq!(payload, 256 * 256 * 16);

    let small = qwscat(&["evolve", "--sites", "64"]);
    assert_eq!(small.status.code(), Some(3));
    assert_eq!(error_envelope(&small)["error"]["kind"], "TruncationTooSmall");
}

#[test]
fn validate_reports() {
    let o = qwscat(&["validate", "--statistics", "fermion"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["status"], "pass");
    let names: Vec<&str> = v["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"fermion_no_interaction"));

    let small = qwscat(&["validate", "--sites", "216"]);
    assert!(small.status.success());
    let v: Value = serde_json::from_slice(&small.stdout).unwrap();
    assert_eq!(v["status"], "degraded");
    let oracle = v["checks"].as_array().unwrap().iter().find(|c| c["name"] == "time_oracle_cross_check").unwrap();
    assert_eq!(oracle["status"], "degraded");
    assert!(oracle["detail"].as_str().unwrap().starts_with("BoundaryLeak"));
}

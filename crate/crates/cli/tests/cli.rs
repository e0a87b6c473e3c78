//! End-to-end runs of the `gqr` binary.

use std::process::{Command, Output};

fn gqr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gqr"))
        .args(args)
        .env_remove("GQR_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn body(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn table1_has_six_rows_and_a_header() {
    let out = stdout(&gqr(&["table1", "--ns", "1", "--kappa", "0.5"]));
    assert!(out.starts_with("# gqr "));
    assert!(out.contains("# convention: hbar = 1, vacuum quadrature variance 1/2"));
    let rows = body(&out);
    assert_eq!(rows.len(), 7);
    assert!(rows[0].starts_with("transmitter,"));
    let tmss = rows.iter().find(|r| r.starts_with("tmss,")).unwrap();
    assert!(tmss.contains("4.00000000000e0"));
}

#[test]
fn json_rows_carry_the_csv_fields() {
    let csv = stdout(&gqr(&["table1", "--ns", "1", "--kappa", "0.5"]));
    let json = stdout(&gqr(&["table1", "--ns", "1", "--kappa", "0.5", "--format", "json"]));
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let header: Vec<&str> = body(&csv)[0].split(',').collect();
    let keys: Vec<&str> = v[0].as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, header);
    assert_eq!(v.as_array().unwrap().len(), 6);
}

#[test]
fn fig2b_starts_every_curve_at_one_half() {
    let out = stdout(&gqr(&["fig2b", "--m", "0,1e5"]));
    let rows = body(&out);
    let cols: Vec<&str> = rows[0].split(',').collect();
    let (m, perr, bound) = (
        cols.iter().position(|c| *c == "M").unwrap(),
        cols.iter().position(|c| *c == "log10_perr").unwrap(),
        cols.iter().position(|c| *c == "log10_bound").unwrap(),
    );
    assert_eq!(rows.len(), 1 + 4 * 2 * 2);
    for r in &rows[1..] {
        let f: Vec<&str> = r.split(',').collect();
        let (p, b): (f64, f64) = (f[perr].parse().unwrap(), f[bound].parse().unwrap());
        if f[m].parse::<f64>().unwrap() == 0.0 {
            assert!((p - 0.5f64.log10()).abs() < 1e-11);
        }
        assert!(b >= p);
    }
}

#[test]
fn sweep_is_identical_across_worker_counts_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    std::fs::write(
        &cfg,
        "schemes = [\"tmss\", \"model1\"]\nn_s = [0.5, 1.0]\nn_b = [0.0, 1.0]\nkappa = { start = 0.1, stop = 0.5, num = 3 }\noutputs = [\"qfi_sld\", \"closed_form\", \"env_random\"]\nformat = \"json\"\nworkers = 1\nseed = 3\n",
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    let a = stdout(&gqr(&["sweep", "--config", cfg, "--format", "csv", "--workers", "1"]));
    let b = stdout(&gqr(&["sweep", "--config", cfg, "--format", "csv", "--workers", "3"]));
    assert_eq!(a, b);
    assert!(a.starts_with("# gqr"));
    let json = stdout(&gqr(&["sweep", "--config", cfg]));
    assert!(json.trim_start().starts_with('['));
    let reseeded = stdout(&gqr(&["sweep", "--config", cfg, "--format", "csv", "--seed", "4"]));
    assert_ne!(a, reseeded);
}

#[test]
fn sweep_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "schemes = [\"tmss\"]\nn_s = [1.0]\nn_b = [0.0]\nkappa = [0.5]\ncolour = 1\n").unwrap();
    let o = gqr(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn equiv_reports_the_idler_environment_coupling() {
    let out = stdout(&gqr(&["equiv", "--circuit", "model1", "--g", "0.4", "--kappa", "0.3"]));
    let line = body(&out).into_iter().find(|l| l.contains("(I2,E)")).expect("I2-E term");
    assert!(line.ends_with(",false"));
    let file = concat!(env!("CARGO_MANIFEST_DIR"), "/circuits/model1.toml");
    let from_file = stdout(&gqr(&["equiv", "--circuit", file]));
    let strip = |s: &str| body(s).join("\n");
    assert_eq!(strip(&out), strip(&from_file));
}

#[test]
fn equiv_branch_failure_has_its_own_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("flip.toml");
    // a π phase on one mode has eigenvalue −1 and no real principal logarithm
    std::fs::write(&cfg, "[[element]]\ngate = \"phase\"\nmodes = [\"S\"]\nparam = 3.141592653589793\n").unwrap();
    let o = gqr(&["equiv", "--circuit", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn out_flag_writes_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let o = gqr(&["table1", "--out", path.to_str().unwrap()]);
    assert!(o.status.success() && o.stdout.is_empty());
    assert!(std::fs::read_to_string(path).unwrap().contains("model2"));
}

#[test]
fn bad_worker_env_is_an_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_gqr"))
        .args(["table1"])
        .env("GQR_WORKERS", "many")
        .output()
        .unwrap();
    assert!(!o.status.success());
}

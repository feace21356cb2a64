use std::path::Path;
use std::process::{Command, Output};

fn zerocorr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zerocorr"))
        .args(args)
        .env_remove("ZEROCORR_WORKERS")
        .output()
        .expect("binary runs")
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn theory_curve_rows() {
    let out = zerocorr(&["theory-curve", "--grid", "1.0"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows = data_lines(&text);
    assert_eq!(rows[0], "r,pair_density,stderr");
    let cells: Vec<f64> = rows[1].split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(cells[0], 1.0);
    assert!((cells[1] - 0.473553804032471).abs() < 1e-14);
    assert_eq!(cells[2], 0.0);
    assert!(text.contains("# diagonal_atom:"));

    let empty = zerocorr(&["theory-curve", "--grid", ""]);
    assert!(empty.status.success());
    assert_eq!(data_lines(&String::from_utf8(empty.stdout).unwrap()).len(), 1);
}

#[test]
fn exit_codes() {
    assert_eq!(zerocorr(&["empirical-pc", "--samples", "0"]).status.code(), Some(2));
    assert_eq!(zerocorr(&["szego-check", "--degree", "16", "--radius", "3"]).status.code(), Some(2));
    assert_eq!(zerocorr(&["theory-curve", "--grid=-1"]).status.code(), Some(2));
    assert_eq!(zerocorr(&["gn", "--gram", "[[1,1],[1,1]]"]).status.code(), Some(2));
    assert_eq!(zerocorr(&["gn"]).status.code(), Some(2));
    assert_eq!(zerocorr(&["self-test"]).status.code(), Some(0));
}

fn run_to(dir: &Path, name: &str, args: &[&str], workers: &str) -> Vec<u8> {
    let path = dir.join(name);
    let mut full: Vec<&str> = args.to_vec();
    let p = path.to_str().unwrap().to_string();
    full.extend(["--out", &p, "--workers", workers]);
    let out = zerocorr(&full);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::read(&path).unwrap()
}

#[test]
fn outputs_are_bit_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["empirical-pc", "--degree", "64", "--samples", "80", "--radius", "3", "--bins", "0.1:2.9:0.4"];
    let a = run_to(dir.path(), "a.csv", &args, "1");
    let b = run_to(dir.path(), "b.csv", &args, "3");
    assert_eq!(a, b);
    let gn = ["gn", "--gram", "[[1,[0.3,0.4]],[[0.3,-0.4],1]]", "--samples", "5000"];
    assert_eq!(run_to(dir.path(), "c.json", &gn, "1"), run_to(dir.path(), "d.json", &gn, "2"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    std::fs::write(&config, r#"{"degree": [25, 100], "radius": 1.5}"#).unwrap();
    let cfg = config.to_str().unwrap();
    let out = zerocorr(&["szego-check", "--config", cfg]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(data_lines(&text).len(), 3);
    assert!(text.contains("# slope:"));
    let out = zerocorr(&["szego-check", "--config", cfg, "--degree", "100"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(data_lines(&text).len(), 2);
    assert!(!text.contains("# slope:"));
    assert!(text.contains("\"radius\":1.5"));

    std::fs::write(&config, r#"{"degre": 5}"#).unwrap();
    assert_eq!(zerocorr(&["szego-check", "--config", cfg]).status.code(), Some(2));
}

#[test]
fn workers_default_comes_from_environment() {
    let bad = Command::new(env!("CARGO_BIN_EXE_zerocorr"))
        .args(["theory-curve", "--grid", "1"])
        .env("ZEROCORR_WORKERS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let good = Command::new(env!("CARGO_BIN_EXE_zerocorr"))
        .args(["theory-curve", "--grid", "1"])
        .env("ZEROCORR_WORKERS", "2")
        .output()
        .unwrap();
    assert!(good.status.success());
}

#[test]
fn gn_reports_quadrature_for_two_points() {
    let out = zerocorr(&["gn", "--gram", "[[1,0],[0,1]]", "--samples", "20000"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let quad = data_lines(&text).into_iter().find(|l| l.starts_with("quadrature")).unwrap();
    let value: f64 = quad.split(',').nth(1).unwrap().parse().unwrap();
    assert!((value - 0.0832944809519297).abs() < 1e-9);
}

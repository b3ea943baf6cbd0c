use std::path::Path;
use std::process::{Command, Output};

use peakcap::analysis::SweepTable;
use serde_json::Value;

fn peakcap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_peakcap")).args(args).output().expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn rate_writes_ordered_csv_with_capacity() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rates.csv");
    let o = peakcap(&[
        "rate", "--constellation", "qpsk,16qam", "--constraint", "box", "--emax", "1",
        "--psnr-min", "0.5", "--psnr-max", "20", "--points", "5", "--out", path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("psnr,qpsk,16qam,capacity\n"));
    assert!(!text.contains('\r'));
    let t = SweepTable::read_csv(text.as_bytes()).unwrap();
    assert_eq!(t.psnr_grid().len(), 5);
    assert_eq!(t.psnr_grid()[0], 0.5);
    assert_eq!(t.psnr_grid()[4], 20.0);
    let (q, cap) = (t.column("qpsk").unwrap(), t.column("capacity").unwrap());
    for i in 0..5 {
        assert!(q[i] <= cap[i] + 1e-6);
    }
}

#[test]
fn capacity_and_cad_commands() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("cap.csv");
    let o = peakcap(&[
        "capacity", "--constraint", "circular", "--emax", "2", "--psnr-min", "1", "--psnr-max", "2",
        "--points", "2", "--tol", "1e-6", "--out", path_str(&csv),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t = SweepTable::load_csv(&csv).unwrap();
    assert_eq!(t.names().collect::<Vec<_>>(), vec!["capacity"]);

    let json = dir.path().join("cad.json");
    let o = peakcap(&["cad", "--constraint", "box", "--psnr", "1", "--tol", "1e-6", "--out", path_str(&json)]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["type"], "scalar");
    assert_eq!(v["points"].as_array().unwrap().len(), 2);
    assert!(v["kkt_max_violation"].as_f64().unwrap() <= 1e-6);

    let o = peakcap(&["cad", "--constraint", "circular", "--psnr", "16", "--tol", "1e-6", "--out", path_str(&json)]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["type"], "radial");
    assert!(v["radii"].as_array().unwrap().len() >= 2);
}

#[test]
fn cad_sweep_normalizes_support() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("sweep.json");
    let o = peakcap(&[
        "cad-sweep", "--constraint", "box", "--emax", "3", "--psnr-min", "0.1", "--psnr-max", "2",
        "--points", "4", "--out", path_str(&json),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Vec<Value> = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v.len(), 4);
    for e in &v {
        let s: Vec<f64> = e["support"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        assert_eq!(s, vec![-1.0, 1.0]);
    }
}

#[test]
fn crossover_prints_json() {
    let o = peakcap(&["crossover", "--a", "qpsk", "--b", "16qam", "--constraint", "box", "--lo", "2", "--hi", "20"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let p = v["psnr_star"].as_f64().unwrap();
    assert!(p > 5.0 && p < 6.0);
    let (lo, hi) = (v["bracket"][0].as_f64().unwrap(), v["bracket"][1].as_f64().unwrap());
    assert!(lo <= p && p <= hi && hi - lo <= 1e-3 * p);
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| peakcap(args).status.code().unwrap();
    assert_eq!(code(&["crossover", "--a", "qpsk", "--b", "qpsk", "--constraint", "box", "--lo", "2", "--hi", "20"]), 4);
    assert_eq!(code(&["gap", "--mods", "qpsk", "--constraint", "box", "--rate", "3"]), 4);
    assert_eq!(code(&["crossover", "--a", "qpsk", "--b", "8psk", "--constraint", "box", "--lo", "2", "--hi", "20"]), 2);
    assert_eq!(code(&["cad", "--constraint", "oval", "--psnr", "1", "--out", "x.json"]), 2);
    assert_eq!(code(&["cad", "--constraint", "box", "--psnr", "-1", "--out", "x.json"]), 2);
    assert_eq!(code(&["rate", "--constellation", "file:/nonexistent.json", "--constraint", "box", "--out", "x.csv"]), 2);
    assert_eq!(code(&["crossover", "--a", "qpsk", "--b", "16psk", "--constraint", "box"]), 2);
}

#[test]
fn file_constellation_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("bpsk.json");
    std::fs::write(&c, r#"{"points": [[1, 0], [-1, 0]], "probs": [0.5, 0.5]}"#).unwrap();
    let out = dir.path().join("r.csv");
    let spec = format!("file:{}", c.display());
    let o = peakcap(&[
        "rate", "--constellation", &spec, "--constraint", "circular", "--psnr-min", "1", "--psnr-max", "1",
        "--points", "1", "--out", path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t = SweepTable::load_csv(&out).unwrap();
    let bpsk = t.column("bpsk").unwrap()[0];
    assert!(bpsk > 0.0 && bpsk < 1.0);
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str], config: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_catalysis"));
    cmd.args(args).arg("--out").arg(dir.join("out"));
    if let Some(text) = config {
        let path = dir.join("run.toml");
        fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.output().unwrap()
}

fn json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("out").join(name)).unwrap()).unwrap()
}

fn out_file(dir: &Path, name: &str) -> PathBuf {
    dir.join("out").join(name)
}

const TWO_PHOTON: &str = r#"
[cascade]
alpha_sq = "5.0"
reflectivities = ["0.5", "0.8"]

[target]
kind = "fock"
n = 2
"#;

#[test]
fn simulate_two_photon_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["simulate"], Some(TWO_PHOTON));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(dir.path(), "simulate.json");
    let f = v["result"]["target"]["fidelity"].as_f64().unwrap();
    assert!((f - 1.0).abs() < 1e-6);
    let sp = v["result"]["success_probability"].as_f64().unwrap();
    assert!((sp - 0.0100).abs() / 0.0100 < 0.01);
    assert!(v["result"]["cross_check"]["fidelity"].as_f64().unwrap() > 1.0 - 1e-9);
    assert_eq!(v["header"]["command"], "simulate");
    assert_eq!(v["header"]["config"]["cascade"]["alpha_sq"].as_f64(), Some(5.0));
    let csv = fs::read_to_string(out_file(dir.path(), "pnd.csv")).unwrap();
    assert!(csv.starts_with("# catalysis "));
    assert!(csv.contains("\np,re,im,probability\n"));
}

#[test]
fn vacuum_input_heralds_with_product_of_reflectivities() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[cascade]\nalpha_sq = 0\nreflectivities = [0.3, 0.6]\n";
    let o = run(dir.path(), &["simulate"], Some(cfg));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(dir.path(), "simulate.json");
    assert!((v["result"]["success_probability"].as_f64().unwrap() - 0.18).abs() < 1e-12);
    assert_eq!(v["result"]["pnd"][0].as_f64(), Some(1.0));
    assert!(v["result"]["cross_check"].is_null());
}

#[test]
fn rerun_from_output_header_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(dir.path(), &["simulate", "--seed", "5"], Some(TWO_PHOTON)).status.success());
    let first = fs::read(out_file(dir.path(), "simulate.json")).unwrap();
    let v: Value = serde_json::from_slice(&first).unwrap();
    let replay = dir.path().join("replay.json");
    fs::write(&replay, v["header"]["config"].to_string()).unwrap();
    let again = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_catalysis"))
        .args(["simulate", "--config"])
        .arg(&replay)
        .arg("--out")
        .arg(again.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(first, fs::read(again.path().join("simulate.json")).unwrap());
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["simulate"], Some("[cascade]\nalpha_sq = 1\nreflectivities = [0.5]\nextra = 1\n"));
    assert_eq!(o.status.code(), Some(2));
    let o = run(dir.path(), &["simulate"], Some("[cascade]\nalpha_sq = 1\nreflectivities = [1.5]\n"));
    assert_eq!(o.status.code(), Some(2));
    let o = run(dir.path(), &["wigner"], Some("[cascade]\nalpha_sq = 1\nreflectivities = [0.5]\n"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn degenerate_postselection_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["simulate"], Some("[cascade]\nalpha_sq = 0\nreflectivities = [0.0]\n"));
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn wigner_grids_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{TWO_PHOTON}\n[wigner]\nx_min = -1\nx_max = 4\nx_points = 21\np_min = -2\np_max = 2\np_points = 17\n");
    let o = run(dir.path(), &["wigner"], Some(&cfg));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(dir.path(), "wigner.json");
    assert!(v["result"]["max_abs_difference"].as_f64().unwrap() < 1e-8);
    assert!(v["result"]["min"].as_f64().unwrap() < 0.0);
    let csv = fs::read_to_string(out_file(dir.path(), "wigner.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1 + 21 * 17);
}

#[test]
fn optimize_is_reproducible() {
    let cfg = "seed = 11\n[target]\nkind = \"on\"\na = 0.5\nn = 3\n[optimizer]\nl = 3\nrestarts = 16\n";
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run(a.path(), &["optimize", "--threads", "1"], Some(cfg)).status.success());
    assert!(run(b.path(), &["optimize", "--threads", "3"], Some(cfg)).status.success());
    for name in ["optimize.json", "trace.csv"] {
        let x = fs::read_to_string(out_file(a.path(), name)).unwrap();
        let y = fs::read_to_string(out_file(b.path(), name)).unwrap();
        // only the thread count in the embedded config may differ
        assert_eq!(x.replace("\"threads\": 1", "").replace("\"threads\":1", ""), y.replace("\"threads\": 3", "").replace("\"threads\":3", ""));
    }
    let v = json(a.path(), "optimize.json");
    assert!(v["result"]["quantum_fidelity"].as_f64().unwrap() >= 0.99);
    let trace = fs::read_to_string(out_file(a.path(), "trace.csv")).unwrap();
    assert_eq!(trace.lines().filter(|l| !l.starts_with('#')).count(), 17);
}

#[test]
fn scan_writes_dataset_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[scan]\nl = 2\nalpha_min = 0\nalpha_max = 2\nalpha_points = 3\nr_points = 4\n";
    let o = run(dir.path(), &["scan"], Some(cfg));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out_file(dir.path(), "scan.csv")).unwrap();
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(lines.next(), Some("alpha,R_1,R_2,A_0_sq,A_1_sq,A_2_sq,success_probability"));
    assert_eq!(lines.count(), 3 * 16);
    let cfg = "[scan]\nl = 4\nalpha_min = 0\nalpha_max = 2\nalpha_points = 3\nr_points = 4\nbudget = 100\n";
    assert_eq!(run(dir.path(), &["scan"], Some(cfg)).status.code(), Some(3));
}

#[test]
fn realistic_sweep_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{TWO_PHOTON}\n[realistic]\neta_d = 0.98\neta_s_min = 0.9\neta_s_max = 1.0\neta_s_points = 6\n");
    let o = run(dir.path(), &["realistic"], Some(&cfg));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out_file(dir.path(), "realistic.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 6);
    assert!(rows.windows(2).all(|w| w[1][1] >= w[0][1]));

    let ideal = format!("{TWO_PHOTON}\n[realistic]\neta_d = 1\neta_s = [1.0]\n");
    assert!(run(dir.path(), &["realistic"], Some(&ideal)).status.success());
    let csv = fs::read_to_string(out_file(dir.path(), "realistic.csv")).unwrap();
    let f: f64 = csv.lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((f - 1.0).abs() < 1e-9);
}

#[test]
fn reproduce_tables_reports_every_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["reproduce-tables"], None);
    let v = json(dir.path(), "tables.json");
    let checks = v["result"]["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 20 + 10 + 12);
    let failed = v["result"]["failed"].as_u64().unwrap();
    assert_eq!(o.status.code(), Some(if failed == 0 { 0 } else { 4 }));
    let fock_ok = checks.iter().filter(|c| c["table"] == "fock").all(|c| c["pass"] == true);
    let lscs_ok = checks.iter().filter(|c| c["table"] == "lscs").all(|c| c["pass"] == true);
    assert!(fock_ok && lscs_ok);
}

#[test]
fn targets_prints_distribution() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[target]\nkind = \"lscs\"\ng = 2\nh = 0\ngamma_sq = 1.25\nl = 4\n";
    let o = run(dir.path(), &["targets"], Some(cfg));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().any(|l| l.trim_start().starts_with("2 ")));
    let v = json(dir.path(), "target.json");
    let pnd = v["result"]["qudit_pnd"].as_array().unwrap();
    assert_eq!(pnd.len(), 5);
    assert_eq!(pnd[1].as_f64(), Some(0.0));
}

use std::path::Path;
use std::process::{Command, Output};

use dislocore::output::{read_csv, Manifest};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dislocore")).args(args).output().unwrap()
}

fn write_config(dir: &Path, json: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, json).unwrap();
    p.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = r#"{"L": 5.0, "sweep": {"eps": [0.12, 0.1]}, "sinusoidal": null}"#;

#[test]
fn gamma_writes_tagged_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "{}");
    let out = dir.path().join("out");
    let o = run(&["gamma", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(out.join("gamma.csv")).unwrap();
    let (tag, header, rows) = read_csv(&text).unwrap();
    assert_eq!(header, ["t", "gamma", "gamma_A", "gamma_B"]);
    assert_eq!(rows.len(), 201);
    assert_eq!(rows[0][0].parse::<f64>().unwrap(), 0.0);
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), 0.0);
    let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert!(tag.contains(&manifest.config_sha256));
    assert_eq!(manifest.command, "gamma");
    assert_eq!(manifest.outputs, ["gamma.csv"]);
    assert_eq!(manifest.summary["gamma_at_zero"], 0.0);
}

#[test]
fn reruns_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"seed": 11}"#);
    let read = |name: &str| {
        let out = dir.path().join(name);
        let o = run(&["elastic", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read(out.join("elastic.csv")).unwrap()
    };
    assert_eq!(read("a"), read("b"));
}

#[test]
fn sinusoidal_profile_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"sinusoidal": {"k": 1.0, "alpha1": 0.5}}"#);
    let out = dir.path().join("out");
    let o = run(&["pn-solve", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest.summary["sup_error_vs_exact"].as_f64().unwrap() <= 1e-8);
    let (_, header, rows) = read_csv(&std::fs::read_to_string(out.join("profile.csv")).unwrap()).unwrap();
    assert_eq!(header.last().unwrap(), "phi_exact");
    let mid = rows.iter().find(|r| r[0].parse::<f64>().unwrap() == 0.0).unwrap();
    assert_eq!(mid[1].parse::<f64>().unwrap(), 0.5);
}

#[test]
fn output_dir_comes_from_the_config_when_not_given() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from_config");
    let cfg = write_config(dir.path(), &format!(r#"{{"output_dir": {:?}}}"#, target.to_str().unwrap()));
    let o = run(&["elastic", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(target.join("elastic.csv").exists() && target.join("manifest.json").exists());
}

#[test]
fn malformed_json_reports_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "{\n  \"L\": 20.0,\n  \"n_y\": ,\n}");
    let o = run(&["gamma", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.contains("line 3") && e.contains("column"), "{e}");
}

#[test]
fn invalid_configs_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    for bad in [r#"{"frobnicate": 1}"#, r#"{"L": -1.0}"#, r#"{"n_y": 0}"#, r#"{"sweep": {"eps": []}}"#, r#"{"newton_tol": 0.5}"#] {
        let cfg = write_config(dir.path(), bad);
        let o = run(&["elastic", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(1), "{bad}: {}", stderr(&o));
    }
    let unknown = write_config(dir.path(), r#"{"frobnicate": 1}"#);
    let o = run(&["elastic", "--config", &unknown, "--out", dir.path().join("o").to_str().unwrap()]);
    assert!(stderr(&o).contains("frobnicate"));
    let o = run(&["elastic", "--config", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn slope_assertion_sets_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let o = run(&["converge", "--config", &cfg, "--out", out.to_str().unwrap(), "--assert-slope", "10:0.01"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let (_, header, rows) = read_csv(&std::fs::read_to_string(out.join("convergence.csv")).unwrap()).unwrap();
    assert_eq!(header[0], "eps");
    assert_eq!(rows.len(), 2);
    let o = run(&["converge", "--config", &cfg, "--out", out.to_str().unwrap(), "--assert-slope", "0:1000"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(&["converge", "--config", &cfg, "--assert-slope", "two"]);
    assert_ne!(o.status.code(), Some(0));
}

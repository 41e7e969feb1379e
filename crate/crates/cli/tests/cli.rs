use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn jointva(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jointva")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn show_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let first = jointva(&["show-config"]);
    assert!(first.status.success());
    let path = write(dir.path(), "cfg.toml", &stdout(&first));
    let second = jointva(&["--config", &path, "show-config"]);
    assert_eq!(stdout(&first), stdout(&second));
    for key in ["lambda0_1", "nig2_delta", "death_multiplier", "damping", "oracle_step", "baseline"] {
        assert!(stdout(&first).contains(key), "{key}");
    }
}

#[test]
fn missing_mortality_section_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "cfg.toml", "[market]\n[contract]\n[surrender]\n");
    let o = jointva(&["--config", &path, "price"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("[mortality]") && err.contains("lambda0_1") && err.contains("kappa_2"), "{err}");
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "cfg.toml", "[market]\nsigma_two = 0.1\n[mortality]\n[contract]\n[surrender]\n");
    let o = jointva(&["--config", &path, "price"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("sigma_two"));
}

#[test]
fn validate_names_strip_violation() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "cfg.toml", "[market]\nsigma2 = 2.0\n[mortality]\n[contract]\n[surrender]\n");
    let o = jointva(&["--config", &path, "validate", "--paths", "1000"]);
    assert_eq!(o.status.code(), Some(3));
    let out = stdout(&o);
    assert!(out.contains("strip: market model") && out.contains("FAIL") && out.contains("strip violation"), "{out}");
}

#[test]
fn validate_skips_broken_heart_without_jump() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "cfg.toml", "[market]\n[mortality]\neps_1 = 0.0\neps_2 = 0.0\n[contract]\n[surrender]\n");
    let o = jointva(&["--config", &path, "--samples", "20000", "validate", "--paths", "2000"]);
    let out = stdout(&o);
    assert!(out.contains("broken-heart clustering") && out.contains("SKIP"), "{out}");
    assert!(o.status.success(), "{out}\n{}", stderr(&o));
}

#[test]
fn price_writes_csvs_with_seed_in_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = jointva(&["--method", "quad", "--seed", "77", "--out", out.to_str().unwrap(), "price"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("seed 77") && text.contains("alpha 1.5") && text.contains("r 1.5"), "{text}");
    let prices = csv_rows(&out.join("prices.csv"));
    let names: Vec<&str> = prices.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(names, ["GMAB", "SB", "DB", "total"]);
    let v: Vec<f64> = prices.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!((v[0] + v[1] + v[2] - v[3]).abs() < 1e-5);
    assert!(out.join("integrals.csv").exists() && out.join("terms.csv").exists());
    let raw = fs::read(out.join("prices.csv")).unwrap();
    assert!(!raw.contains(&b'\r'));
}

#[test]
fn sensitivity_grid_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("grid");
    let o = jointva(&[
        "--method",
        "quad",
        "--out",
        out.to_str().unwrap(),
        "sensitivity",
        "--axes",
        "eps1,eps2",
        "--resolution",
        "3",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["gmab", "sb", "db", "total"] {
        let path = out.join(format!("{f}.csv"));
        let mut r = csv::Reader::from_path(&path).unwrap();
        assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), ["eps1", "eps2", "value", "std_error"]);
        assert_eq!(csv_rows(&path).len(), 9);
    }
}

#[test]
fn sensitivity_rejects_unknown_axis() {
    let o = jointva(&["sensitivity", "--axes", "beta,gamma"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("gamma"));
}

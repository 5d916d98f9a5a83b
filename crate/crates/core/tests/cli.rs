use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_toda-spectra"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run(sub: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin().arg(sub).arg("--config").arg(config).arg("--out").arg(out).args(extra).output().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn sigma_rows(p: &Path) -> Vec<(f64, f64)> {
    let mut r = csv::Reader::from_path(p).unwrap();
    r.records().map(|rec| {
        let rec = rec.unwrap();
        (rec[1].parse().unwrap(), rec[2].parse().unwrap())
    }).collect()
}

const N3: &str = r#"{ "model": { "n": 3, "hbar": 1.0, "lambda": 1.0, "u_n": { "re": 0.7, "im": 0.2 } } }"#;

#[test]
fn order_one_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "bad.json", r#"{ "model": { "n": 1, "hbar": 1.0, "lambda": 1.0 } }"#);
    let out = run("sigma", &cfg, tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["exit_code"], 2);
}

#[test]
fn unknown_fields_are_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "typo.json", r#"{ "model": { "n": 2, "hbar": 1.0, "lambda": 1.0, "lamda": 2.0 } }"#);
    assert_eq!(run("sigma", &cfg, tmp.path(), &[]).status.code(), Some(2));
}

#[test]
fn sigma_reruns_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "n3.json", N3);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(run("sigma", &cfg, &a, &[]).status.success());
    assert!(run("sigma", &cfg, &b, &["--threads", "2"]).status.success());
    for f in ["sigma.csv", "sigma.csv.json", "sigma.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
    let meta = read_json(&a.join("sigma.json"));
    assert_eq!(meta["command"], "sigma");
    assert_eq!(meta["config"]["model"]["n"], 3);
    assert!(meta["version"].is_string());
}

#[test]
fn doubling_det_rows_leaves_sigma_unchanged() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "n3.json", N3);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let base = read_json(&{
        assert!(run("sigma", &cfg, &a, &[]).status.success());
        a.join("sigma.json")
    });
    let rows = base["config"]["truncation"]["det_rows"].as_u64().unwrap();
    let doubled = (2 * rows).to_string();
    assert!(run("sigma", &cfg, &b, &["--det-rows", &doubled]).status.success());
    let (x, y) = (sigma_rows(&a.join("sigma.csv")), sigma_rows(&b.join("sigma.csv")));
    assert_eq!(x.len(), 3);
    for (p, q) in x.iter().zip(&y) {
        assert!((p.0 - q.0).hypot(p.1 - q.1) < 1e-9, "{p:?} vs {q:?}");
    }
}

#[test]
fn csv_uses_crlf_and_full_precision() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "n3.json", N3);
    assert!(run("sigma", &cfg, tmp.path(), &[]).status.success());
    let text = fs::read_to_string(tmp.path().join("sigma.csv")).unwrap();
    assert!(text.starts_with("j,re_sigma,im_sigma,re_zeta,im_zeta,residual\r\n"));
    assert_eq!(text.matches("\r\n").count(), 4);
    let first = text.lines().nth(1).unwrap();
    assert!(first.split(',').nth(1).unwrap().contains("e"));
}

#[test]
fn verify_passes_and_reports_orbit_size() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "v.json",
        r#"{ "model": { "n": 3, "hbar": 1.0, "lambda": 1.0, "u_n": { "re": 0.7, "im": 0.2 } },
            "verify": { "instances": 20, "orders": [2, 3, 7] } }"#,
    );
    let out = run("verify", &cfg, tmp.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let v = read_json(&tmp.path().join("verify.json"));
    assert_eq!(v["all_pass"], true);
    let orbit7 = v["rows"].as_array().unwrap().iter().find(|r| r["suite"] == "orbit_size" && r["n"] == 7).unwrap();
    assert_eq!(orbit7["metric"], 35.0);
}

#[test]
fn perturbed_zeta_fails_verify() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "v.json",
        r#"{ "model": { "n": 3, "hbar": 1.0, "lambda": 1.0, "u_n": { "re": 0.7, "im": 0.2 } },
            "verify": { "instances": 20, "orders": [3, 4], "zeta_perturbation": 1e-3 } }"#,
    );
    let out = run("verify", &cfg, tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
    assert_eq!(read_json(&tmp.path().join("verify.json"))["all_pass"], false);
}

#[test]
fn odd_oracle_is_informative() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "n3.json", N3);
    let out = run("oracle", &cfg, tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("no oracle"));
    assert_eq!(read_json(&tmp.path().join("oracle.json"))["available"], false);
}

#[test]
fn duplicate_seeds_give_one_root() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "s.json",
        r#"{ "model": { "n": 2, "hbar": 1.0, "lambda": 1.0 },
            "scan": { "re": [-4.0, -2.0], "re_steps": 20 },
            "seeds": [ { "re": -3.06 }, { "re": -3.0592 }, { "re": -3.06 } ] }"#,
    );
    let out = run("solve", &cfg, tmp.path(), &[]);
    assert!(out.status.success());
    let v = read_json(&tmp.path().join("solve.json"));
    let roots = v["roots"].as_array().unwrap();
    assert_eq!(roots.len(), 1, "{roots:?}");
    let u = roots[0]["u_n"]["re"].as_f64().unwrap();
    assert!((u + 3.059174596902).abs() < 1e-9);
    let csv_text = fs::read_to_string(tmp.path().join("roots.csv")).unwrap();
    assert_eq!(csv_text.lines().count(), 2);
}

#[test]
fn qc_scan_writes_table_and_plot_script() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "q.json",
        r#"{ "model": { "n": 2, "hbar": 1.0, "lambda": 1.0 }, "scan": { "re": [-4.0, -2.0], "re_steps": 8 } }"#,
    );
    assert!(run("qc", &cfg, tmp.path(), &[]).status.success());
    let mut r = csv::Reader::from_path(tmp.path().join("qc_scan.csv")).unwrap();
    assert_eq!(r.records().count(), 9);
    let gp = fs::read_to_string(tmp.path().join("qc_scan.gp")).unwrap();
    assert!(gp.starts_with('#'));
}

#[test]
fn missing_config_file_exits_2() {
    let tmp = TempDir::new().unwrap();
    let out = run("sigma", &tmp.path().join("nope.json"), tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
}

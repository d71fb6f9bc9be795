use std::path::Path;
use std::process::{Command, Output};

fn bbfluct(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bbfluct")).args(args).output().expect("spawn bbfluct")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("cfg.json");
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn decompose_reports_zero_residuals() {
    for kind in ["poisson", "binary"] {
        let out = bbfluct(&["decompose", "--b", "0.5", "--kind", kind]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let v = json(&out);
        for key in ["mean", "variance", "entropy"] {
            assert!(v["residuals"][key].as_f64().unwrap().abs() < 1e-10);
        }
        assert!(String::from_utf8_lossy(&out.stderr).contains("decompose: 1 passed, 0 failed"));
    }
}

#[test]
fn out_of_domain_parameter_exits_2() {
    let out = bbfluct(&["decompose", "--b", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn unknown_flag_exits_2() {
    assert_eq!(bbfluct(&["fluctuation", "--bogus", "1"]).status.code(), Some(2));
}

#[test]
fn failed_assertion_exits_1_and_names_it() {
    let out = bbfluct(&["string", "--samples", "20", "--n-bar", "0.01"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("FAILED:"), "{err}");
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"x": 1.0, "not-a-flag": 3}"#);
    assert_eq!(bbfluct(&["--config", &cfg, "fluctuation"]).status.code(), Some(2));
    let cfg = write_config(dir.path(), r#"{"x": 1.0}"#);
    assert_eq!(bbfluct(&["--config", &cfg, "verify-all"]).status.code(), Some(2));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"x": 2.0, "modes": 7, "format": "csv"}"#);
    let from_file = bbfluct(&["--config", &cfg, "fluctuation"]);
    assert_eq!(from_file.status.code(), Some(0));
    let text = String::from_utf8(from_file.stdout).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!((row[0], row[2]), ("2.0", "7.0"));

    let overridden = bbfluct(&["--config", &cfg, "fluctuation", "--x", "0.5", "--format", "json"]);
    let v = json(&overridden);
    let n_bar = v["budget"]["n_bar"].as_f64().unwrap();
    assert!((n_bar - 1.0 / (0.5f64.exp() - 1.0)).abs() < 1e-12);
    assert_eq!(v["budget"]["mode_count"].as_f64(), Some(7.0));
}

#[test]
fn csv_has_header_and_rows() {
    let out = bbfluct(&["combinatorics", "--n-max", "3", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    let header = rdr.headers().unwrap().clone();
    assert_eq!(&header[0], "N");
    let rows: Vec<_> = rdr.records().map(|r| r.unwrap()).collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| &r[header.len() - 1] == "true"));
}

#[test]
fn spectrum_json_on_stdout_summary_on_stderr() {
    let out = bbfluct(&["spectrum", "--points", "20"]);
    assert_eq!(out.status.code(), Some(0));
    json(&out);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("spectrum: "));
}

#[test]
fn verify_all_is_deterministic_and_honours_out() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let out = bbfluct(&["verify-all", "--seed", "7", "--out", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(out.stdout.is_empty());
    }
    let (ba, bb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ba, bb);
    let v: serde_json::Value = serde_json::from_slice(&ba).unwrap();
    assert_eq!(v["failed"].as_u64(), Some(0));
}

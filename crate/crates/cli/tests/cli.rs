use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use sylsep::polyops::Poly;
use sylsep::regions::{separation_certificate, CertificateOptions};
use sylsep::CMatrix;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sylsep"))
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

struct Run {
    code: i32,
    report: Value,
    raw: String,
}

fn run(sub: &str, config: &str, extra: &[&str]) -> Run {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    std::fs::write(&cfg, config).unwrap();
    run_file(sub, &cfg, extra)
}

fn run_file(sub: &str, cfg: &Path, extra: &[&str]) -> Run {
    let out = bin()
        .arg(sub)
        .arg("--config")
        .arg(cfg)
        .args(extra)
        .output()
        .unwrap();
    let raw = String::from_utf8(out.stdout).unwrap();
    let report = serde_json::from_str(&raw).unwrap_or(Value::Null);
    Run {
        code: out.status.code().unwrap(),
        report,
        raw,
    }
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

const SCALAR: &str = r#"{"a": [[[2, 0]]], "b": [[[-1, 0]]], "c": [[[3, 0]]], "method": "oracle"}"#;

#[test]
fn scalar_oracle_report() {
    let r = run("solve", SCALAR, &[]);
    assert_eq!(r.code, 0, "{}", r.raw);
    let x = &r.report["X"][0][0];
    assert!((num(&x[0]) - 1.0).abs() <= 1e-14 && num(&x[1]).abs() <= 1e-14);
    assert!(num(&r.report["residual"]) <= 1e-14);
    assert!(r.report["error"].is_null());
    for field in [
        "method",
        "X",
        "residual",
        "N",
        "bound",
        "certificate",
        "error",
        "timestamp",
    ] {
        assert!(r.report.get(field).is_some(), "missing {field}");
    }
}

#[test]
fn exit_code_matrix() {
    let cases: &[(&str, &str, &[&str], i32, &str)] = &[
        ("missing matrix", r#"{"b": [[[1, 0]]]}"#, &[], 1, "config"),
        (
            "unknown field",
            r#"{"a": [[[1, 0]]], "b": [[[-1, 0]]], "colour": 1}"#,
            &[],
            1,
            "config",
        ),
        ("malformed json", r#"{"a": [[[1, 0]]"#, &[], 1, "config"),
        (
            "shape mismatch",
            r#"{"a": [[[1, 0]]], "b": [[[-1, 0]]], "c": [[[1, 0], [2, 0]]]}"#,
            &[],
            1,
            "dimension",
        ),
        (
            "heinz left half plane",
            r#"{"a": [[[-1, 0]]], "b": [[[-2, 0]]], "c": [[[1, 0]]], "method": "heinz"}"#,
            &[],
            2,
            "applicability",
        ),
        (
            "overlapping spectra",
            r#"{"a": [[[1, 0]]], "b": [[[1, 0]]], "c": [[[1, 0]]]}"#,
            &[],
            2,
            "spectra-overlap",
        ),
        (
            "multicentric without p",
            SCALAR,
            &["--method", "multicentric"],
            2,
            "applicability",
        ),
        (
            "disc series outside disc",
            r#"{"a": [[[3, 0]]], "b": [[[1, 0]]], "c": [[[1, 0]]], "method": "disc-series"}"#,
            &[],
            2,
            "applicability",
        ),
    ];
    for &(name, cfg, extra, code, kind) in cases {
        let r = run("solve", cfg, extra);
        assert_eq!(r.code, code, "{name}: {}", r.raw);
        assert_eq!(r.report["error"]["kind"], kind, "{name}");
    }
    let bad_flag = bin()
        .args(["solve", "--config", "x.json", "--method", "bogus"])
        .output()
        .unwrap();
    assert_eq!(bad_flag.status.code(), Some(1));
    let missing = bin()
        .args(["solve", "--config", "/nonexistent/config.json"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn flags_override_config() {
    let r = run(
        "solve",
        SCALAR,
        &["--method", "sign-newton", "--tol", "1e-12"],
    );
    assert_eq!(r.code, 0, "{}", r.raw);
    assert_eq!(r.report["method"], "sign-newton");
    assert_eq!(num(&r.report["tol"]), 1e-12);
}

#[test]
fn region_unit_disc() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("disc.json");
    std::fs::write(
        &cfg,
        r#"{"a": [[[1, 0]]], "b": [[[-1, 0]]], "poly": {"coeffs": [[0, 0], [0, 0], [1, 0]]}}"#,
    )
    .unwrap();
    let out = dir.path().join("disc.report.json");
    let r = run_file(
        "region",
        &cfg,
        &["--out", out.to_str().unwrap(), "--resolution", "64"],
    );
    assert_eq!(r.code, 0);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let grid = &report["grids"][0];
    assert_eq!(num(&grid["summary"]["level"]), 1.0);
    assert_eq!(grid["contains_spectrum"], true);
    let pgm = std::fs::read_to_string(dir.path().join("disc.report.pgm")).unwrap();
    assert!(pgm.starts_with("P2\n64 64\n255\n"));
    let csv = std::fs::read_to_string(dir.path().join("disc.report.csv")).unwrap();
    let cell = 2.0 * 1.1 / 64.0;
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let (re, im): (f64, f64) = (f[0].parse().unwrap(), f[1].parse().unwrap());
        let r = re.hypot(im);
        let inside = f[3] == "1";
        if r < 1.0 - cell {
            assert!(inside, "{re},{im}");
        }
        if r > 1.0 + cell {
            assert!(!inside, "{re},{im}");
        }
    }
}

fn mask(csv: &str) -> Vec<bool> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').nth(3) == Some("1"))
        .collect()
}

#[test]
fn region_eps_sweep_is_nested() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("ps.json");
    std::fs::write(
        &cfg,
        r#"{"a": [[[0, 0], [1, 0]], [[0, 0], [0, 0]]], "b": [[[3, 0]]],
            "bbox": {"lo": [-1.5, -1.5], "hi": [1.5, 1.5]},
            "region": {"target": "a", "eps_sweep": [0.3, 0.1, 0.03]}}"#,
    )
    .unwrap();
    let out = dir.path().join("ps.json.out");
    let r = run_file(
        "region",
        &cfg,
        &["--out", out.to_str().unwrap(), "--resolution", "48"],
    );
    assert_eq!(r.code, 0);
    let read = |k: usize| {
        mask(&std::fs::read_to_string(dir.path().join(format!("ps.json.eps{k}.csv"))).unwrap())
    };
    let (m0, m1, m2) = (read(0), read(1), read(2));
    for i in 0..m0.len() {
        assert!(!m1[i] || m0[i]);
        assert!(!m2[i] || m1[i]);
    }
}

#[test]
fn region_certificate_matches_library() {
    let cfg = r#"{"a": [[[1, 0]]], "b": [[[-1, 0]]], "c": [[[0.5, 0]]],
                  "poly": {"coeffs": [[-1, 0], [0, 0], [1, 0]]}, "margin": 0.3}"#;
    let r = run("region", cfg, &["--resolution", "128"]);
    assert_eq!(r.code, 0, "{}", r.raw);
    let p = Poly::from_real(&[-1.0, 0.0, 1.0]);
    let opts = CertificateOptions {
        resolution: 128,
        ..Default::default()
    };
    let (a, b, c) = (
        CMatrix::diag_real(&[1.0]),
        CMatrix::diag_real(&[-1.0]),
        CMatrix::diag_real(&[0.5]),
    );
    let cert = separation_certificate(&p, &a, &b, &c, 0.3, &opts).unwrap();
    assert_eq!(
        r.report["certificate"],
        serde_json::to_value(&cert).unwrap()
    );
    assert_eq!(r.report["certificate"]["status"], "separated");
}

#[test]
fn disc_fixture_eta_row() {
    let r = run_file("eta", &fixtures().join("disc-eta.json"), &[]);
    assert_eq!(r.code, 0, "{}", r.raw);
    let rows = r.report["eta"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 8);
    assert!((num(&rows[0]["eta"]) - 0.25).abs() <= 1e-10);
    for row in rows {
        assert!(num(&row["running_min"]) <= 0.25 + 1e-10);
    }
}

#[test]
fn search_equal_spectra_not_separated() {
    let cfg = r#"{"a": [[[1, 0], [0.3, 0]], [[0, 0], [-0.5, 0]]], "b": [[[1, 0], [0.3, 0]], [[0, 0], [-0.5, 0]]],
                  "search": {"degrees": [1, 2]}}"#;
    let r = run("search", cfg, &["--resolution", "64"]);
    assert_eq!(r.code, 0, "{}", r.raw);
    assert_eq!(r.report["separated"], false);
    assert_eq!(r.report["certificate"]["status"], "not-separated");
    assert!(num(&r.report["separation_margin"]) <= 0.0);
}

#[test]
fn search_echoes_user_roots() {
    let cfg = r#"{"a": [[[1, 0]]], "b": [[[-1, 0]]],
                  "search": {"degrees": [2, 2], "user_roots": [[1, 0], [-1, 0]]}}"#;
    let r = run("search", cfg, &["--resolution", "64"]);
    assert_eq!(r.code, 0, "{}", r.raw);
    assert_eq!(
        r.report["user_roots"],
        serde_json::json!([[1.0, 0.0], [-1.0, 0.0]])
    );
    assert_eq!(r.report["strategy"], "user-roots");
    assert!(r.report["best"]["roots"].is_array() && r.report["best"]["coeffs"].is_array());
}

fn generate(family: &str, size: usize, seed: u64) -> (i32, String) {
    let out = bin()
        .args([
            "generate",
            "--family",
            family,
            "--size",
            &size.to_string(),
            "--seed",
            &seed.to_string(),
        ])
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
    )
}

fn stamps_hold(cfg: &Value) -> bool {
    cfg["generated"]["stamps"]
        .as_array()
        .unwrap()
        .iter()
        .all(|s| s["holds"] == true)
}

#[test]
fn generate_contracts() {
    let (code, text) = generate("symmetric-skew", 6, 1);
    assert_eq!(code, 0);
    let cfg: Value = serde_json::from_str(&text).unwrap();
    assert!(stamps_hold(&cfg));
    let entry = |m: &str, i: usize, j: usize| (num(&cfg[m][i][j][0]), num(&cfg[m][i][j][1]));
    for i in 0..6 {
        for j in 0..6 {
            let (a, ai) = entry("a", i, j);
            let (b, bi) = entry("b", i, j);
            assert_eq!((ai, bi), (0.0, 0.0));
            assert_eq!(a, entry("a", j, i).0);
            assert_eq!(b, -entry("b", j, i).0);
        }
    }
    let names: Vec<&str> = cfg["generated"]["stamps"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["property"].as_str().unwrap())
        .collect();
    assert!(
        names.contains(&"A_smallest_singular_value")
            && names.contains(&"B_smallest_singular_value")
    );

    for family in [
        "selfadjoint-pair",
        "shifted-random",
        "jordan-nonnormal",
        "normal-disc",
    ] {
        let (code, text) = generate(family, 5, 3);
        assert_eq!(code, 0);
        let cfg: Value = serde_json::from_str(&text).unwrap();
        assert!(stamps_hold(&cfg), "{family}");
    }
    assert_eq!(
        generate("symmetric-skew", 6, 1).1,
        text,
        "generation is deterministic"
    );
    assert_eq!(
        bin()
            .args(["generate", "--family", "nope"])
            .output()
            .unwrap()
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn shipped_fixtures_match_generator() {
    for (file, family, size, seed) in [
        ("symmetric-skew.json", "symmetric-skew", 6, 1),
        ("selfadjoint-pair.json", "selfadjoint-pair", 4, 5),
        ("disc-eta.json", "normal-disc", 6, 0),
    ] {
        let shipped = std::fs::read_to_string(fixtures().join(file)).unwrap();
        assert_eq!(generate(family, size, seed).1, shipped, "{file}");
    }
}

fn without_timestamp(s: &str) -> String {
    s.lines()
        .filter(|l| !l.trim_start().starts_with("\"timestamp\""))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn reports_are_deterministic() {
    for (sub, file) in [
        ("solve", "symmetric-skew.json"),
        ("solve", "selfadjoint-pair.json"),
        ("eta", "disc-eta.json"),
    ] {
        let first = run_file(sub, &fixtures().join(file), &[]);
        let second = run_file(sub, &fixtures().join(file), &[]);
        assert_eq!(first.code, 0, "{file}: {}", first.raw);
        assert_eq!(
            without_timestamp(&first.raw),
            without_timestamp(&second.raw),
            "{file}"
        );
    }
}

#[test]
fn fixtures_solve_within_tolerance() {
    let r = run_file("solve", &fixtures().join("symmetric-skew.json"), &[]);
    assert_eq!(r.report["route"], "heinz+modified");
    assert!(num(&r.report["residual"]) <= 1e-8);
    let r = run_file("solve", &fixtures().join("selfadjoint-pair.json"), &[]);
    assert_eq!(r.report["method"], "sign-series-m2");
    assert!(num(&r.report["residual"]) <= 1e-7);
}

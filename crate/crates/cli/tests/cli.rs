//! End-to-end checks of the command-line interface against the bundled
//! configs: exit codes, report contents and bit-identical reruns.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_toric-syz"))
}

fn config(name: &str) -> String {
    format!("{}/../../configs/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn outdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("toric-syz-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin()
        .args(["--output-dir", dir.to_str().unwrap()])
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(dir: &Path, name: &str) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join(name)).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn fan_check_exit_codes() {
    let dir = outdir("fan");
    let out = run(&["fan", "check", "--geometry", &config("cp2.json")], &dir);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let rep = report(&dir, "fan_check.json");
    assert_eq!(rep["valid"], serde_json::Value::Bool(true));
    assert_eq!(rep["complete"], serde_json::Value::Bool(true));

    let out = run(
        &["fan", "check", "--geometry", &config("incomplete_fan.json")],
        &dir,
    );
    assert_eq!(out.status.code(), Some(1));
    let rep = report(&dir, "fan_check.json");
    assert_eq!(rep["complete"], serde_json::Value::Bool(false));
}

#[test]
fn missing_file_is_a_config_error() {
    let dir = outdir("missing");
    let out = run(&["fan", "check", "--geometry", "/nonexistent.json"], &dir);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn growth_check_reports_shared_limit() {
    let dir = outdir("growth");
    let out = run(
        &[
            "growth",
            "check",
            "--geometry",
            &config("cp1.json"),
            "--metric",
            &config("metric_a10.json"),
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let rep = report(&dir, "growth_check.json");
    assert_eq!(rep["growth"]["pass"], serde_json::Value::Bool(true));
    let checks = rep["growth"]["checks"].as_array().unwrap();
    let c1 = checks
        .iter()
        .find(|c| c["condition"] == 1 && c["cone"] == 1)
        .unwrap();
    let lhs = c1["limit_lhs"].as_f64().unwrap();
    assert!((lhs - 1.0).abs() < 1e-6, "shared limit {lhs}");
    // report embeds version and input hashes
    assert!(rep["version"].is_string());
    assert!(rep["inputs"].as_object().unwrap().len() == 2);
    assert!(rep["inputs"]
        .as_object()
        .unwrap()
        .values()
        .all(|v| v.as_str().unwrap().starts_with("sha256:")));
}

#[test]
fn growth_check_wrong_divisor_fails() {
    let dir = outdir("growth-bad");
    let out = run(
        &[
            "growth",
            "check",
            "--geometry",
            &config("cp1.json"),
            "--metric",
            &config("metric_a10.json"),
            "--divisor",
            "2,0",
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn slope_command_matches_topology() {
    let dir = outdir("slope");
    let out = run(
        &[
            "slope",
            "--geometry",
            &config("cp2.json"),
            "--metric",
            &config("metric_a111.json"),
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let rep = report(&dir, "slope.json");
    let q = rep["quadrature"].as_f64().unwrap();
    let t = rep["topological"].as_f64().unwrap();
    assert!((q - 6.0).abs() < 1e-3);
    assert!((t - 6.0).abs() < 1e-12);
}

#[test]
fn slope_with_bare_divisor_uses_reference_metric() {
    let dir = outdir("slope-divisor");
    let out = run(
        &[
            "slope",
            "--geometry",
            &config("cp2.json"),
            "--divisor",
            "1,1,1",
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let rep = report(&dir, "slope.json");
    assert!((rep["quadrature"].as_f64().unwrap() - 6.0).abs() < 1e-3);
    assert!((rep["topological"].as_f64().unwrap() - 6.0).abs() < 1e-12);
}

#[test]
fn invert_rejects_quartic_section() {
    let dir = outdir("invert");
    let out = run(
        &[
            "syz",
            "invert",
            "--geometry",
            &config("cp1.json"),
            "--section",
            &config("section_quartic.json"),
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(1));
    let rep = report(&dir, "syz_invert.json");
    assert_eq!(rep["extendable"], serde_json::Value::Bool(false));
}

#[test]
fn roundtrip_recovers_class() {
    let dir = outdir("roundtrip");
    let out = run(
        &[
            "roundtrip",
            "--geometry",
            &config("cp2.json"),
            "--metric",
            &config("metric_a111.json"),
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let rep = report(&dir, "roundtrip.json");
    assert_eq!(rep["class_match"], serde_json::Value::Bool(true));
    assert!(rep["y_max_error"].as_f64().unwrap() < 1e-8);
}

#[test]
fn transform_writes_section_csv() {
    let dir = outdir("transform");
    let out = run(
        &[
            "syz",
            "transform",
            "--geometry",
            &config("cp1.json"),
            "--metric",
            &config("metric_a10.json"),
            "--grid-res",
            "21",
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let xi_csv = std::fs::read_to_string(dir.join("section_xi.csv")).unwrap();
    assert!(xi_csv.starts_with("xi_1,y_1\n"));
    assert_eq!(xi_csv.lines().count(), 22);
    let x_csv = std::fs::read_to_string(dir.join("section_x.csv")).unwrap();
    assert!(x_csv.starts_with("x_1,y_1\n"));
}

#[test]
fn reports_are_bit_identical_across_runs() {
    let dir1 = outdir("det1");
    let dir2 = outdir("det2");
    for dir in [&dir1, &dir2] {
        let out = run(
            &[
                "growth",
                "infer",
                "--geometry",
                &config("cp2.json"),
                "--metric",
                &config("metric_a111.json"),
            ],
            dir,
        );
        assert_eq!(out.status.code(), Some(0));
    }
    let r1 = std::fs::read(dir1.join("growth_infer.json")).unwrap();
    let r2 = std::fs::read(dir2.join("growth_infer.json")).unwrap();
    assert_eq!(r1, r2);
}

#[test]
fn harmonic_solve_small_grid() {
    let dir = outdir("harmonic");
    let out = run(
        &[
            "harmonic",
            "solve",
            "--geometry",
            &config("cp1.json"),
            "--divisor",
            "1,0",
            "--grid-res",
            "65",
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let rep = report(&dir, "harmonic_solve.json");
    let lambda = rep["lambda"].as_f64().unwrap();
    assert!((lambda - 1.0).abs() < 1e-2);
    assert!(dir.join("harmonic_field.csv").exists());
}

#[test]
fn slag_residual_zero_for_flat_phase() {
    let dir = outdir("slag");
    // zero-divisor metric: the zero section has vanishing residual at theta 0
    let metric = dir.join("zero_metric.json");
    std::fs::write(&metric, r#"{"divisor": [0, 0], "correction": {"type": "zero"}}"#).unwrap();
    let out = run(
        &[
            "slag",
            "residual",
            "--geometry",
            &config("cp1.json"),
            "--metric",
            metric.to_str().unwrap(),
            "--theta",
            "0.0",
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let rep = report(&dir, "slag_residual.json");
    assert!(rep["max_norm"].as_f64().unwrap() < 1e-14);
}

#[test]
fn threads_flag_is_validated() {
    let dir = outdir("threads");
    let out = run(
        &[
            "--threads",
            "0",
            "fan",
            "check",
            "--geometry",
            &config("cp1.json"),
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(2));
}

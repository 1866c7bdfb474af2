use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use maxineq::bounds::TheoremId;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_maxineq"))
}

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/standard_corpus.json")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn verify(config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .args(["verify", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn rows(out: &Path) -> Vec<Vec<String>> {
    let mut rdr = csv::Reader::from_path(out.join("report.csv")).unwrap();
    rdr.records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

const WITNESS: &str = r#"{
  "schema_version": 1,
  "instances": [{
    "id": "witness",
    "process": {"family": "random_walk", "step": {"support": [1, -1], "probs": [0.2, 0.8]}, "n_steps": 2},
    "alphas": [2.718281828459045],
    "theorems": ["A"],
    "compare_classical": COMPARE
  }]
}"#;

#[test]
fn single_exact_instance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &WITNESS.replace("COMPARE", "false"));
    let out = verify(&cfg, &dir.path().join("out"), &[]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = rows(&dir.path().join("out"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][1], "A");
    assert_eq!(rows[0][13], "exact");
    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("out/summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["schema_version"], 1);
    assert_eq!(summary["rows"], 1);
}

#[test]
fn witness_with_classical_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &WITNESS.replace("COMPARE", "true"));
    let out = verify(&cfg, &dir.path().join("out"), &[]);
    // the failing a = 1 line is a reference, not a violation
    assert_eq!(out.status.code(), Some(0));
    let rows = rows(&dir.path().join("out"));
    assert_eq!(rows.len(), 2);
    let num = |s: &str| s.parse::<f64>().unwrap();
    let (improved, classical) = (&rows[0], &rows[1]);
    assert_eq!(improved[11], "HOLDS_WITH_MARGIN");
    assert!((num(&improved[5]) - 0.2).abs() < 1e-12);
    assert!((num(&improved[8]) - 0.238675).abs() < 1e-6);
    assert_eq!(classical[1], "A_classical");
    assert_eq!(classical[11], "REF_VIOLATED");
    assert!(num(&classical[8]) < num(&classical[5]));
}

#[test]
fn mismatch_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"schema_version": 1, "instances": [{"id": "wrong_family",
            "process": {"family": "gbm", "mu": -0.5, "sigma": 1.0}, "horizon": 1.0,
            "alphas": [2.0], "theorems": ["T5_branching"]}]}"#,
    );
    let out = verify(&cfg, &dir.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("wrong_family"));
    let missing = verify(&dir.path().join("nope.json"), &dir.path().join("out"), &[]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn population_cap_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"schema_version": 1, "estimation": {"population_cap": 5},
            "instances": [{"id": "explodes",
            "process": {"family": "galton_watson", "offspring": [0.0, 0.0, 1.0], "generations": 6},
            "alphas": [2.0], "theorems": ["A"]}]}"#,
    );
    let out = verify(&cfg, &dir.path().join("out"), &["--paths", "100"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn bound_subcommand() {
    let out = bin()
        .args(["bound", "--theorem", "GBM", "--z", "1", "--alpha", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "0.5");
    let out = bin()
        .args([
            "bound",
            "--theorem",
            "CSBP",
            "--alpha",
            "2",
            "--beta",
            "-0.5",
            "--horizon",
            "1",
            "--restricted",
            "0.3",
        ])
        .output()
        .unwrap();
    let v: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert!((v - 0.5f64.exp() * 0.3 / 2.0).abs() < 1e-15);
    let bad = bin()
        .args(["bound", "--theorem", "GBM", "--z", "1", "--alpha", "0.5"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn decompose_convex_input() {
    let dir = tempfile::tempdir().unwrap();
    let text: String = (0..=40)
        .map(|i| {
            let x = -2.0 + 0.1 * i as f64;
            format!("{x},{}\n", x.exp())
        })
        .collect();
    let input = write(dir.path(), "f.csv", &text);
    let out = bin()
        .args(["decompose", "--input"])
        .arg(&input)
        .arg("--out")
        .arg(dir.path().join("d"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let h = maxineq::achieving::GridFunction::read_csv(
        std::fs::File::open(dir.path().join("d/h.csv")).unwrap(),
    )
    .unwrap();
    assert!(h.ys().iter().all(|v| *v == 0.0));
    assert_eq!(h.len(), 41);
}

#[test]
fn certify_and_converge_emit_json() {
    let out = bin()
        .args(["certify-a", "--instance", "rw_doob_witness", "--config"])
        .arg(corpus())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let cert: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(cert["confidence"]["kind"], "exact");
    assert!((cert["a_hat"].as_f64().unwrap() - 0.702177).abs() < 1e-6);

    let out = bin()
        .args([
            "converge",
            "--instance",
            "gbm_negative_drift",
            "--windows",
            "4",
            "--paths",
            "200",
            "--config",
        ])
        .arg(corpus())
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["applicability"], "APPLICABLE");
    assert_eq!(report["windows"].as_array().unwrap().len(), 4);
}

#[test]
fn simulate_writes_paths() {
    let out = bin()
        .args([
            "simulate",
            "--instance",
            "gw_subcritical",
            "--paths",
            "3",
            "--config",
        ])
        .arg(corpus())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    // header plus 3 paths of 6 generations
    assert_eq!(text.lines().count(), 1 + 3 * 6);
    assert!(text.starts_with("path,step,time,value\n"));
}

#[test]
fn corpus_covers_every_theorem_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let out = verify(&corpus(), &a, &["--paths", "500"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = verify(&corpus(), &b, &["--paths", "500", "--jobs", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let ra = std::fs::read(a.join("report.csv")).unwrap();
    assert_eq!(ra, std::fs::read(b.join("report.csv")).unwrap());
    assert_eq!(
        std::fs::read(a.join("summary.json")).unwrap(),
        std::fs::read(b.join("summary.json")).unwrap()
    );
    let rows = rows(&a);
    assert!(rows.len() >= 60);
    for t in TheoremId::ALL {
        assert!(rows.iter().any(|r| r[1] == t.as_str()), "no row for {t}");
    }
}

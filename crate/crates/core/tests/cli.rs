//! End-to-end runs of the qphelm binary: outputs, exit codes and determinism.

use std::path::{Path, PathBuf};
use std::process::Command;

use qphelm::cli::exit_code;
use qphelm::Error;

const BIN: &str = env!("CARGO_BIN_EXE_qphelm");

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qphelm-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn run(args: &[&str]) -> (i32, String) {
    let out = Command::new(BIN).args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn run_json(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("run.json")).unwrap()).unwrap()
}

#[test]
fn solve_writes_outputs_deterministically() {
    let cfg = example("homogeneous.cfg");
    let (a, b) = (scratch("solve-a"), scratch("solve-b"));
    for dir in [&a, &b] {
        let (code, err) = run(&["solve", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap(), "--omega", "3"]);
        assert_eq!(code, 0, "{err}");
    }
    for f in ["field.csv", "field.svg", "riccati_spectrum.csv", "run.json"] {
        assert!(a.join(f).exists(), "missing {f}");
    }
    assert_eq!(std::fs::read(a.join("field.csv")).unwrap(), std::fs::read(b.join("field.csv")).unwrap());
    assert_eq!(
        std::fs::read(a.join("riccati_spectrum.csv")).unwrap(),
        std::fs::read(b.join("riccati_spectrum.csv")).unwrap()
    );
    let rec = run_json(&a);
    assert_eq!(rec["classification"], "propagative");
    let files: Vec<String> = serde_json::from_value(rec["files"].clone()).unwrap();
    assert!(files.iter().any(|f| f.ends_with("field.csv")));
}

#[test]
fn paper_config_evanescent_solve() {
    let cfg = example("paper_sec6.cfg");
    let dir = scratch("paper");
    let (code, err) = run(&["solve", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap(), "--omega", "4"]);
    assert_eq!(code, 0, "{err}");
    let rec = run_json(&dir);
    assert_eq!(rec["classification"], "evanescent");
    let l = rec["lambda0_right"].as_array().unwrap();
    let r = (l[0].as_f64().unwrap().powi(2) + l[1].as_f64().unwrap().powi(2)).sqrt();
    assert!((r - 0.62345).abs() < 1e-4, "{r}");
}

#[test]
fn classify_reports_both_kinds() {
    let cfg = example("paper_sec6.cfg");
    let dir = scratch("classify");
    let (code, err) =
        run(&["classify", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap(), "--omegas", "4,5.642"]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(dir.join("classify.csv")).unwrap();
    assert!(text.contains("evanescent") && text.contains("propagative"), "{text}");
}

#[test]
fn bands_and_sweep_and_dispersion_run() {
    let dir = scratch("bands");
    let (code, err) = run(&["bands", "--alpha", "0", "--out", dir.to_str().unwrap(), "--steps", "8"]);
    assert_eq!(code, 0, "{err}");
    assert!(dir.join("bands.csv").exists() && dir.join("bands.svg").exists());

    let cfg = example("homogeneous.cfg");
    let dir = scratch("disp");
    let (code, err) = run(&[
        "dispersion",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
        "--omega-min",
        "1",
        "--omega-max",
        "2",
        "--steps",
        "3",
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(dir.join("dispersion.csv").exists());

    let dir = scratch("sweep");
    let (code, err) = run(&[
        "sweep-eps",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
        "--omega",
        "3",
        "--eps-list",
        "0.2,0.1,0.05",
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(dir.join("sweep.csv").exists());
}

#[test]
fn validation_failures_exit_with_2() {
    let dir = scratch("bad");
    let (code, _) = run(&["solve", "--config", "/nonexistent/cfg.toml", "--out", dir.to_str().unwrap(), "--omega", "3"]);
    assert_eq!(code, 2);

    let cfg = example("homogeneous.cfg");
    let (code, _) = run(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
        "--omega",
        "3",
        "--k-modes",
        "12",
    ]);
    assert_eq!(code, 2);

    let bad = dir.with_extension("cfg");
    let text = std::fs::read_to_string(&cfg).unwrap().replace("[solver]", "[solver]\nunknown_key = 1");
    std::fs::write(&bad, text).unwrap();
    let (code, err) = run(&["solve", "--config", bad.to_str().unwrap(), "--out", dir.to_str().unwrap(), "--omega", "3"]);
    assert_eq!(code, 2, "{err}");
    let (code, _) = run(&[
        "sweep-eps",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
        "--omega",
        "3",
        "--eps-list",
        "0.1,0.2,0.05",
    ]);
    assert_eq!(code, 2);
}

#[test]
fn exit_code_mapping() {
    assert_eq!(exit_code(&Error::Validation(String::new())), 2);
    assert_eq!(exit_code(&Error::Config(String::new())), 2);
    assert_eq!(exit_code(&Error::ZeroFlux(String::new())), 3);
    assert_eq!(exit_code(&Error::Extraction(String::new())), 3);
    assert_eq!(exit_code(&Error::Solver(String::new())), 4);
    assert_eq!(exit_code(&Error::SingularImpedance(String::new())), 4);
}

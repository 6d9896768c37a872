//! End-to-end checks of the command-line interface.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_robustreg"))
}

#[test]
fn simulate_fit_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let status = bin()
        .args(["simulate", "--n", "200", "--p", "9", "--errors", "cauchy:0.1", "--seed", "11"])
        .arg("--out")
        .arg(&data)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(data.exists());
    assert!(data.with_extension("json").exists());

    let trace = dir.path().join("trace.csv");
    let output = bin()
        .args(["fit", "--loss", "huber", "--penalty", "l1", "--lambda-mult", "0.3", "--R", "1.65"])
        .arg("--data")
        .arg(&data)
        .arg("--trace-out")
        .arg(&trace)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(summary["p"], 9);
    assert!(summary["stationarity_residual"].as_f64().unwrap() < 1e-4);
    // Truth has k = 3 coordinates at 1/sqrt(3); the fit keeps them.
    let beta: Vec<f64> = summary["beta"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    for item in beta.iter().take(3) {
        assert!(item.abs() > 0.2, "signal coordinate lost: {beta:?}");
    }
    let trace_text = std::fs::read_to_string(&trace).unwrap();
    assert!(trace_text.starts_with("iter,objective,step_size"));
    assert!(trace_text.lines().count() > 1);
}

#[test]
fn fit_with_file_init_and_fixed_eta() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    assert!(bin()
        .args(["simulate", "--n", "100", "--p", "4", "--errors", "none", "--seed", "3"])
        .arg("--out")
        .arg(&data)
        .status()
        .unwrap()
        .success());
    let init = dir.path().join("init.txt");
    std::fs::write(&init, "0.1\n0.1\n0.0\n0.0\n").unwrap();
    let output = bin()
        .args([
            "fit",
            "--loss",
            "squared",
            "--penalty",
            "scad",
            "--shape",
            "3.7",
            "--lambda",
            "0.01",
            "--R",
            "5.0",
            "--eta",
            "40.0",
            "--tol",
            "1e-10",
        ])
        .arg("--data")
        .arg(&data)
        .arg("--init")
        .arg(format!("file:{}", init.display()))
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    // Noiseless data with a small penalty: near-exact recovery of
    // (1/sqrt(2), 1/sqrt(2), 0, 0).
    let beta: Vec<f64> = summary["beta"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert!((beta[0] - 0.5f64.sqrt()).abs() < 1e-3, "{beta:?}");
    assert!(beta[2].abs() < 1e-6);
}

#[test]
fn experiment_run_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        r#"{
            "name": "cli-smoke",
            "p_values": [9],
            "sample_grid": { "ratios": [6.0] },
            "covariates": { "law": "gaussian_identity" },
            "errors": { "law": "cauchy", "scale": 0.1 },
            "arms": [
                {
                    "name": "huber-l1",
                    "loss": { "kind": "huber" },
                    "reg": { "kind": "l1", "lambda": { "multiplier": 0.3 } }
                }
            ],
            "trials": 2,
            "master_seed": 99
        }"#,
    )
    .unwrap();
    let out = dir.path().join("results");
    let status = bin()
        .arg("experiment")
        .arg("run")
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .args(["--workers", "2"])
        .status()
        .unwrap();
    assert!(status.success());
    for file in ["trials.csv", "aggregates.csv", "manifest.json"] {
        assert!(out.join(file).exists(), "{file} missing");
    }
    let trials = std::fs::read_to_string(out.join("trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 3, "header plus two trials");
}

#[test]
fn rejects_bad_arguments() {
    let output = bin()
        .args(["simulate", "--n", "10", "--p", "4", "--errors", "weird:1", "--out", "/tmp/x.csv"])
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("bad error law"));
}

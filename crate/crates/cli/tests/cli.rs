use std::process::{Command, Output};

fn wcs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wcs"))
        .args(args)
        .env_remove("WCS_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn simulate_happy_path() {
    let o = wcs(&[
        "simulate",
        "--model",
        "soft",
        "--k",
        "6",
        "--d",
        "6",
        "--backend",
        "ideal",
        "--snr-db",
        "40",
        "--demands",
        "random",
        "--trials",
        "100",
        "--seed",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["interior_success"], 1.0);
    assert_eq!(report["trials"], 100);
    assert!(stderr(&o).contains("effective_config"));
}

#[test]
fn odd_k_full_model_is_rejected() {
    let o = wcs(&["simulate", "--model", "full", "--k", "7", "--alpha", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("OddKForFullModel"));
}

#[test]
fn unknown_flag_is_a_validation_error() {
    let o = wcs(&["simulate", "--nonsense"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn tradeoff_export_has_corner_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("curve.csv");
    let o = wcs(&[
        "tradeoff",
        "--model",
        "full",
        "--points",
        "200",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert!(rows
        .iter()
        .any(|r| r[0] == 0.0 && (r[1] - 2.0 / 3.0).abs() < 1e-15));
    assert!(rows.iter().any(|r| r[0] == 1.0 && r[1] == 2.0));
}

#[test]
fn edge_receivers_fail_the_all_success_assertion() {
    let o = wcs(&[
        "simulate",
        "--k",
        "7",
        "--demands",
        "distinct",
        "--trials",
        "3",
        "--assert",
        "all-success",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = wcs(&[
        "simulate",
        "--k",
        "7",
        "--demands",
        "distinct",
        "--trials",
        "3",
        "--assert",
        "interior-success",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = wcs(&[
        "simulate",
        "--k",
        "7",
        "--demands",
        "worst",
        "--trials",
        "3",
        "--round-robin",
        "--assert",
        "all-success",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn explicit_demands_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.csv");
    let o = wcs(&[
        "simulate",
        "--demands",
        "explicit:3,1,4,1,5,2",
        "--trials",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(std::fs::read_to_string(&out)
        .unwrap()
        .starts_with("rx,success_rate"));
    assert!(out.with_extension("json").exists());
    let o = wcs(&["simulate", "--demands", "explicit:3,1,9,1,5,2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("BadDemand"));
}

#[test]
fn small_library_needs_flag() {
    let o = wcs(&["simulate", "--d", "2", "--trials", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("LibraryTooSmall"));
    let o = wcs(&[
        "simulate",
        "--d",
        "2",
        "--demands",
        "exhaustive",
        "--allow-small-library",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn sweep_writes_csv_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let plot = dir.path().join("sweep.py");
    let o = wcs(&[
        "sweep",
        "--model",
        "full",
        "--alpha",
        "0.7",
        "--trials",
        "1",
        "--demands",
        "distinct",
        "--out",
        out.to_str().unwrap(),
        "--plot-script",
        plot.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 5);
    assert!(std::fs::read_to_string(&plot).unwrap().contains("\"mg\""));
}

#[test]
fn verify_schedule_command() {
    let o = wcs(&["verify-schedule", "--k", "8", "--demands", "random"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("\"ok\": true"));
    let o = wcs(&["verify-schedule", "--model", "full", "--k", "5"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn mc_backend_and_worker_override() {
    let o = Command::new(env!("CARGO_BIN_EXE_wcs"))
        .args([
            "simulate",
            "--backend",
            "mc",
            "--snr-db",
            "3",
            "--trials",
            "10",
            "--bits",
            "4",
        ])
        .env("WCS_WORKERS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = Command::new(env!("CARGO_BIN_EXE_wcs"))
        .args(["simulate", "--trials", "1"])
        .env("WCS_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

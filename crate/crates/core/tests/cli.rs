use std::fs;
use std::process::Command;

use oppsched::cli::{config_from_header, data_section, MeasureEstArgs, RegretArgs};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_oppsched"))
}

#[test]
fn relative_out_path_lands_in_env_dir() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["region", "--q", "0.3", "--grid", "10", "--out", "runs/region.csv"])
        .env("OPPSCHED_OUT_DIR", dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(dir.path().join("runs/region.csv")).unwrap();
    assert!(text.starts_with("# oppsched "));
    assert_eq!(data_section(&text).len(), 1 + 22);
}

#[test]
fn invalid_input_fails_before_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["gap", "--reps", "0", "--out", "g.csv"])
        .env("OPPSCHED_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("reps"));
    assert!(!dir.path().join("g.csv").exists());
}

#[test]
fn thread_count_does_not_change_results() {
    let run = |threads: &str| {
        let out = bin()
            .args(["regret", "--p", "0.4", "--m", "30", "--mode", "monte-carlo", "--samples", "5000", "--seed", "3", "--threads", threads])
            .output()
            .unwrap();
        assert!(out.status.success());
        String::from_utf8(out.stdout).unwrap()
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn config_file_drives_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("est.toml");
    fs::write(&cfg, "estimator = \"constant:0.5\"\nk = 12\nhorizons = [5, 50]\nalpha = 2.0\nseed = 9\n").unwrap();
    let out = bin().args(["measure-est", "--config", cfg.to_str().unwrap(), "--k", "4"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let echoed: MeasureEstArgs = config_from_header(&text).unwrap();
    assert_eq!(echoed.k, Some(4));
    assert_eq!(echoed.horizons, Some(vec![5, 50]));
    assert_eq!(data_section(&text).len(), 1 + 8);
    assert!(text.contains("# fraction_m50:"));
}

#[test]
fn regret_csv_matches_closed_form() {
    let out = bin().args(["regret", "--p", "0.3", "--m", "25"]).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    let cfg: RegretArgs = config_from_header(&text).unwrap();
    assert_eq!(cfg.mode.as_deref(), Some("exact"));
    let mut h = 0.0;
    for (i, line) in data_section(&text).iter().skip(1).enumerate() {
        h += 1.0 / (i + 1) as f64;
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!((cells[2] - 0.21 * h).abs() < 1e-12);
        assert!((cells[4] - 0.21).abs() < 1e-12);
    }
}

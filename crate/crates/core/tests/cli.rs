use contact_slam::cli::{self, RunConfig, EXIT_INPUT_ERROR, EXIT_OK};
use std::path::Path;
use std::process::Command;

fn config(scenario: &str, seed: u64, out: &Path) -> RunConfig {
    RunConfig {
        scenario: scenario.into(),
        seed,
        out: out.to_path_buf(),
        ..RunConfig::default()
    }
}

#[test]
fn explore_writes_report_and_steps() {
    let dir = tempfile::tempdir().unwrap();
    let code = cli::cmd_explore(&config("socket_two_pin", 2, dir.path()));
    assert_eq!(code, EXIT_OK);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("socket_two_pin_seed2_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["success"], true);
    let mut rdr = csv::Reader::from_path(dir.path().join("socket_two_pin_seed2_steps.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(&headers[0], "step");
    assert_eq!(&headers[1], "particle_std_mm");
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(&rows[0][0], "0");
    assert_eq!(rows.len(), report["iterations"].as_u64().unwrap() as usize + 1);
}

#[test]
fn push_clear_workspace_needs_no_exploration() {
    let r = cli::push(&config("push_block_clear", 1, Path::new("unused"))).unwrap();
    assert!(r.success);
    assert_eq!(r.exploration_steps, 0);
    assert!(r.steps.is_empty());
}

#[test]
fn push_already_in_target_is_immediate() {
    let r = cli::push(&config("push_block_in_target", 1, Path::new("unused"))).unwrap();
    assert!(r.success);
    assert!(r.legs.is_empty());
}

#[test]
fn wrong_scenario_kind_is_an_input_error() {
    let err = cli::explore(&config("push_block", 1, Path::new("unused"))).unwrap_err();
    assert_eq!(err.exit_code(), EXIT_INPUT_ERROR);
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        cli::cmd_push(&config("socket_two_pin", 1, dir.path())),
        EXIT_INPUT_ERROR
    );
    assert_eq!(
        cli::cmd_explore(&config("missing_world", 1, dir.path())),
        EXIT_INPUT_ERROR
    );
}

#[test]
fn invalid_parameters_are_rejected() {
    let bad = RunConfig {
        gamma: 0.0,
        ..RunConfig::default()
    };
    assert!(bad.policy().is_err());
    let bad = RunConfig {
        noise_scale: -1.0,
        ..RunConfig::default()
    };
    assert!(bad.policy().is_err());
    let bad = RunConfig {
        particles: 0,
        ..RunConfig::default()
    };
    assert!(bad.policy().is_err());
}

#[test]
fn scenario_file_path_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("custom.json");
    let text = contact_slam::simulator::BUNDLED
        .iter()
        .find(|(n, _)| *n == "socket_two_pin")
        .unwrap()
        .1;
    std::fs::write(&path, text).unwrap();
    let r = cli::explore(&config(path.to_str().unwrap(), 1, dir.path())).unwrap();
    assert!(r.success);
}

#[test]
fn malformed_scenario_file_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{ \"name\": ").unwrap();
    let err = cli::explore(&config(path.to_str().unwrap(), 1, dir.path())).unwrap_err();
    assert_eq!(err.exit_code(), EXIT_INPUT_ERROR);
    assert!(err.to_string().contains("line"), "{err}");
}

#[test]
fn benchmark_rows_follow_matrix_order() {
    let base = RunConfig::default();
    let scenarios = vec!["socket_two_pin".to_string(), "push_block_clear".to_string()];
    let (rows, summaries) = cli::benchmark(&base, &scenarios, &[3, 1, 2]).unwrap();
    let order: Vec<(String, u64)> = rows.iter().map(|r| (r.scenario.clone(), r.seed)).collect();
    let expected: Vec<(String, u64)> = scenarios
        .iter()
        .flat_map(|s| [3, 1, 2].map(|k| (s.clone(), k)))
        .collect();
    assert_eq!(order, expected);
    assert_eq!(summaries.len(), 2);
    assert_eq!(summaries[0].kind, "socket");
    assert_eq!(summaries[1].kind, "push");
    assert!(cli::benchmark(&base, &[], &[1]).is_err());
}

#[test]
fn synthetic_calibration_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let samples = dir.path().join("samples.csv");
    let out = dir.path().join("arms.json");
    assert_eq!(
        cli::cmd_synth_calibration("socket_two_pin", 40, 7, 1.0, &samples),
        EXIT_OK
    );
    assert_eq!(cli::cmd_calibrate(&samples, &out), EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(v["residuals"]["max_mm"].as_f64().unwrap() < 0.5, "{v}");
    assert_eq!(
        cli::cmd_calibrate(&dir.path().join("absent.csv"), &out),
        EXIT_INPUT_ERROR
    );
}

#[test]
fn binary_reports_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_contact-slam");
    let dir = tempfile::tempdir().unwrap();
    let ok = Command::new(exe)
        .args(["explore", "--scenario", "socket_three_pin", "--seed", "4", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(
        ok.status.code(),
        Some(EXIT_OK),
        "{}",
        String::from_utf8_lossy(&ok.stderr)
    );
    assert!(String::from_utf8_lossy(&ok.stdout).contains("success=true"));
    let bad = Command::new(exe)
        .args(["explore", "--scenario", "nowhere", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_INPUT_ERROR));
    let usage = Command::new(exe).args(["explore", "--gamma", "x"]).output().unwrap();
    assert_eq!(usage.status.code(), Some(EXIT_INPUT_ERROR));
}

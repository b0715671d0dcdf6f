//! End-to-end checks of the command-line surface: flag validation, exit
//! codes, output files and manifest round-trips.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn d3sync(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_d3sync"))
        .args(args)
        .current_dir(dir)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .expect("binary runs")
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

#[test]
fn rejects_more_nodes_than_slots() {
    let dir = tempfile::tempdir().unwrap();
    let out = d3sync(
        &[
            "simulate", "--nodes", "6", "--slots", "5", "--alpha", "0.2", "--seed", "1",
        ],
        dir.path(),
    );
    assert_eq!(exit_code(&out), 1, "{out:?}");
}

#[test]
fn rejects_alpha_outside_open_interval() {
    let dir = tempfile::tempdir().unwrap();
    for alpha in ["0", "1", "1.5"] {
        let out = d3sync(
            &[
                "simulate", "--nodes", "4", "--slots", "12", "--alpha", alpha, "--seed", "1",
            ],
            dir.path(),
        );
        assert_eq!(exit_code(&out), 1, "alpha {alpha}: {out:?}");
    }
}

#[test]
fn rejects_unknown_flags_with_usage() {
    let dir = tempfile::tempdir().unwrap();
    let out = d3sync(&["simulate", "--bogus"], dir.path());
    assert_eq!(exit_code(&out), 1);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("Usage"), "no usage text: {stderr}");
}

#[test]
fn analyze_rejects_two_node_chains() {
    let dir = tempfile::tempdir().unwrap();
    let out = d3sync(
        &["analyze", "--nodes-range", "2..5", "--alpha-list", "0.2"],
        dir.path(),
    );
    assert_eq!(exit_code(&out), 1, "{out:?}");
}

#[test]
fn analyze_bound_needs_slots() {
    let dir = tempfile::tempdir().unwrap();
    let out = d3sync(
        &[
            "analyze",
            "--nodes-range",
            "3..5",
            "--alpha-list",
            "0.2",
            "--bound",
        ],
        dir.path(),
    );
    assert_eq!(exit_code(&out), 1, "{out:?}");
}

#[test]
fn capped_trials_exit_two_but_still_write_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = d3sync(
        &[
            "simulate",
            "--nodes",
            "10",
            "--slots",
            "60",
            "--alpha",
            "0.2",
            "--seed",
            "3",
            "--trials",
            "3",
            "--max-interactions",
            "1",
            "--out",
            "run",
        ],
        dir.path(),
    );
    assert_eq!(exit_code(&out), 2, "{out:?}");
    assert!(dir.path().join("run/summary.json").exists());
    assert!(dir.path().join("run/manifest.json").exists());
}

#[test]
fn simulate_writes_requested_formats() {
    let dir = tempfile::tempdir().unwrap();
    let out = d3sync(
        &[
            "simulate",
            "--nodes",
            "6",
            "--slots",
            "60",
            "--alpha",
            "0.2",
            "--seed",
            "5",
            "--trials",
            "4",
            "--trajectory",
            "--format",
            "csv",
            "--out",
            "run",
        ],
        dir.path(),
    );
    assert_eq!(exit_code(&out), 0, "{out:?}");
    for name in [
        "summary.csv",
        "trials.csv",
        "trajectories.csv",
        "manifest.json",
    ] {
        assert!(dir.path().join("run").join(name).exists(), "{name} missing");
    }
    let trials = fs::read_to_string(dir.path().join("run/trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 5, "header plus four trials");
    let header = trials.lines().next().unwrap();
    assert!(header.starts_with("stream,initial_edge,absorbed,interactions"));
    assert!(header.ends_with("final_g6"));
}

#[test]
fn hundred_random_trials_all_absorb() {
    let dir = tempfile::tempdir().unwrap();
    let out = d3sync(
        &[
            "simulate", "--nodes", "6", "--slots", "60", "--alpha", "0.2", "--seed", "1",
            "--trials", "100", "--init", "random", "--out", "run",
        ],
        dir.path(),
    );
    assert_eq!(exit_code(&out), 0, "{out:?}");
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run/summary.json")).unwrap())
            .unwrap();
    assert_eq!(doc["summary"]["total_trials"], serde_json::json!(100));
    assert_eq!(doc["summary"]["absorbed_trials"], serde_json::json!(100));
    assert_eq!(doc["summary"]["capped_trials"], serde_json::json!(0));
}

#[test]
fn simulate_accepts_explicit_state_files() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("state.json"),
        "{\"gaps\": [4, 3, 2, 3], \"edge\": 1}",
    )
    .unwrap();
    let out = d3sync(
        &[
            "simulate",
            "--nodes",
            "4",
            "--slots",
            "12",
            "--alpha",
            "0.5",
            "--seed",
            "9",
            "--trials",
            "2",
            "--init",
            "file:state.json",
            "--out",
            "run",
        ],
        dir.path(),
    );
    assert_eq!(exit_code(&out), 0, "{out:?}");
    let summary = fs::read_to_string(dir.path().join("run/summary.json")).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&summary).unwrap();
    assert_eq!(
        doc["trials"][0]["initial_gaps"],
        serde_json::json!([4, 3, 2, 3])
    );
    assert_eq!(doc["trials"][0]["initial_edge"], serde_json::json!(1));
}

#[test]
fn worst_case_init_needs_divisible_frame() {
    let dir = tempfile::tempdir().unwrap();
    let out = d3sync(
        &[
            "simulate",
            "--nodes",
            "6",
            "--slots",
            "57",
            "--alpha",
            "0.2",
            "--seed",
            "2",
            "--init",
            "worst-case",
        ],
        dir.path(),
    );
    assert_eq!(exit_code(&out), 1, "{out:?}");
}

#[test]
fn missing_seed_is_generated_and_printed() {
    let dir = tempfile::tempdir().unwrap();
    let out = d3sync(
        &[
            "simulate", "--nodes", "4", "--slots", "12", "--alpha", "0.3", "--trials", "2",
            "--out", "run",
        ],
        dir.path(),
    );
    assert_eq!(exit_code(&out), 0, "{out:?}");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("seed: "), "seed not printed: {stdout}");
}

#[test]
fn analyze_solve_agrees_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = d3sync(
        &[
            "analyze",
            "--nodes-range",
            "3..8",
            "--alpha-list",
            "0.1,0.5,0.9",
            "--solve",
            "--bound",
            "--slots",
            "40",
            "--out",
            "run",
        ],
        dir.path(),
    );
    assert_eq!(exit_code(&out), 0, "{out:?}");
    let table = fs::read_to_string(dir.path().join("run/analysis.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 6 * 3);
    // the n = 4, alpha = 0.5 row carries the exact closed-form value
    let row = table
        .lines()
        .find(|l| l.starts_with("4,0.5,"))
        .expect("row present");
    assert!(row.contains(",10.75,"), "row: {row}");
}

#[test]
fn analyze_writes_json_when_asked() {
    let dir = tempfile::tempdir().unwrap();
    let out = d3sync(
        &[
            "analyze",
            "--nodes-range",
            "3..4",
            "--alpha-list",
            "0.5",
            "--solve",
            "--format",
            "json",
            "--out",
            "run",
        ],
        dir.path(),
    );
    assert_eq!(exit_code(&out), 0, "{out:?}");
    let rows: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run/analysis.json")).unwrap())
            .unwrap();
    assert_eq!(rows[1]["n"], serde_json::json!(4));
    assert_eq!(rows[1]["tbar_closed_form"], serde_json::json!(10.75));
    assert_eq!(rows[1]["solve_mean"], serde_json::json!(10.75));
}

#[test]
fn fig5_presets_write_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = d3sync(
        &[
            "reproduce",
            "fig5a",
            "--seed",
            "3",
            "--trials",
            "2",
            "--out",
            "a",
        ],
        dir.path(),
    );
    assert_eq!(exit_code(&out), 0, "{out:?}");
    let table = fs::read_to_string(dir.path().join("a/fig5a.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 41, "one row per frame length");
    assert!(table.starts_with("L,alpha,trials,absorbed,mc_mean,mc_stderr,theory_bound"));

    let out = d3sync(
        &[
            "reproduce",
            "fig5b",
            "--seed",
            "3",
            "--trials",
            "1",
            "--out",
            "b",
        ],
        dir.path(),
    );
    assert_eq!(exit_code(&out), 0, "{out:?}");
    let table = fs::read_to_string(dir.path().join("b/fig5b.csv")).unwrap();
    assert_eq!(
        table.lines().count(),
        1 + 10,
        "five node counts, two alphas"
    );
    assert!(table.starts_with("N,alpha,mc_mean,mc_stderr,theory_eq41"));
}

#[test]
fn manifest_round_trip_reproduces_data_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = d3sync(
        &[
            "simulate",
            "--nodes",
            "6",
            "--slots",
            "57",
            "--alpha",
            "0.2",
            "--seed",
            "11",
            "--trials",
            "6",
            "--trajectory",
            "--out",
            "first",
        ],
        dir.path(),
    );
    assert_eq!(exit_code(&out), 0, "{out:?}");

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("first/manifest.json")).unwrap())
            .unwrap();
    let mut command: Vec<String> = manifest["command"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    let out_flag = command.iter().position(|a| a == "--out").unwrap();
    command[out_flag + 1] = "second".into();
    let args: Vec<&str> = command.iter().map(String::as_str).collect();
    let rerun = d3sync(&args, dir.path());
    assert_eq!(exit_code(&rerun), 0, "{rerun:?}");

    for name in ["summary.json", "trajectories.csv"] {
        let a = fs::read(dir.path().join("first").join(name)).unwrap();
        let b = fs::read(dir.path().join("second").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs after manifest replay");
    }
}

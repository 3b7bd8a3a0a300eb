//! End-to-end tests of the `genbound` binary: exit-code contract,
//! deterministic byte-identical outputs, format switches, and the
//! configuration-triggered checks of each command.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn genbound(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_genbound"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

#[test]
fn example1_small_run_passes_and_writes_the_table() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    let output = genbound(&[
        "example1", "--samples", "20000", "--out", out, "--format", "csv",
    ]);
    assert_eq!(code(&output), 0, "stderr: {}", stderr(&output));
    let table = fs::read_to_string(dir.path().join("example1_table.csv")).unwrap();
    assert!(table.starts_with("epsilon,information_bound,chaining_constant"));
    assert_eq!(table.lines().count(), 8, "header plus seven rows");
    assert!(table.contains("inf"), "divergent information bound column");
    let summary = fs::read_to_string(dir.path().join("example1_summary.json")).unwrap();
    assert!(summary.contains("\"passed\": true"));
}

#[test]
fn example1_unreachable_tolerance_exits_two() {
    let dir = TempDir::new().unwrap();
    let output = genbound(&[
        "example1",
        "--samples",
        "20000",
        "--tol",
        "1e-12",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&output), 2);
    // The summary still records which comparisons missed.
    let summary = fs::read_to_string(dir.path().join("example1_summary.json")).unwrap();
    assert!(summary.contains("\"passed\": false"));
}

#[test]
fn example1_endpoints_saturate() {
    let dir = TempDir::new().unwrap();
    // ε = 0: no information, zero bound and zero mean. ε = 1: the chained
    // bound saturates at the chaining constant.
    let output = genbound(&[
        "example1",
        "--epsilons",
        "0,1",
        "--samples",
        "20000",
        "--out",
        dir.path().to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(code(&output), 0, "stderr: {}", stderr(&output));
    let table: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("example1_table.json")).unwrap())
            .unwrap();
    let rows = table["rows"].as_array().unwrap();
    assert_eq!(rows[0]["chained_bound"], serde_json::json!(0.0));
    assert_eq!(rows[0]["information_bound"], serde_json::json!(0.0));
    assert_eq!(rows[0]["analytic_selected_mean"], serde_json::json!(0.0));
    let saturated = rows[1]["chained_bound"].as_f64().unwrap();
    let constant = rows[1]["chaining_constant"].as_f64().unwrap();
    assert!((saturated - constant).abs() <= 1e-9);
    assert!(rows[1]["mc_selected_mean"].as_f64().unwrap() > 1.2);
}

#[test]
fn malformed_config_exits_one_with_line_info() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("bad.json");
    write(&config, "{\n  \"ops\": [\n    {\"op\": \"maximal\"}\n  ]\n}\n");
    let output = genbound(&["bounds", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&output), 1);
    let err = stderr(&output);
    assert!(err.contains("line 3") || err.contains("line 4"), "stderr: {err}");

    let missing = genbound(&["bounds", "--config", "/no/such/file.json"]);
    assert_eq!(code(&missing), 1);
    assert!(stderr(&missing).contains("file.json"));
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    assert_eq!(code(&genbound(&["no-such-command"])), 1);
    assert_eq!(code(&genbound(&["bounds"])), 1, "missing required --config");
    assert_eq!(code(&genbound(&["example1", "--epsilons", "2.5"])), 1);
    assert_eq!(code(&genbound(&["--help"])), 0);
    assert_eq!(code(&genbound(&["--version"])), 0);
}

fn simulate_config() -> &'static str {
    r#"{
        "model": {"kind": "circle"},
        "rule": {"kind": "noisy-circle-argmax", "epsilon": 0.05},
        "statistic": {"kind": "selected-mean"},
        "samples": 5000,
        "seed": 11,
        "checks": ["selected-reference"]
    }"#
}

#[test]
fn simulate_outputs_are_byte_identical_across_reruns() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("sim.json");
    write(&config, simulate_config());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let output = genbound(&[
            "simulate",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&output), 0, "stderr: {}", stderr(&output));
    }
    for name in ["samples.csv", "simulate_summary.json"] {
        let a = fs::read(out_a.join(name)).unwrap();
        let b = fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    let csv = fs::read_to_string(out_a.join("samples.csv")).unwrap();
    assert!(csv.starts_with("sample,value\n"));
    assert_eq!(csv.lines().count(), 5001);
}

#[test]
fn simulate_flags_override_config_values() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("sim.json");
    write(&config, simulate_config());
    let base = dir.path().join("base");
    let reseeded = dir.path().join("reseeded");
    let resized = dir.path().join("resized");
    assert_eq!(
        code(&genbound(&[
            "simulate", "--config", config.to_str().unwrap(), "--out", base.to_str().unwrap(),
        ])),
        0
    );
    assert_eq!(
        code(&genbound(&[
            "simulate", "--config", config.to_str().unwrap(),
            "--out", reseeded.to_str().unwrap(), "--seed", "12",
        ])),
        0
    );
    assert_eq!(
        code(&genbound(&[
            "simulate", "--config", config.to_str().unwrap(),
            "--out", resized.to_str().unwrap(), "--samples", "6000",
        ])),
        0
    );
    let base_csv = fs::read_to_string(base.join("samples.csv")).unwrap();
    let reseeded_csv = fs::read_to_string(reseeded.join("samples.csv")).unwrap();
    let resized_csv = fs::read_to_string(resized.join("samples.csv")).unwrap();
    assert_ne!(base_csv, reseeded_csv, "--seed must change the stream");
    assert_eq!(resized_csv.lines().count(), 6001, "--samples must change the count");
    // Sample streams are prefix-stable: a longer run extends, never
    // reshuffles, the shorter one with the same seed.
    let base_lines: Vec<&str> = base_csv.lines().collect();
    let resized_lines: Vec<&str> = resized_csv.lines().collect();
    assert_eq!(&resized_lines[..base_lines.len()], &base_lines[..]);
}

#[test]
fn simulate_json_format_and_remaining_checks() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("sim.json");
    write(
        &config,
        r#"{
            "model": {"kind": "circle"},
            "rule": {"kind": "noisy-circle-argmax", "epsilon": 0.0},
            "statistic": {"kind": "selected-mean"},
            "samples": 5000,
            "checks": ["zero-mean"]
        }"#,
    );
    let out = dir.path().join("out");
    let output = genbound(&[
        "simulate", "--config", config.to_str().unwrap(),
        "--out", out.to_str().unwrap(), "--format", "json",
    ]);
    assert_eq!(code(&output), 0, "stderr: {}", stderr(&output));
    assert!(out.join("samples.json").exists());
    assert!(!out.join("samples.csv").exists());

    // Two-block cap check on a finite model.
    write(
        &config,
        r#"{
            "model": {"kind": "basis", "n": 256},
            "rule": {"kind": "two-block", "n": 256, "m": 8, "delta": 0.01},
            "statistic": {"kind": "selected-mean"},
            "samples": 5000,
            "checks": ["two-block-cap"]
        }"#,
    );
    let output = genbound(&[
        "simulate", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&output), 0, "stderr: {}", stderr(&output));

    // Quantized tail check on the circle.
    write(
        &config,
        r#"{
            "model": {"kind": "circle"},
            "rule": {"kind": "noisy-circle-argmax", "epsilon": 0.05},
            "statistic": {"kind": "quantized-tail-freq", "level": 6, "u": 1.0},
            "samples": 5000,
            "checks": ["quantized-tail"]
        }"#,
    );
    let output = genbound(&[
        "simulate", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&output), 0, "stderr: {}", stderr(&output));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("simulate_summary.json")).unwrap())
            .unwrap();
    assert!(summary["quantized"]["tail_probability"].as_f64().unwrap() <= 1.0);

    // Incompatible and unknown checks fail before sampling.
    write(
        &config,
        r#"{
            "model": {"kind": "circle"},
            "rule": {"kind": "noisy-circle-argmax", "epsilon": 0.05},
            "statistic": {"kind": "selected-mean"},
            "samples": 5000,
            "checks": ["sup-reference"]
        }"#,
    );
    let output = genbound(&[
        "simulate", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&output), 1);
    assert!(stderr(&output).contains("sup-reference"));
}

#[test]
fn bounds_command_runs_ops_and_checks() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("bounds.json");
    write(
        &config,
        r#"{
            "samples": 5000,
            "ops": [
                {"op": "chained", "series": {"source": "inline", "k_start": 0,
                 "values": [0.0, 0.0], "tail": {"mode": "zero-after-last"}}},
                {"op": "small-subset", "alpha": 1.0,
                 "series1": {"source": "inline", "k_start": 0, "values": [1.0, 0.5],
                  "tail": {"mode": "zero-after-last"}},
                 "series2": {"source": "inline", "k_start": 0, "values": [2.0, 0.25],
                  "tail": {"mode": "zero-after-last"}}},
                {"op": "dudley", "series": {"source": "circle-covering", "points": 32,
                 "k_max": 10}}
            ]
        }"#,
    );
    let out = dir.path().join("out");
    let output = genbound(&[
        "bounds", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&output), 0, "stderr: {}", stderr(&output));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("bounds_summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["passed"], serde_json::json!(true));
    let ops = summary["ops"].as_array().unwrap();
    // A series of zero information yields a bound of exactly zero.
    assert_eq!(ops[0]["bound_value"], serde_json::json!(0.0));
    let checks = summary["checks"].as_array().unwrap();
    let names: Vec<&str> = checks.iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert!(names.iter().any(|n| n.starts_with("small-subset-alpha-one")));
    assert!(names.iter().any(|n| n.starts_with("dudley-dominates-sup")));
    assert!(out.join("bound_0_chained.json").exists());
    assert!(out.join("bound_1_small-subset.json").exists());
    assert!(out.join("bound_2_dudley.json").exists());

    // CSV summary on request.
    let output = genbound(&[
        "bounds", "--config", config.to_str().unwrap(),
        "--out", out.to_str().unwrap(), "--format", "csv",
    ]);
    assert_eq!(code(&output), 0);
    let table = fs::read_to_string(out.join("bounds_summary.csv")).unwrap();
    assert!(table.starts_with("index,op,bound_value\n"));
    assert_eq!(table.lines().count(), 4);
}

#[test]
fn bounds_kmax_flag_overrides_generated_series_depth() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("bounds.json");
    write(
        &config,
        r#"{"ops": [{"op": "chained",
            "series": {"source": "circle-mi", "epsilon": 0.05, "k_max": 5}}]}"#,
    );
    let out = dir.path().join("out");
    let output = genbound(&[
        "bounds", "--config", config.to_str().unwrap(),
        "--out", out.to_str().unwrap(), "--kmax", "40",
    ]);
    assert_eq!(code(&output), 0, "stderr: {}", stderr(&output));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("bound_0_chained.json")).unwrap())
            .unwrap();
    // Levels −1..=40 survive the override, not −1..=5.
    assert_eq!(report["per_level_terms"].as_array().unwrap().len(), 42);
    assert_eq!(report["truncation_k"], serde_json::json!(40));
}

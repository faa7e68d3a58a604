//! End-to-end tests against the built binary: the documented examples, the
//! exit-code contract, batch mode, and the golden regression flow.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_idelic"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON report")
}

fn triangle_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/triangle.json")
}

#[test]
fn classgroup_example_matches_the_oracle() {
    let report = stdout_json(&run(&[
        "classgroup",
        "--scheme",
        "p1",
        "--q",
        "3",
        "--divisor",
        "[0]+[inf]",
        "--n",
        "2",
    ]));
    assert_eq!(report["schema"], 1);
    assert_eq!(report["result"]["factors"], serde_json::json!([2, 2]));
    assert_eq!(report["certificates"]["stable"], serde_json::json!(true));

    let oracle = stdout_json(&run(&[
        "oracle", "--q", "3", "--divisor", "[0]+[inf]", "--n", "2",
    ]));
    assert_eq!(oracle["result"]["factors"], serde_json::json!([2, 2]));
}

#[test]
fn verify_weil_passes_and_is_deterministic() {
    let args = ["verify", "weil", "--q", "5", "--trials", "40", "--seed", "7"];
    let first = stdout_json(&run(&args));
    assert_eq!(first["result"]["all_passed"], serde_json::json!(true));
    let mut second = stdout_json(&run(&args));
    let mut first = first;
    first.as_object_mut().unwrap().remove("timing_ms");
    second.as_object_mut().unwrap().remove("timing_ms");
    assert_eq!(first.to_string(), second.to_string());
}

#[test]
fn kato_homology_example_gives_the_circle_class() {
    let config = triangle_config();
    let report = stdout_json(&run(&[
        "kato-homology",
        "--config",
        config.to_str().unwrap(),
        "--n",
        "4",
        "--degrees",
        "1",
    ]));
    assert_eq!(
        report["result"]["homology"],
        serde_json::json!([{"degree": 1, "factors": [4]}])
    );
}

#[test]
fn markdown_output_renders_headers() {
    let out = run(&[
        "kgroup", "--field", "F_4", "--n", "3", "--output", "md",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("# kgroup"), "got: {text}");
    assert!(text.contains("anchors"));
}

#[test]
fn exit_codes_follow_the_contract() {
    // truncation bound too small to certify
    let out = run(&[
        "classgroup",
        "--scheme",
        "p1",
        "--q",
        "3",
        "--divisor",
        "[0]+[inf]",
        "--n",
        "2",
        "--degree-bound",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("NOT_STABILIZED"));

    // modulus sharing the characteristic is unsupported input
    let out = run(&[
        "classgroup", "--scheme", "p1", "--q", "3", "--divisor", "[0]", "--n", "3",
    ]);
    assert_eq!(out.status.code(), Some(3));

    // malformed command line
    let out = run(&["verify", "weil", "--q", "5", "--trials", "3"]);
    assert_eq!(out.status.code(), Some(3));

    // missing golden directory
    let out = run(&["report", "--golden", "/nonexistent/golden"]);
    assert_eq!(out.status.code(), Some(3));

    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn batch_mode_runs_every_job_in_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let jobs = dir.path().join("jobs.json");
    std::fs::write(
        &jobs,
        r#"[
            {"command": "kgroup", "field": "F_3", "r": 2, "n": 2},
            {"command": "verify", "suite": "snf", "trials": 10, "seed": 3}
        ]"#,
    )
    .unwrap();
    let out = run(&["--jobs", jobs.to_str().unwrap()]);
    assert!(out.status.success());
    let lines: Vec<_> = out.stdout.split(|&b| b == b'\n').filter(|l| !l.is_empty()).collect();
    assert_eq!(lines.len(), 2);
    let second: serde_json::Value = serde_json::from_slice(lines[1]).unwrap();
    assert_eq!(second["result"]["all_passed"], serde_json::json!(true));

    // a subcommand alongside --jobs is ambiguous
    let out = run(&["--jobs", jobs.to_str().unwrap(), "kgroup", "--field", "F_2", "--n", "3"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn golden_flow_rebuilds_replays_and_detects_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let golden = dir.path().join("golden");
    let jobs = dir.path().join("jobs.json");
    std::fs::write(
        &jobs,
        r#"[
            {"command": "classgroup", "scheme": {"kind": "p1", "q": 3},
             "divisor": "[0]+[inf]", "n": 2, "degree_bound": 4},
            {"command": "oracle", "q": 3, "divisor": "[0]+[inf]", "n": 2}
        ]"#,
    )
    .unwrap();

    let out = run(&[
        "report",
        "--golden",
        golden.to_str().unwrap(),
        "--update",
        jobs.to_str().unwrap(),
    ]);
    assert!(out.status.success());

    let replay = stdout_json(&run(&["report", "--golden", golden.to_str().unwrap()]));
    assert_eq!(replay["result"]["total"], serde_json::json!(2));
    assert_eq!(replay["result"]["passed"], serde_json::json!(2));

    // flip a stored invariant factor
    let entry = golden.join("001-oracle.json");
    let text = std::fs::read_to_string(&entry).unwrap();
    std::fs::write(&entry, text.replace("[2,2]", "[4]")).unwrap();
    let out = run(&["report", "--golden", golden.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("GOLDEN_MISMATCH"));
}

#[test]
fn out_dir_writes_report_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "kgroup",
        "--field",
        "F_2((t))",
        "--n",
        "1",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let written = dir.path().join("000-kgroup.json");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(written).unwrap()).unwrap();
    assert_eq!(report["command"], serde_json::json!("kgroup"));
}

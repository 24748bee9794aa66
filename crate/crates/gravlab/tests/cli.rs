//! Process-level tests of the `gravlab` binary: exit codes, determinism,
//! artifact layout, and the worker-count environment override.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gravlab::bench::{trajectory_filename, BenchmarkReport, ReportErrorKind};

/// The compiled binary, with the worker-override variable scrubbed so an
/// ambient value can never steer a test that doesn't set it on purpose.
fn gravlab() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gravlab"));
    cmd.env_remove("GRAVLAB_WORKERS");
    cmd
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn gravlab");
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn run_code(cmd: &mut Command, expected: i32) -> Output {
    let out = cmd.output().expect("spawn gravlab");
    assert_eq!(
        out.status.code(),
        Some(expected),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Generate and simulate a small single-ball corpus in `dir`, returning the
/// manifest path and trajectory directory.
fn small_corpus(dir: &Path) -> (PathBuf, PathBuf) {
    let manifest = dir.join("scenes.json");
    let traj = dir.join("traj");
    run_ok(gravlab().args([
        "gen-scenes",
        "--count",
        "6",
        "--protocol",
        "single",
        "--seed",
        "5",
        "--out",
        manifest.to_str().unwrap(),
    ]));
    run_ok(gravlab().args([
        "simulate",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out-dir",
        traj.to_str().unwrap(),
        "--seeds",
        "42,123",
    ]));
    (manifest, traj)
}

fn eval_args(manifest: &Path, traj: &Path, out: &Path) -> Vec<String> {
    [
        "eval",
        "--manifest",
        manifest.to_str().unwrap(),
        "--traj-dir",
        traj.to_str().unwrap(),
        "--protocol",
        "single",
        "--split",
        "2",
        "4",
        "--seeds",
        "42,123",
        "--scaling",
        "raw,mean",
        "--out",
        out.to_str().unwrap(),
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

fn first_scene_id(manifest: &Path) -> String {
    let value: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(manifest).unwrap()).unwrap();
    value["scenes"][0]["scene_id"].as_str().unwrap().to_string()
}

#[test]
fn gen_scenes_is_deterministic_and_validates_count() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let args = |out: &Path| {
        vec![
            "gen-scenes".to_string(),
            "--count".into(),
            "5".into(),
            "--protocol".into(),
            "two-ball".into(),
            "--seed".into(),
            "9".into(),
            "--out".into(),
            out.to_str().unwrap().into(),
        ]
    };
    run_ok(gravlab().args(args(&a)));
    run_ok(gravlab().args(args(&b)));
    assert_eq!(
        fs::read(&a).unwrap(),
        fs::read(&b).unwrap(),
        "same seed, different bytes"
    );

    run_code(
        gravlab().args([
            "gen-scenes",
            "--count",
            "0",
            "--protocol",
            "single",
            "--out",
            dir.path().join("c.json").to_str().unwrap(),
        ]),
        2,
    );
}

#[test]
fn pipeline_round_trip_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, traj) = small_corpus(dir.path());

    let report_a = dir.path().join("report-a.json");
    let report_b = dir.path().join("report-b.json");
    run_ok(gravlab().args(eval_args(&manifest, &traj, &report_a)));
    // Simulation is idempotent (overwrites in place) and a second evaluation
    // reproduces the same report body.
    run_ok(gravlab().args([
        "simulate",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out-dir",
        traj.to_str().unwrap(),
        "--seeds",
        "42,123",
    ]));
    run_ok(gravlab().args(eval_args(&manifest, &traj, &report_b)));

    let parsed = BenchmarkReport::parse(&fs::read_to_string(&report_a).unwrap())
        .expect("written report parses and verifies");
    assert_eq!(parsed.protocol, "single-ball");

    let diff = run_ok(gravlab().args([
        "report-diff",
        report_a.to_str().unwrap(),
        report_b.to_str().unwrap(),
    ]));
    assert!(String::from_utf8_lossy(&diff.stdout).contains("reports match"));
}

#[test]
fn report_diff_flags_numeric_drift() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, traj) = small_corpus(dir.path());
    let report = dir.path().join("report.json");
    run_ok(gravlab().args(eval_args(&manifest, &traj, &report)));

    let tampered = dir.path().join("tampered.json");
    let text = fs::read_to_string(&report).unwrap();
    assert!(text.contains("\"schema_version\": 1"));
    fs::write(
        &tampered,
        text.replace("\"schema_version\": 1", "\"schema_version\": 999"),
    )
    .unwrap();
    let out = run_code(
        gravlab().args([
            "report-diff",
            report.to_str().unwrap(),
            tampered.to_str().unwrap(),
        ]),
        1,
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("schema_version"));
}

#[test]
fn bad_degradation_file_fails_before_any_output() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("scenes.json");
    run_ok(gravlab().args([
        "gen-scenes",
        "--count",
        "2",
        "--protocol",
        "single",
        "--out",
        manifest.to_str().unwrap(),
    ]));
    let bad = dir.path().join("bad-rules.json");
    fs::write(
        &bad,
        serde_json::json!({
            "schema_version": 1,
            "rules": [{ "kind": "gravity_storm", "scenes": "*" }]
        })
        .to_string(),
    )
    .unwrap();
    let out_dir = dir.path().join("never-created");
    run_code(
        gravlab().args([
            "simulate",
            "--manifest",
            manifest.to_str().unwrap(),
            "--degradations",
            bad.to_str().unwrap(),
            "--out-dir",
            out_dir.to_str().unwrap(),
        ]),
        2,
    );
    assert!(
        !out_dir.exists(),
        "a rejected degradation file must leave no partial output"
    );
}

#[test]
fn missing_trajectories_fail_unless_allowed() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, traj) = small_corpus(dir.path());
    let victim = traj.join(trajectory_filename(&first_scene_id(&manifest), 123));
    fs::remove_file(&victim).expect("delete one trajectory");

    let report = dir.path().join("report.json");
    run_code(gravlab().args(eval_args(&manifest, &traj, &report)), 1);
    assert!(
        !report.exists(),
        "a failed run must not leave a report behind"
    );

    let mut allowed = eval_args(&manifest, &traj, &report);
    allowed.push("--allow-missing".into());
    run_ok(gravlab().args(&allowed));
    let parsed = BenchmarkReport::parse(&fs::read_to_string(&report).unwrap()).unwrap();
    assert!(parsed
        .error_records
        .iter()
        .any(|r| r.kind == ReportErrorKind::MissingTrajectory && r.seed == Some(123)));
}

#[test]
fn workers_env_var_overrides_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, traj) = small_corpus(dir.path());
    let report = dir.path().join("report.json");

    let mut args = eval_args(&manifest, &traj, &report);
    args.extend(["--workers".into(), "1".into()]);
    run_ok(gravlab().args(&args).env("GRAVLAB_WORKERS", "3"));
    let parsed = BenchmarkReport::parse(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(parsed.provenance.workers, 3, "env var must beat the flag");

    run_code(gravlab().args(&args).env("GRAVLAB_WORKERS", "0"), 2);
    run_code(gravlab().args(&args).env("GRAVLAB_WORKERS", "lots"), 2);
}

#[test]
fn eval_rejects_unknown_scaling_and_oversized_split() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, traj) = small_corpus(dir.path());
    let report = dir.path().join("report.json");

    let mut unknown = eval_args(&manifest, &traj, &report);
    let idx = unknown.iter().position(|a| a == "raw,mean").unwrap();
    unknown[idx] = "raw,quantum".into();
    run_code(gravlab().args(&unknown), 2);

    let mut oversized = eval_args(&manifest, &traj, &report);
    let idx = oversized.iter().position(|a| a == "2").unwrap();
    oversized[idx] = "90".into();
    run_code(gravlab().args(&oversized), 2);
}

#[test]
fn eval_writes_plot_data_next_to_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, traj) = small_corpus(dir.path());
    let report = dir.path().join("report.json");
    let plot = dir.path().join("scatter.csv");

    let mut args = eval_args(&manifest, &traj, &report);
    args.extend(["--plot-data".into(), plot.to_str().unwrap().into()]);
    run_ok(gravlab().args(&args));

    let csv = fs::read_to_string(&plot).unwrap();
    assert!(csv.starts_with("variant,scene_id,seed,h_m,t_s\n"));
    assert!(csv.lines().count() > 1, "plot CSV has no data rows");
    let chart = fs::read_to_string(dir.path().join("scatter.svg")).unwrap();
    assert!(chart.contains("<svg"), "companion chart is not an SVG");
}

#[test]
fn strobe_writes_svg_and_rejects_unknown_scene() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("pairs.json");
    let traj = dir.path().join("traj");
    run_ok(gravlab().args([
        "gen-scenes",
        "--count",
        "2",
        "--protocol",
        "two-ball",
        "--seed",
        "3",
        "--out",
        manifest.to_str().unwrap(),
    ]));
    run_ok(gravlab().args([
        "simulate",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out-dir",
        traj.to_str().unwrap(),
        "--seeds",
        "42",
    ]));

    let scene_id = first_scene_id(&manifest);
    let traj_file = traj.join(trajectory_filename(&scene_id, 42));
    let svg_path = dir.path().join("strobe.svg");
    run_ok(gravlab().args([
        "strobe",
        "--manifest",
        manifest.to_str().unwrap(),
        "--scene",
        &scene_id,
        "--traj",
        traj_file.to_str().unwrap(),
        "--out",
        svg_path.to_str().unwrap(),
        "--reference",
        "own-impact",
        "--expected-marker",
    ]));
    let svg = fs::read_to_string(&svg_path).unwrap();
    assert!(svg.contains("<svg"));
    assert!(
        svg.contains("stroke-dasharray"),
        "expected-marker line missing from the SVG"
    );

    run_code(
        gravlab().args([
            "strobe",
            "--manifest",
            manifest.to_str().unwrap(),
            "--scene",
            "no-such-scene",
            "--traj",
            traj_file.to_str().unwrap(),
            "--out",
            svg_path.to_str().unwrap(),
        ]),
        2,
    );
}

//! Command-line front end: manifest generation, simulation, evaluation,
//! strobe figures, and report comparison behind one binary.
//!
//! Exit-code contract: 0 on success, 1 on runtime or I/O failure, 2 on
//! usage or validation failure (clap's own errors already use 2).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::bench::{
    report_diff, write_report, BenchError, BenchmarkReport, ReportErrorKind, RunConfig,
    RunnerRegistry, DEFAULT_SEEDS, DEFAULT_SPLIT, DEFAULT_SPLIT_SEED,
};
use crate::detect::DetectionConfig;
use crate::metrics::{GravityEstimate, DEFAULT_OUTLIER_THRESHOLD_MPS2};
use crate::scene::{
    manifest_sha256, read_manifest, sample_incline_scenes, sample_single_ball_scenes,
    sample_two_ball_scenes, write_manifest, Manifest, Protocol, SceneError, SceneParams,
};
use crate::sim::{
    read_degradation_file, read_trajectories, simulate_scene, write_trajectories,
    DegradationRegistry, DegradationSet, PixelTrajectory, SimError, TrajectoryFile,
};
use crate::strobe::{compose_strobe, StrobeError, StrobeReference};

pub const WORKERS_ENV_VAR: &str = "GRAVLAB_WORKERS";

#[derive(Debug, Parser)]
#[command(
    name = "gravlab",
    version,
    about = "Synthesize, degrade, and physically audit falling-ball pixel trajectories"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a deterministic scene manifest.
    GenScenes(GenScenesArgs),
    /// Simulate trajectory files for every scene and seed of a manifest.
    Simulate(SimulateArgs),
    /// Run a benchmark protocol over simulated trajectories.
    Eval(EvalArgs),
    /// Render a strobe composite for one scene realization.
    Strobe(StrobeArgs),
    /// Compare two benchmark reports field by field.
    ReportDiff(ReportDiffArgs),
}

#[derive(Debug, Args)]
pub struct GenScenesArgs {
    /// Number of scenes to sample.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub count: u32,
    /// Scene family: single-ball (alias: single), two-ball (alias: two), or incline.
    #[arg(long, value_parser = parse_protocol_name)]
    pub protocol: Protocol,
    /// Master seed; the same seed reproduces the same manifest byte for byte.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Manifest output path.
    #[arg(long)]
    pub out: PathBuf,
    /// Frame rate for every sampled scene.
    #[arg(long)]
    pub fps: Option<f64>,
    /// Clip length in seconds for every sampled scene.
    #[arg(long)]
    pub duration_s: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Optional degradation file; validated in full before anything is written.
    #[arg(long)]
    pub degradations: Option<PathBuf>,
    /// Directory receiving one trajectory file per scene and seed.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Realization seeds to simulate.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = DEFAULT_SEEDS)]
    pub seeds: Vec<u64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub traj_dir: PathBuf,
    /// Protocol to evaluate: single-ball, two-ball, or incline.
    #[arg(long)]
    pub protocol: String,
    /// Report output path.
    #[arg(long, default_value = "report.json")]
    pub out: PathBuf,
    /// Scaling strategies to apply (single-ball runs).
    #[arg(long, value_delimiter = ',', num_args = 1..,
          default_values_t = ["raw".to_string(), "mean".to_string(), "per-sample".to_string(), "height-adjusted".to_string()])]
    pub scaling: Vec<String>,
    /// Calibration and evaluation scene counts.
    #[arg(long, num_args = 2, value_names = ["CALIBRATION", "EVALUATION"],
          default_values_t = [DEFAULT_SPLIT.0, DEFAULT_SPLIT.1])]
    pub split: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_SPLIT_SEED)]
    pub split_seed: u64,
    /// Realization seeds expected on disk.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = DEFAULT_SEEDS)]
    pub seeds: Vec<u64>,
    /// Worker threads (the GRAVLAB_WORKERS env var overrides this flag).
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, default_value_t = DEFAULT_OUTLIER_THRESHOLD_MPS2)]
    pub outlier_threshold: f64,
    /// Record absent trajectory files as error rows instead of failing the run.
    #[arg(long)]
    pub allow_missing: bool,
    /// Detect impacts at whole-frame resolution (no subframe refinement).
    #[arg(long)]
    pub frame_mode: bool,
    /// Average each calibration scene over its seeds before the global fit.
    #[arg(long)]
    pub seed_average_calibration: bool,
    /// Fit the two-ball ratio line without an intercept term.
    #[arg(long)]
    pub ratio_through_origin: bool,
    /// Write height/fall-time scatter data (CSV) plus a companion SVG chart.
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StrobeArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Scene id within the manifest.
    #[arg(long)]
    pub scene: String,
    /// Trajectory file for one realization of that scene.
    #[arg(long)]
    pub traj: PathBuf,
    /// SVG output path.
    #[arg(long)]
    pub out: PathBuf,
    /// Seconds between strobes; defaults to the tallest drop's fall time / 8.
    #[arg(long)]
    pub interval_s: Option<f64>,
    /// Tick clock: earth-time or own-impact.
    #[arg(long, default_value = "earth-time", value_parser = parse_reference_name)]
    pub reference: StrobeReference,
    /// Draw the dashed expected-position marker (two-ball scenes).
    #[arg(long)]
    pub expected_marker: bool,
}

#[derive(Debug, Args)]
pub struct ReportDiffArgs {
    pub report_a: PathBuf,
    pub report_b: PathBuf,
    /// Relative tolerance for numeric fields.
    #[arg(long, default_value_t = 1e-9)]
    pub tolerance: f64,
}

/// Everything the strobe renderer needs beyond the scene and its tracks.
#[derive(Debug, Clone)]
pub struct StrobeSpec {
    /// Seconds between strobes; `None` selects the per-scene default.
    pub interval_s: Option<f64>,
    pub reference: StrobeReference,
    pub show_expected_marker: bool,
    pub output_path: PathBuf,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
    #[error("reports differ in {count} field(s)")]
    ReportsDiffer { count: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) | CliError::ReportsDiffer { .. } => 1,
        }
    }
}

fn scene_exit_code(err: &SceneError) -> i32 {
    match err {
        SceneError::Io { .. } => 1,
        _ => 2,
    }
}

fn sim_exit_code(err: &SimError) -> i32 {
    match err {
        SimError::UnknownDegradation { .. } | SimError::DegradationFile { .. } => 2,
        SimError::Scene(inner) => scene_exit_code(inner),
        _ => 1,
    }
}

fn bench_exit_code(err: &BenchError) -> i32 {
    match err {
        BenchError::InvalidSplit { .. }
        | BenchError::InvalidSeeds
        | BenchError::InvalidWorkers
        | BenchError::InvalidOutlierThreshold(_)
        | BenchError::UnknownScaling { .. }
        | BenchError::UnknownProtocol { .. }
        | BenchError::ProtocolMismatch { .. } => 2,
        BenchError::Scene(inner) => scene_exit_code(inner),
        BenchError::Sim(inner) => sim_exit_code(inner),
        _ => 1,
    }
}

fn strobe_exit_code(err: &StrobeError) -> i32 {
    match err {
        StrobeError::NonPositiveInterval(_) | StrobeError::WrongTrajectoryCount { .. } => 2,
        StrobeError::Scene(inner) => scene_exit_code(inner),
        StrobeError::Sim(inner) => sim_exit_code(inner),
        _ => 1,
    }
}

fn classify(message: String, code: i32) -> CliError {
    if code == 2 {
        CliError::Usage(message)
    } else {
        CliError::Runtime(message)
    }
}

impl From<SceneError> for CliError {
    fn from(err: SceneError) -> Self {
        classify(err.to_string(), scene_exit_code(&err))
    }
}

impl From<SimError> for CliError {
    fn from(err: SimError) -> Self {
        classify(err.to_string(), sim_exit_code(&err))
    }
}

impl From<BenchError> for CliError {
    fn from(err: BenchError) -> Self {
        classify(err.to_string(), bench_exit_code(&err))
    }
}

impl From<StrobeError> for CliError {
    fn from(err: StrobeError) -> Self {
        classify(err.to_string(), strobe_exit_code(&err))
    }
}

fn parse_protocol_name(s: &str) -> Result<Protocol, String> {
    match s {
        "single" | "single-ball" => Ok(Protocol::SingleBall),
        "two" | "two-ball" => Ok(Protocol::TwoBall),
        "incline" => Ok(Protocol::Incline),
        other => Err(format!(
            "unknown protocol {other:?} (expected single-ball, two-ball, or incline)"
        )),
    }
}

fn parse_reference_name(s: &str) -> Result<StrobeReference, String> {
    match s {
        "earth-time" => Ok(StrobeReference::EarthTime),
        "own-impact" => Ok(StrobeReference::OwnImpact),
        other => Err(format!(
            "unknown strobe reference {other:?} (expected earth-time or own-impact)"
        )),
    }
}

/// Worker-count resolution: the env var beats the flag, the flag beats the
/// default.
fn resolve_workers(flag: usize) -> Result<usize, CliError> {
    match std::env::var(WORKERS_ENV_VAR) {
        Ok(raw) => {
            let n: usize = raw.trim().parse().map_err(|_| {
                CliError::Usage(format!(
                    "{WORKERS_ENV_VAR} must be a positive integer, got {raw:?}"
                ))
            })?;
            if n == 0 {
                return Err(CliError::Usage(format!(
                    "{WORKERS_ENV_VAR} must be at least 1"
                )));
            }
            Ok(n)
        }
        Err(std::env::VarError::NotPresent) => Ok(flag),
        Err(err) => Err(CliError::Usage(format!("{WORKERS_ENV_VAR}: {err}"))),
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| {
                CliError::Runtime(format!("cannot create {}: {e}", parent.display()))
            })?;
        }
    }
    fs::write(path, text)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

/// Execute one parsed invocation. Messages go to stdout; the caller turns
/// the error (if any) into an exit code.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::GenScenes(args) => cmd_gen_scenes(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Strobe(args) => cmd_strobe(args),
        Command::ReportDiff(args) => cmd_report_diff(args),
    }
}

fn cmd_gen_scenes(args: GenScenesArgs) -> Result<(), CliError> {
    let mut params = SceneParams::default();
    if let Some(fps) = args.fps {
        if !(fps.is_finite() && fps > 0.0) {
            return Err(CliError::Usage(format!(
                "--fps must be positive, got {fps}"
            )));
        }
        params.fps = fps;
    }
    if let Some(duration) = args.duration_s {
        if !(duration.is_finite() && duration > 0.0) {
            return Err(CliError::Usage(format!(
                "--duration-s must be positive, got {duration}"
            )));
        }
        params.duration_s = duration;
    }
    let count = args.count as usize;
    let scenes = match args.protocol {
        Protocol::SingleBall => sample_single_ball_scenes(count, args.seed, &params),
        Protocol::TwoBall => sample_two_ball_scenes(count, args.seed, &params),
        Protocol::Incline => sample_incline_scenes(count, args.seed, &params),
    };
    let manifest = Manifest::new(scenes);
    write_manifest(&args.out, &manifest)?;
    println!(
        "wrote {} {} scene(s) to {}",
        manifest.scenes.len(),
        args.protocol.name(),
        args.out.display()
    );
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let manifest = read_manifest(&args.manifest)?;
    let registry = DegradationRegistry::builtin();
    // Parse and validate the degradation file before any output exists, so
    // a bad file never leaves a half-written directory behind.
    let rules = match &args.degradations {
        Some(path) => read_degradation_file(&registry, path)?,
        None => DegradationSet::default(),
    };
    fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", args.out_dir.display())))?;
    let hash = manifest_sha256(&manifest);

    let mut written = 0usize;
    let mut diagnostics = Vec::new();
    for scene in &manifest.scenes {
        let active = rules.for_scene(&scene.scene_id);
        for &seed in &args.seeds {
            match simulate_scene(scene, &active, seed) {
                Ok(trajectories) => {
                    let file = TrajectoryFile {
                        scene_id: scene.scene_id.clone(),
                        fps: scene.fps,
                        manifest_sha256: Some(hash.clone()),
                        trajectories,
                    };
                    let path = args
                        .out_dir
                        .join(crate::bench::trajectory_filename(&scene.scene_id, seed));
                    match write_trajectories(&path, &file) {
                        Ok(()) => written += 1,
                        Err(e) => diagnostics.push(format!("{} seed {seed}: {e}", scene.scene_id)),
                    }
                }
                Err(e) => diagnostics.push(format!("{} seed {seed}: {e}", scene.scene_id)),
            }
        }
    }
    println!(
        "wrote {written} trajectory file(s) to {}",
        args.out_dir.display()
    );
    if diagnostics.is_empty() {
        Ok(())
    } else {
        Err(CliError::Runtime(format!(
            "{} scene realization(s) failed:\n  {}",
            diagnostics.len(),
            diagnostics.join("\n  ")
        )))
    }
}

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    let mut config = RunConfig::new(&args.manifest, &args.traj_dir);
    config.seeds = args.seeds.clone();
    config.split = (args.split[0], args.split[1]);
    config.split_seed = args.split_seed;
    config.scaling = args.scaling.clone();
    config.detection = if args.frame_mode {
        DetectionConfig::default().without_refinement()
    } else {
        DetectionConfig::default()
    };
    config.outlier_threshold_mps2 = args.outlier_threshold;
    config.seed_average_calibration = args.seed_average_calibration;
    config.ratio_fit_through_origin = args.ratio_through_origin;
    config.workers = resolve_workers(args.workers)?;

    let registry = RunnerRegistry::builtin();
    let runner = registry.resolve(&args.protocol)?;
    let report = runner.run(&config)?;

    if !args.allow_missing {
        let missing = report
            .error_records
            .iter()
            .filter(|e| e.kind == ReportErrorKind::MissingTrajectory)
            .count();
        if missing > 0 {
            return Err(CliError::Runtime(format!(
                "{missing} trajectory file(s) missing from {}; rerun simulate or pass --allow-missing",
                args.traj_dir.display()
            )));
        }
    }

    write_report(&args.out, &report)?;
    if let Some(plot_path) = &args.plot_data {
        write_plot_data(plot_path, &report.gravity_records)?;
    }
    print!("{}", summarize(&report, &args.out));
    Ok(())
}

fn cmd_strobe(args: StrobeArgs) -> Result<(), CliError> {
    let spec = StrobeSpec {
        interval_s: args.interval_s,
        reference: args.reference,
        show_expected_marker: args.expected_marker,
        output_path: args.out,
    };
    if let Some(v) = spec.interval_s {
        if !(v.is_finite() && v > 0.0) {
            return Err(CliError::Usage(format!(
                "--interval-s must be positive, got {v}"
            )));
        }
    }
    let manifest = read_manifest(&args.manifest)?;
    let scene = manifest
        .scenes
        .iter()
        .find(|s| s.scene_id == args.scene)
        .ok_or_else(|| {
            CliError::Usage(format!(
                "scene {:?} is not in {}",
                args.scene,
                args.manifest.display()
            ))
        })?;
    let file = read_trajectories(&args.traj)?;
    if file.scene_id != scene.scene_id {
        return Err(CliError::Usage(format!(
            "{} holds tracks for scene {}, not {}",
            args.traj.display(),
            file.scene_id,
            scene.scene_id
        )));
    }
    let mut tracks: Vec<PixelTrajectory> = Vec::new();
    for id in scene.ball_ids() {
        let track = file
            .trajectories
            .iter()
            .find(|t| t.ball_id == id)
            .cloned()
            .ok_or_else(|| {
                CliError::Usage(format!("{} has no track for {id}", args.traj.display()))
            })?;
        tracks.push(track);
    }
    let composite = compose_strobe(
        scene,
        &tracks,
        spec.reference,
        spec.interval_s,
        spec.show_expected_marker,
        &DetectionConfig::default(),
    )?;
    write_text(&spec.output_path, &composite.to_svg())?;
    println!(
        "wrote strobe composite ({} outline(s)) to {}",
        composite
            .balls
            .iter()
            .map(|b| b.positions.len())
            .sum::<usize>(),
        spec.output_path.display()
    );
    Ok(())
}

fn cmd_report_diff(args: ReportDiffArgs) -> Result<(), CliError> {
    let read = |path: &Path| -> Result<String, CliError> {
        fs::read_to_string(path)
            .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))
    };
    let a = read(&args.report_a)?;
    let b = read(&args.report_b)?;
    let diffs = report_diff(&a, &b, args.tolerance)?;
    if diffs.is_empty() {
        println!("reports match (tolerance {})", args.tolerance);
        Ok(())
    } else {
        for d in &diffs {
            println!("{d}");
        }
        Err(CliError::ReportsDiffer { count: diffs.len() })
    }
}

const VARIANT_COLORS: [(&str, &str); 4] = [
    ("raw", "#1f77b4"),
    ("mean_scaled", "#d62728"),
    ("per_sample_scaled", "#2ca02c"),
    ("height_adjusted", "#9467bd"),
];

fn variant_color(name: &str) -> &'static str {
    VARIANT_COLORS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, c)| *c)
        .unwrap_or("#7f7f7f")
}

/// Write the height/fall-time scatter: a CSV at `path` and a minimal static
/// SVG chart next to it.
fn write_plot_data(path: &Path, records: &[GravityEstimate]) -> Result<(), CliError> {
    let mut csv = String::from("variant,scene_id,seed,h_m,t_s\n");
    for r in records {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            r.variant.name(),
            r.scene_id,
            r.seed,
            r.h_used_m,
            r.t_eff_s
        );
    }
    write_text(path, &csv)?;
    write_text(&chart_path(path), &scatter_svg(records))?;
    Ok(())
}

fn chart_path(data_path: &Path) -> PathBuf {
    let is_svg = data_path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("svg"))
        .unwrap_or(false);
    if is_svg {
        let mut name = data_path.as_os_str().to_owned();
        name.push(".chart.svg");
        PathBuf::from(name)
    } else {
        data_path.with_extension("svg")
    }
}

/// Minimal static scatter of effective fall time against drop height, one
/// color per variant.
fn scatter_svg(records: &[GravityEstimate]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const ML: f64 = 70.0;
    const MR: f64 = 20.0;
    const MT: f64 = 20.0;
    const MB: f64 = 55.0;
    let max_h = records.iter().map(|r| r.h_used_m).fold(1e-9, f64::max) * 1.05;
    let max_t = records.iter().map(|r| r.t_eff_s).fold(1e-9, f64::max) * 1.05;
    let x = |h: f64| ML + h / max_h * (W - ML - MR);
    let y = |t: f64| H - MB - t / max_t * (H - MT - MB);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    );
    let _ = writeln!(
        svg,
        "  <rect width=\"{W}\" height=\"{H}\" fill=\"#ffffff\"/>"
    );
    let _ = writeln!(
        svg,
        "  <line x1=\"{ML}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"#000\"/>",
        H - MB,
        W - MR
    );
    let _ = writeln!(
        svg,
        "  <line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{}\" stroke=\"#000\"/>",
        H - MB
    );
    for i in 0..=4 {
        let fh = max_h * f64::from(i) / 4.0;
        let ft = max_t * f64::from(i) / 4.0;
        let _ = writeln!(
            svg,
            "  <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\">{fh:.2}</text>",
            x(fh),
            H - MB + 16.0
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"end\">{ft:.2}</text>",
            ML - 6.0,
            y(ft) + 4.0
        );
    }
    let _ = writeln!(
        svg,
        "  <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\">drop height (m)</text>",
        (ML + W - MR) / 2.0,
        H - 14.0
    );
    let _ = writeln!(
        svg,
        "  <text x=\"16\" y=\"{:.1}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">effective fall time (s)</text>",
        (MT + H - MB) / 2.0,
        (MT + H - MB) / 2.0
    );
    for r in records {
        let _ = writeln!(
            svg,
            "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{}\" fill-opacity=\"0.7\"/>",
            x(r.h_used_m),
            y(r.t_eff_s),
            variant_color(r.variant.name())
        );
    }
    let mut seen: Vec<&str> = Vec::new();
    for r in records {
        let name = r.variant.name();
        if !seen.contains(&name) {
            seen.push(name);
        }
    }
    for (i, name) in seen.iter().enumerate() {
        let ly = MT + 14.0 + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            "  <circle cx=\"{:.1}\" cy=\"{ly:.1}\" r=\"4\" fill=\"{}\"/>",
            W - MR - 130.0,
            variant_color(name)
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\">{name}</text>",
            W - MR - 120.0,
            ly + 4.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Human-readable run summary printed after `eval`.
fn summarize(report: &BenchmarkReport, out_path: &Path) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "protocol: {}", report.protocol);
    let _ = writeln!(
        s,
        "scenes: {} calibration / {} evaluation",
        report.calibration_ids.len(),
        report.evaluation_ids.len()
    );
    if !report.gravity_statistics.is_empty() {
        let _ = writeln!(s, "gravity estimates (m/s^2):");
        for v in &report.gravity_statistics {
            let _ = writeln!(
                s,
                "  {:<18} n={:<4} mean={:<8.4} median={:<8.4} range=[{:.4}, {:.4}] outliers={}",
                v.variant.name(),
                v.all.sample_count,
                v.all.mean,
                v.all.median,
                v.all.range[0],
                v.all.range[1],
                v.outlier_count
            );
        }
    }
    if let Some(tb) = &report.two_ball_statistics {
        let _ = writeln!(
            s,
            "two-ball: n={} delta-t mean={:.3} frames, median={:.3}, range=[{:.3}, {:.3}]",
            tb.delta_t_frames.sample_count,
            tb.delta_t_frames.mean,
            tb.delta_t_frames.median,
            tb.delta_t_frames.range[0],
            tb.delta_t_frames.range[1]
        );
        if let Some(fit) = &tb.ratio_fit {
            let _ = writeln!(
                s,
                "two-ball ratio line: slope={:.4} intercept={:.4}",
                fit.slope, fit.intercept
            );
        }
    }
    if let Some(inc) = &report.incline_statistics {
        let _ = writeln!(
            s,
            "incline: n={} measured/expected mean={:.4} range=[{:.4}, {:.4}]",
            inc.ratio.sample_count, inc.ratio.mean, inc.ratio.range[0], inc.ratio.range[1]
        );
    }
    let _ = writeln!(s, "errors: {}", report.error_records.len());
    let _ = writeln!(s, "report: {}", out_path.display());
    s
}

/// Parse argv and run; returns the process exit code.
pub fn main_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            // clap prints help/version on stdout with code 0, errors with 2.
            let _ = err.print();
            return if err.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn protocol_names_accept_short_aliases() {
        assert_eq!(parse_protocol_name("single").unwrap(), Protocol::SingleBall);
        assert_eq!(
            parse_protocol_name("single-ball").unwrap(),
            Protocol::SingleBall
        );
        assert_eq!(parse_protocol_name("two").unwrap(), Protocol::TwoBall);
        assert_eq!(parse_protocol_name("incline").unwrap(), Protocol::Incline);
        assert!(parse_protocol_name("triple").is_err());
    }

    #[test]
    fn strobe_reference_names_parse() {
        assert_eq!(
            parse_reference_name("earth-time").unwrap(),
            StrobeReference::EarthTime
        );
        assert_eq!(
            parse_reference_name("own-impact").unwrap(),
            StrobeReference::OwnImpact
        );
        assert!(parse_reference_name("sidereal").is_err());
    }

    #[test]
    fn eval_defaults_match_the_documented_run_shape() {
        let cli = Cli::try_parse_from([
            "gravlab",
            "eval",
            "--manifest",
            "m.json",
            "--traj-dir",
            "t",
            "--protocol",
            "single",
        ])
        .unwrap();
        let Command::Eval(args) = cli.command else {
            panic!("expected eval")
        };
        assert_eq!(args.seeds, DEFAULT_SEEDS.to_vec());
        assert_eq!(args.split, vec![30, 45]);
        assert_eq!(args.split_seed, 7);
        assert_eq!(args.scaling.len(), 4);
        assert_eq!(args.workers, 1);
        assert!(!args.allow_missing && !args.frame_mode);
    }

    #[test]
    fn zero_count_is_a_usage_error() {
        let err = Cli::try_parse_from([
            "gravlab",
            "gen-scenes",
            "--count",
            "0",
            "--protocol",
            "single",
            "--out",
            "m.json",
        ])
        .unwrap_err();
        assert!(err.use_stderr());
    }

    #[test]
    fn chart_path_never_collides_with_the_data_file() {
        assert_eq!(
            chart_path(Path::new("scatter.csv")),
            PathBuf::from("scatter.svg")
        );
        assert_eq!(
            chart_path(Path::new("plot.svg")),
            PathBuf::from("plot.svg.chart.svg")
        );
    }

    #[test]
    fn scatter_chart_draws_one_dot_per_record() {
        let records = vec![
            GravityEstimate::new(
                "s1",
                42,
                crate::metrics::GravityVariant::Raw,
                2.0,
                0.64,
                0.64,
                50.0,
            )
            .unwrap(),
            GravityEstimate::new(
                "s2",
                42,
                crate::metrics::GravityVariant::Raw,
                1.0,
                0.45,
                0.45,
                50.0,
            )
            .unwrap(),
        ];
        let svg = scatter_svg(&records);
        // Two data dots plus one legend dot for the single variant present.
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.contains("drop height (m)"));
    }
}

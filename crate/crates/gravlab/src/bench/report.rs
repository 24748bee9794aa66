//! Benchmark report: schema, aggregation, serialization, and comparison.
//!
//! A report is a self-describing JSON document: schema version, the
//! configuration that produced it, every per-realization record (successes
//! and structured failures), and statistics blocks recomputable from the
//! records — reloading verifies that invariant. Time-of-run details live in
//! a separate provenance block so that two runs over identical inputs are
//! byte-identical everywhere else.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::BenchError;
use crate::detect::{DetectError, DetectionConfig};
use crate::metrics::{
    ratio_slope, GravityEstimate, GravityVariant, MetricsError, RatioFit, TwoBallResult,
};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// The configuration knobs that affect results (worker count does not, and
/// is therefore provenance).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub seeds: Vec<u64>,
    pub split_calibration: usize,
    pub split_evaluation: usize,
    pub split_seed: u64,
    pub scaling: Vec<String>,
    pub detection: DetectionConfig,
    pub outlier_threshold_mps2: f64,
    pub seed_average_calibration: bool,
    pub ratio_fit_through_origin: bool,
}

/// Statistics over one population of values.
///
/// `mean` averages per-scene seed-means (each scene counts once no matter
/// how many seeds succeeded); `median`, `range`, and the quartiles pool
/// every (scene, seed) value. Quartiles use linear interpolation between
/// order statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsBlock {
    pub scene_count: usize,
    pub sample_count: usize,
    pub mean: f64,
    pub median: f64,
    pub range: [f64; 2],
    pub q1: f64,
    pub q3: f64,
}

/// Gravity statistics for one correction variant, with and without flagged
/// outliers (flagged values are never dropped from the records).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantStats {
    pub variant: GravityVariant,
    pub all: StatsBlock,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub excluding_outliers: Option<StatsBlock>,
    pub outlier_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoBallStats {
    pub delta_t_frames: StatsBlock,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ratio_fit: Option<RatioFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclineStats {
    /// Measured-over-expected acceleration.
    pub ratio: StatsBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoBallRecord {
    pub seed: u64,
    #[serde(flatten)]
    pub result: TwoBallResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclineRecord {
    pub scene_id: String,
    pub seed: u64,
    pub theta_deg: f64,
    pub expected_mps2: f64,
    pub measured_mps2: f64,
    pub ratio: f64,
}

/// Machine-matchable failure categories for report rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportErrorKind {
    MissingTrajectory,
    InvalidTrajectory,
    ManifestMismatch,
    NoImpact,
    TooFewSamples,
    BallNotFalling,
    DistanceNeverReached,
    DegenerateTrajectory,
    DegenerateFit,
    MissingSeedGroup,
    EmptyCalibration,
    CalibrationLeakage,
    Other,
}

impl ReportErrorKind {
    pub fn from_detect(err: &DetectError) -> Self {
        match err {
            DetectError::NoImpact => ReportErrorKind::NoImpact,
            DetectError::TooFewSamples { .. } => ReportErrorKind::TooFewSamples,
            DetectError::BallNotFalling { .. } => ReportErrorKind::BallNotFalling,
            DetectError::DistanceNeverReached { .. } => ReportErrorKind::DistanceNeverReached,
        }
    }

    pub fn from_metrics(err: &MetricsError) -> Self {
        match err {
            MetricsError::Detection { source, .. } => Self::from_detect(source),
            MetricsError::DegenerateTrajectory { .. } => ReportErrorKind::DegenerateTrajectory,
            MetricsError::DegenerateFit { .. } => ReportErrorKind::DegenerateFit,
            MetricsError::MissingSeedGroup { .. } => ReportErrorKind::MissingSeedGroup,
            MetricsError::EmptyCalibration => ReportErrorKind::EmptyCalibration,
            MetricsError::CalibrationLeakage { .. } => ReportErrorKind::CalibrationLeakage,
            _ => ReportErrorKind::Other,
        }
    }
}

/// One failed scene realization (or run-level fit, with scene_id "*").
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub scene_id: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ball_id: Option<String>,
    pub kind: ReportErrorKind,
    pub message: String,
}

impl ErrorRecord {
    pub fn sort_key(&self) -> (String, Option<u64>, Option<String>, ReportErrorKind, String) {
        (
            self.scene_id.clone(),
            self.seed,
            self.ball_id.clone(),
            self.kind,
            self.message.clone(),
        )
    }
}

/// Run details that must not participate in determinism comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub config_hash: String,
    pub manifest_path: String,
    pub workers: usize,
    pub generated_unix_time_s: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkReport {
    pub schema_version: u32,
    pub protocol: String,
    pub config: ConfigEcho,
    pub manifest_sha256: String,
    pub calibration_ids: Vec<String>,
    pub evaluation_ids: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub gravity_records: Vec<GravityEstimate>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub two_ball_records: Vec<TwoBallRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub incline_records: Vec<InclineRecord>,
    pub error_records: Vec<ErrorRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub gravity_statistics: Vec<VariantStats>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub two_ball_statistics: Option<TwoBallStats>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub incline_statistics: Option<InclineStats>,
    pub provenance: Provenance,
}

/// Hash of the result-affecting configuration plus the manifest content.
pub fn config_hash(config: &ConfigEcho, manifest_sha256: &str) -> String {
    let text = serde_json::to_string(config).expect("config echo serializes");
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    hasher.update(manifest_sha256.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Linear-interpolation quantile of an ascending slice.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Fold (scene_id, value) rows into a statistics block. The fold is a fixed
/// deterministic order, so recomputing from a written report reproduces the
/// block bit-for-bit.
pub fn aggregate<'a, I>(rows: I) -> Result<StatsBlock, BenchError>
where
    I: IntoIterator<Item = (&'a str, f64)>,
{
    let mut by_scene: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    let mut pooled = Vec::new();
    for (scene_id, value) in rows {
        let entry = by_scene.entry(scene_id).or_insert((0.0, 0));
        entry.0 += value;
        entry.1 += 1;
        pooled.push(value);
    }
    if pooled.is_empty() {
        return Err(BenchError::EmptyRun);
    }
    let mean = by_scene
        .values()
        .map(|&(sum, n)| sum / n as f64)
        .sum::<f64>()
        / by_scene.len() as f64;
    pooled.sort_by(f64::total_cmp);
    Ok(StatsBlock {
        scene_count: by_scene.len(),
        sample_count: pooled.len(),
        mean,
        median: quantile(&pooled, 0.5),
        range: [pooled[0], pooled[pooled.len() - 1]],
        q1: quantile(&pooled, 0.25),
        q3: quantile(&pooled, 0.75),
    })
}

/// Per-variant statistics over gravity records, flagged values both counted
/// and excluded.
pub fn compute_gravity_statistics(records: &[GravityEstimate]) -> Vec<VariantStats> {
    let mut by_variant: BTreeMap<GravityVariant, Vec<&GravityEstimate>> = BTreeMap::new();
    for r in records {
        by_variant.entry(r.variant).or_default().push(r);
    }
    by_variant
        .into_iter()
        .map(|(variant, rows)| {
            let all = aggregate(rows.iter().map(|r| (r.scene_id.as_str(), r.g_eff_mps2)))
                .expect("variant group is nonempty");
            let inliers: Vec<&&GravityEstimate> = rows.iter().filter(|r| !r.outlier).collect();
            let excluding_outliers =
                aggregate(inliers.iter().map(|r| (r.scene_id.as_str(), r.g_eff_mps2))).ok();
            VariantStats {
                variant,
                all,
                excluding_outliers,
                outlier_count: rows.len() - inliers.len(),
            }
        })
        .collect()
}

/// Δt statistics and the ratio-line fit over two-ball records. A fit that
/// cannot be made (too few distinct ratios) is reported as `None`; the
/// caller records the structured reason.
pub fn compute_two_ball_statistics(
    records: &[TwoBallRecord],
    through_origin: bool,
) -> Result<Option<TwoBallStats>, BenchError> {
    if records.is_empty() {
        return Ok(None);
    }
    let delta = aggregate(
        records
            .iter()
            .map(|r| (r.result.scene_id.as_str(), r.result.delta_t_frames)),
    )?;
    let results: Vec<TwoBallResult> = records.iter().map(|r| r.result.clone()).collect();
    let ratio_fit = ratio_slope(&results, through_origin).ok();
    Ok(Some(TwoBallStats {
        delta_t_frames: delta,
        ratio_fit,
    }))
}

pub fn compute_incline_statistics(
    records: &[InclineRecord],
) -> Result<Option<InclineStats>, BenchError> {
    if records.is_empty() {
        return Ok(None);
    }
    let ratio = aggregate(records.iter().map(|r| (r.scene_id.as_str(), r.ratio)))?;
    Ok(Some(InclineStats { ratio }))
}

impl BenchmarkReport {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    /// The report without its provenance block: the part that must be
    /// byte-identical across reruns and worker counts. Keys are emitted in
    /// sorted order so the comparison is canonical.
    pub fn body_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("report serializes");
        if let Value::Object(map) = &mut value {
            map.remove("provenance");
        }
        let mut text = serde_json::to_string_pretty(&value).expect("value serializes");
        text.push('\n');
        text
    }

    pub fn parse(text: &str) -> Result<Self, BenchError> {
        let report: BenchmarkReport =
            serde_json::from_str(text).map_err(|e| BenchError::ReportParse {
                message: e.to_string(),
            })?;
        if report.schema_version != REPORT_SCHEMA_VERSION {
            return Err(BenchError::SchemaVersion {
                found: report.schema_version,
                expected: REPORT_SCHEMA_VERSION,
            });
        }
        report.verify_consistency()?;
        Ok(report)
    }

    /// Check that the statistics blocks are exactly what the records imply
    /// and that the calibration/evaluation sets are disjoint.
    pub fn verify_consistency(&self) -> Result<(), BenchError> {
        for id in &self.calibration_ids {
            if self.evaluation_ids.contains(id) {
                return Err(BenchError::Metrics(MetricsError::CalibrationLeakage {
                    scene_id: id.clone(),
                }));
            }
        }
        let gravity = compute_gravity_statistics(&self.gravity_records);
        if gravity != self.gravity_statistics {
            return Err(BenchError::InconsistentReport {
                detail: "gravity statistics do not match the records".into(),
            });
        }
        let two_ball = compute_two_ball_statistics(
            &self.two_ball_records,
            self.config.ratio_fit_through_origin,
        )?;
        if two_ball != self.two_ball_statistics {
            return Err(BenchError::InconsistentReport {
                detail: "two-ball statistics do not match the records".into(),
            });
        }
        let incline = compute_incline_statistics(&self.incline_records)?;
        if incline != self.incline_statistics {
            return Err(BenchError::InconsistentReport {
                detail: "incline statistics do not match the records".into(),
            });
        }
        Ok(())
    }
}

pub fn write_report(path: &Path, report: &BenchmarkReport) -> Result<(), BenchError> {
    fs::write(path, report.to_json()).map_err(|source| BenchError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_report(path: &Path) -> Result<BenchmarkReport, BenchError> {
    let text = fs::read_to_string(path).map_err(|source| BenchError::Io {
        path: path.display().to_string(),
        source,
    })?;
    BenchmarkReport::parse(&text)
}

fn diff_value(path: &str, a: &Value, b: &Value, tolerance: f64, out: &mut Vec<String>) {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (
                x.as_f64().unwrap_or(f64::NAN),
                y.as_f64().unwrap_or(f64::NAN),
            );
            let scale = 1.0_f64.max(x.abs()).max(y.abs());
            if !((x - y).abs() <= tolerance * scale) {
                out.push(format!("{path}: {x} vs {y}"));
            }
        }
        (Value::Object(x), Value::Object(y)) => {
            for key in x.keys().chain(y.keys().filter(|k| !x.contains_key(*k))) {
                let sub = format!("{path}.{key}");
                match (x.get(key), y.get(key)) {
                    (Some(av), Some(bv)) => diff_value(&sub, av, bv, tolerance, out),
                    (Some(_), None) => out.push(format!("{sub}: present vs absent")),
                    (None, Some(_)) => out.push(format!("{sub}: absent vs present")),
                    (None, None) => unreachable!(),
                }
            }
        }
        (Value::Array(x), Value::Array(y)) => {
            if x.len() != y.len() {
                out.push(format!("{path}: length {} vs {}", x.len(), y.len()));
                return;
            }
            for (i, (av, bv)) in x.iter().zip(y).enumerate() {
                diff_value(&format!("{path}[{i}]"), av, bv, tolerance, out);
            }
        }
        _ => {
            if a != b {
                out.push(format!("{path}: {a} vs {b}"));
            }
        }
    }
}

/// Field-by-field comparison of two report documents, ignoring provenance;
/// numbers match within `tolerance` (relative above 1, absolute below).
/// Returns the differing paths, empty when the reports agree.
pub fn report_diff(a_text: &str, b_text: &str, tolerance: f64) -> Result<Vec<String>, BenchError> {
    let strip = |text: &str| -> Result<Value, BenchError> {
        let mut value: Value = serde_json::from_str(text).map_err(|e| BenchError::ReportParse {
            message: e.to_string(),
        })?;
        if let Value::Object(map) = &mut value {
            map.remove("provenance");
        }
        Ok(value)
    };
    let a = strip(a_text)?;
    let b = strip(b_text)?;
    let mut out = Vec::new();
    diff_value("report", &a, &b, tolerance, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn quantiles_interpolate_between_order_statistics() {
        let sorted = [1.0, 2.0, 3.0, 4.0];
        assert_relative_eq!(quantile(&sorted, 0.5), 2.5, epsilon = 1e-15);
        assert_relative_eq!(quantile(&sorted, 0.25), 1.75, epsilon = 1e-15);
        assert_relative_eq!(quantile(&sorted, 0.75), 3.25, epsilon = 1e-15);
        assert_eq!(quantile(&[7.0], 0.5), 7.0);
    }

    #[test]
    fn aggregate_of_a_single_row_is_that_row() {
        let stats = aggregate([("a", 2.5)]).unwrap();
        assert_eq!(stats.mean, 2.5);
        assert_eq!(stats.median, 2.5);
        assert_eq!(stats.range, [2.5, 2.5]);
        assert_eq!(stats.q1, 2.5);
        assert_eq!(stats.q3, 2.5);
        assert_eq!((stats.scene_count, stats.sample_count), (1, 1));
    }

    #[test]
    fn aggregate_pools_for_quantiles_but_seed_averages_for_the_mean() {
        // Scene a has seeds {1, 3}, scene b has {5}: the headline mean
        // weights scenes equally, while the pooled median sees all three.
        let stats = aggregate([("a", 1.0), ("a", 3.0), ("b", 5.0)]).unwrap();
        assert_relative_eq!(stats.mean, 3.5, epsilon = 1e-15);
        assert_relative_eq!(stats.median, 3.0, epsilon = 1e-15);
        assert_eq!(stats.range, [1.0, 5.0]);
        assert_eq!((stats.scene_count, stats.sample_count), (2, 3));
    }

    #[test]
    fn pooled_median_can_sit_below_a_tail_driven_mean() {
        let stats = aggregate([("a", 1.0), ("b", 1.1), ("c", 0.9), ("d", 9.0)]).unwrap();
        assert!(stats.mean > 2.0);
        assert!(stats.median < 1.2, "median {}", stats.median);
    }

    #[test]
    fn aggregate_rejects_an_empty_run() {
        assert!(matches!(aggregate([]), Err(BenchError::EmptyRun)));
    }

    fn estimate(scene: &str, seed: u64, g: f64) -> GravityEstimate {
        let t = (2.0 * 2.0 / g).sqrt();
        GravityEstimate::new(scene, seed, GravityVariant::Raw, 2.0, t, t, 50.0).unwrap()
    }

    #[test]
    fn outliers_are_counted_and_separated_but_never_dropped() {
        let records = vec![
            estimate("a", 42, 9.8),
            estimate("a", 123, 9.9),
            estimate("b", 42, 80.0),
        ];
        let stats = compute_gravity_statistics(&records);
        assert_eq!(stats.len(), 1);
        let block = &stats[0];
        assert_eq!(block.outlier_count, 1);
        assert_eq!(block.all.sample_count, 3);
        let ex = block.excluding_outliers.as_ref().unwrap();
        assert_eq!(ex.sample_count, 2);
        assert!(ex.range[1] < 10.0);
        assert_eq!(block.all.range[1], 80.0);
    }

    fn tiny_report() -> BenchmarkReport {
        let gravity_records = vec![
            estimate("a", 42, 9.8),
            estimate("a", 123, 9.85),
            estimate("b", 42, 9.75),
        ];
        let gravity_statistics = compute_gravity_statistics(&gravity_records);
        let config = ConfigEcho {
            seeds: vec![42, 123],
            split_calibration: 0,
            split_evaluation: 2,
            split_seed: 7,
            scaling: vec!["raw".into()],
            detection: DetectionConfig::default(),
            outlier_threshold_mps2: 50.0,
            seed_average_calibration: false,
            ratio_fit_through_origin: false,
        };
        let hash = config_hash(&config, "deadbeef");
        BenchmarkReport {
            schema_version: REPORT_SCHEMA_VERSION,
            protocol: "single-ball".into(),
            config,
            manifest_sha256: "deadbeef".into(),
            calibration_ids: vec![],
            evaluation_ids: vec!["a".into(), "b".into()],
            gravity_records,
            two_ball_records: vec![],
            incline_records: vec![],
            error_records: vec![ErrorRecord {
                scene_id: "c".into(),
                seed: Some(42),
                ball_id: None,
                kind: ReportErrorKind::MissingTrajectory,
                message: "no file".into(),
            }],
            gravity_statistics,
            two_ball_statistics: None,
            incline_statistics: None,
            provenance: Provenance {
                tool_version: "0.1.0".into(),
                config_hash: hash,
                manifest_path: "/tmp/m.json".into(),
                workers: 1,
                generated_unix_time_s: 1_700_000_000,
            },
        }
    }

    #[test]
    fn reports_roundtrip_and_verify() {
        let report = tiny_report();
        let parsed = BenchmarkReport::parse(&report.to_json()).unwrap();
        assert_eq!(parsed, report);
    }

    #[test]
    fn tampered_statistics_fail_the_load_check() {
        let mut report = tiny_report();
        report.gravity_statistics[0].all.mean += 0.1;
        let err = BenchmarkReport::parse(&report.to_json()).unwrap_err();
        assert!(matches!(err, BenchError::InconsistentReport { .. }));
    }

    #[test]
    fn overlapping_splits_fail_the_load_check() {
        let mut report = tiny_report();
        report.calibration_ids = vec!["a".into()];
        let err = report.verify_consistency().unwrap_err();
        assert!(matches!(
            err,
            BenchError::Metrics(MetricsError::CalibrationLeakage { .. })
        ));
    }

    #[test]
    fn wrong_schema_version_is_rejected() {
        let mut report = tiny_report();
        report.schema_version = 99;
        let err = BenchmarkReport::parse(&report.to_json()).unwrap_err();
        assert!(matches!(err, BenchError::SchemaVersion { found: 99, .. }));
    }

    #[test]
    fn provenance_is_outside_the_deterministic_body() {
        let a = tiny_report();
        let mut b = a.clone();
        b.provenance.workers = 8;
        b.provenance.generated_unix_time_s += 3600;
        assert_ne!(a.to_json(), b.to_json());
        assert_eq!(a.body_json(), b.body_json());
    }

    #[test]
    fn report_diff_ignores_provenance_and_honors_tolerance() {
        let a = tiny_report();
        let mut b = a.clone();
        b.provenance.workers = 8;
        assert_eq!(
            report_diff(&a.to_json(), &b.to_json(), 1e-9).unwrap(),
            Vec::<String>::new()
        );

        // A perturbation inside the tolerance is not a difference; past it,
        // the differing path is named. The statistics are rebuilt so the
        // perturbed document stays self-consistent.
        let mut c = a.clone();
        c.gravity_records[0].g_eff_mps2 += 5e-10;
        c.gravity_statistics = compute_gravity_statistics(&c.gravity_records);
        assert!(report_diff(&a.to_json(), &c.to_json(), 1e-6)
            .unwrap()
            .is_empty());
        let mut d = a.clone();
        d.gravity_records[0].g_eff_mps2 += 0.5;
        d.gravity_statistics = compute_gravity_statistics(&d.gravity_records);
        let diffs = report_diff(&a.to_json(), &d.to_json(), 1e-9).unwrap();
        assert!(!diffs.is_empty());
        assert!(
            diffs
                .iter()
                .any(|line| line.contains("gravity_records[0].g_eff_mps2")),
            "{diffs:?}"
        );
    }

    #[test]
    fn config_hash_tracks_config_and_manifest() {
        let report = tiny_report();
        let base = config_hash(&report.config, &report.manifest_sha256);
        let mut other = report.config.clone();
        other.split_seed = 8;
        assert_ne!(base, config_hash(&other, &report.manifest_sha256));
        assert_ne!(base, config_hash(&report.config, "otherhash"));
        assert_eq!(base.len(), 64);
    }

    #[test]
    fn error_kinds_map_from_detection_and_metrics_errors() {
        assert_eq!(
            ReportErrorKind::from_detect(&DetectError::NoImpact),
            ReportErrorKind::NoImpact
        );
        let tagged = MetricsError::Detection {
            ball_id: "ball1".into(),
            source: DetectError::TooFewSamples { needed: 2, got: 1 },
        };
        assert_eq!(
            ReportErrorKind::from_metrics(&tagged),
            ReportErrorKind::TooFewSamples
        );
        assert_eq!(
            ReportErrorKind::from_metrics(&MetricsError::EmptyCalibration),
            ReportErrorKind::EmptyCalibration
        );
        assert_eq!(
            ReportErrorKind::from_metrics(&MetricsError::NonPositiveTime(0.0)),
            ReportErrorKind::Other
        );
    }
}

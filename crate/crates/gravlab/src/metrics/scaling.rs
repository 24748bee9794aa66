//! Clock-rescaling corrections for gravity estimates.
//!
//! A generator with a consistent but wrong clock produces fall times that
//! are a constant multiple of truth, and gravity estimates off by the square
//! of that multiple. The corrections here recover the multiple in different
//! ways — a global mean over a calibration split, a per-scene fit over
//! held-out realizations, or a geometric height fix for tilted falls — and
//! each is packaged as a strategy behind a common trait so runs can select
//! them by name.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{height_adjusted, GravityEstimate, GravityVariant, MetricsError};
use crate::sim::PixelTrajectory;

/// Realization seeds reserved for fitting per-scene factors; the remaining
/// seeds of the same scene are the ones a fitted factor may be applied to.
pub const FIT_SEEDS: [u64; 2] = [999, 777];

/// True when a realization seed belongs to the factor-fitting group.
pub fn is_fit_seed(seed: u64) -> bool {
    FIT_SEEDS.contains(&seed)
}

/// How a scaling model maps raw estimates to corrected ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingKind {
    Mean,
    PerSample,
    HeightAdjusted,
}

/// A fitted clock correction plus the scenes it was fitted on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingModel {
    pub kind: ScalingKind,
    /// Global mean time-scaling factor (Mean kind only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mts: Option<f64>,
    /// Scene-specific factors (PerSample kind only).
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub per_sample_factors: BTreeMap<String, f64>,
    /// Scenes whose times went into the fit; applying the model to any of
    /// them is calibration leakage.
    pub calibration_ids: Vec<String>,
}

/// One calibration observation: an observed fall time next to the analytic
/// one for the same drop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPair {
    pub scene_id: String,
    pub seed: u64,
    pub t_eff_s: f64,
    pub t_gt_s: f64,
}

/// One scene's realizations split into factor-fitting and evaluation seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedGroup {
    /// (seed, observed fall time) pairs the factor is fitted on.
    pub fit: Vec<(u64, f64)>,
    /// (seed, observed fall time) pairs the factor applies to.
    pub eval: Vec<(u64, f64)>,
    pub t_gt_s: f64,
}

/// Everything the scaling strategies may fit on, assembled by the runner.
#[derive(Debug, Clone, Default)]
pub struct CalibrationData {
    /// Calibration-split observations, one per (scene, seed).
    pub pairs: Vec<CalibrationPair>,
    /// Evaluation scenes' realizations keyed by scene, for per-scene fits.
    pub groups: BTreeMap<String, SeedGroup>,
    /// Average each scene's times over seeds before fitting the global mean
    /// (default pools all seeds as independent observations).
    pub seed_average: bool,
}

/// Fit the global mean time-scaling factor over calibration pairs.
pub fn fit_mts(
    pairs: &[(f64, f64)],
    calibration_ids: &[String],
) -> Result<ScalingModel, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::EmptyCalibration);
    }
    let mut sum = 0.0;
    for &(t_eff, t_gt) in pairs {
        if !(t_eff > 0.0) {
            return Err(MetricsError::NonPositiveTime(t_eff));
        }
        if !(t_gt > 0.0) {
            return Err(MetricsError::NonPositiveTime(t_gt));
        }
        sum += t_eff / t_gt;
    }
    let mut ids = calibration_ids.to_vec();
    ids.sort();
    ids.dedup();
    Ok(ScalingModel {
        kind: ScalingKind::Mean,
        mts: Some(sum / pairs.len() as f64),
        per_sample_factors: BTreeMap::new(),
        calibration_ids: ids,
    })
}

/// Fit one factor per scene from its fitting seeds. The factor may only be
/// applied to the same scene's evaluation seeds, so the model carries no
/// scene-level calibration list.
pub fn fit_per_sample(groups: &BTreeMap<String, SeedGroup>) -> Result<ScalingModel, MetricsError> {
    if groups.is_empty() {
        return Err(MetricsError::EmptyCalibration);
    }
    let mut factors = BTreeMap::new();
    for (scene_id, group) in groups {
        if group.fit.is_empty() || group.eval.is_empty() {
            return Err(MetricsError::MissingSeedGroup {
                scene_id: scene_id.clone(),
            });
        }
        if !(group.t_gt_s > 0.0) {
            return Err(MetricsError::NonPositiveTime(group.t_gt_s));
        }
        let mut sum = 0.0;
        for &(_, t_eff) in &group.fit {
            if !(t_eff > 0.0) {
                return Err(MetricsError::NonPositiveTime(t_eff));
            }
            sum += t_eff / group.t_gt_s;
        }
        factors.insert(scene_id.clone(), sum / group.fit.len() as f64);
    }
    Ok(ScalingModel {
        kind: ScalingKind::PerSample,
        mts: None,
        per_sample_factors: factors,
        calibration_ids: Vec::new(),
    })
}

/// Rescale a raw estimate's clock by the model's factor: the corrected time
/// is `t_eff / factor`, so the corrected gravity is `g_raw · factor²`.
pub fn apply_scaling(
    model: &ScalingModel,
    estimate: &GravityEstimate,
    outlier_threshold_mps2: f64,
) -> Result<GravityEstimate, MetricsError> {
    if estimate.variant != GravityVariant::Raw {
        return Err(MetricsError::NotRawEstimate {
            got: estimate.variant,
        });
    }
    if model
        .calibration_ids
        .iter()
        .any(|id| id == &estimate.scene_id)
    {
        return Err(MetricsError::CalibrationLeakage {
            scene_id: estimate.scene_id.clone(),
        });
    }
    let (factor, variant) = match model.kind {
        ScalingKind::Mean => {
            let mts = model.mts.ok_or(MetricsError::EmptyCalibration)?;
            (mts, GravityVariant::MeanScaled)
        }
        ScalingKind::PerSample => {
            let factor = model
                .per_sample_factors
                .get(&estimate.scene_id)
                .copied()
                .ok_or_else(|| MetricsError::MissingSeedGroup {
                    scene_id: estimate.scene_id.clone(),
                })?;
            (factor, GravityVariant::PerSampleScaled)
        }
        ScalingKind::HeightAdjusted => {
            return Err(MetricsError::UnsupportedScalingKind { kind: model.kind });
        }
    };
    if !(factor > 0.0) {
        return Err(MetricsError::NonPositiveFactor(factor));
    }
    GravityEstimate::new(
        estimate.scene_id.clone(),
        estimate.seed,
        variant,
        estimate.h_used_m,
        estimate.t_eff_s / factor,
        estimate.t_gt_s,
        outlier_threshold_mps2,
    )
}

/// One correction variant, selectable by name at run time.
pub trait ScalingStrategy: Send + Sync {
    /// Registry key, also what the command line accepts.
    fn name(&self) -> &'static str;
    fn variant(&self) -> GravityVariant;
    /// Whether this variant also reports rows for calibration-split scenes
    /// (only the uncorrected baseline does).
    fn covers_calibration_split(&self) -> bool {
        false
    }
    /// Whether this variant is restricted to evaluation seeds.
    fn eval_seeds_only(&self) -> bool {
        false
    }
    /// Fit whatever the strategy needs; `None` when nothing is fitted.
    fn prepare(&self, data: &CalibrationData) -> Result<Option<ScalingModel>, MetricsError>;
    /// Turn one raw estimate into this variant's estimate.
    fn apply(
        &self,
        model: Option<&ScalingModel>,
        raw: &GravityEstimate,
        traj: &PixelTrajectory,
        outlier_threshold_mps2: f64,
    ) -> Result<GravityEstimate, MetricsError>;
}

struct RawStrategy;

impl ScalingStrategy for RawStrategy {
    fn name(&self) -> &'static str {
        "raw"
    }
    fn variant(&self) -> GravityVariant {
        GravityVariant::Raw
    }
    fn covers_calibration_split(&self) -> bool {
        true
    }
    fn prepare(&self, _data: &CalibrationData) -> Result<Option<ScalingModel>, MetricsError> {
        Ok(None)
    }
    fn apply(
        &self,
        _model: Option<&ScalingModel>,
        raw: &GravityEstimate,
        _traj: &PixelTrajectory,
        _outlier_threshold_mps2: f64,
    ) -> Result<GravityEstimate, MetricsError> {
        if raw.variant != GravityVariant::Raw {
            return Err(MetricsError::NotRawEstimate { got: raw.variant });
        }
        Ok(raw.clone())
    }
}

struct MeanStrategy;

impl MeanStrategy {
    fn pairs(data: &CalibrationData) -> (Vec<(f64, f64)>, Vec<String>) {
        let ids: Vec<String> = data.pairs.iter().map(|p| p.scene_id.clone()).collect();
        if !data.seed_average {
            let pairs = data.pairs.iter().map(|p| (p.t_eff_s, p.t_gt_s)).collect();
            return (pairs, ids);
        }
        let mut by_scene: BTreeMap<&str, (f64, f64, usize)> = BTreeMap::new();
        for p in &data.pairs {
            let entry = by_scene
                .entry(p.scene_id.as_str())
                .or_insert((0.0, p.t_gt_s, 0));
            entry.0 += p.t_eff_s;
            entry.2 += 1;
        }
        let pairs = by_scene
            .values()
            .map(|&(sum, t_gt, n)| (sum / n as f64, t_gt))
            .collect();
        (pairs, ids)
    }
}

impl ScalingStrategy for MeanStrategy {
    fn name(&self) -> &'static str {
        "mean"
    }
    fn variant(&self) -> GravityVariant {
        GravityVariant::MeanScaled
    }
    fn prepare(&self, data: &CalibrationData) -> Result<Option<ScalingModel>, MetricsError> {
        let (pairs, ids) = Self::pairs(data);
        fit_mts(&pairs, &ids).map(Some)
    }
    fn apply(
        &self,
        model: Option<&ScalingModel>,
        raw: &GravityEstimate,
        _traj: &PixelTrajectory,
        outlier_threshold_mps2: f64,
    ) -> Result<GravityEstimate, MetricsError> {
        let model = model.ok_or(MetricsError::EmptyCalibration)?;
        apply_scaling(model, raw, outlier_threshold_mps2)
    }
}

struct PerSampleStrategy;

impl ScalingStrategy for PerSampleStrategy {
    fn name(&self) -> &'static str {
        "per-sample"
    }
    fn variant(&self) -> GravityVariant {
        GravityVariant::PerSampleScaled
    }
    fn eval_seeds_only(&self) -> bool {
        true
    }
    fn prepare(&self, data: &CalibrationData) -> Result<Option<ScalingModel>, MetricsError> {
        fit_per_sample(&data.groups).map(Some)
    }
    fn apply(
        &self,
        model: Option<&ScalingModel>,
        raw: &GravityEstimate,
        _traj: &PixelTrajectory,
        outlier_threshold_mps2: f64,
    ) -> Result<GravityEstimate, MetricsError> {
        let model = model.ok_or(MetricsError::EmptyCalibration)?;
        apply_scaling(model, raw, outlier_threshold_mps2)
    }
}

struct HeightAdjustedStrategy;

impl ScalingStrategy for HeightAdjustedStrategy {
    fn name(&self) -> &'static str {
        "height-adjusted"
    }
    fn variant(&self) -> GravityVariant {
        GravityVariant::HeightAdjusted
    }
    fn prepare(&self, _data: &CalibrationData) -> Result<Option<ScalingModel>, MetricsError> {
        Ok(None)
    }
    fn apply(
        &self,
        _model: Option<&ScalingModel>,
        raw: &GravityEstimate,
        traj: &PixelTrajectory,
        outlier_threshold_mps2: f64,
    ) -> Result<GravityEstimate, MetricsError> {
        if raw.variant != GravityVariant::Raw {
            return Err(MetricsError::NotRawEstimate { got: raw.variant });
        }
        let (h_adj, _phi_deg) = height_adjusted(traj, raw.h_used_m)?;
        GravityEstimate::new(
            raw.scene_id.clone(),
            raw.seed,
            GravityVariant::HeightAdjusted,
            h_adj,
            raw.t_eff_s,
            raw.t_gt_s,
            outlier_threshold_mps2,
        )
    }
}

/// The correction variants known to this build, keyed by name.
pub struct ScalingRegistry {
    strategies: BTreeMap<&'static str, Box<dyn ScalingStrategy>>,
}

impl ScalingRegistry {
    pub fn builtin() -> Self {
        let mut strategies: BTreeMap<&'static str, Box<dyn ScalingStrategy>> = BTreeMap::new();
        for strategy in [
            Box::new(RawStrategy) as Box<dyn ScalingStrategy>,
            Box::new(MeanStrategy),
            Box::new(PerSampleStrategy),
            Box::new(HeightAdjustedStrategy),
        ] {
            strategies.insert(strategy.name(), strategy);
        }
        ScalingRegistry { strategies }
    }

    pub fn get(&self, name: &str) -> Option<&dyn ScalingStrategy> {
        self.strategies.get(name).map(|s| s.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.strategies.keys().copied().collect()
    }
}

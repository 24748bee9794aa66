//! Quantitative estimators built on detected impacts: effective gravity,
//! clock-rescaling fits, the two-ball comparison, and incline acceleration.
//!
//! Everything here is a pure function of trajectories and scene geometry.
//! The unit-free design point: effective gravity needs the true drop height
//! and an observed fall time, while the two-ball comparison needs neither —
//! `t1²/t2² = h1/h2` holds for any frame rate, focal length, or clock gauge,
//! so it isolates physical consistency from calibration.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::{detect_impact, time_to_traverse, DetectError, DetectionConfig};
use crate::scene::{GroundLine, Protocol, SceneSpec};
use crate::sim::PixelTrajectory;

pub mod scaling;

pub use scaling::{
    apply_scaling, fit_mts, fit_per_sample, CalibrationData, CalibrationPair, ScalingKind,
    ScalingModel, ScalingRegistry, ScalingStrategy, SeedGroup, FIT_SEEDS,
};

/// Estimates above this are flagged (never dropped) as physically absurd.
pub const DEFAULT_OUTLIER_THRESHOLD_MPS2: f64 = 50.0;

/// Largest deviation-from-vertical angle the height correction will trust.
pub const PHI_CAP_DEG: f64 = 45.0;

/// Which correction produced a gravity estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GravityVariant {
    Raw,
    MeanScaled,
    PerSampleScaled,
    HeightAdjusted,
}

impl GravityVariant {
    pub fn name(self) -> &'static str {
        match self {
            GravityVariant::Raw => "raw",
            GravityVariant::MeanScaled => "mean_scaled",
            GravityVariant::PerSampleScaled => "per_sample_scaled",
            GravityVariant::HeightAdjusted => "height_adjusted",
        }
    }
}

/// One gravity measurement for one scene realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GravityEstimate {
    pub scene_id: String,
    pub seed: u64,
    pub variant: GravityVariant,
    pub g_eff_mps2: f64,
    /// Observed fall time after any rescaling.
    pub t_eff_s: f64,
    /// Analytic fall time of the declared drop under nominal gravity.
    pub t_gt_s: f64,
    /// Drop height fed to the estimator (nominal, or slope-corrected).
    pub h_used_m: f64,
    pub outlier: bool,
}

impl GravityEstimate {
    pub fn new(
        scene_id: impl Into<String>,
        seed: u64,
        variant: GravityVariant,
        h_used_m: f64,
        t_eff_s: f64,
        t_gt_s: f64,
        outlier_threshold_mps2: f64,
    ) -> Result<Self, MetricsError> {
        let g = effective_gravity(h_used_m, t_eff_s)?;
        Ok(GravityEstimate {
            scene_id: scene_id.into(),
            seed,
            variant,
            g_eff_mps2: g,
            t_eff_s,
            t_gt_s,
            h_used_m,
            outlier: g > outlier_threshold_mps2,
        })
    }
}

/// Outcome of the two-ball drop comparison for one scene realization.
///
/// Ball 1 is always the lower drop (relabeled if the inputs arrive the other
/// way), so `height_ratio <= 1`. `delta_t_frames` is how much longer the
/// upper ball took to cover the pixel distance the lower ball fell — zero
/// under correct physics, positive when the upper ball is slower.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoBallResult {
    pub scene_id: String,
    pub height_ratio: f64,
    pub timing_ratio: f64,
    pub delta_t_frames: f64,
    pub delta_t_s: f64,
}

/// Affine fit of timing ratio against height ratio across scenes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioFit {
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("non-positive time {0}")]
    NonPositiveTime(f64),
    #[error("non-positive height {0}")]
    NonPositiveHeight(f64),
    #[error("non-positive radius {0}")]
    NonPositiveRadius(f64),
    #[error("incline angle {0}° outside (0, 90]")]
    InvalidAngle(f64),
    #[error("empty calibration set")]
    EmptyCalibration,
    #[error("non-positive scaling factor {0}")]
    NonPositiveFactor(f64),
    #[error("calibration leakage: scene {scene_id} is in the calibration set")]
    CalibrationLeakage { scene_id: String },
    #[error("scene {scene_id} lacks a fit/evaluation seed group")]
    MissingSeedGroup { scene_id: String },
    #[error("rescaling expects a raw estimate, got {got:?}")]
    NotRawEstimate { got: GravityVariant },
    #[error("scaling model kind {kind:?} carries no time factor")]
    UnsupportedScalingKind { kind: ScalingKind },
    #[error("degenerate trajectory for ball {ball_id}: {message}")]
    DegenerateTrajectory { ball_id: String, message: String },
    #[error("degenerate fit: {message}")]
    DegenerateFit { message: String },
    #[error("expected {expected} trajectories, got {got}")]
    WrongBallCount { expected: usize, got: usize },
    #[error("trajectories disagree on fps: {fps_a} vs {fps_b}")]
    MismatchedClocks { fps_a: f64, fps_b: f64 },
    #[error("operation needs a {expected} scene, got {got}")]
    WrongProtocol {
        expected: &'static str,
        got: &'static str,
    },
    #[error("detection failed for ball {ball_id}: {source}")]
    Detection {
        ball_id: String,
        #[source]
        source: DetectError,
    },
}

fn tag_detect(ball_id: &str) -> impl Fn(DetectError) -> MetricsError + '_ {
    move |source| MetricsError::Detection {
        ball_id: ball_id.to_string(),
        source,
    }
}

/// Acceleration implied by falling `h_m` in `t_s`: `2h/t²`.
pub fn effective_gravity(h_m: f64, t_s: f64) -> Result<f64, MetricsError> {
    if !(h_m > 0.0) {
        return Err(MetricsError::NonPositiveHeight(h_m));
    }
    if !(t_s > 0.0) {
        return Err(MetricsError::NonPositiveTime(t_s));
    }
    Ok(2.0 * h_m / (t_s * t_s))
}

/// Meters per pixel at the ball's depth, from its known diameter.
pub fn pixel_scale(radius_px: f64, ball_diameter_m: f64) -> Result<f64, MetricsError> {
    if !(radius_px > 0.0) {
        return Err(MetricsError::NonPositiveRadius(radius_px));
    }
    if !(ball_diameter_m > 0.0) {
        return Err(MetricsError::NonPositiveHeight(ball_diameter_m));
    }
    Ok(ball_diameter_m / (2.0 * radius_px))
}

/// Slope-corrected drop height: the observed release→end pixel chord gives
/// the deviation-from-vertical angle `phi`, and the path the ball actually
/// covered is `h/cos(phi)`. `phi` is capped: beyond 45° the chord is telling
/// us the track is not a fall, not that the fall is steeper.
pub fn height_adjusted(
    traj: &PixelTrajectory,
    h_nominal_m: f64,
) -> Result<(f64, f64), MetricsError> {
    if !(h_nominal_m > 0.0) {
        return Err(MetricsError::NonPositiveHeight(h_nominal_m));
    }
    let prefix = traj.visible_prefix();
    if prefix.len() < 2 {
        return Err(MetricsError::DegenerateTrajectory {
            ball_id: traj.ball_id.clone(),
            message: format!("{} visible samples", prefix.len()),
        });
    }
    let first = &prefix[0];
    let last = &prefix[prefix.len() - 1];
    let du = last.cx_px - first.cx_px;
    let dv = last.cy_px - first.cy_px;
    let chord = du.hypot(dv);
    if chord < 2.0 * first.radius_px {
        return Err(MetricsError::DegenerateTrajectory {
            ball_id: traj.ball_id.clone(),
            message: format!(
                "chord {chord:.3} px is below two radii ({:.3} px)",
                2.0 * first.radius_px
            ),
        });
    }
    if dv <= 0.0 {
        return Err(MetricsError::DegenerateTrajectory {
            ball_id: traj.ball_id.clone(),
            message: format!("no net downward travel (dv = {dv:.3} px)"),
        });
    }
    let phi_deg = du.abs().atan2(dv).to_degrees().min(PHI_CAP_DEG);
    let h_adj = h_nominal_m / phi_deg.to_radians().cos();
    Ok((h_adj, phi_deg))
}

/// Compare two simultaneous drops: timing ratio against the Galilean
/// prediction, plus the lag of the upper ball over the lower ball's fall
/// distance. Both times come from the same clock, so the result is invariant
/// to any global rescaling of it.
pub fn two_ball(
    scene_id: &str,
    trajs: &[PixelTrajectory],
    heights_m: &[f64],
    ground: &GroundLine,
    config: &DetectionConfig,
) -> Result<TwoBallResult, MetricsError> {
    if trajs.len() != 2 || heights_m.len() != 2 {
        return Err(MetricsError::WrongBallCount {
            expected: 2,
            got: trajs.len().min(heights_m.len()),
        });
    }
    if trajs[0].fps != trajs[1].fps {
        return Err(MetricsError::MismatchedClocks {
            fps_a: trajs[0].fps,
            fps_b: trajs[1].fps,
        });
    }
    for &h in heights_m {
        if !(h > 0.0) {
            return Err(MetricsError::NonPositiveHeight(h));
        }
    }
    // Ball 1 is the lower drop by convention.
    let (lo, hi) = if heights_m[0] <= heights_m[1] {
        (0, 1)
    } else {
        (1, 0)
    };
    let lower = &trajs[lo];
    let upper = &trajs[hi];

    let lower_event = detect_impact(lower, ground, config).map_err(tag_detect(&lower.ball_id))?;
    let upper_event = detect_impact(upper, ground, config).map_err(tag_detect(&upper.ball_id))?;
    let t1 = lower_event.event.impact_time_s;
    let t2 = upper_event.event.impact_time_s;
    if !(t2 > 0.0) {
        return Err(MetricsError::NonPositiveTime(t2));
    }

    let traverse = time_to_traverse(upper, lower_event.event.fallen_distance_px, config)
        .map_err(tag_detect(&upper.ball_id))?;
    let delta_s = traverse - t1;

    Ok(TwoBallResult {
        scene_id: scene_id.to_string(),
        height_ratio: heights_m[lo] / heights_m[hi],
        timing_ratio: (t1 * t1) / (t2 * t2),
        delta_t_frames: delta_s * lower.fps,
        delta_t_s: delta_s,
    })
}

/// Least-squares line through (height_ratio, timing_ratio) points. Correct
/// physics gives slope 1, intercept 0; a model that ignores release height
/// gives slope 0. `through_origin` drops the intercept term.
pub fn ratio_slope(
    results: &[TwoBallResult],
    through_origin: bool,
) -> Result<RatioFit, MetricsError> {
    let n = results.len();
    if n < 2 {
        return Err(MetricsError::DegenerateFit {
            message: format!("need at least 2 ratio points, got {n}"),
        });
    }
    let xs: Vec<f64> = results.iter().map(|r| r.height_ratio).collect();
    let ys: Vec<f64> = results.iter().map(|r| r.timing_ratio).collect();
    if through_origin {
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        if sxx == 0.0 {
            return Err(MetricsError::DegenerateFit {
                message: "all height ratios are zero".into(),
            });
        }
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
        return Ok(RatioFit {
            slope: sxy / sxx,
            intercept: 0.0,
        });
    }
    let mean_x = xs.iter().sum::<f64>() / n as f64;
    let mean_y = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x) * (x - mean_x)).sum();
    if sxx == 0.0 {
        return Err(MetricsError::DegenerateFit {
            message: "all height ratios are equal".into(),
        });
    }
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let slope = sxy / sxx;
    Ok(RatioFit {
        slope,
        intercept: mean_y - slope * mean_x,
    })
}

/// Acceleration a block should show on a slope of `theta_deg`: `g·sin(θ)`.
pub fn incline_expected(gravity_mps2: f64, theta_deg: f64) -> Result<f64, MetricsError> {
    if !(gravity_mps2 > 0.0) {
        return Err(MetricsError::NonPositiveHeight(gravity_mps2));
    }
    if !(theta_deg > 0.0 && theta_deg <= 90.0) {
        return Err(MetricsError::InvalidAngle(theta_deg));
    }
    Ok(gravity_mps2 * theta_deg.to_radians().sin())
}

/// Fit the along-slope acceleration from a sliding block's track.
///
/// The pixel path length is converted to meters through the block's known
/// size, then `s(t) = a·t²/2` is least-squares fitted over the portion of
/// the track still in motion (samples at or past the slope's foot are
/// excluded — a resting block says nothing about its acceleration).
pub fn incline_measured(traj: &PixelTrajectory, scene: &SceneSpec) -> Result<f64, MetricsError> {
    if scene.protocol != Protocol::Incline {
        return Err(MetricsError::WrongProtocol {
            expected: Protocol::Incline.name(),
            got: scene.protocol.name(),
        });
    }
    let theta_deg = scene
        .incline_angle_deg
        .ok_or(MetricsError::InvalidAngle(f64::NAN))?;
    let prefix = traj.visible_prefix();
    if prefix.len() < 3 {
        return Err(MetricsError::DegenerateFit {
            message: format!("need at least 3 samples, got {}", prefix.len()),
        });
    }
    let scale_m_per_px = pixel_scale(prefix[0].radius_px, scene.ball.diameter_m)?;
    let slide_len_m =
        (scene.drop_heights_m[0] - scene.ball_radius_m()) / theta_deg.to_radians().sin();

    let origin = &prefix[0];
    let mut sum_dt2 = 0.0;
    let mut sum_t4 = 0.0;
    let mut used = 0usize;
    for s in prefix {
        let d_m = scale_m_per_px * (s.cx_px - origin.cx_px).hypot(s.cy_px - origin.cy_px);
        if d_m >= slide_len_m - 1e-9 {
            break;
        }
        let t = (s.frame_index - origin.frame_index) as f64 / traj.fps;
        sum_dt2 += d_m * t * t;
        sum_t4 += t * t * t * t;
        used += 1;
    }
    if used < 3 || sum_t4 == 0.0 {
        return Err(MetricsError::DegenerateFit {
            message: format!("only {used} in-motion samples before the slope's foot"),
        });
    }
    Ok(2.0 * sum_dt2 / sum_t4)
}

//! Scene geometry: what gets filmed, by which camera, at which rate.
//!
//! A [`SceneSpec`] pins every quantity a renderer or analyzer needs — drop
//! heights, lateral placement, camera intrinsics and pose, ball size, frame
//! rate, clip length, gravity, and the seed that reproduces the sampled
//! parts. Scene collections round-trip losslessly through JSON manifests.

mod camera;
mod manifest;
mod sampler;

pub use camera::{
    camera_height_rule, default_camera_for, ground_line, project_point, projected_radius_px,
    CameraSpec, GroundLine, DEFAULT_FOCAL_LENGTH_MM, DEFAULT_IMAGE_HEIGHT_PX,
    DEFAULT_IMAGE_WIDTH_PX, DEFAULT_SENSOR_WIDTH_MM, MIN_CAMERA_HEIGHT_M,
};
pub use manifest::{manifest_sha256, read_manifest, write_manifest, Manifest, SCHEMA_VERSION};
pub use sampler::{
    sample_incline_scenes, sample_single_ball_scenes, sample_two_ball_scenes, SceneParams,
    BALL_CATALOG,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Scene families the toolkit understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    /// One ball dropped from rest.
    SingleBall,
    /// Two identical balls released simultaneously from different heights at
    /// equal depth.
    TwoBall,
    /// A block sliding from rest down a frictionless incline.
    Incline,
}

impl Protocol {
    /// Stable name used in CLI flags and reports.
    pub fn name(&self) -> &'static str {
        match self {
            Protocol::SingleBall => "single-ball",
            Protocol::TwoBall => "two-ball",
            Protocol::Incline => "incline",
        }
    }

    /// Number of tracked objects the protocol expects.
    pub fn ball_count(&self) -> usize {
        match self {
            Protocol::TwoBall => 2,
            _ => 1,
        }
    }
}

/// The dropped object. `label` names the kind (e.g. "basketball"); only the
/// diameter enters the physics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallSpec {
    pub diameter_m: f64,
    pub label: String,
}

fn default_fps() -> f64 {
    24.0
}

fn default_duration_s() -> f64 {
    2.0
}

fn default_gravity() -> f64 {
    9.81
}

/// Complete description of one recorded scene.
///
/// Heights are measured to the *bottom* of the ball at release, so a drop
/// from `h` covers exactly `h` meters before ground contact. Two-ball scenes
/// list both heights and both lateral offsets in ball order; both balls share
/// the camera depth. Incline scenes carry the slope angle and use
/// `horizontal_offsets_m[0]` as the block's starting column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub scene_id: String,
    pub protocol: Protocol,
    pub drop_heights_m: Vec<f64>,
    pub horizontal_offsets_m: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub incline_angle_deg: Option<f64>,
    pub camera: CameraSpec,
    pub ball: BallSpec,
    #[serde(default = "default_fps")]
    pub fps: f64,
    #[serde(default = "default_duration_s")]
    pub duration_s: f64,
    #[serde(default = "default_gravity")]
    pub gravity_mps2: f64,
    pub seed: u64,
    /// Free-form generation prompt carried through untouched.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
    /// Sampler annotations (e.g. that the camera height hit its clamp).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl SceneSpec {
    /// Ball radius in meters.
    pub fn ball_radius_m(&self) -> f64 {
        self.ball.diameter_m / 2.0
    }

    /// Stable per-ball identifiers, in the order heights are listed.
    pub fn ball_ids(&self) -> Vec<String> {
        match self.protocol {
            Protocol::TwoBall => vec!["ball1".into(), "ball2".into()],
            Protocol::Incline => vec!["block".into()],
            Protocol::SingleBall => vec!["ball1".into()],
        }
    }

    /// Collect every validation violation; an empty list means the scene is
    /// well-formed.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let id = &self.scene_id;
        if id.is_empty() {
            out.push("scene_id must be non-empty".into());
        } else if !id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            out.push(format!(
                "scene {id}: scene_id may only contain [A-Za-z0-9_-]"
            ));
        }
        let expected = self.protocol.ball_count();
        if self.drop_heights_m.len() != expected {
            out.push(format!(
                "scene {id}: {} protocol needs exactly {expected} drop height(s), got {}",
                self.protocol.name(),
                self.drop_heights_m.len()
            ));
        }
        for (i, h) in self.drop_heights_m.iter().enumerate() {
            if !h.is_finite() || *h <= 0.0 {
                out.push(format!(
                    "scene {id}: drop_heights_m[{i}] must be positive and finite, got {h}"
                ));
            }
        }
        if self.horizontal_offsets_m.len() != expected {
            out.push(format!(
                "scene {id}: needs exactly {expected} horizontal offset(s), got {}",
                self.horizontal_offsets_m.len()
            ));
        }
        for (i, x) in self.horizontal_offsets_m.iter().enumerate() {
            if !x.is_finite() {
                out.push(format!(
                    "scene {id}: horizontal_offsets_m[{i}] must be finite, got {x}"
                ));
            }
        }
        match (self.protocol, self.incline_angle_deg) {
            (Protocol::Incline, None) => {
                out.push(format!(
                    "scene {id}: incline protocol requires incline_angle_deg"
                ));
            }
            (Protocol::Incline, Some(a)) if !(30.0..=75.0).contains(&a) => {
                out.push(format!(
                    "scene {id}: incline_angle_deg must lie in [30, 75], got {a}"
                ));
            }
            (Protocol::SingleBall | Protocol::TwoBall, Some(_)) => {
                out.push(format!(
                    "scene {id}: incline_angle_deg is only valid for incline scenes"
                ));
            }
            _ => {}
        }
        if !self.fps.is_finite() || self.fps <= 0.0 {
            out.push(format!(
                "scene {id}: fps must be positive, got {}",
                self.fps
            ));
        }
        if !self.duration_s.is_finite() || self.duration_s <= 0.0 {
            out.push(format!(
                "scene {id}: duration_s must be positive, got {}",
                self.duration_s
            ));
        }
        if !self.gravity_mps2.is_finite() || self.gravity_mps2 <= 0.0 {
            out.push(format!(
                "scene {id}: gravity_mps2 must be positive, got {}",
                self.gravity_mps2
            ));
        }
        if !self.ball.diameter_m.is_finite() || self.ball.diameter_m <= 0.0 {
            out.push(format!(
                "scene {id}: ball diameter must be positive, got {}",
                self.ball.diameter_m
            ));
        }
        if self.ball.label.is_empty() {
            out.push(format!("scene {id}: ball label must be non-empty"));
        }
        let cam = &self.camera;
        if cam.focal_length_mm <= 0.0 || cam.sensor_width_mm <= 0.0 {
            out.push(format!(
                "scene {id}: camera focal length and sensor width must be positive"
            ));
        }
        if !cam.distance_m.is_finite() || cam.distance_m <= 0.0 {
            out.push(format!(
                "scene {id}: camera distance must be positive, got {}",
                cam.distance_m
            ));
        }
        if !cam.height_m.is_finite() || cam.height_m < 0.0 {
            out.push(format!(
                "scene {id}: camera height must be non-negative, got {}",
                cam.height_m
            ));
        }
        if cam.image_width_px == 0 || cam.image_height_px == 0 {
            out.push(format!("scene {id}: image dimensions must be positive"));
        }
        out
    }

    /// Validate, turning any violation list into an error.
    pub fn validate(&self) -> Result<(), SceneError> {
        let violations = self.violations();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(SceneError::ManifestValidation { violations })
        }
    }
}

/// Errors from scene construction, projection, and manifest I/O.
#[derive(Debug, Error)]
pub enum SceneError {
    #[error("projection needs a strictly positive depth, got {0} m")]
    NonPositiveDepth(f64),
    #[error("manifest parse error at line {line}, column {column}: {message}")]
    ManifestParse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("manifest validation failed:\n  {}", violations.join("\n  "))]
    ManifestValidation { violations: Vec<String> },
    #[error("manifest I/O failed for {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

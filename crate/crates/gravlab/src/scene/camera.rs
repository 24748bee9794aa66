//! Pinhole camera model and deterministic camera placement.
//!
//! World coordinates: `x` lateral (meters, right positive), `y` height above
//! the ground plane (meters, up positive), `z` depth along the optical axis
//! (meters, away from the camera). The camera sits at `(0, height_m, 0)`
//! looking straight down the `+z` axis with no tilt, so a point one meter
//! below the optical axis lands *below* the image center: image rows grow
//! downward.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SceneError;

/// Pinhole camera: fixed-focal lens on a full-frame sensor, fronto-parallel
/// to the fall plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSpec {
    pub focal_length_mm: f64,
    pub sensor_width_mm: f64,
    /// Depth of the fall plane along the optical axis.
    pub distance_m: f64,
    /// Height of the optical center above the ground plane.
    pub height_m: f64,
    pub image_width_px: u32,
    pub image_height_px: u32,
}

/// Image row of the ground contact line, clamped into the image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundLine {
    pub y_ground_px: f64,
}

/// Default lens and framing used by the scene samplers: a 50 mm lens on a
/// 36 mm-wide sensor rendering 1280x720 frames.
pub const DEFAULT_FOCAL_LENGTH_MM: f64 = 50.0;
pub const DEFAULT_SENSOR_WIDTH_MM: f64 = 36.0;
pub const DEFAULT_IMAGE_WIDTH_PX: u32 = 1280;
pub const DEFAULT_IMAGE_HEIGHT_PX: u32 = 720;

/// Cameras are never placed closer to the ground than this; shorter mounts
/// would put the horizon above the frame for tall drops.
pub const MIN_CAMERA_HEIGHT_M: f64 = 0.2;

impl CameraSpec {
    /// Focal length in pixel units: `focal_mm / sensor_width_mm * image_width_px`.
    pub fn focal_px(&self) -> f64 {
        self.focal_length_mm / self.sensor_width_mm * f64::from(self.image_width_px)
    }

    /// Image center column.
    pub fn cx(&self) -> f64 {
        f64::from(self.image_width_px) / 2.0
    }

    /// Image center row.
    pub fn cy(&self) -> f64 {
        f64::from(self.image_height_px) / 2.0
    }
}

/// Project a world point `(x_m, y_m, z_m)` to pixel coordinates `(u, v)`.
///
/// `u = cx + focal_px * x / z`; `v = cy - focal_px * (y - height_m) / z`.
/// Points above the optical axis project above the image center (smaller
/// `v`). Depth must be strictly positive.
pub fn project_point(
    camera: &CameraSpec,
    point_m: (f64, f64, f64),
) -> Result<(f64, f64), SceneError> {
    let (x, y, z) = point_m;
    if z <= 0.0 {
        return Err(SceneError::NonPositiveDepth(z));
    }
    let f = camera.focal_px();
    let u = camera.cx() + f * x / z;
    let v = camera.cy() - f * (y - camera.height_m) / z;
    Ok((u, v))
}

/// Apparent pixel radius of a sphere of radius `radius_m` at depth `z_m`
/// (equal-depth approximation: `focal_px * r / z`).
pub fn projected_radius_px(
    camera: &CameraSpec,
    radius_m: f64,
    z_m: f64,
) -> Result<f64, SceneError> {
    if z_m <= 0.0 {
        return Err(SceneError::NonPositiveDepth(z_m));
    }
    Ok(camera.focal_px() * radius_m / z_m)
}

/// Image row of the ground plane at the camera's working depth, clamped to
/// the image. Under a fronto-parallel pinhole the row is independent of the
/// lateral position.
pub fn ground_line(camera: &CameraSpec) -> GroundLine {
    let f = camera.focal_px();
    let raw = camera.cy() + f * camera.height_m / camera.distance_m;
    GroundLine {
        y_ground_px: raw.clamp(0.0, f64::from(camera.image_height_px)),
    }
}

/// Camera height rule: half the tallest drop plus a per-scene offset,
/// clamped to [`MIN_CAMERA_HEIGHT_M`].
pub fn camera_height_rule(max_height_m: f64, offset_m: f64) -> f64 {
    (max_height_m / 2.0 + offset_m).max(MIN_CAMERA_HEIGHT_M)
}

/// Sample a deterministic camera for a scene.
///
/// Height follows [`camera_height_rule`] with an offset uniform on
/// [-0.5, 0.5] m. Distance starts uniform on [1.0, 8.0] m and is increased
/// until the whole trajectory envelope — from the ball top at release down to
/// the ground, and `lateral_extent_m` to each side — projects inside the
/// image with one ball radius of margin. Identical inputs produce an
/// identical camera.
pub fn default_camera_for(
    heights_m: &[f64],
    ball_diameter_m: f64,
    lateral_extent_m: f64,
    seed: u64,
) -> CameraSpec {
    assert!(
        !heights_m.is_empty(),
        "camera sampling needs at least one drop height"
    );
    let max_h = heights_m.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset: f64 = rng.gen_range(-0.5..=0.5);
    let height_m = camera_height_rule(max_h, offset);
    let sampled_distance: f64 = rng.gen_range(1.0..8.0);

    let mut camera = CameraSpec {
        focal_length_mm: DEFAULT_FOCAL_LENGTH_MM,
        sensor_width_mm: DEFAULT_SENSOR_WIDTH_MM,
        distance_m: sampled_distance,
        height_m,
        image_width_px: DEFAULT_IMAGE_WIDTH_PX,
        image_height_px: DEFAULT_IMAGE_HEIGHT_PX,
    };
    camera.distance_m = sampled_distance.max(min_fitting_distance(
        &camera,
        max_h,
        ball_diameter_m,
        lateral_extent_m,
    ));
    camera
}

/// Smallest depth at which the trajectory envelope fits the image with one
/// ball radius of margin on every side.
fn min_fitting_distance(
    camera: &CameraSpec,
    max_h: f64,
    ball_diameter_m: f64,
    lateral_extent_m: f64,
) -> f64 {
    let r = ball_diameter_m / 2.0;
    let f = camera.focal_px();
    // Vertical extent relative to the optical axis: ball top at release above
    // it, ground line below it; whichever is farther governs.
    let top = max_h + 2.0 * r;
    let vertical = (top - camera.height_m).max(camera.height_m) + r;
    let z_vertical = f * vertical / (f64::from(camera.image_height_px) / 2.0);
    let lateral = lateral_extent_m + r;
    let z_lateral = f * lateral / (f64::from(camera.image_width_px) / 2.0);
    // Nudge past the exact bound so the extremes land strictly inside.
    z_vertical.max(z_lateral) * (1.0 + 1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn test_camera() -> CameraSpec {
        CameraSpec {
            focal_length_mm: 50.0,
            sensor_width_mm: 36.0,
            distance_m: 4.0,
            height_m: 2.0,
            image_width_px: 1280,
            image_height_px: 720,
        }
    }

    #[test]
    fn focal_px_for_default_lens() {
        // 50 mm on a 36 mm sensor at 1280 columns.
        assert_relative_eq!(
            test_camera().focal_px(),
            50.0 / 36.0 * 1280.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(test_camera().focal_px(), 1777.7777777777778, epsilon = 1e-9);
    }

    #[test]
    fn point_on_optical_axis_projects_to_image_center() {
        let cam = test_camera();
        let (u, v) = project_point(&cam, (0.0, cam.height_m, 3.0)).unwrap();
        assert_relative_eq!(u, 640.0, epsilon = 1e-12);
        assert_relative_eq!(v, 360.0, epsilon = 1e-12);
    }

    #[test]
    fn point_below_axis_projects_below_center() {
        // One meter below the camera height at 4 m depth:
        // v = cy + 1777.78 / 4 = cy + 444.44 px.
        let cam = test_camera();
        let (_, v) = project_point(&cam, (0.0, cam.height_m - 1.0, 4.0)).unwrap();
        assert_relative_eq!(v, cam.cy() + 1777.7777777777778 / 4.0, epsilon = 1e-9);
        assert_relative_eq!(v - cam.cy(), 444.44444444444446, epsilon = 1e-9);
    }

    #[test]
    fn depth_must_be_positive() {
        let cam = test_camera();
        assert!(matches!(
            project_point(&cam, (0.0, 1.0, 0.0)),
            Err(SceneError::NonPositiveDepth(_))
        ));
        assert!(matches!(
            project_point(&cam, (0.0, 1.0, -2.0)),
            Err(SceneError::NonPositiveDepth(_))
        ));
        assert!(matches!(
            projected_radius_px(&cam, 0.12, 0.0),
            Err(SceneError::NonPositiveDepth(_))
        ));
    }

    #[test]
    fn ground_line_at_two_meter_camera_height() {
        // v = cy + focal_px * 2 / 4 = cy + 888.89, beyond the 720-row image,
        // so the stored line clamps to the image bottom.
        let cam = test_camera();
        let raw = cam.cy() + 1777.7777777777778 * 2.0 / 4.0;
        assert_relative_eq!(raw, 360.0 + 888.8888888888889, epsilon = 1e-9);
        assert_relative_eq!(ground_line(&cam).y_ground_px, 720.0, epsilon = 1e-12);
    }

    #[test]
    fn ground_line_inside_image_is_unclamped() {
        let cam = CameraSpec {
            distance_m: 12.0,
            ..test_camera()
        };
        let expected = cam.cy() + cam.focal_px() * 2.0 / 12.0;
        assert_relative_eq!(ground_line(&cam).y_ground_px, expected, epsilon = 1e-12);
        assert!(ground_line(&cam).y_ground_px < 720.0);
    }

    #[test]
    fn ground_line_for_axis_level_camera_is_image_center() {
        let cam = CameraSpec {
            height_m: 0.0,
            ..test_camera()
        };
        assert_relative_eq!(ground_line(&cam).y_ground_px, 360.0, epsilon = 1e-12);
    }

    #[test]
    fn camera_height_rule_halves_tallest_drop() {
        // A 4 m drop with zero offset puts the camera at 2 m.
        assert_relative_eq!(camera_height_rule(4.0, 0.0), 2.0, epsilon = 1e-12);
        assert_relative_eq!(camera_height_rule(1.0, 0.25), 0.75, epsilon = 1e-12);
        // Short drops with a low offset clamp to the minimum mount height.
        assert_relative_eq!(
            camera_height_rule(0.5, -0.5),
            MIN_CAMERA_HEIGHT_M,
            epsilon = 1e-12
        );
    }

    #[test]
    fn default_camera_is_deterministic_per_seed() {
        let a = default_camera_for(&[2.5], 0.24, 0.0, 99);
        let b = default_camera_for(&[2.5], 0.24, 0.0, 99);
        let c = default_camera_for(&[2.5], 0.24, 0.0, 100);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn default_camera_keeps_trajectory_inside_image() {
        for seed in 0..200 {
            for &h in &[0.5, 4.0] {
                let cam = default_camera_for(&[h], 0.24, 0.37, seed);
                let r = 0.12;
                let (_, v_top) = project_point(&cam, (0.37, h + 2.0 * r, cam.distance_m)).unwrap();
                let (_, v_ground) = project_point(&cam, (0.0, 0.0, cam.distance_m)).unwrap();
                assert!(
                    (0.0..720.0).contains(&v_top),
                    "seed {seed} h {h}: top row {v_top}"
                );
                assert!(
                    (0.0..720.0).contains(&v_ground),
                    "seed {seed} h {h}: ground row {v_ground}"
                );
                assert!(cam.height_m >= MIN_CAMERA_HEIGHT_M);
                assert!(cam.distance_m >= 1.0);
            }
        }
    }
}

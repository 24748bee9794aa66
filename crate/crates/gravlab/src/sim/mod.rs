//! Exact-physics renderer: scene plus motion plan in, pixel trajectories out.
//!
//! Balls fall from rest with their bottom at the listed drop height, so the
//! bottom covers exactly `h` meters before ground contact at
//! `t = sqrt(2 h / g)`; after contact they rest in the contact pose (no
//! bounce). Incline blocks slide from rest at `g sin(theta)` along the
//! slope. Motion is integrated in closed form and sampled at `k / fps`, so
//! the only randomness is explicitly seeded centroid noise.

mod degrade;
mod trajectory;

pub use degrade::{
    parse_degradation_file, read_degradation_file, AngledFall, BallPlan, BallSelector,
    CentroidNoise, Degradation, DegradationRegistry, DegradationRule, DegradationSet, Hover,
    MotionPlan, PerObjectGravity, SceneSelector, TimeDilation,
};
pub use trajectory::{
    read_trajectories, write_trajectories, PixelTrajectory, TrajectoryFile, TrajectorySample,
};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::scene::{project_point, projected_radius_px, Protocol, SceneError, SceneSpec};

/// Errors from simulation, degradation handling, and trajectory I/O.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("gravity must be strictly positive, got {0} m/s^2")]
    NonPositiveGravity(f64),
    #[error("degradation {kind} does not fit scene {scene_id}: {message}")]
    DegradationMismatch {
        kind: String,
        scene_id: String,
        message: String,
    },
    #[error("unknown degradation kind {kind:?}; known kinds: {known}")]
    UnknownDegradation { kind: String, known: String },
    #[error("degradation file error: {message}")]
    DegradationFile { message: String },
    #[error("trajectory parse error at line {line}: {message}")]
    TrajectoryParse { line: usize, message: String },
    #[error("invalid trajectory for ball {ball_id}: {message}")]
    InvalidTrajectory { ball_id: String, message: String },
    #[error("trajectory I/O failed for {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Scene(#[from] SceneError),
}

/// Free-fall time from rest over height `h`: `sqrt(2 h / g)`.
///
/// `h` must be non-negative; gravity must be strictly positive.
pub fn fall_time(h_m: f64, g_mps2: f64) -> Result<f64, SimError> {
    if !(g_mps2.is_finite() && g_mps2 > 0.0) {
        return Err(SimError::NonPositiveGravity(g_mps2));
    }
    assert!(h_m >= 0.0, "fall height must be non-negative, got {h_m}");
    Ok((2.0 * h_m / g_mps2).sqrt())
}

/// Closed-form world-space motion of one ball on the video clock.
#[derive(Debug, Clone, Copy)]
pub struct BallMotion {
    /// Ball-center position at release.
    pub release_m: (f64, f64),
    /// Unit direction of travel.
    pub dir: (f64, f64),
    /// Acceleration along the path.
    pub accel_mps2: f64,
    /// Path length from release to the rest pose.
    pub path_len_m: f64,
    /// Stationary hold before release, physical clock.
    pub release_delay_s: f64,
    /// Video-clock stretch: `pos(t) = path(t / clock_scale)`.
    pub clock_scale: f64,
    pub depth_m: f64,
    pub radius_m: f64,
}

impl BallMotion {
    /// Ball-center position at video time `t_s`. Before release the ball
    /// holds the release pose; after the path is exhausted it rests.
    pub fn position_at(&self, t_s: f64) -> (f64, f64) {
        let tau = (t_s / self.clock_scale - self.release_delay_s).max(0.0);
        let s = (0.5 * self.accel_mps2 * tau * tau).min(self.path_len_m);
        (
            self.release_m.0 + s * self.dir.0,
            self.release_m.1 + s * self.dir.1,
        )
    }

    /// Video time at which the rest pose is reached.
    pub fn rest_time_s(&self) -> f64 {
        let tau = (2.0 * self.path_len_m / self.accel_mps2).sqrt();
        (tau + self.release_delay_s) * self.clock_scale
    }
}

/// Build the closed-form motions for a scene under a motion plan.
pub fn build_motions(scene: &SceneSpec, plan: &MotionPlan) -> Result<Vec<BallMotion>, SimError> {
    let r = scene.ball_radius_m();
    let z = scene.camera.distance_m;
    plan.balls
        .iter()
        .enumerate()
        .map(|(i, ball)| {
            if !(ball.gravity_mps2.is_finite() && ball.gravity_mps2 > 0.0) {
                return Err(SimError::NonPositiveGravity(ball.gravity_mps2));
            }
            let motion = match scene.protocol {
                Protocol::SingleBall | Protocol::TwoBall => {
                    let h = scene.drop_heights_m[i];
                    let x0 = scene.horizontal_offsets_m[i];
                    let phi = ball.tilt_deg.to_radians();
                    BallMotion {
                        release_m: (x0, h + r),
                        dir: (phi.sin(), -phi.cos()),
                        accel_mps2: ball.gravity_mps2,
                        // The bottom starts at h and must reach the ground, a
                        // vertical drop of h along a path tilted by phi.
                        path_len_m: h / phi.cos(),
                        release_delay_s: ball.release_delay_s,
                        clock_scale: ball.clock_scale,
                        depth_m: z,
                        radius_m: r,
                    }
                }
                Protocol::Incline => {
                    let h = scene.drop_heights_m[i];
                    let x0 = scene.horizontal_offsets_m[i];
                    let theta = scene
                        .incline_angle_deg
                        .expect("validated incline scene carries an angle")
                        .to_radians();
                    BallMotion {
                        release_m: (x0, h),
                        dir: (theta.cos(), -theta.sin()),
                        // Along-slope component of gravity; theta = 90 degrees
                        // degenerates to free fall.
                        accel_mps2: ball.gravity_mps2 * theta.sin(),
                        path_len_m: (h - r).max(0.0) / theta.sin(),
                        release_delay_s: ball.release_delay_s,
                        clock_scale: ball.clock_scale,
                        depth_m: z,
                        radius_m: r,
                    }
                }
            };
            Ok(motion)
        })
        .collect()
}

/// Number of frames a scene yields: one sample every `1 / fps` seconds from
/// `t = 0`, `round(duration * fps)` in total.
pub fn frame_count(scene: &SceneSpec) -> u64 {
    (scene.duration_s * scene.fps).round().max(1.0) as u64
}

fn noise_rng(scene: &SceneSpec, realization_seed: u64, ball_index: usize) -> ChaCha8Rng {
    // Stable seed mix: scene seed, realization seed, and ball index must each
    // move the stream.
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for part in [scene.seed, realization_seed, ball_index as u64] {
        h ^= part;
        h = h.wrapping_mul(0x1000_0000_01b3);
        h ^= h >> 29;
    }
    ChaCha8Rng::seed_from_u64(h)
}

/// Simulate a scene under a list of degradations.
///
/// The trajectory is the exact projected motion sampled at `k / fps`; the
/// simulation truncates at the clip end and never extrapolates. Noise (if
/// any) is the only stochastic element and is reproducible from
/// `(scene.seed, realization_seed)`.
pub fn simulate_scene(
    scene: &SceneSpec,
    degradations: &[&dyn Degradation],
    realization_seed: u64,
) -> Result<Vec<PixelTrajectory>, SimError> {
    scene.validate()?;
    let mut plan = MotionPlan::from_scene(scene);
    for degradation in degradations {
        degradation.validate(scene)?;
        degradation.apply(&mut plan, scene)?;
    }
    let motions = build_motions(scene, &plan)?;
    let frames = frame_count(scene);

    let mut out = Vec::with_capacity(motions.len());
    for (i, (motion, ball_plan)) in motions.iter().zip(&plan.balls).enumerate() {
        let radius_px = projected_radius_px(&scene.camera, motion.radius_m, motion.depth_m)?;
        let mut rng = noise_rng(scene, realization_seed, i);
        let sigma = ball_plan.noise_sigma_px;
        let mut samples = Vec::with_capacity(frames as usize);
        for k in 0..frames {
            let t = k as f64 / scene.fps;
            let (x, y) = motion.position_at(t);
            let (mut u, mut v) = project_point(&scene.camera, (x, y, motion.depth_m))?;
            if sigma > 0.0 {
                let nu: f64 = rng.sample(StandardNormal);
                let nv: f64 = rng.sample(StandardNormal);
                u += sigma * nu;
                v += sigma * nv;
            }
            samples.push(TrajectorySample {
                frame_index: k,
                cx_px: u,
                cy_px: v,
                radius_px,
                visible: true,
            });
        }
        out.push(PixelTrajectory {
            ball_id: ball_plan.ball_id.clone(),
            fps: scene.fps,
            samples,
        });
    }
    Ok(out)
}

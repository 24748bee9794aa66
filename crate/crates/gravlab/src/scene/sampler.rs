//! Deterministic scene samplers behind the `gen-scenes` command.
//!
//! Every sampled quantity flows from one master seed: the master stream
//! assigns per-scene seeds, and each scene derives its own geometry and
//! camera from its seed alone, so regenerating a manifest — or a single
//! scene — always reproduces the same bytes.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{default_camera_for, BallSpec, Protocol, SceneSpec, MIN_CAMERA_HEIGHT_M};

/// Drop heights sampled by every protocol, in meters.
const HEIGHT_RANGE_M: (f64, f64) = (0.5, 4.0);
/// Two-ball height ratios span this band.
const RATIO_RANGE: (f64, f64) = (0.25, 3.5);
/// Incline angles, degrees from horizontal.
const INCLINE_RANGE_DEG: (f64, f64) = (30.0, 75.0);
/// Lateral gap between two-ball centers beyond one diameter.
const TWO_BALL_EXTRA_GAP_M: f64 = 0.5;

/// Common sports balls with regulation-ish diameters.
pub const BALL_CATALOG: &[(&str, f64)] = &[
    ("basketball", 0.24),
    ("soccer", 0.22),
    ("volleyball", 0.21),
    ("baseball", 0.074),
    ("tennis", 0.067),
];

/// Rate/length/gravity knobs shared by all sampled scenes.
#[derive(Debug, Clone, Copy)]
pub struct SceneParams {
    pub fps: f64,
    pub duration_s: f64,
    pub gravity_mps2: f64,
}

impl Default for SceneParams {
    fn default() -> Self {
        SceneParams {
            fps: 24.0,
            duration_s: 2.0,
            gravity_mps2: 9.81,
        }
    }
}

/// Salt so the camera stream never aliases the geometry stream.
const CAMERA_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

fn scene_rng(scene_seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(scene_seed)
}

fn pick_ball(rng: &mut ChaCha8Rng) -> BallSpec {
    let (label, diameter_m) = BALL_CATALOG[rng.gen_range(0..BALL_CATALOG.len())];
    BallSpec {
        diameter_m,
        label: label.to_string(),
    }
}

fn note_camera_clamp(scene: &mut SceneSpec) {
    if scene.camera.height_m == MIN_CAMERA_HEIGHT_M {
        scene
            .notes
            .push(format!("camera height clamped to {MIN_CAMERA_HEIGHT_M} m"));
    }
}

/// Sample `count` single-ball drop scenes with heights uniform on [0.5, 4.0] m.
pub fn sample_single_ball_scenes(
    count: usize,
    master_seed: u64,
    params: &SceneParams,
) -> Vec<SceneSpec> {
    let mut master = ChaCha8Rng::seed_from_u64(master_seed);
    (0..count)
        .map(|i| {
            let seed: u64 = master.gen();
            let mut rng = scene_rng(seed);
            let h = rng.gen_range(HEIGHT_RANGE_M.0..=HEIGHT_RANGE_M.1);
            let ball = pick_ball(&mut rng);
            let camera = default_camera_for(&[h], ball.diameter_m, 0.0, seed ^ CAMERA_SEED_SALT);
            let mut scene = SceneSpec {
                scene_id: format!("single-{i:04}"),
                protocol: Protocol::SingleBall,
                drop_heights_m: vec![h],
                horizontal_offsets_m: vec![0.0],
                incline_angle_deg: None,
                camera,
                ball,
                fps: params.fps,
                duration_s: params.duration_s,
                gravity_mps2: params.gravity_mps2,
                seed,
                prompt: None,
                notes: Vec::new(),
            };
            note_camera_clamp(&mut scene);
            scene
        })
        .collect()
}

/// Sample `count` two-ball scenes. Height ratios stride across [0.25, 3.5]
/// with per-scene jitter so any reasonably sized batch spans the band; both
/// heights stay inside [0.5, 4.0] m and both balls share the camera depth,
/// separated laterally by one diameter plus half a meter.
pub fn sample_two_ball_scenes(
    count: usize,
    master_seed: u64,
    params: &SceneParams,
) -> Vec<SceneSpec> {
    let mut master = ChaCha8Rng::seed_from_u64(master_seed);
    let (lo, hi) = RATIO_RANGE;
    (0..count)
        .map(|i| {
            let seed: u64 = master.gen();
            let mut rng = scene_rng(seed);
            let stride = (hi - lo) / count.max(1) as f64;
            let ratio = lo + (i as f64 + rng.gen_range(0.0..1.0)) * stride;
            // h1 = ratio * h2 with both heights inside the sampling band.
            let (h_lo, h_hi) = HEIGHT_RANGE_M;
            let h2_min = h_lo.max(h_lo / ratio);
            let h2_max = h_hi.min(h_hi / ratio);
            let h2 = rng.gen_range(h2_min..=h2_max);
            let h1 = (ratio * h2).clamp(h_lo, h_hi);
            let ball = pick_ball(&mut rng);
            let separation = ball.diameter_m + TWO_BALL_EXTRA_GAP_M;
            let offsets = vec![-separation / 2.0, separation / 2.0];
            let camera = default_camera_for(
                &[h1, h2],
                ball.diameter_m,
                separation / 2.0,
                seed ^ CAMERA_SEED_SALT,
            );
            let mut scene = SceneSpec {
                scene_id: format!("two-{i:04}"),
                protocol: Protocol::TwoBall,
                drop_heights_m: vec![h1, h2],
                horizontal_offsets_m: offsets,
                incline_angle_deg: None,
                camera,
                ball,
                fps: params.fps,
                duration_s: params.duration_s,
                gravity_mps2: params.gravity_mps2,
                seed,
                prompt: None,
                notes: Vec::new(),
            };
            note_camera_clamp(&mut scene);
            scene
        })
        .collect()
}

/// Sample `count` incline scenes with slope angles uniform on [30, 75]
/// degrees. The block starts at drop height `h` and slides to the ground, so
/// the run is centered laterally under the camera.
pub fn sample_incline_scenes(
    count: usize,
    master_seed: u64,
    params: &SceneParams,
) -> Vec<SceneSpec> {
    let mut master = ChaCha8Rng::seed_from_u64(master_seed);
    (0..count)
        .map(|i| {
            let seed: u64 = master.gen();
            let mut rng = scene_rng(seed);
            let angle_deg = rng.gen_range(INCLINE_RANGE_DEG.0..=INCLINE_RANGE_DEG.1);
            let h = rng.gen_range(HEIGHT_RANGE_M.0..=HEIGHT_RANGE_M.1);
            let ball = BallSpec {
                diameter_m: 0.3,
                label: "block".into(),
            };
            let r = ball.diameter_m / 2.0;
            let theta = angle_deg.to_radians();
            // Slide length from release down to one radius above the ground,
            // and the horizontal run it covers.
            let slide_len = (h - r).max(0.0) / theta.sin();
            let run = slide_len * theta.cos();
            let camera =
                default_camera_for(&[h], ball.diameter_m, run / 2.0, seed ^ CAMERA_SEED_SALT);
            let mut scene = SceneSpec {
                scene_id: format!("incline-{i:04}"),
                protocol: Protocol::Incline,
                drop_heights_m: vec![h],
                horizontal_offsets_m: vec![-run / 2.0],
                incline_angle_deg: Some(angle_deg),
                camera,
                ball,
                fps: params.fps,
                duration_s: params.duration_s,
                gravity_mps2: params.gravity_mps2,
                seed,
                prompt: None,
                notes: Vec::new(),
            };
            note_camera_clamp(&mut scene);
            scene
        })
        .collect()
}

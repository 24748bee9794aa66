//! Strobe composites: ball outlines at fixed time ticks flattened into one
//! vector frame, the classic way to show whether fall spacing accelerates
//! like gravity. Positions between stored frames come from local quadratic
//! interpolation, which is exact for ballistic pixel tracks.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

use crate::detect::{detect_impact, DetectError, DetectionConfig};
use crate::scene::{
    ground_line, project_point, projected_radius_px, Protocol, SceneError, SceneSpec,
};
use crate::sim::{fall_time, PixelTrajectory, SimError};

/// Ticks per fall when no explicit interval is given: the tallest drop's
/// Earth fall time divided into this many equal segments.
pub const DEFAULT_STROBE_SEGMENTS: u32 = 8;

/// Which clock places the strobe ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrobeReference {
    /// Fixed interval on the clip clock, ending at the analytic Earth impact
    /// of the tallest drop. A slowed-down ball shows compressed spacing.
    EarthTime,
    /// Each ball's own release-to-detected-impact span divided into
    /// [`DEFAULT_STROBE_SEGMENTS`] equal ticks, so every ball spans release
    /// to touchdown regardless of playback speed.
    OwnImpact,
}

#[derive(Debug, Error)]
pub enum StrobeError {
    #[error("strobe interval must be positive, got {0}")]
    NonPositiveInterval(f64),
    #[error("scene lists {expected} tracked object(s) but {got} trajectories were supplied")]
    WrongTrajectoryCount { expected: usize, got: usize },
    #[error("trajectory {ball_id} has no visible samples")]
    NoVisibleSamples { ball_id: String },
    #[error("ball {ball_id}: {source}")]
    Detect {
        ball_id: String,
        #[source]
        source: DetectError,
    },
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// One drawn outline: where a ball's center sits at one tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrobePoint {
    pub time_s: f64,
    pub cx_px: f64,
    pub cy_px: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallStrobes {
    pub ball_id: String,
    pub radius_px: f64,
    pub positions: Vec<StrobePoint>,
}

/// Dashed line at the row where the upper ball's underside should be the
/// instant the lower ball lands, if both obey the same gravity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectedMarker {
    pub cx_px: f64,
    pub cy_px: f64,
    pub at_time_s: f64,
    pub half_width_px: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrobeComposite {
    pub scene_id: String,
    pub image_width_px: u32,
    pub image_height_px: u32,
    pub ground_y_px: f64,
    pub reference: StrobeReference,
    /// Tick spacing actually used for the earth-time reference.
    pub interval_s: f64,
    pub balls: Vec<BallStrobes>,
    pub expected_marker: Option<ExpectedMarker>,
}

/// Stillness threshold for spotting the trailing rest plateau, in pixels
/// per frame; matches the detector's stopped threshold.
const STILL_EPS_PX_PER_FRAME: f64 = 1.0;

/// Center position at an arbitrary instant, from the visible samples.
///
/// Uses quadratic interpolation through the three nearest samples (linear
/// with only two), so constant-acceleration tracks reproduce exactly. The
/// landing needs care: a stencil spanning the frame interval that contains
/// the impact mixes falling and resting samples and can misplace the point
/// by the full per-frame speed. When the interval around `time_s` steps
/// onto the trailing rest plateau, the falling samples are instead extended
/// to their own crossing of the rest row — the impact detector's arithmetic
/// — and the rest pose is held beyond it. Returns `None` outside the
/// visible span.
pub fn position_at(traj: &PixelTrajectory, time_s: f64) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64, f64)> = traj
        .samples
        .iter()
        .filter(|s| s.visible)
        .map(|s| (s.frame_index as f64 / traj.fps, s.cx_px, s.cy_px))
        .collect();
    if pts.is_empty() {
        return None;
    }
    let (t_first, t_last) = (pts[0].0, pts[pts.len() - 1].0);
    let slack = 0.5 / traj.fps;
    if time_s < t_first - slack || time_s > t_last + slack {
        return None;
    }
    let t = time_s.clamp(t_first, t_last);
    match pts.len() {
        1 => Some((pts[0].1, pts[0].2)),
        2 => Some(lagrange(&pts, t)),
        _ => {
            // Last sample index at or before t, capped so a forward neighbor
            // exists; center the stencil when possible.
            let j = pts
                .partition_point(|p| p.0 <= t)
                .saturating_sub(1)
                .min(pts.len() - 2);
            // Row speed of the step ending at sample i, pixels per frame.
            let step_rate =
                |i: usize| (pts[i].2 - pts[i - 1].2) / ((pts[i].0 - pts[i - 1].0) * traj.fps);
            let still = |i: usize| step_rate(i).abs() < STILL_EPS_PX_PER_FRAME;
            // The queried interval ends on the rest plateau exactly when its
            // closing step is the last fast one in the track.
            let lands_here = !still(j + 1) && ((j + 2)..pts.len()).all(still);
            if lands_here {
                let falling = &pts[j.saturating_sub(2)..=j];
                let (rest_cx, rest_cy) = (pts[j + 1].1, pts[j + 1].2);
                let tc =
                    falling_crossing_s(falling, rest_cy, traj.fps).clamp(pts[j].0, pts[j + 1].0);
                if t >= tc {
                    Some((rest_cx, rest_cy))
                } else {
                    Some(lagrange(falling, t))
                }
            } else {
                let lo = if j == 0 { 0 } else { j - 1 };
                Some(lagrange(&pts[lo..lo + 3], t))
            }
        }
    }
}

/// When the falling samples' extension first reaches `level` (a row below
/// all of them), in seconds. Quadratic through three consecutive
/// strictly-descending samples — the detector's refinement stencil — with
/// linear and degenerate fallbacks; the caller clamps the result into the
/// landing interval.
fn falling_crossing_s(pts: &[(f64, f64, f64)], level: f64, fps: f64) -> f64 {
    let n = pts.len();
    let (t1, y1) = (pts[n - 1].0, pts[n - 1].2);
    let m = level - y1;
    if m <= 0.0 || n == 1 {
        return t1;
    }
    if n >= 3 {
        let (t3, y3) = (pts[n - 3].0, pts[n - 3].2);
        let (t2, y2) = (pts[n - 2].0, pts[n - 2].2);
        let consecutive =
            ((t1 - t2) * fps - 1.0).abs() < 1e-9 && ((t2 - t3) * fps - 1.0).abs() < 1e-9;
        if consecutive && y3 < y2 && y2 < y1 {
            // y(tau) = y1 + v tau + a tau^2 / 2, tau in frames past t1.
            let a = y1 - 2.0 * y2 + y3;
            let v = (3.0 * y1 - 4.0 * y2 + y3) / 2.0;
            if v > 0.0 {
                let disc = v * v + 2.0 * a * m;
                if a.abs() > 1e-12 * v.max(1.0) && disc >= 0.0 {
                    return t1 + (disc.sqrt() - v) / a / fps;
                }
                return t1 + m / v / fps;
            }
            return t1;
        }
    }
    let (t2, y2) = (pts[n - 2].0, pts[n - 2].2);
    let slope = (y1 - y2) / ((t1 - t2) * fps);
    if slope > 0.0 {
        t1 + m / slope / fps
    } else {
        t1
    }
}

fn lagrange(pts: &[(f64, f64, f64)], t: f64) -> (f64, f64) {
    let mut cx = 0.0;
    let mut cy = 0.0;
    for (i, &(ti, xi, yi)) in pts.iter().enumerate() {
        let mut w = 1.0;
        for (k, &(tk, _, _)) in pts.iter().enumerate() {
            if k != i {
                w *= (t - tk) / (ti - tk);
            }
        }
        cx += w * xi;
        cy += w * yi;
    }
    (cx, cy)
}

/// Default tick spacing for a scene: tallest drop's Earth fall time divided
/// into [`DEFAULT_STROBE_SEGMENTS`] segments.
pub fn default_interval_s(scene: &SceneSpec) -> Result<f64, StrobeError> {
    let max_h = scene
        .drop_heights_m
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(fall_time(max_h, scene.gravity_mps2)? / f64::from(DEFAULT_STROBE_SEGMENTS))
}

/// Build the composite for one scene realization.
///
/// Trajectories must be listed in the scene's ball order. The expected
/// marker is drawn only for two-ball scenes; it marks height `h_hi - h_lo`
/// above the ground at the upper ball's column — where Galileo puts the
/// upper ball's underside at the instant the lower ball is seen to land.
pub fn compose_strobe(
    scene: &SceneSpec,
    trajectories: &[PixelTrajectory],
    reference: StrobeReference,
    interval_s: Option<f64>,
    show_expected_marker: bool,
    detection: &DetectionConfig,
) -> Result<StrobeComposite, StrobeError> {
    let expected = scene.protocol.ball_count();
    if trajectories.len() != expected {
        return Err(StrobeError::WrongTrajectoryCount {
            expected,
            got: trajectories.len(),
        });
    }
    let interval = match interval_s {
        Some(v) if v > 0.0 => v,
        Some(v) => return Err(StrobeError::NonPositiveInterval(v)),
        None => default_interval_s(scene)?,
    };
    let ground = ground_line(&scene.camera);

    let earth_end = scene
        .drop_heights_m
        .iter()
        .map(|&h| fall_time(h, scene.gravity_mps2))
        .try_fold(f64::NEG_INFINITY, |acc, t| t.map(|t| acc.max(t)))?;

    let mut balls = Vec::new();
    for traj in trajectories {
        let radius_px = traj
            .samples
            .iter()
            .find(|s| s.visible)
            .map(|s| s.radius_px)
            .ok_or_else(|| StrobeError::NoVisibleSamples {
                ball_id: traj.ball_id.clone(),
            })?;
        let ticks: Vec<f64> = match reference {
            StrobeReference::EarthTime => {
                let mut ticks = Vec::new();
                let mut k = 0u32;
                loop {
                    let t = f64::from(k) * interval;
                    if t > earth_end + 1e-9 {
                        break;
                    }
                    ticks.push(t);
                    k += 1;
                }
                ticks
            }
            StrobeReference::OwnImpact => {
                let outcome = detect_impact(traj, &ground, detection).map_err(|source| {
                    StrobeError::Detect {
                        ball_id: traj.ball_id.clone(),
                        source,
                    }
                })?;
                let impact = outcome.event.impact_time_s;
                (0..=DEFAULT_STROBE_SEGMENTS)
                    .map(|k| impact * f64::from(k) / f64::from(DEFAULT_STROBE_SEGMENTS))
                    .collect()
            }
        };
        let positions = ticks
            .into_iter()
            .filter_map(|t| {
                position_at(traj, t).map(|(cx, cy)| StrobePoint {
                    time_s: t,
                    cx_px: cx,
                    cy_px: cy,
                })
            })
            .collect();
        balls.push(BallStrobes {
            ball_id: traj.ball_id.clone(),
            radius_px,
            positions,
        });
    }

    let expected_marker = if show_expected_marker && scene.protocol == Protocol::TwoBall {
        Some(expected_marker(scene, trajectories, detection)?)
    } else {
        None
    };

    Ok(StrobeComposite {
        scene_id: scene.scene_id.clone(),
        image_width_px: scene.camera.image_width_px,
        image_height_px: scene.camera.image_height_px,
        ground_y_px: ground.y_ground_px,
        reference,
        interval_s: interval,
        balls,
        expected_marker,
    })
}

fn expected_marker(
    scene: &SceneSpec,
    trajectories: &[PixelTrajectory],
    detection: &DetectionConfig,
) -> Result<ExpectedMarker, StrobeError> {
    let (lo, hi) = if scene.drop_heights_m[0] <= scene.drop_heights_m[1] {
        (0, 1)
    } else {
        (1, 0)
    };
    let ground = ground_line(&scene.camera);
    let outcome = detect_impact(&trajectories[lo], &ground, detection).map_err(|source| {
        StrobeError::Detect {
            ball_id: trajectories[lo].ball_id.clone(),
            source,
        }
    })?;
    let remaining_m = scene.drop_heights_m[hi] - scene.drop_heights_m[lo];
    let point = (
        scene.horizontal_offsets_m[hi],
        remaining_m,
        scene.camera.distance_m,
    );
    let (cx, cy) = project_point(&scene.camera, point)?;
    let radius_px = projected_radius_px(
        &scene.camera,
        scene.ball_radius_m(),
        scene.camera.distance_m,
    )?;
    Ok(ExpectedMarker {
        cx_px: cx,
        cy_px: cy,
        at_time_s: outcome.event.impact_time_s,
        half_width_px: 4.0 * radius_px,
    })
}

const STROKE_COLORS: [&str; 4] = ["#1f77b4", "#2ca02c", "#9467bd", "#8c564b"];

impl StrobeComposite {
    /// Render as a standalone SVG document. Output is deterministic for a
    /// given composite: fixed precision, fixed element order.
    pub fn to_svg(&self) -> String {
        let w = self.image_width_px;
        let h = self.image_height_px;
        let mut svg = String::new();
        let _ = writeln!(
            svg,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
        );
        let _ = writeln!(svg, "  <title>{} strobe composite</title>", self.scene_id);
        let _ = writeln!(
            svg,
            "  <rect width=\"{w}\" height=\"{h}\" fill=\"#ffffff\"/>"
        );
        let _ = writeln!(
            svg,
            "  <line x1=\"0\" y1=\"{0:.3}\" x2=\"{w}\" y2=\"{0:.3}\" stroke=\"#333333\" stroke-width=\"2\"/>",
            self.ground_y_px
        );
        for (i, ball) in self.balls.iter().enumerate() {
            let color = STROKE_COLORS[i % STROKE_COLORS.len()];
            let _ = writeln!(
                svg,
                "  <g fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\">"
            );
            for p in &ball.positions {
                let _ = writeln!(
                    svg,
                    "    <circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"{:.3}\"><title>{} t={:.3}s</title></circle>",
                    p.cx_px, p.cy_px, ball.radius_px, ball.ball_id, p.time_s
                );
            }
            let _ = writeln!(svg, "  </g>");
        }
        if let Some(m) = &self.expected_marker {
            let _ = writeln!(
                svg,
                "  <line x1=\"{:.3}\" y1=\"{:.3}\" x2=\"{:.3}\" y2=\"{:.3}\" stroke=\"#d62728\" stroke-width=\"2\" stroke-dasharray=\"6 4\"><title>expected at t={:.3}s</title></line>",
                m.cx_px - m.half_width_px,
                m.cy_px,
                m.cx_px + m.half_width_px,
                m.cy_px,
                m.at_time_s
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

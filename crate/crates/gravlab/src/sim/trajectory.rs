//! Pixel trajectories and their on-disk CSV form.
//!
//! A trajectory is what a tracker would hand us: per-frame centroid, apparent
//! radius, and a visibility flag for one ball. Files carry a `#`-prefixed
//! sidecar block (scene id, frame rate, optionally the manifest hash the
//! trajectories were simulated from) above a fixed six-column CSV body.
//! Pixel values are written in shortest exact form, so write -> read is the
//! identity on well-formed data.

use std::path::Path;

use super::SimError;

/// One tracked observation of one ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub frame_index: u64,
    pub cx_px: f64,
    pub cy_px: f64,
    pub radius_px: f64,
    pub visible: bool,
}

/// Per-ball pixel track at a fixed frame rate.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelTrajectory {
    pub ball_id: String,
    pub fps: f64,
    pub samples: Vec<TrajectorySample>,
}

impl PixelTrajectory {
    /// Check the container invariants: positive rate, strictly increasing
    /// frames, positive radii. A single sample is legal here; analysis
    /// operations impose their own minimums.
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(SimError::InvalidTrajectory {
                ball_id: self.ball_id.clone(),
                message: format!("fps must be positive, got {}", self.fps),
            });
        }
        let mut prev: Option<u64> = None;
        for s in &self.samples {
            if let Some(p) = prev {
                if s.frame_index <= p {
                    return Err(SimError::InvalidTrajectory {
                        ball_id: self.ball_id.clone(),
                        message: format!(
                            "frame indices must be strictly increasing (frame {} after {})",
                            s.frame_index, p
                        ),
                    });
                }
            }
            if !(s.radius_px.is_finite() && s.radius_px > 0.0) {
                return Err(SimError::InvalidTrajectory {
                    ball_id: self.ball_id.clone(),
                    message: format!("radius_px must be positive at frame {}", s.frame_index),
                });
            }
            prev = Some(s.frame_index);
        }
        Ok(())
    }

    /// Samples up to (not including) the first invisible one. Detection runs
    /// on this prefix; a shortened track is reported as a warning upstream.
    pub fn visible_prefix(&self) -> &[TrajectorySample] {
        let end = self
            .samples
            .iter()
            .position(|s| !s.visible)
            .unwrap_or(self.samples.len());
        &self.samples[..end]
    }
}

/// A scene's worth of trajectories plus sidecar metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryFile {
    pub scene_id: String,
    pub fps: f64,
    /// Hash of the manifest these tracks were simulated from, when known.
    pub manifest_sha256: Option<String>,
    pub trajectories: Vec<PixelTrajectory>,
}

const FORMAT_TAG: &str = "# gravlab-trajectories v1";
const COLUMN_HEADER: &str = "frame,ball_id,cx_px,cy_px,radius_px,visible";

/// Shortest decimal form that parses back to exactly the same f64, i.e. full
/// precision without padding noise.
fn format_px(v: f64) -> String {
    format!("{v}")
}

impl TrajectoryFile {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(FORMAT_TAG);
        out.push('\n');
        out.push_str(&format!("# scene_id: {}\n", self.scene_id));
        out.push_str(&format!("# fps: {}\n", format_px(self.fps)));
        if let Some(hash) = &self.manifest_sha256 {
            out.push_str(&format!("# manifest_sha256: {hash}\n"));
        }
        out.push_str(COLUMN_HEADER);
        out.push('\n');
        // Interleave by frame the way a tracker would emit rows.
        let mut cursors = vec![0usize; self.trajectories.len()];
        loop {
            let next = self
                .trajectories
                .iter()
                .enumerate()
                .filter_map(|(i, t)| t.samples.get(cursors[i]).map(|s| (s.frame_index, i)))
                .min();
            let Some((_, i)) = next else { break };
            let t = &self.trajectories[i];
            let s = &t.samples[cursors[i]];
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                s.frame_index,
                t.ball_id,
                format_px(s.cx_px),
                format_px(s.cy_px),
                format_px(s.radius_px),
                u8::from(s.visible)
            ));
            cursors[i] += 1;
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, SimError> {
        let parse_err = |line: usize, message: String| SimError::TrajectoryParse { line, message };
        let mut lines = text.lines().enumerate();
        let (_, first) = lines
            .next()
            .ok_or_else(|| parse_err(1, "empty trajectory file".into()))?;
        if first.trim() != FORMAT_TAG {
            return Err(parse_err(
                1,
                format!("expected format tag {FORMAT_TAG:?}, got {first:?}"),
            ));
        }

        let mut scene_id: Option<String> = None;
        let mut fps: Option<f64> = None;
        let mut manifest_sha256: Option<String> = None;
        let mut order: Vec<String> = Vec::new();
        let mut tracks: std::collections::BTreeMap<String, Vec<TrajectorySample>> =
            std::collections::BTreeMap::new();
        let mut header_seen = false;

        for (idx, raw) in lines {
            let lineno = idx + 1;
            let line = raw.trim_end();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if let Some((key, value)) = rest.split_once(':') {
                    match key.trim() {
                        "scene_id" => scene_id = Some(value.trim().to_string()),
                        "fps" => {
                            fps = Some(value.trim().parse().map_err(|e| {
                                parse_err(lineno, format!("bad fps value {value:?}: {e}"))
                            })?)
                        }
                        "manifest_sha256" => manifest_sha256 = Some(value.trim().to_string()),
                        _ => {} // free-form comment
                    }
                }
                continue;
            }
            if !header_seen {
                if line != COLUMN_HEADER {
                    return Err(parse_err(
                        lineno,
                        format!("expected column header {COLUMN_HEADER:?}, got {line:?}"),
                    ));
                }
                header_seen = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 6 {
                return Err(parse_err(
                    lineno,
                    format!("expected 6 fields, got {}", fields.len()),
                ));
            }
            let frame_index: u64 = fields[0]
                .parse()
                .map_err(|e| parse_err(lineno, format!("bad frame index {:?}: {e}", fields[0])))?;
            let ball_id = fields[1].to_string();
            if ball_id.is_empty() {
                return Err(parse_err(lineno, "ball_id must be non-empty".into()));
            }
            let mut px = [0.0f64; 3];
            for (slot, (name, raw)) in px.iter_mut().zip([
                ("cx_px", fields[2]),
                ("cy_px", fields[3]),
                ("radius_px", fields[4]),
            ]) {
                *slot = raw
                    .parse()
                    .map_err(|e| parse_err(lineno, format!("bad {name} value {raw:?}: {e}")))?;
                if !slot.is_finite() {
                    return Err(parse_err(
                        lineno,
                        format!("{name} must be finite, got {raw:?}"),
                    ));
                }
            }
            let visible = match fields[5] {
                "1" => true,
                "0" => false,
                other => {
                    return Err(parse_err(
                        lineno,
                        format!("visible must be 0 or 1, got {other:?}"),
                    ))
                }
            };
            if px[2] <= 0.0 {
                return Err(parse_err(
                    lineno,
                    format!("radius_px must be positive, got {}", px[2]),
                ));
            }
            let entry = tracks.entry(ball_id.clone()).or_insert_with(|| {
                order.push(ball_id.clone());
                Vec::new()
            });
            if let Some(last) = entry.last() {
                if frame_index <= last.frame_index {
                    return Err(parse_err(
                        lineno,
                        format!(
                            "frame indices for ball {ball_id} must be strictly increasing (frame {frame_index} after {})",
                            last.frame_index
                        ),
                    ));
                }
            }
            entry.push(TrajectorySample {
                frame_index,
                cx_px: px[0],
                cy_px: px[1],
                radius_px: px[2],
                visible,
            });
        }

        if !header_seen {
            return Err(parse_err(
                1,
                format!("missing column header {COLUMN_HEADER:?}"),
            ));
        }
        let scene_id =
            scene_id.ok_or_else(|| parse_err(1, "missing `# scene_id:` sidecar line".into()))?;
        let fps = fps.ok_or_else(|| parse_err(1, "missing `# fps:` sidecar line".into()))?;
        if !(fps.is_finite() && fps > 0.0) {
            return Err(parse_err(1, format!("fps must be positive, got {fps}")));
        }

        let mut trajectories = Vec::new();
        for ball_id in order {
            let samples = tracks.remove(&ball_id).expect("tracked ball present");
            let t = PixelTrajectory {
                ball_id,
                fps,
                samples,
            };
            t.validate()?;
            trajectories.push(t);
        }
        Ok(TrajectoryFile {
            scene_id,
            fps,
            manifest_sha256,
            trajectories,
        })
    }
}

/// Write one scene's trajectories to `path`.
pub fn write_trajectories(path: &Path, file: &TrajectoryFile) -> Result<(), SimError> {
    for t in &file.trajectories {
        t.validate()?;
    }
    std::fs::write(path, file.to_csv()).map_err(|source| SimError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Read one scene's trajectories from `path`.
pub fn read_trajectories(path: &Path) -> Result<TrajectoryFile, SimError> {
    let text = std::fs::read_to_string(path).map_err(|source| SimError::Io {
        path: path.display().to_string(),
        source,
    })?;
    TrajectoryFile::from_csv(&text)
}

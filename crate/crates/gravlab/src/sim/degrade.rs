//! Failure-mode emulation: seeded degradations of otherwise exact physics.
//!
//! Each degradation kind lives behind the [`Degradation`] trait and is
//! registered by name in a [`DegradationRegistry`]; degradation files select
//! kinds at runtime by that name, so new failure modes plug in without
//! touching the simulator. A degradation never edits pixels directly (except
//! centroid noise, which is defined in pixel space): it folds itself into the
//! per-ball [`MotionPlan`] that the simulator then renders, keeping the
//! composed motion exactly integrable.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::Deserialize;

use crate::scene::{Protocol, SceneSpec};

use super::SimError;

/// Which balls a rule touches: every ball (`"*"`) or one ball id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum BallSelector {
    #[default]
    All,
    Ball(String),
}

impl BallSelector {
    pub fn matches(&self, ball_id: &str) -> bool {
        match self {
            BallSelector::All => true,
            BallSelector::Ball(id) => id == ball_id,
        }
    }
}

impl<'de> Deserialize<'de> for BallSelector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        Ok(if raw == "*" {
            BallSelector::All
        } else {
            BallSelector::Ball(raw)
        })
    }
}

impl fmt::Display for BallSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BallSelector::All => write!(f, "*"),
            BallSelector::Ball(id) => write!(f, "{id}"),
        }
    }
}

/// Per-ball motion knobs the degradations may edit. The defaults reproduce
/// the scene exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct BallPlan {
    pub ball_id: String,
    /// Along-path acceleration source for drops; the incline builder turns
    /// this into `g sin(theta)` itself.
    pub gravity_mps2: f64,
    /// Tilt of the fall path from vertical, in the camera plane.
    pub tilt_deg: f64,
    /// Stationary hold before release, on the physical clock.
    pub release_delay_s: f64,
    /// Video-clock stretch factor (> 1 plays the fall slower).
    pub clock_scale: f64,
    /// Additive pixel-space centroid noise, applied after projection.
    pub noise_sigma_px: f64,
}

/// One scene's composed motion plan.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionPlan {
    pub balls: Vec<BallPlan>,
}

impl MotionPlan {
    pub fn from_scene(scene: &SceneSpec) -> Self {
        MotionPlan {
            balls: scene
                .ball_ids()
                .into_iter()
                .map(|ball_id| BallPlan {
                    ball_id,
                    gravity_mps2: scene.gravity_mps2,
                    tilt_deg: 0.0,
                    release_delay_s: 0.0,
                    clock_scale: 1.0,
                    noise_sigma_px: 0.0,
                })
                .collect(),
        }
    }

    fn selected(&mut self, selector: &BallSelector) -> Vec<&mut BallPlan> {
        self.balls
            .iter_mut()
            .filter(|b| selector.matches(&b.ball_id))
            .collect()
    }
}

/// A runtime-selectable failure mode.
pub trait Degradation: fmt::Debug + Send + Sync {
    /// Registry name, as written in degradation files.
    fn kind(&self) -> &'static str;
    /// Balls this instance touches.
    fn selector(&self) -> &BallSelector;
    /// Reject combinations the physics cannot honor for this scene.
    fn validate(&self, scene: &SceneSpec) -> Result<(), SimError>;
    /// Fold the failure mode into the motion plan.
    fn apply(&self, plan: &mut MotionPlan, scene: &SceneSpec) -> Result<(), SimError>;
}

fn mismatch(kind: &str, scene: &SceneSpec, why: impl fmt::Display) -> SimError {
    SimError::DegradationMismatch {
        kind: kind.to_string(),
        scene_id: scene.scene_id.clone(),
        message: why.to_string(),
    }
}

fn require_selected(
    kind: &'static str,
    scene: &SceneSpec,
    selector: &BallSelector,
) -> Result<(), SimError> {
    if !scene.ball_ids().iter().any(|id| selector.matches(id)) {
        return Err(mismatch(
            kind,
            scene,
            format!("selector {selector} matches no ball"),
        ));
    }
    Ok(())
}

/// Replays the physical path on a stretched clock: `pos(t) = path(t / factor)`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeDilation {
    pub factor: f64,
    #[serde(default)]
    pub applies_to: BallSelector,
}

impl Degradation for TimeDilation {
    fn kind(&self) -> &'static str {
        "time_dilation"
    }
    fn selector(&self) -> &BallSelector {
        &self.applies_to
    }
    fn validate(&self, scene: &SceneSpec) -> Result<(), SimError> {
        if !(self.factor.is_finite() && self.factor > 0.0) {
            return Err(mismatch(
                self.kind(),
                scene,
                format!("factor must be positive, got {}", self.factor),
            ));
        }
        require_selected(self.kind(), scene, &self.applies_to)
    }
    fn apply(&self, plan: &mut MotionPlan, scene: &SceneSpec) -> Result<(), SimError> {
        self.validate(scene)?;
        for ball in plan.selected(&self.applies_to) {
            ball.clock_scale *= self.factor;
        }
        Ok(())
    }
}

/// Gives the two balls of a two-ball scene individually wrong gravities.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerObjectGravity {
    pub gravity1_mps2: f64,
    pub gravity2_mps2: f64,
}

impl PerObjectGravity {
    const SELECTOR: BallSelector = BallSelector::All;
}

impl Degradation for PerObjectGravity {
    fn kind(&self) -> &'static str {
        "per_object_gravity"
    }
    fn selector(&self) -> &BallSelector {
        &Self::SELECTOR
    }
    fn validate(&self, scene: &SceneSpec) -> Result<(), SimError> {
        if scene.protocol != Protocol::TwoBall {
            return Err(mismatch(
                self.kind(),
                scene,
                format!(
                    "only valid on two-ball scenes, scene is {}",
                    scene.protocol.name()
                ),
            ));
        }
        for g in [self.gravity1_mps2, self.gravity2_mps2] {
            if !(g.is_finite() && g > 0.0) {
                return Err(mismatch(
                    self.kind(),
                    scene,
                    format!("gravity must be positive, got {g}"),
                ));
            }
        }
        Ok(())
    }
    fn apply(&self, plan: &mut MotionPlan, scene: &SceneSpec) -> Result<(), SimError> {
        self.validate(scene)?;
        plan.balls[0].gravity_mps2 = self.gravity1_mps2;
        plan.balls[1].gravity_mps2 = self.gravity2_mps2;
        Ok(())
    }
}

/// Tilts the fall path by `phi_deg` from vertical in the camera plane while
/// keeping the along-path acceleration; the ball still slides until ground
/// contact, so the apparent vertical motion slows by `cos(phi)`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngledFall {
    pub phi_deg: f64,
    #[serde(default)]
    pub applies_to: BallSelector,
}

impl Degradation for AngledFall {
    fn kind(&self) -> &'static str {
        "angled_fall"
    }
    fn selector(&self) -> &BallSelector {
        &self.applies_to
    }
    fn validate(&self, scene: &SceneSpec) -> Result<(), SimError> {
        if scene.protocol == Protocol::Incline {
            return Err(mismatch(
                self.kind(),
                scene,
                "not meaningful on incline scenes",
            ));
        }
        if !(self.phi_deg.is_finite() && self.phi_deg.abs() < 45.0) {
            return Err(mismatch(
                self.kind(),
                scene,
                format!("|phi_deg| must stay below 45, got {}", self.phi_deg),
            ));
        }
        require_selected(self.kind(), scene, &self.applies_to)
    }
    fn apply(&self, plan: &mut MotionPlan, scene: &SceneSpec) -> Result<(), SimError> {
        self.validate(scene)?;
        for ball in plan.selected(&self.applies_to) {
            ball.tilt_deg = self.phi_deg;
        }
        Ok(())
    }
}

/// Holds the ball stationary for `release_delay_s` before the normal fall.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hover {
    pub release_delay_s: f64,
    #[serde(default)]
    pub applies_to: BallSelector,
}

impl Degradation for Hover {
    fn kind(&self) -> &'static str {
        "hover"
    }
    fn selector(&self) -> &BallSelector {
        &self.applies_to
    }
    fn validate(&self, scene: &SceneSpec) -> Result<(), SimError> {
        if !(self.release_delay_s.is_finite() && self.release_delay_s >= 0.0) {
            return Err(mismatch(
                self.kind(),
                scene,
                format!(
                    "release_delay_s must be non-negative, got {}",
                    self.release_delay_s
                ),
            ));
        }
        require_selected(self.kind(), scene, &self.applies_to)
    }
    fn apply(&self, plan: &mut MotionPlan, scene: &SceneSpec) -> Result<(), SimError> {
        self.validate(scene)?;
        for ball in plan.selected(&self.applies_to) {
            ball.release_delay_s += self.release_delay_s;
        }
        Ok(())
    }
}

/// Adds i.i.d. Gaussian pixel noise to the projected centroid, seeded from
/// the scene and realization seeds. Sigma zero is exactly the identity.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CentroidNoise {
    pub sigma_px: f64,
    #[serde(default)]
    pub applies_to: BallSelector,
}

impl Degradation for CentroidNoise {
    fn kind(&self) -> &'static str {
        "centroid_noise"
    }
    fn selector(&self) -> &BallSelector {
        &self.applies_to
    }
    fn validate(&self, scene: &SceneSpec) -> Result<(), SimError> {
        if !(self.sigma_px.is_finite() && self.sigma_px >= 0.0) {
            return Err(mismatch(
                self.kind(),
                scene,
                format!("sigma_px must be non-negative, got {}", self.sigma_px),
            ));
        }
        require_selected(self.kind(), scene, &self.applies_to)
    }
    fn apply(&self, plan: &mut MotionPlan, scene: &SceneSpec) -> Result<(), SimError> {
        self.validate(scene)?;
        for ball in plan.selected(&self.applies_to) {
            ball.noise_sigma_px = (ball.noise_sigma_px.powi(2) + self.sigma_px.powi(2)).sqrt();
        }
        Ok(())
    }
}

type ParseFn = fn(serde_json::Value) -> Result<Box<dyn Degradation>, String>;

fn parse_as<T: for<'de> Deserialize<'de> + Degradation + 'static>(
    value: serde_json::Value,
) -> Result<Box<dyn Degradation>, String> {
    serde_json::from_value::<T>(value)
        .map(|d| Box::new(d) as Box<dyn Degradation>)
        .map_err(|e| e.to_string())
}

/// Name-indexed registry of degradation kinds. Rules in degradation files
/// pick their implementation here at parse time.
pub struct DegradationRegistry {
    parsers: BTreeMap<&'static str, ParseFn>,
}

impl DegradationRegistry {
    /// Registry holding the built-in failure modes.
    pub fn builtin() -> Self {
        let mut registry = DegradationRegistry {
            parsers: BTreeMap::new(),
        };
        registry.register("time_dilation", parse_as::<TimeDilation>);
        registry.register("per_object_gravity", parse_as::<PerObjectGravity>);
        registry.register("angled_fall", parse_as::<AngledFall>);
        registry.register("hover", parse_as::<Hover>);
        registry.register("centroid_noise", parse_as::<CentroidNoise>);
        registry
    }

    pub fn register(&mut self, kind: &'static str, parser: ParseFn) {
        self.parsers.insert(kind, parser);
    }

    pub fn kinds(&self) -> Vec<&'static str> {
        self.parsers.keys().copied().collect()
    }

    /// Build a degradation from its registry name and parameter object.
    pub fn parse(
        &self,
        kind: &str,
        params: serde_json::Value,
    ) -> Result<Box<dyn Degradation>, SimError> {
        let parser = self
            .parsers
            .get(kind)
            .ok_or_else(|| SimError::UnknownDegradation {
                kind: kind.to_string(),
                known: self.kinds().join(", "),
            })?;
        parser(params).map_err(|message| SimError::DegradationFile {
            message: format!("bad parameters for kind {kind}: {message}"),
        })
    }
}

/// Which scenes a degradation rule covers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SceneSelector {
    All,
    Scenes(Vec<String>),
}

impl SceneSelector {
    pub fn matches(&self, scene_id: &str) -> bool {
        match self {
            SceneSelector::All => true,
            SceneSelector::Scenes(ids) => ids.iter().any(|id| id == scene_id),
        }
    }
}

/// One parsed rule: a degradation plus the scenes it covers.
#[derive(Debug)]
pub struct DegradationRule {
    pub scenes: SceneSelector,
    pub degradation: Box<dyn Degradation>,
}

/// A parsed degradation file.
#[derive(Debug, Default)]
pub struct DegradationSet {
    pub rules: Vec<DegradationRule>,
}

impl DegradationSet {
    /// Degradations that apply to `scene_id`, in file order.
    pub fn for_scene(&self, scene_id: &str) -> Vec<&dyn Degradation> {
        self.rules
            .iter()
            .filter(|r| r.scenes.matches(scene_id))
            .map(|r| r.degradation.as_ref())
            .collect()
    }
}

/// Parse degradation-file JSON:
///
/// ```json
/// {
///   "schema_version": 1,
///   "rules": [
///     { "kind": "time_dilation", "scenes": "*", "factor": 2.43, "applies_to": "*" }
///   ]
/// }
/// ```
///
/// `kind` selects the implementation from the registry; `scenes` is `"*"` or
/// a list of scene ids; remaining fields are the kind's own parameters.
pub fn parse_degradation_file(
    registry: &DegradationRegistry,
    text: &str,
) -> Result<DegradationSet, SimError> {
    let file_err = |message: String| SimError::DegradationFile { message };
    let root: serde_json::Value =
        serde_json::from_str(text).map_err(|e| file_err(format!("invalid JSON: {e}")))?;
    let obj = root
        .as_object()
        .ok_or_else(|| file_err("top level must be an object".into()))?;
    for key in obj.keys() {
        if key != "schema_version" && key != "rules" {
            return Err(file_err(format!("unknown top-level field {key:?}")));
        }
    }
    let version = obj
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| file_err("missing integer schema_version".into()))?;
    if version != 1 {
        return Err(file_err(format!(
            "unsupported schema_version {version} (this build reads 1)"
        )));
    }
    let rules_value = obj
        .get("rules")
        .and_then(|v| v.as_array())
        .ok_or_else(|| file_err("missing rules array".into()))?;

    let mut rules = Vec::new();
    for (i, rule) in rules_value.iter().enumerate() {
        let rule_obj = rule
            .as_object()
            .ok_or_else(|| file_err(format!("rule {i} must be an object")))?
            .clone();
        let mut params = serde_json::Map::new();
        let mut kind: Option<String> = None;
        let mut scenes = SceneSelector::All;
        for (key, value) in rule_obj {
            match key.as_str() {
                "kind" => {
                    kind = Some(
                        value
                            .as_str()
                            .ok_or_else(|| file_err(format!("rule {i}: kind must be a string")))?
                            .to_string(),
                    )
                }
                "scenes" => {
                    scenes = match value {
                        serde_json::Value::String(s) if s == "*" => SceneSelector::All,
                        serde_json::Value::Array(items) => SceneSelector::Scenes(
                            items
                                .into_iter()
                                .map(|v| {
                                    v.as_str().map(str::to_string).ok_or_else(|| {
                                        file_err(format!(
                                            "rule {i}: scenes entries must be strings"
                                        ))
                                    })
                                })
                                .collect::<Result<_, _>>()?,
                        ),
                        other => {
                            return Err(file_err(format!(
                                "rule {i}: scenes must be \"*\" or a list of scene ids, got {other}"
                            )))
                        }
                    }
                }
                _ => {
                    params.insert(key, value);
                }
            }
        }
        let kind = kind.ok_or_else(|| file_err(format!("rule {i}: missing kind")))?;
        let degradation = registry.parse(&kind, serde_json::Value::Object(params))?;
        rules.push(DegradationRule {
            scenes,
            degradation,
        });
    }
    Ok(DegradationSet { rules })
}

/// Read and parse a degradation file from disk.
pub fn read_degradation_file(
    registry: &DegradationRegistry,
    path: &Path,
) -> Result<DegradationSet, SimError> {
    let text = std::fs::read_to_string(path).map_err(|source| SimError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_degradation_file(registry, &text)
}

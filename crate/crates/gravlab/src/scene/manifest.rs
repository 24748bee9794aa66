//! Manifest I/O: a scene collection as strict, versioned, human-readable JSON.
//!
//! Field order follows struct declaration and floats serialize via shortest
//! round-trip, so writing the same scenes twice yields byte-identical files.
//! Reading is strict: unknown fields, schema drift, and invariant violations
//! are all rejected with precise diagnostics.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{SceneError, SceneSpec};

/// Bumped whenever the manifest layout changes incompatibly.
pub const SCHEMA_VERSION: u32 = 1;

/// A versioned collection of scenes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema_version: u32,
    pub scenes: Vec<SceneSpec>,
}

impl Manifest {
    pub fn new(scenes: Vec<SceneSpec>) -> Self {
        Manifest {
            schema_version: SCHEMA_VERSION,
            scenes,
        }
    }

    /// Validate the whole collection, pooling violations across scenes.
    pub fn validate(&self) -> Result<(), SceneError> {
        let mut violations = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            violations.push(format!(
                "unsupported schema_version {} (this build reads {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.scenes.is_empty() {
            violations.push("manifest contains no scenes".into());
        }
        let mut seen = BTreeSet::new();
        for scene in &self.scenes {
            violations.extend(scene.violations());
            if !seen.insert(scene.scene_id.clone()) {
                violations.push(format!("duplicate scene_id {}", scene.scene_id));
            }
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(SceneError::ManifestValidation { violations })
        }
    }

    /// Canonical serialized form (pretty JSON plus trailing newline).
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        text
    }
}

/// Write a validated manifest to `path`.
pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<(), SceneError> {
    manifest.validate()?;
    std::fs::write(path, manifest.to_json()).map_err(|source| SceneError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Read and validate a manifest from `path`.
pub fn read_manifest(path: &Path) -> Result<Manifest, SceneError> {
    let text = std::fs::read_to_string(path).map_err(|source| SceneError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_manifest(&text)
}

/// Parse and validate manifest text. Syntax and schema problems carry the
/// offending line and column.
pub fn parse_manifest(text: &str) -> Result<Manifest, SceneError> {
    let manifest: Manifest = serde_json::from_str(text).map_err(|e| SceneError::ManifestParse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    manifest.validate()?;
    Ok(manifest)
}

/// SHA-256 of a manifest's canonical serialized form, as lowercase hex.
/// Trajectory sidecars embed this so evaluation can verify provenance.
pub fn manifest_sha256(manifest: &Manifest) -> String {
    let digest = Sha256::digest(manifest.to_json().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

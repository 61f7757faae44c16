//! Dataset manifest: the JSON index shared by every producer in the crate.
//!
//! ```json
//! {"version": 1, "tool_version": "0.1.0", "config": {...},
//!  "images": [{"id", "file", "width", "height", "gsd", "split",
//!              "annotations": [{"class_id", "aabb": [4],
//!                               "obb": {"cx","cy","w","h","angle_deg"},
//!                               "is_partial", "provenance"}],
//!              "seg_mask_file"}]}
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{aabb_of, Aabb, RotatedRect};
use crate::io::IoError;

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("manifest parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported manifest version {0}")]
    Version(u32),
    #[error("image {image}: {reason}")]
    Invalid { image: String, reason: String },
    #[error("duplicate image id {0}")]
    DuplicateId(String),
    #[error(transparent)]
    Io(#[from] IoError),
}

/// Where an annotated object came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Blueprint { id: String },
    Crop { image_id: String, annotation_index: usize },
    Region { centroid: [f64; 2] },
}

/// One annotated object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub class_id: u32,
    pub aabb: Aabb,
    pub obb: RotatedRect,
    #[serde(default)]
    pub is_partial: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl Annotation {
    pub fn from_obb(class_id: u32, obb: RotatedRect, is_partial: bool, provenance: Option<Provenance>) -> Self {
        Self {
            class_id,
            aabb: aabb_of(&obb),
            obb,
            is_partial,
            provenance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub id: String,
    /// Path relative to the manifest directory.
    pub file: String,
    pub width: u32,
    pub height: u32,
    pub gsd: f64,
    #[serde(default)]
    pub split: Option<String>,
    #[serde(default)]
    pub annotations: Vec<Annotation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seg_mask_file: Option<String>,
    /// Vehicles that found no free spot during placement.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub dropped: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background: Option<String>,
}

fn is_zero(v: &u32) -> bool {
    *v == 0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub tool_version: String,
    pub config: serde_json::Value,
    pub images: Vec<ImageRecord>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, serde_json::Value>,
}

impl DatasetManifest {
    pub fn new(config: serde_json::Value) -> Self {
        Self {
            version: MANIFEST_VERSION,
            tool_version: crate::TOOL_VERSION.to_string(),
            config,
            images: Vec::new(),
            notes: BTreeMap::new(),
        }
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, ManifestError> {
        let m: DatasetManifest = serde_json::from_slice(bytes)?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut v = serde_json::to_vec_pretty(self).expect("manifest serializes");
        v.push(b'\n');
        v
    }

    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        let bytes = std::fs::read(path).map_err(|e| IoError::io(path, e))?;
        Self::from_json(&bytes)
    }

    pub fn save(&self, path: &Path) -> Result<(), IoError> {
        crate::io::write_atomic(path, &self.to_json())
    }

    pub fn validate(&self) -> Result<(), ManifestError> {
        if self.version != MANIFEST_VERSION {
            return Err(ManifestError::Version(self.version));
        }
        let mut seen = std::collections::HashSet::new();
        for img in &self.images {
            if !seen.insert(img.id.as_str()) {
                return Err(ManifestError::DuplicateId(img.id.clone()));
            }
            let bad = |reason: String| ManifestError::Invalid {
                image: img.id.clone(),
                reason,
            };
            if !(img.gsd.is_finite() && img.gsd > 0.0) {
                return Err(bad(format!("gsd {}", img.gsd)));
            }
            for (i, a) in img.annotations.iter().enumerate() {
                if !a.obb.is_valid() {
                    return Err(bad(format!("annotation {i} has an invalid obb")));
                }
                if a.aabb.to_array().iter().any(|v| !v.is_finite()) {
                    return Err(bad(format!("annotation {i} has a non-finite aabb")));
                }
            }
        }
        Ok(())
    }

    pub fn annotation_count(&self) -> usize {
        self.images.iter().map(|i| i.annotations.len()).sum()
    }

    /// Sorts images by id; used to make merged manifests canonical.
    pub fn sort_images(&mut self) {
        self.images.sort_by(|a, b| a.id.cmp(&b.id));
    }
}

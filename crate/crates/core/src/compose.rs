//! Real/artificial vehicle and background mixtures.

use std::path::{Path, PathBuf};

use image::{Rgba, RgbImage, RgbaImage};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point2;
use crate::instance::VehicleInstance;
use crate::io::{self, IoError};
use crate::manifest::{DatasetManifest, ManifestError, Provenance, MANIFEST_FILE};
use crate::raster::{area_downsample_rgb, resize_rgb_bilinear, resize_rgba_bilinear, sample_rgb_clamped};
use crate::rng::{self, Purpose};
use crate::scene::{write_generated, Generator, SceneError};

pub const BACKGROUND_INDEX_FILE: &str = "background_pool.json";
pub const VEHICLE_INDEX_FILE: &str = "vehicle_pool.json";

#[derive(Debug, Error)]
pub enum ComposeError {
    #[error("{0} pool is empty")]
    EmptyPool(&'static str),
    #[error("a real {0} source needs a harvested pool")]
    MissingPool(&'static str),
    #[error("invalid pool index: {0}")]
    PoolIndex(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error(transparent)]
    Io(#[from] IoError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Artificial,
    Real,
}

impl Source {
    pub const ALL: [Source; 2] = [Source::Artificial, Source::Real];

    pub fn name(self) -> &'static str {
        match self {
            Source::Artificial => "artificial",
            Source::Real => "real",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundEntry {
    pub image_id: String,
    pub pixels: RgbImage,
    pub gsd: f64,
}

/// Vehicle-free real patches.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BackgroundPool {
    pub entries: Vec<BackgroundEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleCrop {
    pub image_id: String,
    pub annotation_index: usize,
    /// Axis-aligned in crop space; alpha is the rotated-rectangle footprint.
    pub crop: RgbaImage,
    /// Source obb dimensions in pixels.
    pub obb_dims: (f64, f64),
    pub gsd: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VehicleCropPool {
    pub entries: Vec<VehicleCrop>,
}

/// Pool index file: which source images (and annotations) a pool holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolIndex {
    pub kind: PoolKind,
    pub source_manifest: PathBuf,
    pub entries: Vec<PoolRef>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolKind {
    Backgrounds,
    Vehicles,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolRef {
    pub image_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotation_index: Option<usize>,
}

impl PoolIndex {
    pub fn from_json(bytes: &[u8]) -> Result<Self, ComposeError> {
        let idx: Self = serde_json::from_slice(bytes).map_err(|e| ComposeError::PoolIndex(e.to_string()))?;
        for r in &idx.entries {
            let has = r.annotation_index.is_some();
            if has != (idx.kind == PoolKind::Vehicles) {
                return Err(ComposeError::PoolIndex(format!(
                    "entry {} does not fit a {:?} pool",
                    r.image_id, idx.kind
                )));
            }
        }
        Ok(idx)
    }
}

impl BackgroundPool {
    pub fn index(&self, source_manifest: &Path) -> PoolIndex {
        PoolIndex {
            kind: PoolKind::Backgrounds,
            source_manifest: source_manifest.to_path_buf(),
            entries: self
                .entries
                .iter()
                .map(|e| PoolRef { image_id: e.image_id.clone(), annotation_index: None })
                .collect(),
        }
    }
}

impl VehicleCropPool {
    pub fn index(&self, source_manifest: &Path) -> PoolIndex {
        PoolIndex {
            kind: PoolKind::Vehicles,
            source_manifest: source_manifest.to_path_buf(),
            entries: self
                .entries
                .iter()
                .map(|e| PoolRef {
                    image_id: e.image_id.clone(),
                    annotation_index: Some(e.annotation_index),
                })
                .collect(),
        }
    }
}

/// Every zero-annotation image of `manifest`; image files resolve against `root`.
pub fn harvest_backgrounds(manifest: &DatasetManifest, root: &Path) -> Result<BackgroundPool, ComposeError> {
    let entries = manifest
        .images
        .iter()
        .filter(|r| r.annotations.is_empty())
        .map(|r| {
            Ok(BackgroundEntry {
                image_id: r.id.clone(),
                pixels: io::load_rgb(&root.join(&r.file))?,
                gsd: r.gsd,
            })
        })
        .collect::<Result<Vec<_>, IoError>>()?;
    if entries.is_empty() {
        return Err(ComposeError::EmptyPool("background"));
    }
    Ok(BackgroundPool { entries })
}

/// Resamples the obb region of `src` into an axis-aligned crop; crop pixels
/// whose source point falls outside the raster are transparent.
pub fn extract_rotated_crop(src: &RgbImage, obb: &crate::geometry::RotatedRect) -> RgbaImage {
    let w = obb.width.round().max(1.0) as u32;
    let h = obb.height.round().max(1.0) as u32;
    let (u, v) = obb.axes();
    let (sx, sy) = (obb.width / w as f64, obb.height / h as f64);
    let (iw, ih) = (src.width() as f64, src.height() as f64);
    RgbaImage::from_fn(w, h, |i, j| {
        let a = (i as f64 + 0.5) * sx - obb.width / 2.0;
        let b = (j as f64 + 0.5) * sy - obb.height / 2.0;
        let p = Point2::new(obb.center.x + a * u.x + b * v.x, obb.center.y + a * u.y + b * v.y);
        if p.x < 0.0 || p.y < 0.0 || p.x > iw || p.y > ih {
            return Rgba([0, 0, 0, 0]);
        }
        let c = sample_rgb_clamped(src, p.x - 0.5, p.y - 0.5);
        Rgba([c[0].round() as u8, c[1].round() as u8, c[2].round() as u8, 255])
    })
}

/// One rotated crop per annotation of `manifest`.
pub fn harvest_vehicles(manifest: &DatasetManifest, root: &Path) -> Result<VehicleCropPool, ComposeError> {
    let mut entries = Vec::new();
    for r in manifest.images.iter().filter(|r| !r.annotations.is_empty()) {
        let img = io::load_rgb(&root.join(&r.file))?;
        for (k, a) in r.annotations.iter().enumerate() {
            entries.push(VehicleCrop {
                image_id: r.id.clone(),
                annotation_index: k,
                crop: extract_rotated_crop(&img, &a.obb),
                obb_dims: (a.obb.width, a.obb.height),
                gsd: r.gsd,
            });
        }
    }
    Ok(VehicleCropPool { entries })
}

fn to_gsd_rgb(img: &RgbImage, from: f64, to: f64) -> RgbImage {
    if (from - to).abs() <= 1e-9 * to {
        return img.clone();
    }
    let f = from / to;
    let w = ((img.width() as f64 * f).round() as u32).max(1);
    let h = ((img.height() as f64 * f).round() as u32).max(1);
    if f < 1.0 {
        area_downsample_rgb(img, w, h)
    } else {
        resize_rgb_bilinear(img, w, h)
    }
}

fn crop_instance(c: &VehicleCrop, gsd: f64) -> VehicleInstance {
    let pixels = if (c.gsd - gsd).abs() <= 1e-9 * gsd {
        c.crop.clone()
    } else {
        let f = c.gsd / gsd;
        let w = ((c.crop.width() as f64 * f).round() as u32).max(1);
        let h = ((c.crop.height() as f64 * f).round() as u32).max(1);
        resize_rgba_bilinear(&c.crop, w, h)
    };
    VehicleInstance::from_rgba(
        pixels,
        false,
        Provenance::Crop {
            image_id: c.image_id.clone(),
            annotation_index: c.annotation_index,
        },
    )
}

/// Read-only inputs for real sources.
#[derive(Debug, Clone, Default)]
pub struct Pools {
    pub backgrounds: Option<BackgroundPool>,
    pub vehicles: Option<VehicleCropPool>,
}

/// Manifest label of a combination, `"{vehicles}_vehicles/{background}_background"`.
pub fn combination_label(vehicles: Source, background: Source) -> String {
    format!("{}_vehicles/{}_background", vehicles.name(), background.name())
}

/// Builds one of the four vehicle/background combinations into `out_dir`.
///
/// Artificial vehicles and backgrounds come from `generator` exactly as in
/// [`Generator::generate_dataset`]; the all-artificial combination delegates
/// to it. Real parts are drawn from `pools` with replacement.
pub fn compose_dataset(
    vehicles: Source,
    background: Source,
    generator: &Generator,
    pools: &Pools,
    out_dir: &Path,
) -> Result<DatasetManifest, ComposeError> {
    if vehicles == Source::Artificial && background == Source::Artificial {
        return Ok(generator.generate_dataset(out_dir)?);
    }
    let bg_pool = match background {
        Source::Real => Some(pools.backgrounds.as_ref().ok_or(ComposeError::MissingPool("background"))?),
        Source::Artificial => None,
    };
    let car_pool = match vehicles {
        Source::Real => Some(pools.vehicles.as_ref().ok_or(ComposeError::MissingPool("vehicle"))?),
        Source::Artificial => None,
    };
    if bg_pool.is_some_and(|p| p.entries.is_empty()) {
        return Err(ComposeError::EmptyPool("background"));
    }
    if car_pool.is_some_and(|p| p.entries.is_empty()) {
        return Err(ComposeError::EmptyPool("vehicle"));
    }
    let cfg = generator.config();
    let records = (0..cfg.image_count)
        .into_par_iter()
        .map(|i| {
            let instances = match car_pool {
                None => generator.artificial_instances(i)?,
                Some(pool) => (0..cfg.vehicles_per_image)
                    .map(|k| {
                        let mut r = rng::stream(cfg.seed, i, k + 1, Purpose::Pool);
                        crop_instance(&pool.entries[r.random_range(0..pool.entries.len())], cfg.gsd)
                    })
                    .collect(),
            };
            let (bg, bg_id) = match bg_pool {
                None => (None, None),
                Some(pool) => {
                    let mut r = rng::stream(cfg.seed, i, 0, Purpose::Pool);
                    let e = &pool.entries[r.random_range(0..pool.entries.len())];
                    (Some(to_gsd_rgb(&e.pixels, e.gsd, cfg.gsd)), Some(e.image_id.clone()))
                }
            };
            let mut img = generator.render(i, bg, &instances);
            img.background = bg_id;
            Ok(write_generated(out_dir, &img, cfg.gsd)?)
        })
        .collect::<Result<Vec<_>, ComposeError>>()?;
    let config = serde_json::json!({
        "generator": cfg,
        "composition": {
            "vehicles": vehicles.name(),
            "background": background.name(),
            "label": combination_label(vehicles, background),
        },
    });
    let mut manifest = DatasetManifest::new(config);
    manifest.images = records;
    manifest.save(&out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

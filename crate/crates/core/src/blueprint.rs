//! Color-masked vehicle drawings as surface-class rasters.
//!
//! A blueprint is a PNG painted in five key colors plus a JSON sidecar with
//! the same stem (`sedan.png` + `sedan.json`) that carries the vehicle label,
//! physical size and the color key. The longer raster side is the vehicle
//! length.

use std::collections::BTreeMap;
use std::path::Path;

use image::RgbImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::{box_weights, Grid};

pub const DEFAULT_TOLERANCE: u8 = 10;
/// Share of pixels allowed to miss every key color before a mask is rejected.
pub const MAX_OFF_KEY_FRACTION: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurfaceClass {
    Background,
    Outline,
    Body,
    Lights,
    Windows,
}

impl SurfaceClass {
    pub const ALL: [SurfaceClass; 5] = [
        SurfaceClass::Background,
        SurfaceClass::Outline,
        SurfaceClass::Body,
        SurfaceClass::Lights,
        SurfaceClass::Windows,
    ];

    /// Tie-break rank for majority and mode decisions; higher wins. Thin
    /// structures outrank large areas so downsampling keeps outlines.
    fn tie_rank(self) -> u8 {
        match self {
            SurfaceClass::Background => 0,
            SurfaceClass::Body => 1,
            SurfaceClass::Windows => 2,
            SurfaceClass::Lights => 3,
            SurfaceClass::Outline => 4,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

pub type ClassRaster = Grid<SurfaceClass>;

/// Key color per surface class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ColorKey(pub BTreeMap<SurfaceClass, [u8; 3]>);

impl Default for ColorKey {
    fn default() -> Self {
        ColorKey(BTreeMap::from([
            (SurfaceClass::Background, [255, 255, 255]),
            (SurfaceClass::Outline, [0, 0, 0]),
            (SurfaceClass::Body, [255, 0, 0]),
            (SurfaceClass::Lights, [255, 255, 0]),
            (SurfaceClass::Windows, [0, 0, 255]),
        ]))
    }
}

impl ColorKey {
    pub fn color(&self, class: SurfaceClass) -> Option<[u8; 3]> {
        self.0.get(&class).copied()
    }

    fn check_complete(&self) -> Result<(), BlueprintError> {
        match SurfaceClass::ALL.iter().find(|c| !self.0.contains_key(c)) {
            Some(c) => Err(BlueprintError::IncompleteColorKey(*c)),
            None => Ok(()),
        }
    }

    /// Nearest key color by Chebyshev distance, with the distance.
    fn nearest(&self, px: [u8; 3]) -> (SurfaceClass, u8) {
        let mut best = (SurfaceClass::Background, u8::MAX);
        for (&class, key) in &self.0 {
            let d = (0..3).map(|c| px[c].abs_diff(key[c])).max().unwrap_or(0);
            if d < best.1 {
                best = (class, d);
            }
        }
        best
    }
}

/// Sidecar record stored next to each mask image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlueprintMeta {
    pub id: String,
    pub vehicle_label: String,
    pub physical_length_m: f64,
    pub physical_width_m: f64,
    #[serde(default)]
    pub color_key: ColorKey,
}

impl BlueprintMeta {
    pub fn from_json(bytes: &[u8]) -> Result<Self, BlueprintError> {
        let meta: BlueprintMeta = serde_json::from_slice(bytes)
            .map_err(|e| BlueprintError::InvalidMeta(e.to_string()))?;
        meta.validate()?;
        Ok(meta)
    }

    pub fn validate(&self) -> Result<(), BlueprintError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.physical_length_m) || !ok(self.physical_width_m) {
            return Err(BlueprintError::InvalidMeta(
                "physical dimensions must be positive".into(),
            ));
        }
        if self.physical_width_m > self.physical_length_m {
            return Err(BlueprintError::InvalidMeta(
                "physical width exceeds physical length".into(),
            ));
        }
        if self.id.is_empty() {
            return Err(BlueprintError::InvalidMeta("empty id".into()));
        }
        self.color_key.check_complete()
    }
}

#[derive(Debug, Error)]
pub enum BlueprintError {
    #[error("malformed mask: {off_key} of {total} pixels match no key color")]
    MalformedMask { off_key: usize, total: usize },
    #[error("mask has no body pixels")]
    EmptyVehicle,
    #[error("color key has no entry for {0:?}")]
    IncompleteColorKey(SurfaceClass),
    #[error("invalid blueprint metadata: {0}")]
    InvalidMeta(String),
    #[error("mask is {got} px across but metadata implies {expected:.1} px")]
    DimensionMismatch { got: u32, expected: f64 },
    #[error("rescaled raster {width}x{height} is smaller than 2x2")]
    TooCoarse { width: u32, height: u32 },
    #[error("invalid target gsd {0}")]
    InvalidGsd(f64),
    #[error(transparent)]
    Io(#[from] crate::io::IoError),
    #[error("mask decode failed: {0}")]
    Decode(#[from] image::ImageError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Blueprint {
    pub id: String,
    pub vehicle_label: String,
    pub mask: ClassRaster,
    /// Meters per pixel.
    pub pixel_pitch: f64,
    pub physical_length: f64,
    pub physical_width: f64,
}

impl Blueprint {
    /// Classifies an RGB mask against the key colors of `meta`.
    pub fn from_rgb(img: &RgbImage, meta: &BlueprintMeta, tolerance: u8) -> Result<Self, BlueprintError> {
        meta.validate()?;
        let (w, h) = img.dimensions();
        if w == 0 || h == 0 {
            return Err(BlueprintError::EmptyVehicle);
        }
        let mut off_key = 0usize;
        let mask = Grid::from_fn(w, h, |x, y| {
            let (class, d) = meta.color_key.nearest(img.get_pixel(x, y).0);
            if d > tolerance {
                off_key += 1;
            }
            class
        });
        let total = (w as usize) * (h as usize);
        if off_key as f64 > MAX_OFF_KEY_FRACTION * total as f64 {
            return Err(BlueprintError::MalformedMask { off_key, total });
        }
        let bp = Blueprint {
            id: meta.id.clone(),
            vehicle_label: meta.vehicle_label.clone(),
            pixel_pitch: meta.physical_length_m / w.max(h) as f64,
            physical_length: meta.physical_length_m,
            physical_width: meta.physical_width_m,
            mask,
        };
        if bp.count(SurfaceClass::Body) == 0 {
            return Err(BlueprintError::EmptyVehicle);
        }
        let expected = bp.physical_width / bp.pixel_pitch;
        let got = w.min(h);
        if (got as f64 - expected).abs() > 1.0 {
            return Err(BlueprintError::DimensionMismatch { got, expected });
        }
        Ok(bp)
    }

    /// Decodes a PNG mask held in memory.
    pub fn from_png_bytes(bytes: &[u8], meta: &BlueprintMeta, tolerance: u8) -> Result<Self, BlueprintError> {
        let img = crate::io::decode_rgb(bytes)?;
        Self::from_rgb(&img, meta, tolerance)
    }

    pub fn width(&self) -> u32 {
        self.mask.width()
    }

    pub fn height(&self) -> u32 {
        self.mask.height()
    }

    pub fn count(&self, class: SurfaceClass) -> usize {
        self.mask.iter().filter(|&&c| c == class).count()
    }

    pub fn histogram(&self) -> BTreeMap<SurfaceClass, usize> {
        let mut counts = [0usize; 5];
        for c in self.mask.iter() {
            counts[c.index()] += 1;
        }
        SurfaceClass::ALL.iter().map(|&c| (c, counts[c.index()])).collect()
    }

    pub fn body_fraction(&self) -> f64 {
        self.count(SurfaceClass::Body) as f64 / self.mask.data().len() as f64
    }

    /// Renders the mask back into key colors.
    pub fn to_rgb(&self, key: &ColorKey) -> RgbImage {
        RgbImage::from_fn(self.width(), self.height(), |x, y| {
            image::Rgb(key.color(self.mask.get(x, y)).unwrap_or([255, 255, 255]))
        })
    }
}

/// Reads `<stem>.png` and its `<stem>.json` sidecar.
pub fn load_blueprint(image_path: &Path, tolerance: u8) -> Result<Blueprint, BlueprintError> {
    let meta_path = image_path.with_extension("json");
    let meta_bytes = std::fs::read(&meta_path).map_err(|e| crate::io::IoError::io(&meta_path, e))?;
    let meta = BlueprintMeta::from_json(&meta_bytes)?;
    let img = crate::io::load_rgb(image_path)?;
    Blueprint::from_rgb(&img, &meta, tolerance)
}

/// Loads every `*.png` with a sidecar in `dir`, sorted by file name.
pub fn load_blueprint_dir(dir: &Path, tolerance: u8) -> Result<Vec<(std::path::PathBuf, Result<Blueprint, BlueprintError>)>, crate::io::IoError> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| crate::io::IoError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
        .collect();
    paths.sort();
    Ok(paths
        .into_iter()
        .map(|p| {
            let r = load_blueprint(&p, tolerance);
            (p, r)
        })
        .collect())
}

fn pick_majority(counts: &[f64; 5]) -> Option<SurfaceClass> {
    SurfaceClass::ALL
        .iter()
        .copied()
        .filter(|c| counts[c.index()] > 0.0)
        .max_by(|a, b| {
            counts[a.index()]
                .total_cmp(&counts[b.index()])
                .then(a.tie_rank().cmp(&b.tie_rank()))
        })
}

struct Regions {
    labels: Grid<u32>,
    /// (class, pixel indices) per region.
    regions: Vec<(SurfaceClass, Vec<u32>)>,
}

const NO_REGION: u32 = u32::MAX;

/// 4-connected same-class regions over non-background pixels.
fn label_regions(mask: &ClassRaster) -> Regions {
    let (w, h) = (mask.width(), mask.height());
    let mut labels = Grid::new(w, h, NO_REGION);
    let mut regions = Vec::new();
    let mut stack = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let class = mask.get(x, y);
            if class == SurfaceClass::Background || labels.get(x, y) != NO_REGION {
                continue;
            }
            let id = regions.len() as u32;
            let mut pixels = Vec::new();
            labels.set(x, y, id);
            stack.push((x, y));
            while let Some((cx, cy)) = stack.pop() {
                pixels.push(cy * w + cx);
                for (nx, ny) in neighbors4(cx, cy, w, h) {
                    if labels.get(nx, ny) == NO_REGION && mask.get(nx, ny) == class {
                        labels.set(nx, ny, id);
                        stack.push((nx, ny));
                    }
                }
            }
            regions.push((class, pixels));
        }
    }
    Regions { labels, regions }
}

fn neighbors4(x: u32, y: u32, w: u32, h: u32) -> impl Iterator<Item = (u32, u32)> {
    let mut out = [(0u32, 0u32); 4];
    let mut n = 0;
    if x > 0 {
        out[n] = (x - 1, y);
        n += 1;
    }
    if x + 1 < w {
        out[n] = (x + 1, y);
        n += 1;
    }
    if y > 0 {
        out[n] = (x, y - 1);
        n += 1;
    }
    if y + 1 < h {
        out[n] = (x, y + 1);
        n += 1;
    }
    out.into_iter().take(n)
}

/// Absorbs every non-background 4-connected region smaller than
/// `min_region_px` into the majority class among its outside neighbors.
///
/// Repeats until no small region is left, so the result is a fixed point and
/// a second call with the same threshold changes nothing.
pub fn simplify(b: &Blueprint, min_region_px: usize) -> Blueprint {
    let mut out = b.clone();
    if min_region_px == 0 {
        return out;
    }
    let (w, h) = (out.width(), out.height());
    loop {
        let Regions { labels, regions } = label_regions(&out.mask);
        let mut small: Vec<usize> = (0..regions.len())
            .filter(|&i| regions[i].1.len() < min_region_px)
            .collect();
        small.sort_by_key(|&i| (regions[i].1.len(), regions[i].1[0]));
        let mut dirty = vec![false; regions.len()];
        let mut changed = false;
        for r in small {
            if dirty[r] {
                continue;
            }
            let mut counts = [0f64; 5];
            let mut touched = Vec::new();
            for &p in &regions[r].1 {
                let (x, y) = (p % w, p / w);
                for (nx, ny) in neighbors4(x, y, w, h) {
                    let l = labels.get(nx, ny);
                    if l == r as u32 {
                        continue;
                    }
                    counts[out.mask.get(nx, ny).index()] += 1.0;
                    if l != NO_REGION {
                        touched.push(l as usize);
                    }
                }
            }
            let Some(target) = pick_majority(&counts) else {
                continue;
            };
            for &p in &regions[r].1 {
                out.mask.set(p % w, p / w, target);
            }
            for t in touched {
                dirty[t] = true;
            }
            changed = true;
        }
        if !changed {
            return out;
        }
    }
}

/// Resamples to `target_gsd` meters per pixel by coverage-weighted mode.
///
/// The long side becomes `round(physical_length / target_gsd)` and the short
/// side scales by the same factor; physical dimensions are unchanged.
pub fn rescale(b: &Blueprint, target_gsd: f64) -> Result<Blueprint, BlueprintError> {
    if !(target_gsd.is_finite() && target_gsd > 0.0) {
        return Err(BlueprintError::InvalidGsd(target_gsd));
    }
    if target_gsd == b.pixel_pitch {
        return Ok(b.clone());
    }
    let (w, h) = (b.width(), b.height());
    let long = w.max(h);
    let factor = b.pixel_pitch / target_gsd;
    let out_long = (b.physical_length / target_gsd).round() as u32;
    let out_short = (w.min(h) as f64 * factor).round() as u32;
    let (nw, nh) = if w >= h { (out_long, out_short) } else { (out_short, out_long) };
    if nw < 2 || nh < 2 {
        return Err(BlueprintError::TooCoarse { width: nw, height: nh });
    }
    debug_assert!(long > 0);
    let wx = box_weights(w, nw);
    let wy = box_weights(h, nh);
    let mask = Grid::from_fn(nw, nh, |x, y| {
        let (fx, wxs) = &wx[x as usize];
        let (fy, wys) = &wy[y as usize];
        let mut counts = [0f64; 5];
        for (j, wyv) in wys.iter().enumerate() {
            for (i, wxv) in wxs.iter().enumerate() {
                counts[b.mask.get(fx + i as u32, fy + j as u32).index()] += wxv * wyv;
            }
        }
        pick_majority(&counts).unwrap_or(SurfaceClass::Background)
    });
    Ok(Blueprint {
        mask,
        pixel_pitch: target_gsd,
        ..b.clone()
    })
}

//! Artificial scene generation: noised background, non-overlapping vehicle
//! placement, compositing, annotations and segmentation masks.

use std::path::{Path, PathBuf};

use image::{GrayImage, Luma, Rgb, RgbImage};
use rand::seq::{index, IndexedRandom};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blueprint::{self, Blueprint, BlueprintError};
use crate::geometry::{aabb_of, rects_intersect, Aabb, Point2, RotatedRect};
use crate::instance::{self, ColorPalette, InstanceError, OutlineMode, VehicleInstance};
use crate::io::{self, IoError};
use crate::manifest::{DatasetManifest, ImageRecord, MANIFEST_FILE};
use crate::raster::sample_rgba_premul;
use crate::rng::{self, Purpose};

pub use crate::manifest::Annotation;

/// Placement attempts per vehicle before it is dropped.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 100;
/// Mean ImageNet color in 8-bit RGB.
pub const IMAGENET_MEAN: [u8; 3] = [124, 117, 104];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub canvas_px: u32,
    pub gsd: f64,
    pub base_color: [u8; 3],
    pub fine_noise_var: f64,
    pub rough_noise_var: f64,
    pub rough_grid: u32,
    pub vehicles_per_image: u32,
    pub partial_per_image: u32,
    pub outline_mode: OutlineMode,
    pub deform_max: f64,
    pub enable_fine_noise: bool,
    pub enable_rough_noise: bool,
    pub enable_cut: bool,
    pub enable_deform: bool,
    /// Add background noise after compositing, so it also covers vehicles.
    pub noise_over_vehicles: bool,
    pub seed: u64,
    pub image_count: u64,
    pub class_id: u32,
    /// Regions below this many pixels are absorbed when preparing blueprints.
    pub min_region_px: usize,
    /// Directory of blueprint masks; the built-in stand-ins when absent.
    pub blueprints: Option<PathBuf>,
    /// Palette override file.
    pub palette: Option<PathBuf>,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            canvas_px: 600,
            gsd: 0.10,
            base_color: IMAGENET_MEAN,
            fine_noise_var: 5.0,
            rough_noise_var: 10.0,
            rough_grid: 10,
            vehicles_per_image: 10,
            partial_per_image: 3,
            outline_mode: OutlineMode::Black,
            deform_max: instance::DEFAULT_DEFORM,
            enable_fine_noise: true,
            enable_rough_noise: true,
            enable_cut: true,
            enable_deform: true,
            noise_over_vehicles: false,
            seed: 0,
            image_count: 1000,
            class_id: 0,
            min_region_px: 4,
            blueprints: None,
            palette: None,
        }
    }
}

impl GeneratorConfig {
    pub fn from_json(bytes: &[u8]) -> Result<Self, SceneError> {
        let cfg: GeneratorConfig =
            serde_json::from_slice(bytes).map_err(|e| SceneError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let fail = |m: String| Err(SceneError::Config(m));
        if self.partial_per_image > self.vehicles_per_image {
            return fail("partial_per_image exceeds vehicles_per_image".into());
        }
        if !(self.fine_noise_var >= 0.0 && self.fine_noise_var.is_finite())
            || !(self.rough_noise_var >= 0.0 && self.rough_noise_var.is_finite())
        {
            return fail("noise variances must be finite and non-negative".into());
        }
        if self.canvas_px < 64 {
            return fail(format!("canvas_px {} < 64", self.canvas_px));
        }
        if self.rough_grid < 2 {
            return fail(format!("rough_grid {} < 2", self.rough_grid));
        }
        if !(self.gsd > 0.0 && self.gsd.is_finite()) {
            return fail(format!("gsd {}", self.gsd));
        }
        if !(0.0..0.5).contains(&self.deform_max) {
            return fail(format!("deform_max {} outside [0, 0.5)", self.deform_max));
        }
        if self.vehicles_per_image >= 1 << 16 {
            return fail("vehicles_per_image too large".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("invalid generator config: {0}")]
    Config(String),
    #[error(transparent)]
    Blueprint(#[from] BlueprintError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("no blueprints available")]
    NoBlueprints,
    #[error("blueprint {id} ({w}x{h} px) cannot fit a {canvas} px canvas at every rotation")]
    DoesNotFit { id: String, w: u32, h: u32, canvas: u32 },
    #[error("image index {index} outside 0..{count}")]
    IndexOutOfRange { index: u64, count: u64 },
    #[error(transparent)]
    Io(#[from] IoError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedImage {
    pub index: u64,
    pub pixels: RgbImage,
    pub annotations: Vec<Annotation>,
    /// 255 where a pixel center lies inside an obb, else 0.
    pub seg_mask: GrayImage,
    pub dropped: u32,
    pub rng_stream_id: u64,
    pub background: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Placement {
    pub annotations: Vec<Annotation>,
    /// Indices (into the input list) of instances that found no free spot.
    pub dropped: Vec<usize>,
}

fn catmull_rom(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        (-t3 + 2.0 * t2 - t) / 2.0,
        (3.0 * t3 - 5.0 * t2 + 2.0) / 2.0,
        (-3.0 * t3 + 4.0 * t2 + t) / 2.0,
        (t3 - t2) / 2.0,
    ]
}

/// Catmull-Rom taps (clamped source indices and weights) for every output
/// sample when resizing `src` samples to `dst` with pixel-center alignment.
fn bicubic_taps(src: u32, dst: u32) -> Vec<([usize; 4], [f64; 4])> {
    let scale = src as f64 / dst as f64;
    let last = src as i64 - 1;
    (0..dst)
        .map(|o| {
            let s = (o as f64 + 0.5) * scale - 0.5;
            let i0 = s.floor();
            let w = catmull_rom(s - i0);
            let i0 = i0 as i64;
            let idx = [i0 - 1, i0, i0 + 1, i0 + 2].map(|i| i.clamp(0, last) as usize);
            (idx, w)
        })
        .collect()
}

/// Bicubic upsampling of a `g x g` grid (row-major) to `width x height`.
pub fn upsample_bicubic(grid: &[f64], g: u32, width: u32, height: u32) -> Vec<f64> {
    let tx = bicubic_taps(g, width);
    let ty = bicubic_taps(g, height);
    let g = g as usize;
    // rows first: g rows of `width` samples
    let mut rows = vec![0.0; g * width as usize];
    for r in 0..g {
        for (x, (idx, w)) in tx.iter().enumerate() {
            rows[r * width as usize + x] = (0..4).map(|k| w[k] * grid[r * g + idx[k]]).sum();
        }
    }
    let mut out = vec![0.0; width as usize * height as usize];
    for (y, (idx, w)) in ty.iter().enumerate() {
        for x in 0..width as usize {
            out[y * width as usize + x] = (0..4).map(|k| w[k] * rows[idx[k] * width as usize + x]).sum();
        }
    }
    out
}

/// Rough grid of Gaussian offsets, before upsampling.
pub fn rough_grid(cfg: &GeneratorConfig, rng: &mut impl Rng) -> Vec<f64> {
    let n = (cfg.rough_grid * cfg.rough_grid) as usize;
    let normal = Normal::new(0.0, cfg.rough_noise_var.sqrt()).expect("validated variance");
    (0..n).map(|_| normal.sample(rng)).collect()
}

/// Achromatic intensity offsets for a `width x height` canvas, `None` when
/// both noise layers are disabled. Rough noise is drawn before fine noise.
pub fn noise_field(cfg: &GeneratorConfig, width: u32, height: u32, rng: &mut impl Rng) -> Option<Vec<f64>> {
    if !cfg.enable_rough_noise && !cfg.enable_fine_noise {
        return None;
    }
    let mut field = if cfg.enable_rough_noise {
        let grid = rough_grid(cfg, rng);
        upsample_bicubic(&grid, cfg.rough_grid, width, height)
    } else {
        vec![0.0; width as usize * height as usize]
    };
    if cfg.enable_fine_noise {
        let normal = Normal::new(0.0, cfg.fine_noise_var.sqrt()).expect("validated variance");
        for v in &mut field {
            *v += normal.sample(rng);
        }
    }
    Some(field)
}

fn add_field(img: &mut RgbImage, field: &[f64]) {
    for (p, f) in img.pixels_mut().zip(field) {
        for c in 0..3 {
            p[c] = (p[c] as f64 + f).round().clamp(0.0, 255.0) as u8;
        }
    }
}

/// Base color plus the configured noise layers, clamped once at the end.
pub fn make_background(cfg: &GeneratorConfig, rng: &mut impl Rng) -> RgbImage {
    let mut img = RgbImage::from_pixel(cfg.canvas_px, cfg.canvas_px, Rgb(cfg.base_color));
    if let Some(field) = noise_field(cfg, cfg.canvas_px, cfg.canvas_px, rng) {
        add_field(&mut img, &field);
    }
    img
}

/// Alpha-composites `inst` rotated by `theta_deg` around `center`.
pub fn composite(canvas: &mut RgbImage, inst: &VehicleInstance, center: Point2, theta_deg: f64) {
    let (w, h) = (inst.pixels.width() as f64, inst.pixels.height() as f64);
    let (s, c) = theta_deg.to_radians().sin_cos();
    let rect = RotatedRect::new(center, w, h, theta_deg);
    let b = aabb_of(&rect);
    let x0 = (b.x_min - 1.0).floor().max(0.0) as u32;
    let y0 = (b.y_min - 1.0).floor().max(0.0) as u32;
    let x1 = ((b.x_max + 1.0).ceil() as u32).min(canvas.width());
    let y1 = ((b.y_max + 1.0).ceil() as u32).min(canvas.height());
    for y in y0..y1 {
        for x in x0..x1 {
            let dx = x as f64 + 0.5 - center.x;
            let dy = y as f64 + 0.5 - center.y;
            let u = dx * c + dy * s;
            let v = -dx * s + dy * c;
            let p = sample_rgba_premul(&inst.pixels, u + w / 2.0 - 0.5, v + h / 2.0 - 0.5);
            if p[3] <= 0.0 {
                continue;
            }
            let keep = 1.0 - p[3] / 255.0;
            let dst = canvas.get_pixel_mut(x, y);
            for ch in 0..3 {
                let val = p[ch] + keep * dst[ch] as f32;
                dst[ch] = val.round().clamp(0.0, 255.0) as u8;
            }
        }
    }
}

/// Places instances one after another at a uniform rotation and a uniform
/// center keeping the rectangle inside the canvas, rejecting poses that
/// touch an already placed rectangle. Instances without a free pose after
/// [`MAX_PLACEMENT_ATTEMPTS`] are dropped.
pub fn place_instances(canvas: &mut RgbImage, instances: &[VehicleInstance], class_id: u32, rng: &mut impl Rng) -> Placement {
    let (cw, ch) = (canvas.width() as f64, canvas.height() as f64);
    let mut placed: Vec<RotatedRect> = Vec::with_capacity(instances.len());
    let mut out = Placement::default();
    for (i, inst) in instances.iter().enumerate() {
        let (w, h) = (inst.footprint_w as f64, inst.footprint_h as f64);
        let mut pose = None;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let theta = rng.random_range(0.0..360.0);
            let (s, c) = f64::to_radians(theta).sin_cos();
            let ex = (w * c.abs() + h * s.abs()) / 2.0;
            let ey = (w * s.abs() + h * c.abs()) / 2.0;
            let (fx, fy): (f64, f64) = (rng.random(), rng.random());
            if 2.0 * ex > cw || 2.0 * ey > ch {
                continue;
            }
            let center = Point2::new(ex + fx * (cw - 2.0 * ex), ey + fy * (ch - 2.0 * ey));
            let rect = RotatedRect::new(center, w, h, theta);
            if placed.iter().all(|p| !rects_intersect(p, &rect)) {
                pose = Some((rect, theta));
                break;
            }
        }
        match pose {
            Some((rect, theta)) => {
                composite(canvas, inst, rect.center, theta);
                placed.push(rect);
                out.annotations.push(Annotation::from_obb(
                    class_id,
                    rect,
                    inst.is_partial,
                    Some(inst.provenance.clone()),
                ));
            }
            None => {
                log::warn!("dropping vehicle {i}: no free pose after {MAX_PLACEMENT_ATTEMPTS} attempts");
                out.dropped.push(i);
            }
        }
    }
    out
}

/// Binary mask: a pixel is set iff its center lies inside at least one obb.
pub fn render_seg_mask(annotations: &[Annotation], width: u32, height: u32) -> GrayImage {
    let mut mask = GrayImage::new(width, height);
    let frame = Aabb::new(0.0, 0.0, width as f64, height as f64);
    for a in annotations {
        let Some(b) = aabb_of(&a.obb).intersection(&frame) else {
            continue;
        };
        let x0 = (b.x_min - 0.5).floor().max(0.0) as u32;
        let y0 = (b.y_min - 0.5).floor().max(0.0) as u32;
        let x1 = ((b.x_max + 0.5).ceil() as u32).min(width);
        let y1 = ((b.y_max + 0.5).ceil() as u32).min(height);
        for y in y0..y1 {
            for x in x0..x1 {
                if a.obb.contains(Point2::new(x as f64 + 0.5, y as f64 + 0.5)) {
                    mask.put_pixel(x, y, Luma([255]));
                }
            }
        }
    }
    mask
}

pub fn image_id(index: u64) -> String {
    format!("img_{index:06}")
}

pub fn seg_id(index: u64) -> String {
    format!("seg_{index:06}")
}

/// Prepared blueprints and palette bound to one configuration.
#[derive(Debug, Clone)]
pub struct Generator {
    cfg: GeneratorConfig,
    blueprints: Vec<Blueprint>,
    palette: ColorPalette,
}

impl Generator {
    /// Simplifies and rescales `raw` blueprints to the configured GSD.
    pub fn new(cfg: GeneratorConfig, raw: &[Blueprint], palette: ColorPalette) -> Result<Self, SceneError> {
        cfg.validate()?;
        palette.validate()?;
        if raw.is_empty() {
            return Err(SceneError::NoBlueprints);
        }
        let blueprints = raw
            .iter()
            .map(|b| blueprint::rescale(&blueprint::simplify(b, cfg.min_region_px), cfg.gsd))
            .collect::<Result<Vec<_>, _>>()?;
        let grow = if cfg.enable_deform { 1.0 + 2.0 * cfg.deform_max } else { 1.0 };
        for b in &blueprints {
            let diag = (b.width() as f64).hypot(b.height() as f64) * grow;
            if diag > cfg.canvas_px as f64 {
                return Err(SceneError::DoesNotFit {
                    id: b.id.clone(),
                    w: b.width(),
                    h: b.height(),
                    canvas: cfg.canvas_px,
                });
            }
        }
        Ok(Self {
            cfg,
            blueprints,
            palette,
        })
    }

    /// Resolves the blueprint directory and palette file named in `cfg`.
    pub fn from_config(cfg: GeneratorConfig) -> Result<Self, SceneError> {
        let raw = match &cfg.blueprints {
            Some(dir) => {
                let mut out = Vec::new();
                for (_, bp) in blueprint::load_blueprint_dir(dir, blueprint::DEFAULT_TOLERANCE)? {
                    out.push(bp?);
                }
                out
            }
            None => crate::standin::standin_blueprints(),
        };
        let palette = match &cfg.palette {
            Some(p) => {
                let bytes = std::fs::read(p).map_err(|e| IoError::io(p, e))?;
                ColorPalette::from_json(&bytes)?
            }
            None => ColorPalette::default(),
        };
        Self::new(cfg, &raw, palette)
    }

    pub fn config(&self) -> &GeneratorConfig {
        &self.cfg
    }

    pub fn blueprints(&self) -> &[Blueprint] {
        &self.blueprints
    }

    fn stream(&self, index: u64, slot: u32, purpose: Purpose) -> rng::StreamRng {
        rng::stream(self.cfg.seed, index, slot, purpose)
    }

    /// Colored, cut and deformed vehicles for image `index`, in placement order.
    pub fn artificial_instances(&self, index: u64) -> Result<Vec<VehicleInstance>, SceneError> {
        let cfg = &self.cfg;
        let n = cfg.vehicles_per_image as usize;
        let mut sel = self.stream(index, 0, Purpose::Selection);
        let picks: Vec<&Blueprint> = (0..n)
            .map(|_| self.blueprints.choose(&mut sel).expect("non-empty blueprint set"))
            .collect();
        let mut partial = vec![false; n];
        if cfg.enable_cut {
            for k in index::sample(&mut sel, n, cfg.partial_per_image as usize) {
                partial[k] = true;
            }
        }
        picks
            .into_iter()
            .enumerate()
            .map(|(k, bp)| {
                let slot = k as u32;
                let mut v = instance::colorize(bp, &self.palette, cfg.outline_mode, &mut self.stream(index, slot, Purpose::Instance));
                if partial[k] {
                    v = instance::cut_partial(&v, &mut self.stream(index, slot, Purpose::Cut))?;
                }
                if cfg.enable_deform {
                    v = instance::deform(&v, cfg.deform_max, &mut self.stream(index, slot, Purpose::Deform))?;
                }
                Ok(v)
            })
            .collect()
    }

    /// The noised artificial background of image `index`.
    pub fn background(&self, index: u64) -> RgbImage {
        make_background(&self.cfg, &mut self.stream(index, 0, Purpose::Background))
    }

    /// Places `instances` on `background` with the placement stream of
    /// `index` and renders the mask.
    pub fn assemble(&self, index: u64, mut canvas: RgbImage, instances: &[VehicleInstance]) -> GeneratedImage {
        let mut prng = self.stream(index, 0, Purpose::Placement);
        let placement = place_instances(&mut canvas, instances, self.cfg.class_id, &mut prng);
        let seg_mask = render_seg_mask(&placement.annotations, canvas.width(), canvas.height());
        GeneratedImage {
            index,
            pixels: canvas,
            annotations: placement.annotations,
            seg_mask,
            dropped: placement.dropped.len() as u32,
            rng_stream_id: rng::stream_id(index, 0, Purpose::Selection),
            background: None,
        }
    }

    /// Deterministic function of `(seed, index)`.
    pub fn generate_image(&self, index: u64) -> Result<GeneratedImage, SceneError> {
        let cfg = &self.cfg;
        if index >= cfg.image_count {
            return Err(SceneError::IndexOutOfRange {
                index,
                count: cfg.image_count,
            });
        }
        let instances = self.artificial_instances(index)?;
        Ok(self.render(index, None, &instances))
    }

    /// Places `instances` on `background`, or on the artificial background
    /// of `index` when none is given.
    pub fn render(&self, index: u64, background: Option<RgbImage>, instances: &[VehicleInstance]) -> GeneratedImage {
        let cfg = &self.cfg;
        match background {
            Some(bg) => self.assemble(index, bg, instances),
            None if !cfg.noise_over_vehicles => self.assemble(index, self.background(index), instances),
            None => {
                let plain = RgbImage::from_pixel(cfg.canvas_px, cfg.canvas_px, Rgb(cfg.base_color));
                let mut out = self.assemble(index, plain, instances);
                let mut brng = self.stream(index, 0, Purpose::Background);
                if let Some(field) = noise_field(cfg, cfg.canvas_px, cfg.canvas_px, &mut brng) {
                    add_field(&mut out.pixels, &field);
                }
                out
            }
        }
    }

    /// Renders every image in parallel, writes `img_*.png`, `seg_*.png` and
    /// `manifest.json` (last, so a manifest implies a complete dataset).
    pub fn generate_dataset(&self, out_dir: &Path) -> Result<DatasetManifest, SceneError> {
        let records = (0..self.cfg.image_count)
            .into_par_iter()
            .map(|i| {
                let img = self.generate_image(i)?;
                write_generated(out_dir, &img, self.cfg.gsd)
            })
            .collect::<Result<Vec<_>, SceneError>>()?;
        let mut manifest = DatasetManifest::new(serde_json::to_value(&self.cfg).expect("config serializes"));
        manifest.images = records;
        manifest.save(&out_dir.join(MANIFEST_FILE))?;
        Ok(manifest)
    }
}

/// Writes image and mask PNGs and returns the manifest record.
pub fn write_generated(out_dir: &Path, img: &GeneratedImage, gsd: f64) -> Result<ImageRecord, SceneError> {
    let id = image_id(img.index);
    let file = format!("{id}.png");
    let seg_file = format!("{}.png", seg_id(img.index));
    io::save_rgb_png(&out_dir.join(&file), &img.pixels)?;
    io::save_gray_png(&out_dir.join(&seg_file), &img.seg_mask)?;
    Ok(ImageRecord {
        id,
        file,
        width: img.pixels.width(),
        height: img.pixels.height(),
        gsd,
        split: None,
        annotations: img.annotations.clone(),
        seg_mask_file: Some(seg_file),
        dropped: img.dropped,
        background: img.background.clone(),
    })
}

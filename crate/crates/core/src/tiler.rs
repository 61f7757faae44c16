//! Overlapping patches, GSD resampling, and dataset splits and subsets.

use std::path::Path;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{clip_polygon_to_aabb, corners, min_area_rect, Aabb};
use crate::ingest::AnnotatedSample;
use crate::io::{self, IoError};
use crate::manifest::{Annotation, DatasetManifest, ImageRecord};
use crate::raster::area_downsample_rgb;
use crate::rng::{self, Purpose};

/// Manifest note recording when empty patches were removed.
pub const EMPTY_DROP_NOTE: &str = "empty_drop";

#[derive(Debug, Error, PartialEq)]
pub enum TilerError {
    #[error("invalid tiling spec: {0}")]
    Spec(String),
    #[error("raster extent {extent} px is smaller than the {patch} px patch")]
    TooSmall { extent: u32, patch: u32 },
    #[error("cannot take {n} images out of {available}")]
    SubsampleTooLarge { n: usize, available: usize },
    #[error("fraction {0} outside [0, 1)")]
    Fraction(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TilingSpec {
    pub patch_px: u32,
    pub overlap_px: u32,
    pub output_px: u32,
    pub min_annotation_px: f64,
    pub drop_empty: bool,
}

impl Default for TilingSpec {
    fn default() -> Self {
        Self {
            patch_px: 600,
            overlap_px: 200,
            output_px: 300,
            min_annotation_px: 20.0,
            drop_empty: true,
        }
    }
}

impl TilingSpec {
    pub fn validate(&self) -> Result<(), TilerError> {
        if self.patch_px == 0 || self.overlap_px >= self.patch_px {
            return Err(TilerError::Spec(format!(
                "need 0 <= overlap ({}) < patch ({})",
                self.overlap_px, self.patch_px
            )));
        }
        if self.output_px == 0 || self.output_px > self.patch_px {
            return Err(TilerError::Spec(format!(
                "need 0 < output ({}) <= patch ({})",
                self.output_px, self.patch_px
            )));
        }
        if !(self.min_annotation_px >= 0.0 && self.min_annotation_px.is_finite()) {
            return Err(TilerError::Spec(format!("min_annotation_px {}", self.min_annotation_px)));
        }
        Ok(())
    }
}

/// Patch offsets along one axis: multiples of `patch - overlap`, the last one
/// clamped so no patch leaves the raster.
pub fn tile_positions(extent: u32, patch: u32, overlap: u32) -> Result<Vec<u32>, TilerError> {
    if patch == 0 || overlap >= patch {
        return Err(TilerError::Spec(format!("need 0 <= overlap ({overlap}) < patch ({patch})")));
    }
    if extent < patch {
        return Err(TilerError::TooSmall { extent, patch });
    }
    let stride = patch - overlap;
    let steps = (extent - patch).div_ceil(stride);
    Ok((0..=steps).map(|k| (k * stride).min(extent - patch)).collect())
}

fn short_side(a: &Annotation) -> f64 {
    a.obb.width.min(a.obb.height).min(a.aabb.width()).min(a.aabb.height())
}

/// Clips `a` to `window` and moves it into window coordinates. Annotations
/// fully inside are only shifted; cut ones get the tight rectangle of the
/// clipped polygon and are marked partial.
pub fn clip_annotation(a: &Annotation, window: &Aabb) -> Option<Annotation> {
    let (dx, dy) = (-window.x_min, -window.y_min);
    let poly = corners(&a.obb);
    if window.contains_aabb(&a.aabb) {
        let mut out = a.clone();
        out.obb = a.obb.translate(dx, dy);
        out.aabb = a.aabb.translate(dx, dy);
        return Some(out);
    }
    let clipped = clip_polygon_to_aabb(&poly, window);
    let obb = min_area_rect(&clipped).ok()?;
    let aabb = Aabb::bounding(&clipped)?;
    Some(Annotation {
        class_id: a.class_id,
        aabb: aabb.translate(dx, dy),
        obb: obb.translate(dx, dy),
        is_partial: true,
        provenance: a.provenance.clone(),
    })
}

/// Cuts `sample` into patches named `{id}_{row}_{col}`. Annotations with a
/// side below the spec minimum are dropped, then empty patches if requested.
pub fn tile(sample: &AnnotatedSample, spec: &TilingSpec) -> Result<Vec<AnnotatedSample>, TilerError> {
    spec.validate()?;
    let xs = tile_positions(sample.rgb.width(), spec.patch_px, spec.overlap_px)?;
    let ys = tile_positions(sample.rgb.height(), spec.patch_px, spec.overlap_px)?;
    let p = spec.patch_px;
    let mut out = Vec::new();
    for (row, &y) in ys.iter().enumerate() {
        for (col, &x) in xs.iter().enumerate() {
            let window = Aabb::new(x as f64, y as f64, (x + p) as f64, (y + p) as f64);
            let annotations: Vec<Annotation> = sample
                .annotations
                .iter()
                .filter(|a| a.aabb.intersection(&window).is_some_and(|i| i.area() > 0.0))
                .filter_map(|a| clip_annotation(a, &window))
                .filter(|a| short_side(a) >= spec.min_annotation_px)
                .collect();
            if spec.drop_empty && annotations.is_empty() {
                continue;
            }
            out.push(AnnotatedSample {
                id: format!("{}_{row}_{col}", sample.id),
                rgb: image::imageops::crop_imm(&sample.rgb, x, y, p, p).to_image(),
                gsd: sample.gsd,
                annotations,
            });
        }
    }
    Ok(out)
}

/// Area-averaged downsampling to `output_px` along the longer side, with
/// annotations scaled and the GSD coarsened accordingly.
pub fn resample(patch: &AnnotatedSample, output_px: u32) -> Result<AnnotatedSample, TilerError> {
    let (w, h) = patch.rgb.dimensions();
    let long = w.max(h);
    if output_px == 0 || output_px > long {
        return Err(TilerError::Spec(format!("output {output_px} px for a {w}x{h} patch")));
    }
    if output_px == long {
        return Ok(patch.clone());
    }
    let f = output_px as f64 / long as f64;
    let nw = ((w as f64 * f).round() as u32).max(1);
    let nh = ((h as f64 * f).round() as u32).max(1);
    Ok(AnnotatedSample {
        id: patch.id.clone(),
        rgb: area_downsample_rgb(&patch.rgb, nw, nh),
        gsd: patch.gsd / f,
        annotations: patch
            .annotations
            .iter()
            .map(|a| Annotation {
                aabb: a.aabb.scale(f),
                obb: a.obb.scale(f),
                ..a.clone()
            })
            .collect(),
    })
}

/// Tiles and resamples one sample.
pub fn tile_and_resample(sample: &AnnotatedSample, spec: &TilingSpec) -> Result<Vec<AnnotatedSample>, TilerError> {
    tile(sample, spec)?.iter().map(|p| resample(p, spec.output_px)).collect()
}

/// Writes each sample as `{id}.png` and returns the records, sorted by id.
pub fn write_samples(out_dir: &Path, samples: &[AnnotatedSample]) -> Result<Vec<ImageRecord>, IoError> {
    let mut records = Vec::with_capacity(samples.len());
    for s in samples {
        let file = format!("{}.png", s.id);
        io::save_rgb_png(&out_dir.join(&file), &s.rgb)?;
        records.push(s.record(file));
    }
    records.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(records)
}

fn with_images(manifest: &DatasetManifest, images: Vec<ImageRecord>) -> DatasetManifest {
    let mut m = manifest.clone();
    m.images = images;
    m.sort_images();
    m
}

/// Seeded image-level partition with `round(val_fraction * N)` validation
/// images (halves round up). Both halves are sorted by id.
pub fn split(manifest: &DatasetManifest, val_fraction: f64, seed: u64) -> Result<(DatasetManifest, DatasetManifest), TilerError> {
    if !(0.0..1.0).contains(&val_fraction) {
        return Err(TilerError::Fraction(val_fraction));
    }
    let mut images = manifest.images.clone();
    images.sort_by(|a, b| a.id.cmp(&b.id));
    let n_val = (val_fraction * images.len() as f64).round() as usize;
    images.shuffle(&mut rng::stream(seed, 0, 0, Purpose::Split));
    let train: Vec<ImageRecord> = images[n_val..]
        .iter()
        .map(|r| ImageRecord { split: Some("train".into()), ..r.clone() })
        .collect();
    let val: Vec<ImageRecord> = images[..n_val]
        .iter()
        .map(|r| ImageRecord { split: Some("val".into()), ..r.clone() })
        .collect();
    Ok((with_images(manifest, train), with_images(manifest, val)))
}

/// Seeded uniform sample of `n` images without replacement, sorted by id.
pub fn subsample(manifest: &DatasetManifest, n: usize, seed: u64) -> Result<DatasetManifest, TilerError> {
    let mut images = manifest.images.clone();
    images.sort_by(|a, b| a.id.cmp(&b.id));
    if n > images.len() {
        return Err(TilerError::SubsampleTooLarge { n, available: images.len() });
    }
    let picked = index::sample(&mut rng::stream(seed, 1, 0, Purpose::Split), images.len(), n)
        .into_iter()
        .map(|i| images[i].clone())
        .collect();
    Ok(with_images(manifest, picked))
}

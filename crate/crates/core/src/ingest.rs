//! Semantic label rasters to detection annotations.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use image::RgbImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{min_area_rect, Point2, RotatedRect};
use crate::io::IoError;
use crate::manifest::{Annotation, ImageRecord, Provenance};

/// Label color of cars in the Potsdam color code.
pub const POTSDAM_CAR: [u8; 3] = [255, 255, 0];
pub const DEFAULT_COLOR_TOLERANCE: u8 = 10;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("invalid class map: {0}")]
    ClassMap(String),
    #[error("invalid exclusions: {0}")]
    Exclusions(String),
    #[error("rgb raster is {rgb:?} but label raster is {label:?}")]
    DimensionMismatch { rgb: (u32, u32), label: (u32, u32) },
    #[error("no label raster for {0}")]
    MissingLabel(PathBuf),
    #[error(transparent)]
    Io(#[from] IoError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassEntry {
    pub color: [u8; 3],
    pub class_id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

/// Label colors mapped to class ids, matched within a per-channel tolerance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassColorMap {
    pub classes: Vec<ClassEntry>,
    #[serde(default = "default_tolerance")]
    pub tolerance: u8,
}

fn default_tolerance() -> u8 {
    DEFAULT_COLOR_TOLERANCE
}

fn chebyshev(a: [u8; 3], b: [u8; 3]) -> u8 {
    (0..3).map(|i| a[i].abs_diff(b[i])).max().unwrap_or(0)
}

impl ClassColorMap {
    pub fn new(classes: Vec<ClassEntry>, tolerance: u8) -> Result<Self, IngestError> {
        let map = Self { classes, tolerance };
        map.validate()?;
        Ok(map)
    }

    /// Cars only, in the Potsdam color code.
    pub fn potsdam_cars() -> Self {
        Self {
            classes: vec![ClassEntry {
                color: POTSDAM_CAR,
                class_id: 0,
                name: Some("car".into()),
            }],
            tolerance: DEFAULT_COLOR_TOLERANCE,
        }
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, IngestError> {
        let map: Self = serde_json::from_slice(bytes).map_err(|e| IngestError::ClassMap(e.to_string()))?;
        map.validate()?;
        Ok(map)
    }

    /// Colors must be pairwise farther apart than twice the tolerance so no
    /// pixel can match two classes.
    pub fn validate(&self) -> Result<(), IngestError> {
        if self.classes.is_empty() {
            return Err(IngestError::ClassMap("no classes".into()));
        }
        for (i, a) in self.classes.iter().enumerate() {
            for b in &self.classes[i + 1..] {
                let d = chebyshev(a.color, b.color) as u32;
                if d <= 2 * self.tolerance as u32 {
                    return Err(IngestError::ClassMap(format!(
                        "colors {:?} and {:?} are {d} apart, need > {}",
                        a.color,
                        b.color,
                        2 * self.tolerance as u32
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Maximal 8-connected set of label pixels of one class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    /// Pixel coordinates in discovery order.
    pub pixels: Vec<(u32, u32)>,
}

impl Region {
    pub fn area(&self) -> usize {
        self.pixels.len()
    }

    /// Mean of pixel centers.
    pub fn centroid(&self) -> Point2 {
        let n = self.pixels.len().max(1) as f64;
        let (sx, sy) = self
            .pixels
            .iter()
            .fold((0.0, 0.0), |(sx, sy), &(x, y)| (sx + x as f64 + 0.5, sy + y as f64 + 0.5));
        Point2::new(sx / n, sy / n)
    }

    /// Leftmost and rightmost pixel of every row; their hull equals the
    /// hull of the whole region.
    fn row_extremes(&self) -> Vec<(u32, u32)> {
        let mut rows: BTreeMap<u32, (u32, u32)> = BTreeMap::new();
        for &(x, y) in &self.pixels {
            let e = rows.entry(y).or_insert((x, x));
            e.0 = e.0.min(x);
            e.1 = e.1.max(x);
        }
        let mut out = Vec::with_capacity(rows.len() * 2);
        for (y, (lo, hi)) in rows {
            out.push((lo, y));
            if hi != lo {
                out.push((hi, y));
            }
        }
        out
    }

    /// Rotated rectangle whose center-sampled rasterization reproduces the
    /// region, when one exists near the hull orientation; otherwise a hull
    /// fit.
    ///
    /// Each side's edge must lie between the outermost inside pixel center
    /// and the nearest outside one, so it is placed midway. The hull angle of
    /// the pixel centers is kept when it admits such a rectangle; short or
    /// near-axis edges can make the hull snap to the pixel grid, in which case
    /// the middle of the nearest admissible angle range is used. When no
    /// angle is found (irregular labels, or a range narrower than the search
    /// step on long oblique edges) the hull angle is kept and outside centers
    /// that contradict it are ignored; for an axis-aligned region this grows
    /// the center hull by exactly one pixel. Lines too thin for a center fit
    /// fall back to the corners.
    pub fn obb(&self) -> RotatedRect {
        let ext = self.row_extremes();
        let centers: Vec<Point2> = ext.iter().map(|&(x, y)| Point2::new(x as f64 + 0.5, y as f64 + 0.5)).collect();
        if let Ok(r) = min_area_rect(&centers) {
            return self.consistent_fit(r.angle(), r.width.max(r.height) + 1.0);
        }
        let corners: Vec<Point2> = ext
            .iter()
            .flat_map(|&(x, y)| {
                let (x, y) = (x as f64, y as f64);
                [
                    Point2::new(x, y),
                    Point2::new(x + 1.0, y),
                    Point2::new(x, y + 1.0),
                    Point2::new(x + 1.0, y + 1.0),
                ]
            })
            .collect();
        min_area_rect(&corners).expect("pixel squares span a positive area")
    }

    /// Centers of region pixels with a 4-neighbour outside the region, and
    /// of non-region pixels 8-adjacent to it (negative coordinates skipped).
    fn border(&self) -> (Vec<Point2>, Vec<Point2>) {
        let x0 = self.pixels.iter().map(|p| p.0).min().unwrap_or(0) as i64;
        let x1 = self.pixels.iter().map(|p| p.0).max().unwrap_or(0) as i64;
        let y0 = self.pixels.iter().map(|p| p.1).min().unwrap_or(0) as i64;
        let y1 = self.pixels.iter().map(|p| p.1).max().unwrap_or(0) as i64;
        let (w, h) = (x1 - x0 + 3, y1 - y0 + 3);
        let mut grid = vec![false; (w * h) as usize];
        let at = |x: i64, y: i64| ((y - y0 + 1) * w + (x - x0 + 1)) as usize;
        for &(x, y) in &self.pixels {
            grid[at(x as i64, y as i64)] = true;
        }
        let center = |x: i64, y: i64| Point2::new(x as f64 + 0.5, y as f64 + 0.5);
        let (mut inside, mut outside) = (Vec::new(), Vec::new());
        for y in y0 - 1..=y1 + 1 {
            for x in x0 - 1..=x1 + 1 {
                if grid[at(x, y)] {
                    if [(1, 0), (-1, 0), (0, 1), (0, -1)].iter().any(|&(dx, dy)| !grid[at(x + dx, y + dy)]) {
                        inside.push(center(x, y));
                    }
                } else if x >= 0 && y >= 0 {
                    let near = (-1..=1).any(|dy: i64| {
                        (-1..=1).any(|dx: i64| {
                            let (nx, ny) = (x + dx, y + dy);
                            (x0..=x1).contains(&nx) && (y0..=y1).contains(&ny) && grid[at(nx, ny)]
                        })
                    });
                    if near {
                        outside.push(center(x, y));
                    }
                }
            }
        }
        (inside, outside)
    }

    /// `extent` is the region's longer side; the admissible angle range
    /// narrows roughly as its inverse, and so do the search step and radius.
    fn consistent_fit(&self, hull_angle: f64, extent: f64) -> RotatedRect {
        let (inside, outside) = self.border();
        let fit = |theta: f64| consistent_rect(&inside, &outside, theta, true);
        fit(hull_angle)
            .or_else(|| self.admissible_search(&fit, hull_angle, extent))
            .unwrap_or_else(|| consistent_rect(&inside, &outside, hull_angle, false).expect("relaxed fit always exists"))
    }

    fn admissible_search(&self, fit: &dyn Fn(f64) -> Option<RotatedRect>, hull_angle: f64, extent: f64) -> Option<RotatedRect> {
        let step = (0.1 / extent).to_degrees().min(0.1);
        let radius = (3.0 / extent).to_degrees().clamp(0.5, FIT_SEARCH_DEG);
        let seed = (1..=(radius / step).ceil() as i32)
            .flat_map(|k| [hull_angle - k as f64 * step, hull_angle + k as f64 * step])
            .find(|&t| fit(t).is_some())?;
        // widen to the ends of the admissible range, then bisect each end
        let mut ends = [seed; 2];
        for (end, dir) in ends.iter_mut().zip([-1.0, 1.0]) {
            let mut inner = seed;
            while (inner - seed).abs() < radius && fit(inner + dir * step).is_some() {
                inner += dir * step;
            }
            let mut outer = inner + dir * step;
            for _ in 0..24 {
                let mid = (inner + outer) / 2.0;
                if fit(mid).is_some() {
                    inner = mid;
                } else {
                    outer = mid;
                }
            }
            *end = inner;
        }
        fit((ends[0] + ends[1]) / 2.0).or_else(|| fit(seed))
    }
}

/// Largest search radius around the hull angle for an admissible orientation.
const FIT_SEARCH_DEG: f64 = 5.0;

/// The rectangle at `theta_deg` with each edge midway between the extreme
/// inside center and the nearest outside center beyond it. When `strict`,
/// an outside center within the inside centers' extent (no rectangle at
/// this angle reproduces the region) yields `None`; otherwise it is skipped.
fn consistent_rect(inside: &[Point2], outside: &[Point2], theta_deg: f64, strict: bool) -> Option<RotatedRect> {
    let (s, c) = theta_deg.to_radians().sin_cos();
    let frame = |p: &Point2| [p.x * c + p.y * s, -p.x * s + p.y * c];
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for q in inside.iter().map(frame) {
        for a in 0..2 {
            lo[a] = lo[a].min(q[a]);
            hi[a] = hi[a].max(q[a]);
        }
    }
    // a missing neighbour (image border) leaves half a pixel
    let (mut lo_out, mut hi_out) = ([lo[0] - 1.0, lo[1] - 1.0], [hi[0] + 1.0, hi[1] + 1.0]);
    for q in outside.iter().map(frame) {
        let within = [lo[0] <= q[0] && q[0] <= hi[0], lo[1] <= q[1] && q[1] <= hi[1]];
        if within[0] && within[1] {
            if strict {
                return None;
            }
            continue;
        }
        for a in 0..2 {
            if within[1 - a] {
                if q[a] > hi[a] {
                    hi_out[a] = hi_out[a].min(q[a]);
                } else {
                    lo_out[a] = lo_out[a].max(q[a]);
                }
            }
        }
    }
    let e_lo = [(lo[0] + lo_out[0]) / 2.0, (lo[1] + lo_out[1]) / 2.0];
    let e_hi = [(hi[0] + hi_out[0]) / 2.0, (hi[1] + hi_out[1]) / 2.0];
    let (cu, cv) = ((e_lo[0] + e_hi[0]) / 2.0, (e_lo[1] + e_hi[1]) / 2.0);
    let center = Point2::new(cu * c - cv * s, cu * s + cv * c);
    let (w, h) = (e_hi[0] - e_lo[0], e_hi[1] - e_lo[1]);
    // keep the [0, 90) convention of the hull fit
    let t = theta_deg.rem_euclid(180.0);
    Some(if t >= 90.0 {
        RotatedRect::new(center, h, w, t - 90.0)
    } else {
        RotatedRect::new(center, w, h, t)
    })
}

/// Maximal 8-connected components of pixels within `tolerance` of `color`,
/// ordered by their first pixel in row-major order.
pub fn extract_class_regions(label: &RgbImage, color: [u8; 3], tolerance: u8) -> Vec<Region> {
    let (w, h) = (label.width() as usize, label.height() as usize);
    // 1 = unvisited match, 0 = background or visited
    let mut todo: Vec<u8> = label.pixels().map(|p| (chebyshev(p.0, color) <= tolerance) as u8).collect();
    let mut regions = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    for start in 0..todo.len() {
        if todo[start] == 0 {
            continue;
        }
        todo[start] = 0;
        stack.push(start);
        let mut pixels = Vec::new();
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            pixels.push((x as u32, y as u32));
            for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let j = ny * w + nx;
                    if todo[j] != 0 {
                        todo[j] = 0;
                        stack.push(j);
                    }
                }
            }
        }
        regions.push(Region { pixels });
    }
    regions
}

/// A manually removed region, identified by its centroid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exclusion {
    /// Image (tile) id the exclusion applies to; every image when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    pub centroid: [f64; 2],
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

fn default_radius() -> f64 {
    2.0
}

impl Exclusion {
    pub fn at(centroid: Point2) -> Self {
        Self {
            image: None,
            centroid: [centroid.x, centroid.y],
            radius: default_radius(),
            reason: None,
        }
    }

    pub fn matches(&self, image_id: Option<&str>, region: &Region) -> bool {
        if let (Some(want), Some(id)) = (&self.image, image_id) {
            if want != id {
                return false;
            }
        }
        let c = region.centroid();
        (c.x - self.centroid[0]).hypot(c.y - self.centroid[1]) <= self.radius
    }
}

/// Exclusion sidecar: a JSON list of [`Exclusion`]s.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Exclusions(pub Vec<Exclusion>);

impl Exclusions {
    pub fn from_json(bytes: &[u8]) -> Result<Self, IngestError> {
        let ex: Self = serde_json::from_slice(bytes).map_err(|e| IngestError::Exclusions(e.to_string()))?;
        for e in &ex.0 {
            if !(e.radius >= 0.0 && e.radius.is_finite()) || !e.centroid.iter().all(|v| v.is_finite()) {
                return Err(IngestError::Exclusions(format!("bad entry {e:?}")));
            }
        }
        Ok(ex)
    }

    pub fn for_image(&self, image_id: &str) -> Vec<Exclusion> {
        self.0
            .iter()
            .filter(|e| e.image.as_deref().is_none_or(|i| i == image_id))
            .cloned()
            .collect()
    }
}

/// One annotation per region that is large enough and not excluded.
pub fn regions_to_annotations(regions: &[Region], class_id: u32, min_area_px: usize, exclusions: &[Exclusion]) -> Vec<Annotation> {
    regions
        .iter()
        .filter(|r| r.area() >= min_area_px)
        .filter(|r| !exclusions.iter().any(|e| e.matches(None, r)))
        .map(|r| {
            let c = r.centroid();
            Annotation::from_obb(
                class_id,
                r.obb(),
                false,
                Some(Provenance::Region { centroid: [c.x, c.y] }),
            )
        })
        .collect()
}

/// An image with its detection annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedSample {
    pub id: String,
    pub rgb: RgbImage,
    pub gsd: f64,
    pub annotations: Vec<Annotation>,
}

/// Annotations for every mapped class of one label tile.
pub fn convert_tile(
    id: &str,
    rgb: RgbImage,
    label: &RgbImage,
    class_map: &ClassColorMap,
    min_area_px: usize,
    exclusions: &[Exclusion],
    gsd: f64,
) -> Result<AnnotatedSample, IngestError> {
    if rgb.dimensions() != label.dimensions() {
        return Err(IngestError::DimensionMismatch {
            rgb: rgb.dimensions(),
            label: label.dimensions(),
        });
    }
    let mut annotations = Vec::new();
    for class in &class_map.classes {
        let regions = extract_class_regions(label, class.color, class_map.tolerance);
        annotations.extend(regions_to_annotations(&regions, class.class_id, min_area_px, exclusions));
    }
    Ok(AnnotatedSample {
        id: id.to_string(),
        rgb,
        gsd,
        annotations,
    })
}

impl AnnotatedSample {
    pub fn record(&self, file: String) -> ImageRecord {
        ImageRecord {
            id: self.id.clone(),
            file,
            width: self.rgb.width(),
            height: self.rgb.height(),
            gsd: self.gsd,
            split: None,
            annotations: self.annotations.clone(),
            seg_mask_file: None,
            dropped: 0,
            background: None,
        }
    }
}

const RGB_SUFFIXES: [&str; 2] = ["_RGB", "_rgb"];
const LABEL_SUFFIXES: [&str; 4] = ["_label", "_labels", "_LABEL", "_Label"];

fn strip_any<'a>(s: &'a str, suffixes: &[&str]) -> &'a str {
    suffixes.iter().find_map(|suf| s.strip_suffix(suf)).unwrap_or(s)
}

fn is_raster(p: &Path) -> bool {
    matches!(
        p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("png" | "tif" | "tiff")
    )
}

fn list_rasters(dir: &Path) -> Result<Vec<PathBuf>, IngestError> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| IoError::io(dir, e))? {
        let p = entry.map_err(|e| IoError::io(dir, e))?.path();
        if p.is_file() && is_raster(&p) {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

/// Pairs rasters in `rgb_dir` with labels in `label_dir` by file stem, after
/// dropping `_RGB` / `_label` style suffixes. Returns `(id, rgb, label)`.
pub fn pair_rasters(rgb_dir: &Path, label_dir: &Path) -> Result<Vec<(String, PathBuf, PathBuf)>, IngestError> {
    let labels: BTreeMap<String, PathBuf> = list_rasters(label_dir)?
        .into_iter()
        .filter_map(|p| {
            let stem = p.file_stem()?.to_str()?.to_string();
            Some((strip_any(&stem, &LABEL_SUFFIXES).to_string(), p))
        })
        .collect();
    let mut out = Vec::new();
    for rgb in list_rasters(rgb_dir)? {
        let stem = rgb.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        let id = strip_any(&stem, &RGB_SUFFIXES).to_string();
        let label = labels.get(&id).cloned().ok_or_else(|| IngestError::MissingLabel(rgb.clone()))?;
        out.push((id, rgb, label));
    }
    Ok(out)
}

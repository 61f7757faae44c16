//! Colorized vehicle instances built from prepared blueprints.

use image::{imageops, Rgba, RgbaImage};
use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blueprint::{Blueprint, SurfaceClass};
use crate::manifest::Provenance;
use crate::raster::resize_rgba_bilinear;

/// Bounds of the partial-visibility cut, as a fraction of the cut dimension.
pub const CUT_MIN: f64 = 0.5;
pub const CUT_MAX: f64 = 0.7;
pub const DEFAULT_DEFORM: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error("instance is already partial")]
    AlreadyPartial,
    #[error("instance would shrink to {width}x{height} px")]
    TooSmall { width: u32, height: u32 },
    #[error("invalid palette: {0}")]
    InvalidPalette(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColorPalette {
    pub body_colors: Vec<[u8; 3]>,
    pub window_colors: Vec<[u8; 3]>,
    pub light_color: [u8; 3],
    #[serde(default)]
    pub outline_color_black: [u8; 3],
}

impl Default for ColorPalette {
    fn default() -> Self {
        Self {
            body_colors: vec![
                [236, 236, 236], // white
                [22, 22, 24],    // black
                [70, 72, 76],    // dark gray
                [110, 112, 116], // gray
                [150, 152, 156], // light gray
                [190, 192, 196], // silver
                [170, 30, 30],   // red
                [100, 20, 28],   // dark red
                [26, 40, 90],    // dark blue
                [80, 96, 118],   // blue-gray
                [40, 80, 50],    // green
                [200, 186, 150], // beige
            ],
            window_colors: vec![
                [40, 52, 70],
                [52, 66, 86],
                [64, 80, 102],
                [78, 94, 118],
                [92, 110, 134],
            ],
            light_color: [250, 244, 200],
            outline_color_black: [0, 0, 0],
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PaletteFile {
    Full(ColorPalette),
    BodyOnly(Vec<[u8; 3]>),
}

impl ColorPalette {
    /// Accepts a full palette object or a bare list of body colors that
    /// replaces the default body colors.
    pub fn from_json(bytes: &[u8]) -> Result<Self, InstanceError> {
        let parsed: PaletteFile =
            serde_json::from_slice(bytes).map_err(|e| InstanceError::InvalidPalette(e.to_string()))?;
        let palette = match parsed {
            PaletteFile::Full(p) => p,
            PaletteFile::BodyOnly(body_colors) => ColorPalette {
                body_colors,
                ..ColorPalette::default()
            },
        };
        palette.validate()?;
        Ok(palette)
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        if self.body_colors.is_empty() {
            return Err(InstanceError::InvalidPalette("no body colors".into()));
        }
        if self.window_colors.is_empty() {
            return Err(InstanceError::InvalidPalette("no window colors".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutlineMode {
    #[default]
    Black,
    Body,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutAxis {
    X,
    Y,
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleInstance {
    pub pixels: RgbaImage,
    pub footprint_w: u32,
    pub footprint_h: u32,
    pub is_partial: bool,
    pub cut_axis: CutAxis,
    pub cut_fraction: f64,
    pub deform_factors: (f64, f64),
    pub provenance: Provenance,
}

impl VehicleInstance {
    /// Wraps an already-colored raster (e.g. a real vehicle crop).
    pub fn from_rgba(pixels: RgbaImage, is_partial: bool, provenance: Provenance) -> Self {
        Self {
            footprint_w: pixels.width(),
            footprint_h: pixels.height(),
            pixels,
            is_partial,
            cut_axis: CutAxis::None,
            cut_fraction: 1.0,
            deform_factors: (1.0, 1.0),
            provenance,
        }
    }

    pub fn opaque_count(&self) -> usize {
        self.pixels.pixels().filter(|p| p[3] > 0).count()
    }
}

/// Paints a blueprint: one body color and one window color per instance.
pub fn colorize(b: &Blueprint, palette: &ColorPalette, outline_mode: OutlineMode, rng: &mut impl Rng) -> VehicleInstance {
    let body = *palette.body_colors.choose(rng).expect("validated palette");
    let window = *palette.window_colors.choose(rng).expect("validated palette");
    let outline = match outline_mode {
        OutlineMode::Black => palette.outline_color_black,
        OutlineMode::Body => body,
    };
    let pixels = RgbaImage::from_fn(b.width(), b.height(), |x, y| {
        let [r, g, bl] = match b.mask.get(x, y) {
            SurfaceClass::Background => return Rgba([0, 0, 0, 0]),
            SurfaceClass::Outline => outline,
            SurfaceClass::Body => body,
            SurfaceClass::Lights => palette.light_color,
            SurfaceClass::Windows => window,
        };
        Rgba([r, g, bl, 255])
    });
    VehicleInstance::from_rgba(pixels, false, Provenance::Blueprint { id: b.id.clone() })
}

/// Crops `round(fraction * dim)` pixels along `axis`, keeping the low side
/// (left/top) when `keep_low` is set.
pub fn cut_with(v: &VehicleInstance, axis: CutAxis, fraction: f64, keep_low: bool) -> Result<VehicleInstance, InstanceError> {
    if v.is_partial {
        return Err(InstanceError::AlreadyPartial);
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(InstanceError::InvalidParameter(format!("cut fraction {fraction}")));
    }
    let (w, h) = v.pixels.dimensions();
    let (x, y, nw, nh) = match axis {
        CutAxis::X => {
            let nw = ((w as f64 * fraction).round() as u32).max(1);
            (if keep_low { 0 } else { w - nw }, 0, nw, h)
        }
        CutAxis::Y => {
            let nh = ((h as f64 * fraction).round() as u32).max(1);
            (0, if keep_low { 0 } else { h - nh }, w, nh)
        }
        CutAxis::None => return Err(InstanceError::InvalidParameter("cut axis none".into())),
    };
    let pixels = imageops::crop_imm(&v.pixels, x, y, nw, nh).to_image();
    Ok(VehicleInstance {
        footprint_w: nw,
        footprint_h: nh,
        pixels,
        is_partial: true,
        cut_axis: axis,
        cut_fraction: fraction,
        ..v.clone()
    })
}

/// Random cut: axis and kept side uniform, fraction uniform in `[0.5, 0.7]`.
pub fn cut_partial(v: &VehicleInstance, rng: &mut impl Rng) -> Result<VehicleInstance, InstanceError> {
    let axis = if rng.random_bool(0.5) { CutAxis::X } else { CutAxis::Y };
    let fraction = rng.random_range(CUT_MIN..=CUT_MAX);
    let keep_low = rng.random_bool(0.5);
    cut_with(v, axis, fraction, keep_low)
}

/// Per-side offsets `[left, right, top, bottom]` as fractions of the
/// dimension; width becomes `round(w * (1 + left + right))`.
pub fn deform_with(v: &VehicleInstance, sides: [f64; 4]) -> Result<VehicleInstance, InstanceError> {
    let (w, h) = v.pixels.dimensions();
    let nw_f = (w as f64 * (1.0 + sides[0] + sides[1])).round();
    let nh_f = (h as f64 * (1.0 + sides[2] + sides[3])).round();
    if nw_f < 2.0 || nh_f < 2.0 {
        return Err(InstanceError::TooSmall {
            width: nw_f.max(0.0) as u32,
            height: nh_f.max(0.0) as u32,
        });
    }
    let (nw, nh) = (nw_f as u32, nh_f as u32);
    Ok(VehicleInstance {
        pixels: resize_rgba_bilinear(&v.pixels, nw, nh),
        footprint_w: nw,
        footprint_h: nh,
        deform_factors: (
            v.deform_factors.0 * nw as f64 / w as f64,
            v.deform_factors.1 * nh as f64 / h as f64,
        ),
        ..v.clone()
    })
}

/// Samples each side offset uniformly in `[-max_frac, max_frac]`.
pub fn deform(v: &VehicleInstance, max_frac: f64, rng: &mut impl Rng) -> Result<VehicleInstance, InstanceError> {
    if !(max_frac >= 0.0 && max_frac.is_finite()) {
        return Err(InstanceError::InvalidParameter(format!("deform {max_frac}")));
    }
    let mut sides = [0.0; 4];
    if max_frac > 0.0 {
        for s in &mut sides {
            *s = rng.random_range(-max_frac..=max_frac);
        }
    }
    deform_with(v, sides)
}

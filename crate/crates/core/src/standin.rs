//! Procedural stand-in blueprints.
//!
//! Eight top-down car masks (compact, mid/top sedans and station wagons,
//! small and large vans, a small transporter) drawn from a handful of shape
//! parameters. They replace hand-masked CAD drawings when none are supplied.

use image::{Rgb, RgbImage};

use crate::blueprint::{Blueprint, BlueprintMeta, ColorKey, SurfaceClass, DEFAULT_TOLERANCE};

/// Drawing resolution of the stand-ins, meters per pixel.
pub const STANDIN_PITCH: f64 = 0.025;

/// Shape parameters as fractions of vehicle length, front pointing to +x.
#[derive(Debug, Clone, Copy)]
struct Shape {
    id: &'static str,
    label: &'static str,
    length_m: f64,
    width_m: f64,
    corner: f64,
    rear_window: (f64, f64),
    windshield: (f64, f64),
    window_inset: f64,
}

const SHAPES: [Shape; 8] = [
    Shape { id: "compact", label: "compact car", length_m: 4.0, width_m: 1.75, corner: 0.22, rear_window: (0.12, 0.26), windshield: (0.55, 0.72), window_inset: 0.14 },
    Shape { id: "sedan_mid", label: "sedan", length_m: 4.6, width_m: 1.8, corner: 0.2, rear_window: (0.17, 0.3), windshield: (0.55, 0.7), window_inset: 0.15 },
    Shape { id: "sedan_top", label: "sedan", length_m: 5.0, width_m: 1.9, corner: 0.18, rear_window: (0.18, 0.31), windshield: (0.56, 0.7), window_inset: 0.15 },
    Shape { id: "wagon_mid", label: "station wagon", length_m: 4.7, width_m: 1.8, corner: 0.16, rear_window: (0.05, 0.12), windshield: (0.56, 0.7), window_inset: 0.14 },
    Shape { id: "wagon_top", label: "station wagon", length_m: 4.95, width_m: 1.9, corner: 0.16, rear_window: (0.05, 0.12), windshield: (0.57, 0.71), window_inset: 0.14 },
    Shape { id: "van_small", label: "van", length_m: 4.4, width_m: 1.8, corner: 0.14, rear_window: (0.03, 0.08), windshield: (0.7, 0.82), window_inset: 0.12 },
    Shape { id: "van_large", label: "van", length_m: 5.3, width_m: 2.0, corner: 0.12, rear_window: (0.03, 0.07), windshield: (0.74, 0.85), window_inset: 0.12 },
    Shape { id: "transporter_small", label: "transporter", length_m: 5.9, width_m: 2.0, corner: 0.1, rear_window: (0.0, 0.0), windshield: (0.8, 0.9), window_inset: 0.1 },
];

fn classify(s: &Shape, w: u32, h: u32, x: u32, y: u32) -> SurfaceClass {
    let (wf, hf) = (w as f64, h as f64);
    let px = x as f64 + 0.5;
    let py = y as f64 + 0.5;
    // signed distance to a rounded box filling the raster (negative inside)
    let r = s.corner * hf;
    let qx = (px - wf / 2.0).abs() - (wf / 2.0 - r);
    let qy = (py - hf / 2.0).abs() - (hf / 2.0 - r);
    let outside = (qx.max(0.0).powi(2) + qy.max(0.0).powi(2)).sqrt();
    let sd = outside + qx.max(qy).min(0.0) - r;
    if sd > 0.0 {
        return SurfaceClass::Background;
    }
    // one pixel at the default 0.10 m/px, so rescaling keeps class shares
    let stroke = (0.10 / STANDIN_PITCH).max(1.0);
    if sd > -stroke {
        return SurfaceClass::Outline;
    }
    let fx = px / wf;
    let edge_y = (py - hf / 2.0).abs() / (hf / 2.0);
    // lights: front (+x) head lamps and rear tail lamps near the corners
    let lamp_band = (0.35..0.75).contains(&edge_y);
    if lamp_band && (fx > 1.0 - 0.035 || fx < 0.03) {
        return SurfaceClass::Lights;
    }
    let inset = 1.0 - 2.0 * s.window_inset;
    let in_window = |(a, b): (f64, f64), taper: f64| {
        if b <= a || !(a..b).contains(&fx) {
            return None;
        }
        let t = (fx - a) / (b - a);
        let half = inset * (1.0 - taper * t);
        Some((edge_y < half, edge_y >= half - 2.0 * stroke / hf))
    };
    for (span, taper) in [(s.windshield, 0.18), (s.rear_window, -0.1)] {
        if let Some((inside, rim)) = in_window(span, taper) {
            if inside {
                let near_end = (fx - span.0) * wf < stroke || (span.1 - fx) * wf < stroke;
                return if rim || near_end { SurfaceClass::Outline } else { SurfaceClass::Windows };
            }
        }
    }
    SurfaceClass::Body
}

fn shape_meta(s: &Shape) -> BlueprintMeta {
    BlueprintMeta {
        id: s.id.into(),
        vehicle_label: s.label.into(),
        physical_length_m: s.length_m,
        physical_width_m: s.width_m,
        color_key: ColorKey::default(),
    }
}

fn render(s: &Shape, key: &ColorKey) -> RgbImage {
    let w = (s.length_m / STANDIN_PITCH).round() as u32;
    let h = (s.width_m / STANDIN_PITCH).round() as u32;
    RgbImage::from_fn(w, h, |x, y| Rgb(key.color(classify(s, w, h, x, y)).unwrap_or([255, 255, 255])))
}

/// Key-colored masks with their sidecar records.
pub fn standin_masks() -> Vec<(BlueprintMeta, RgbImage)> {
    SHAPES
        .iter()
        .map(|s| {
            let meta = shape_meta(s);
            let img = render(s, &meta.color_key);
            (meta, img)
        })
        .collect()
}

/// The stand-in set, classified exactly as a loaded mask would be.
pub fn standin_blueprints() -> Vec<Blueprint> {
    standin_masks()
        .iter()
        .map(|(meta, img)| Blueprint::from_rgb(img, meta, DEFAULT_TOLERANCE).expect("stand-in masks are valid"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blueprint::{rescale, simplify};

    #[test]
    fn eight_valid_masks_with_every_class() {
        let set = standin_blueprints();
        assert_eq!(set.len(), 8);
        for bp in &set {
            let hist = bp.histogram();
            for c in SurfaceClass::ALL {
                assert!(hist[&c] > 0, "{} lacks {:?}", bp.id, c);
            }
        }
    }

    #[test]
    fn body_fraction_survives_preparation() {
        for bp in standin_blueprints() {
            for gsd in [0.05, 0.10] {
                let prepared = rescale(&simplify(&bp, 4), gsd).unwrap();
                let d = (prepared.body_fraction() - bp.body_fraction()).abs();
                assert!(d <= 0.02, "{} at {gsd}: body fraction moved by {d}", bp.id);
            }
        }
    }

    #[test]
    fn default_gsd_sizes() {
        let prepared: Vec<_> = standin_blueprints().iter().map(|b| rescale(b, 0.10).unwrap()).collect();
        assert_eq!(prepared[1].width(), 46);
        assert_eq!(prepared[1].height(), 18);
        for p in &prepared {
            assert!(p.count(SurfaceClass::Outline) > 0, "{} lost its outline", p.id);
        }
    }
}

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

pub const BIN: &str = env!("CARGO_BIN_EXE_aerosynth");
pub const CAR_YELLOW: [u8; 3] = [255, 255, 0];

pub fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

pub fn run_path(args: &[&dyn AsRef<std::ffi::OsStr>]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

/// Runs the binary and parses stdout, panicking with stderr on failure.
pub fn run_ok(args: &[&dyn AsRef<std::ffi::OsStr>]) -> Value {
    let out = run_path(args);
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

pub fn write_config(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_vec_pretty(v).unwrap()).unwrap();
    p
}

/// Corners from (cx, cy, w, h, angle), computed here rather than through
/// the library so the oracle below stays independent.
pub fn obb_corners(obb: &Value) -> [(f64, f64); 4] {
    let f = |k: &str| obb[k].as_f64().unwrap();
    let (cx, cy, w, h, a) = (f("cx"), f("cy"), f("w"), f("h"), f("angle_deg").to_radians());
    let (s, c) = a.sin_cos();
    let mut out = [(0.0, 0.0); 4];
    for (i, (sx, sy)) in [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)].iter().enumerate() {
        let (dx, dy) = (sx * w / 2.0, sy * h / 2.0);
        out[i] = (cx + dx * c - dy * s, cy + dx * s + dy * c);
    }
    out
}

/// Strict interior test against a convex quad (counter-clockwise or not).
fn inside(q: &[(f64, f64); 4], p: (f64, f64)) -> bool {
    let mut sign = 0.0;
    for i in 0..4 {
        let (a, b) = (q[i], q[(i + 1) % 4]);
        let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
        if cross == 0.0 {
            return false;
        }
        if sign == 0.0 {
            sign = cross.signum();
        } else if cross.signum() != sign {
            return false;
        }
    }
    true
}

/// True when some point of a `step`-spaced lattice lies inside both quads.
pub fn lattice_overlap(a: &[(f64, f64); 4], b: &[(f64, f64); 4], step: f64) -> bool {
    let bounds = |q: &[(f64, f64); 4]| {
        q.iter().fold((f64::MAX, f64::MAX, f64::MIN, f64::MIN), |(x0, y0, x1, y1), &(x, y)| {
            (x0.min(x), y0.min(y), x1.max(x), y1.max(y))
        })
    };
    let (ax0, ay0, ax1, ay1) = bounds(a);
    let (bx0, by0, bx1, by1) = bounds(b);
    let (x0, y0, x1, y1) = (ax0.max(bx0), ay0.max(by0), ax1.min(bx1), ay1.min(by1));
    if x0 > x1 || y0 > y1 {
        return false;
    }
    let mut y = (y0 / step).floor() * step;
    while y <= y1 {
        let mut x = (x0 / step).floor() * step;
        while x <= x1 {
            if inside(a, (x, y)) && inside(b, (x, y)) {
                return true;
            }
            x += step;
        }
        y += step;
    }
    false
}

/// Overlapping annotation pairs of one manifest image per the lattice oracle.
pub fn overlapping_pairs(image: &Value, step: f64) -> usize {
    let quads: Vec<_> = image["annotations"].as_array().unwrap().iter().map(|a| obb_corners(&a["obb"])).collect();
    let mut n = 0;
    for i in 0..quads.len() {
        for j in i + 1..quads.len() {
            if lattice_overlap(&quads[i], &quads[j], step) {
                n += 1;
            }
        }
    }
    n
}

/// Every obb corner lies within the image bounds.
pub fn contained(image: &Value) -> bool {
    let (w, h) = (image["width"].as_f64().unwrap(), image["height"].as_f64().unwrap());
    let eps = 1e-6;
    image["annotations"].as_array().unwrap().iter().all(|a| {
        obb_corners(&a["obb"]).iter().all(|&(x, y)| x >= -eps && y >= -eps && x <= w + eps && y <= h + eps)
    })
}

/// Fills every pixel whose center lies inside the rotated rectangle.
pub fn fill_rect(img: &mut RgbImage, cx: f64, cy: f64, w: f64, h: f64, angle_deg: f64, color: [u8; 3]) {
    let (s, c) = angle_deg.to_radians().sin_cos();
    let r = (w.hypot(h) / 2.0).ceil() as i64 + 1;
    for y in (cy as i64 - r).max(0)..(cy as i64 + r).min(img.height() as i64) {
        for x in (cx as i64 - r).max(0)..(cx as i64 + r).min(img.width() as i64) {
            let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
            let (u, v) = (dx * c + dy * s, -dx * s + dy * c);
            if u.abs() <= w / 2.0 && v.abs() <= h / 2.0 {
                img.put_pixel(x as u32, y as u32, Rgb(color));
            }
        }
    }
}

/// A `size`² orthophoto with its label raster. Cars (90×36 px, i.e. about
/// 4.5 m at 0.05 m/px) sit on a jittered 300 px grid in the top-left
/// `occupied` px square; the rest of the scene is vehicle-free.
pub fn write_ortho(rgb_dir: &Path, label_dir: &Path, id: &str, size: u32, occupied: u32, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rgb = RgbImage::from_fn(size, size, |x, y| {
        let v = (((x / 7) ^ (y / 5)) % 40) as u8;
        Rgb([90 + v, 100 + v / 2, 80 + (x % 13) as u8])
    });
    let mut label = RgbImage::from_pixel(size, size, Rgb([255, 255, 255]));
    let mut cars = 0;
    let cell = 300;
    for gy in 0..occupied / cell {
        for gx in 0..occupied / cell {
            let cx = (gx * cell) as f64 + 150.0 + rng.random_range(-40.0..40.0);
            let cy = (gy * cell) as f64 + 150.0 + rng.random_range(-40.0..40.0);
            let angle = rng.random_range(0.0..180.0);
            let body = [rng.random_range(0..255), rng.random_range(0..255), rng.random_range(0..255)];
            fill_rect(&mut rgb, cx, cy, 90.0, 36.0, angle, body);
            fill_rect(&mut label, cx, cy, 90.0, 36.0, angle, CAR_YELLOW);
            cars += 1;
        }
    }
    std::fs::create_dir_all(rgb_dir).unwrap();
    std::fs::create_dir_all(label_dir).unwrap();
    rgb.save(rgb_dir.join(format!("{id}_RGB.png"))).unwrap();
    label.save(label_dir.join(format!("{id}_label.png"))).unwrap();
    cars
}

pub fn manifest(dir: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

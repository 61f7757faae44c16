//! Small raster helpers shared by the generator, tiler and compositor.
//!
//! Sampling coordinates use the pixel-center convention: `(0.0, 0.0)` is the
//! center of the top-left pixel.

use image::{Rgb, RgbImage, Rgba, RgbaImage};

/// Dense row-major 2-D grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid<T> {
    width: u32,
    height: u32,
    data: Vec<T>,
}

impl<T: Copy> Grid<T> {
    pub fn new(width: u32, height: u32, fill: T) -> Self {
        Self {
            width,
            height,
            data: vec![fill; width as usize * height as usize],
        }
    }

    pub fn from_vec(width: u32, height: u32, data: Vec<T>) -> Option<Self> {
        (data.len() == width as usize * height as usize).then_some(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> T) -> Self {
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> T {
        self.data[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: T) {
        let w = self.width as usize;
        self.data[y as usize * w + x as usize] = v;
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.data.iter()
    }
}

#[inline]
fn premul(p: &Rgba<u8>) -> [f32; 4] {
    let a = p[3] as f32 / 255.0;
    [p[0] as f32 * a, p[1] as f32 * a, p[2] as f32 * a, p[3] as f32]
}

/// Bilinear RGBA sample in premultiplied space. Outside the raster is fully
/// transparent, so a rotated sprite fades out over at most one pixel.
pub fn sample_rgba_premul(img: &RgbaImage, x: f64, y: f64) -> [f32; 4] {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = (x - x0) as f32;
    let fy = (y - y0) as f32;
    let (x0, y0) = (x0 as i64, y0 as i64);
    let mut acc = [0f32; 4];
    for (dx, dy, wgt) in [
        (0, 0, (1.0 - fx) * (1.0 - fy)),
        (1, 0, fx * (1.0 - fy)),
        (0, 1, (1.0 - fx) * fy),
        (1, 1, fx * fy),
    ] {
        let (sx, sy) = (x0 + dx, y0 + dy);
        if wgt == 0.0 || sx < 0 || sy < 0 || sx >= w || sy >= h {
            continue;
        }
        let p = premul(img.get_pixel(sx as u32, sy as u32));
        for c in 0..4 {
            acc[c] += wgt * p[c];
        }
    }
    acc
}

/// Bilinear RGB sample with edge clamping.
pub fn sample_rgb_clamped(img: &RgbImage, x: f64, y: f64) -> [f32; 3] {
    let maxx = img.width() as f64 - 1.0;
    let maxy = img.height() as f64 - 1.0;
    let x = x.clamp(0.0, maxx);
    let y = y.clamp(0.0, maxy);
    let x0 = x.floor() as u32;
    let y0 = y.floor() as u32;
    let x1 = (x0 + 1).min(img.width() - 1);
    let y1 = (y0 + 1).min(img.height() - 1);
    let fx = (x - x0 as f64) as f32;
    let fy = (y - y0 as f64) as f32;
    let mut out = [0f32; 3];
    for c in 0..3 {
        let top = img.get_pixel(x0, y0)[c] as f32 * (1.0 - fx) + img.get_pixel(x1, y0)[c] as f32 * fx;
        let bot = img.get_pixel(x0, y1)[c] as f32 * (1.0 - fx) + img.get_pixel(x1, y1)[c] as f32 * fx;
        out[c] = top * (1.0 - fy) + bot * fy;
    }
    out
}

/// Un-premultiplies and quantizes an accumulated RGBA sample.
pub fn unpremul_to_rgba(p: [f32; 4]) -> Rgba<u8> {
    let a = p[3];
    if a <= 0.0 {
        return Rgba([0, 0, 0, 0]);
    }
    let s = 255.0 / a;
    Rgba([
        (p[0] * s).round().clamp(0.0, 255.0) as u8,
        (p[1] * s).round().clamp(0.0, 255.0) as u8,
        (p[2] * s).round().clamp(0.0, 255.0) as u8,
        a.round().clamp(0.0, 255.0) as u8,
    ])
}

/// Bilinear resize with edge clamping (premultiplied alpha).
pub fn resize_rgba_bilinear(img: &RgbaImage, new_w: u32, new_h: u32) -> RgbaImage {
    if new_w == img.width() && new_h == img.height() {
        return img.clone();
    }
    let sx = img.width() as f64 / new_w as f64;
    let sy = img.height() as f64 / new_h as f64;
    let maxx = img.width() as f64 - 1.0;
    let maxy = img.height() as f64 - 1.0;
    RgbaImage::from_fn(new_w, new_h, |x, y| {
        let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, maxx);
        let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, maxy);
        unpremul_to_rgba(sample_rgba_premul(img, fx, fy))
    })
}

/// Bilinear RGB resize with edge clamping.
pub fn resize_rgb_bilinear(img: &RgbImage, new_w: u32, new_h: u32) -> RgbImage {
    if new_w == img.width() && new_h == img.height() {
        return img.clone();
    }
    let sx = img.width() as f64 / new_w as f64;
    let sy = img.height() as f64 / new_h as f64;
    RgbImage::from_fn(new_w, new_h, |x, y| {
        let p = sample_rgb_clamped(img, (x as f64 + 0.5) * sx - 0.5, (y as f64 + 0.5) * sy - 0.5);
        Rgb(p.map(|v| v.round().clamp(0.0, 255.0) as u8))
    })
}

/// Per-axis overlap weights of output cells against input cells for a box
/// filter: `(first input index, weights)` per output index.
pub(crate) fn box_weights(src: u32, dst: u32) -> Vec<(u32, Vec<f64>)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|o| {
            let lo = o as f64 * scale;
            let hi = (o as f64 + 1.0) * scale;
            let first = lo.floor() as u32;
            let last = (hi.ceil() as u32).min(src);
            let w = (first..last)
                .map(|i| (hi.min(i as f64 + 1.0) - lo.max(i as f64)).max(0.0) / scale)
                .collect();
            (first, w)
        })
        .collect()
}

/// Area-averaging downsample (box filter with fractional pixel coverage).
pub fn area_downsample_rgb(img: &RgbImage, new_w: u32, new_h: u32) -> RgbImage {
    if new_w == img.width() && new_h == img.height() {
        return img.clone();
    }
    let wx = box_weights(img.width(), new_w);
    let wy = box_weights(img.height(), new_h);
    RgbImage::from_fn(new_w, new_h, |x, y| {
        let (fx, wxs) = &wx[x as usize];
        let (fy, wys) = &wy[y as usize];
        let mut acc = [0f64; 3];
        for (j, wyv) in wys.iter().enumerate() {
            for (i, wxv) in wxs.iter().enumerate() {
                let p = img.get_pixel(fx + i as u32, fy + j as u32);
                let w = wxv * wyv;
                for c in 0..3 {
                    acc[c] += w * p[c] as f64;
                }
            }
        }
        Rgb(acc.map(|v| v.round().clamp(0.0, 255.0) as u8))
    })
}

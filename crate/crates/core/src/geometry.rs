//! Rotated-rectangle and box arithmetic.
//!
//! Angles are degrees counter-clockwise in the raster coordinate frame
//! (x right, y down), so a positive angle turns the +x axis towards +y.
//! [`RotatedRect`] angles are always kept in `[0, 180)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance used to treat two candidate rectangle areas as equal.
const AREA_TIE_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("degenerate geometry: {0}")]
    Degenerate(&'static str),
    #[error("non-finite coordinate")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }

    fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }
}

/// Axis-aligned box, `x_min <= x_max` and `y_min <= y_max`. Serialized as
/// `[x_min, y_min, x_max, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Aabb {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Aabb {
    /// Builds a box from two opposite corners in any order.
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self {
            x_min: x0.min(x1),
            y_min: y0.min(y1),
            x_max: x0.max(x1),
            y_max: y0.max(y1),
        }
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x_min, self.y_min, self.x_max, self.y_max]
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Intersection with another box, `None` when they are disjoint.
    /// Boxes that only touch yield a zero-area box.
    pub fn intersection(&self, other: &Aabb) -> Option<Aabb> {
        let x_min = self.x_min.max(other.x_min);
        let y_min = self.y_min.max(other.y_min);
        let x_max = self.x_max.min(other.x_max);
        let y_max = self.y_max.min(other.y_max);
        (x_min <= x_max && y_min <= y_max).then_some(Aabb {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    pub fn contains_aabb(&self, other: &Aabb) -> bool {
        other.x_min >= self.x_min
            && other.y_min >= self.y_min
            && other.x_max <= self.x_max
            && other.y_max <= self.y_max
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Aabb {
        Aabb {
            x_min: self.x_min + dx,
            y_min: self.y_min + dy,
            x_max: self.x_max + dx,
            y_max: self.y_max + dy,
        }
    }

    pub fn scale(&self, s: f64) -> Aabb {
        Aabb {
            x_min: self.x_min * s,
            y_min: self.y_min * s,
            x_max: self.x_max * s,
            y_max: self.y_max * s,
        }
    }

    pub fn bounding(points: &[Point2]) -> Option<Aabb> {
        let first = points.first()?;
        let mut b = Aabb::new(first.x, first.y, first.x, first.y);
        for p in &points[1..] {
            b.x_min = b.x_min.min(p.x);
            b.y_min = b.y_min.min(p.y);
            b.x_max = b.x_max.max(p.x);
            b.y_max = b.y_max.max(p.y);
        }
        Some(b)
    }
}

impl From<[f64; 4]> for Aabb {
    fn from(a: [f64; 4]) -> Self {
        Aabb::from_array(a)
    }
}

impl From<Aabb> for [f64; 4] {
    fn from(b: Aabb) -> Self {
        b.to_array()
    }
}

/// Object-aligned rectangle. `width` runs along the direction given by
/// `angle`, `height` along the perpendicular.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "ObbRecord", into = "ObbRecord")]
pub struct RotatedRect {
    pub center: Point2,
    pub width: f64,
    pub height: f64,
    angle: f64,
}

#[derive(Serialize, Deserialize)]
struct ObbRecord {
    cx: f64,
    cy: f64,
    w: f64,
    h: f64,
    angle_deg: f64,
}

impl From<ObbRecord> for RotatedRect {
    fn from(r: ObbRecord) -> Self {
        RotatedRect::new(Point2::new(r.cx, r.cy), r.w, r.h, r.angle_deg)
    }
}

impl From<RotatedRect> for ObbRecord {
    fn from(r: RotatedRect) -> Self {
        ObbRecord {
            cx: r.center.x,
            cy: r.center.y,
            w: r.width,
            h: r.height,
            angle_deg: r.angle,
        }
    }
}

/// Maps any angle in degrees into `[0, 180)`.
pub fn normalize_angle(deg: f64) -> f64 {
    let a = deg.rem_euclid(180.0);
    // rem_euclid can round up to exactly 180 for tiny negative inputs
    if a >= 180.0 {
        0.0
    } else {
        a
    }
}

impl RotatedRect {
    pub fn new(center: Point2, width: f64, height: f64, angle_deg: f64) -> Self {
        Self {
            center,
            width,
            height,
            angle: normalize_angle(angle_deg),
        }
    }

    pub fn axis_aligned(b: &Aabb) -> Self {
        Self::new(
            Point2::new((b.x_min + b.x_max) / 2.0, (b.y_min + b.y_max) / 2.0),
            b.width(),
            b.height(),
            0.0,
        )
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn is_valid(&self) -> bool {
        self.width > 0.0
            && self.height > 0.0
            && self.center.x.is_finite()
            && self.center.y.is_finite()
            && (0.0..180.0).contains(&self.angle)
    }

    /// Unit vectors along the width and height directions.
    pub fn axes(&self) -> (Point2, Point2) {
        let (s, c) = self.angle.to_radians().sin_cos();
        (Point2::new(c, s), Point2::new(-s, c))
    }

    /// Coordinates of `p` in the rectangle's own frame (origin at the center).
    pub fn to_local(&self, p: Point2) -> Point2 {
        let (u, v) = self.axes();
        let d = p.sub(self.center);
        Point2::new(d.dot(u), d.dot(v))
    }

    /// Closed containment test, with the rectangle grown by `margin` on every side.
    pub fn contains_with_margin(&self, p: Point2, margin: f64) -> bool {
        let l = self.to_local(p);
        l.x.abs() <= self.width / 2.0 + margin && l.y.abs() <= self.height / 2.0 + margin
    }

    pub fn contains(&self, p: Point2) -> bool {
        self.contains_with_margin(p, 1e-9)
    }

    pub fn translate(&self, dx: f64, dy: f64) -> RotatedRect {
        RotatedRect {
            center: Point2::new(self.center.x + dx, self.center.y + dy),
            ..*self
        }
    }

    pub fn scale(&self, s: f64) -> RotatedRect {
        RotatedRect {
            center: Point2::new(self.center.x * s, self.center.y * s),
            width: self.width * s,
            height: self.height * s,
            angle: self.angle,
        }
    }
}

/// The four corners in a consistent winding order (local `(-,-)`, `(+,-)`,
/// `(+,+)`, `(-,+)`).
pub fn corners(r: &RotatedRect) -> [Point2; 4] {
    let (u, v) = r.axes();
    let hw = r.width / 2.0;
    let hh = r.height / 2.0;
    let at = |a: f64, b: f64| {
        Point2::new(
            r.center.x + a * u.x + b * v.x,
            r.center.y + a * u.y + b * v.y,
        )
    };
    [at(-hw, -hh), at(hw, -hh), at(hw, hh), at(-hw, hh)]
}

pub fn aabb_of(r: &RotatedRect) -> Aabb {
    // Corner-free closed form keeps angle-0 boxes bit-exact.
    let (u, v) = r.axes();
    let ex = (r.width * u.x.abs() + r.height * v.x.abs()) / 2.0;
    let ey = (r.width * u.y.abs() + r.height * v.y.abs()) / 2.0;
    Aabb {
        x_min: r.center.x - ex,
        y_min: r.center.y - ey,
        x_max: r.center.x + ex,
        y_max: r.center.y + ey,
    }
}

fn project(points: &[Point2; 4], axis: Point2) -> (f64, f64) {
    points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let d = p.dot(axis);
        (lo.min(d), hi.max(d))
    })
}

/// Separating-axis test over the edge normals of both rectangles. Closed
/// rectangles: touching edges count as intersecting.
pub fn rects_intersect(a: &RotatedRect, b: &RotatedRect) -> bool {
    let ca = corners(a);
    let cb = corners(b);
    let (au, av) = a.axes();
    let (bu, bv) = b.axes();
    for axis in [au, av, bu, bv] {
        let (a_lo, a_hi) = project(&ca, axis);
        let (b_lo, b_hi) = project(&cb, axis);
        let slack = 1e-9 * (1.0 + a_hi.abs().max(b_hi.abs()));
        if a_hi + slack < b_lo || b_hi + slack < a_lo {
            return false;
        }
    }
    true
}

/// Intersection over union of two axis-aligned boxes. Two zero-area boxes give 0.
pub fn iou_aabb(a: &Aabb, b: &Aabb) -> f64 {
    let inter = a.intersection(b).map_or(0.0, |i| i.area());
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Convex hull by monotone chain, counter-clockwise in a y-up frame, without
/// collinear points.
pub fn convex_hull(points: &[Point2]) -> Vec<Point2> {
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point2> = Vec::with_capacity(pts.len() * 2);
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point2>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 {
                let o = hull[hull.len() - 2];
                let a = hull[hull.len() - 1];
                if a.sub(o).cross(p.sub(o)) <= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Minimum-area enclosing rectangle via convex hull and rotating calipers.
///
/// One rectangle side is collinear with a hull edge. The returned angle lies
/// in `[0, 90)`; among equal-area candidates the smallest angle wins.
pub fn min_area_rect(points: &[Point2]) -> Result<RotatedRect, GeometryError> {
    if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    if points.len() < 3 {
        return Err(GeometryError::Degenerate("fewer than 3 points"));
    }
    let hull = convex_hull(points);
    if hull.len() < 3 {
        return Err(GeometryError::Degenerate("collinear points"));
    }
    let n = hull.len();
    let mut best: Option<(f64, f64, RotatedRect)> = None;
    for i in 0..n {
        let e = hull[(i + 1) % n].sub(hull[i]);
        let len = e.dot(e).sqrt();
        if len == 0.0 {
            continue;
        }
        let phi = e.y.atan2(e.x).to_degrees().rem_euclid(90.0);
        let phi = if phi >= 90.0 { 0.0 } else { phi };
        let (s, c) = phi.to_radians().sin_cos();
        let u = Point2::new(c, s);
        let v = Point2::new(-s, c);
        let (mut u_lo, mut u_hi, mut v_lo, mut v_hi) = (
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        );
        for p in &hull {
            let pu = p.dot(u);
            let pv = p.dot(v);
            u_lo = u_lo.min(pu);
            u_hi = u_hi.max(pu);
            v_lo = v_lo.min(pv);
            v_hi = v_hi.max(pv);
        }
        let area = (u_hi - u_lo) * (v_hi - v_lo);
        let better = match &best {
            None => true,
            Some((ba, bphi, _)) => {
                let tie = (area - ba).abs() <= AREA_TIE_EPS * ba.abs().max(1e-300);
                if tie {
                    phi < *bphi
                } else {
                    area < *ba
                }
            }
        };
        if better {
            let cu = (u_lo + u_hi) / 2.0;
            let cv = (v_lo + v_hi) / 2.0;
            let center = Point2::new(cu * u.x + cv * v.x, cu * u.y + cv * v.y);
            best = Some((
                area,
                phi,
                RotatedRect::new(center, u_hi - u_lo, v_hi - v_lo, phi),
            ));
        }
    }
    let (_, _, rect) = best.ok_or(GeometryError::Degenerate("zero-length hull"))?;
    if rect.width <= 0.0 || rect.height <= 0.0 {
        return Err(GeometryError::Degenerate("zero-area hull"));
    }
    Ok(rect)
}

/// Clips a convex polygon against an axis-aligned window.
pub fn clip_polygon_to_aabb(poly: &[Point2], window: &Aabb) -> Vec<Point2> {
    // (normal axis, sign, boundary): keep points with sign*(coord - bound) >= 0
    let planes: [(bool, f64, f64); 4] = [
        (true, 1.0, window.x_min),
        (true, -1.0, window.x_max),
        (false, 1.0, window.y_min),
        (false, -1.0, window.y_max),
    ];
    let mut out = poly.to_vec();
    for (is_x, sign, bound) in planes {
        if out.is_empty() {
            break;
        }
        let dist = |p: &Point2| sign * (if is_x { p.x } else { p.y } - bound);
        let input = std::mem::take(&mut out);
        for i in 0..input.len() {
            let cur = input[i];
            let prev = input[(i + input.len() - 1) % input.len()];
            let (dc, dp) = (dist(&cur), dist(&prev));
            if dc >= 0.0 {
                if dp < 0.0 {
                    let t = dp / (dp - dc);
                    out.push(Point2::new(
                        prev.x + t * (cur.x - prev.x),
                        prev.y + t * (cur.y - prev.y),
                    ));
                }
                out.push(cur);
            } else if dp >= 0.0 {
                let t = dp / (dp - dc);
                out.push(Point2::new(
                    prev.x + t * (cur.x - prev.x),
                    prev.y + t * (cur.y - prev.y),
                ));
            }
        }
    }
    out
}

//! Acceptance criteria 1–10, one PASS/FAIL line each. Runs under
//! `cargo test` with its own harness; exits non-zero if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use aerosynth::blueprint::rescale;
use aerosynth::eval::{average_precision, Detection, GroundTruth};
use aerosynth::geometry::{min_area_rect, Aabb, Point2, RotatedRect};
use aerosynth::ingest::{extract_class_regions, AnnotatedSample};
use aerosynth::instance::{colorize, cut_partial, deform, ColorPalette, CutAxis, OutlineMode};
use aerosynth::manifest::{Annotation, DatasetManifest, Provenance};
use aerosynth::scene::{make_background, rough_grid, GeneratorConfig};
use aerosynth::standin::standin_blueprints;
use aerosynth::tiler::{tile, tile_positions, TilingSpec};
use aerosynth_cli::dataset_digest;
use common::*;
use image::RgbImage;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

struct Shared {
    root: PathBuf,
    /// Two default 1000-image runs with the same seed, and the first run's wall time.
    runs: Option<(PathBuf, PathBuf, Duration)>,
}

const SEED: u64 = 20_201;

fn default_runs(sh: &mut Shared) -> (PathBuf, PathBuf, Duration) {
    if let Some(r) = &sh.runs {
        return r.clone();
    }
    let a = sh.root.join("gen_a");
    let b = sh.root.join("gen_b");
    let seed = SEED.to_string();
    let t = Instant::now();
    run_ok(&[&"generate", &"--seed", &seed, &"--workers", &"8", &"--out", &a]);
    let elapsed = t.elapsed();
    run_ok(&[&"generate", &"--seed", &seed, &"--workers", &"8", &"--out", &b]);
    sh.runs = Some((a, b, elapsed));
    sh.runs.clone().unwrap()
}

fn files_identical(a: &Path, b: &Path) -> (usize, usize) {
    let mut names: Vec<_> = std::fs::read_dir(a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    let same = names
        .iter()
        .filter(|n| std::fs::read(a.join(n)).ok() == std::fs::read(b.join(n)).ok())
        .count();
    (same, names.len())
}

fn c1_determinism(sh: &mut Shared) -> Outcome {
    let (a, b, elapsed) = default_runs(sh);
    let (da, db) = (dataset_digest(&a).unwrap(), dataset_digest(&b).unwrap());
    let (same, total) = files_identical(&a, &b);
    let n = manifest(&a)["images"].as_array().unwrap().len();
    outcome(
        da == db && same == total && n == 1000 && elapsed < Duration::from_secs(300),
        format!("{n} images, {same}/{total} files byte-identical, sha256 {}…, first run {:.1}s", &da[..12], elapsed.as_secs_f64()),
    )
}

fn c2_non_overlap(sh: &mut Shared) -> Outcome {
    let (a, _, _) = default_runs(sh);
    let m = manifest(&a);
    let images = m["images"].as_array().unwrap();
    let placed: usize = images.iter().map(|i| i["annotations"].as_array().unwrap().len()).sum();
    let dropped: u64 = images.iter().map(|i| i["dropped"].as_u64().unwrap_or(0)).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let sample: Vec<&Value> = images.choose_multiple(&mut rng, images.len() / 20).collect();
    let overlaps: usize = sample.iter().map(|img| overlapping_pairs(img, 0.1)).sum();
    outcome(
        overlaps == 0 && placed as u64 + dropped == 10_000,
        format!(
            "{placed} placed + {dropped} dropped of 10000; {} sampled images, {overlaps} overlapping pairs at 0.1 px",
            sample.len()
        ),
    )
}

fn sample_std(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

fn c3_noise(_: &mut Shared) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let fine_cfg = GeneratorConfig { enable_rough_noise: false, ..Default::default() };
    let canvas = make_background(&fine_cfg, &mut rng);
    let values: Vec<f64> = canvas.pixels().map(|p| p[0] as f64).collect();
    let fine = sample_std(&values);
    let achromatic = canvas.pixels().all(|p| {
        let base = fine_cfg.base_color;
        p[0] as i32 - base[0] as i32 == p[1] as i32 - base[1] as i32 && p[1] as i32 - base[1] as i32 == p[2] as i32 - base[2] as i32
    });

    let rough_cfg = GeneratorConfig::default();
    let mut draws = Vec::new();
    while draws.len() < 10_000 {
        draws.extend(rough_grid(&rough_cfg, &mut rng));
    }
    draws.truncate(10_000);
    let rough = sample_std(&draws);

    let off = GeneratorConfig { enable_fine_noise: false, enable_rough_noise: false, ..Default::default() };
    let flat = make_background(&off, &mut rng);
    let exact = flat.pixels().all(|p| p.0 == off.base_color);

    let within = |got: f64, var: f64| (got / var.sqrt() - 1.0).abs() <= 0.05;
    outcome(
        within(fine, 5.0) && within(rough, 10.0) && exact && achromatic,
        format!(
            "fine std {fine:.4} (√5 = {:.4}), rough std {rough:.4} (√10 = {:.4}), noise-off canvas equals base color: {exact}",
            5f64.sqrt(),
            10f64.sqrt()
        ),
    )
}

fn c4_instance_bounds(_: &mut Shared) -> Outcome {
    let palette = ColorPalette::default();
    let bps: Vec<_> = standin_blueprints().iter().map(|b| rescale(b, 0.10).unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let max_frac = 0.05;
    let (mut cut_lo, mut cut_hi) = (f64::MAX, f64::MIN);
    let (mut def_lo, mut def_hi) = (f64::MAX, f64::MIN);
    let mut violations = 0;
    for _ in 0..10_000 {
        let bp = bps.choose(&mut rng).unwrap();
        let v = colorize(bp, &palette, OutlineMode::Black, &mut rng);
        let (w, h) = v.pixels.dimensions();
        let c = cut_partial(&v, &mut rng).unwrap();
        let (cw, ch) = c.pixels.dimensions();
        let (kept, full) = match c.cut_axis {
            CutAxis::X => (cw, w),
            CutAxis::Y => (ch, h),
            CutAxis::None => unreachable!(),
        };
        cut_lo = cut_lo.min(c.cut_fraction);
        cut_hi = cut_hi.max(c.cut_fraction);
        // the kept pixel count is the fraction rounded to whole pixels
        let measured = kept as f64 / full as f64;
        if !(0.5..=0.7).contains(&c.cut_fraction) || (measured - c.cut_fraction).abs() > 0.5 / full as f64 {
            violations += 1;
        }
        let d = deform(&v, max_frac, &mut rng).unwrap();
        let (dw, dh) = d.pixels.dimensions();
        for (new, old) in [(dw, w), (dh, h)] {
            let rel = new as f64 / old as f64 - 1.0;
            def_lo = def_lo.min(rel);
            def_hi = def_hi.max(rel);
            if rel.abs() > 2.0 * max_frac + 0.5 / old as f64 {
                violations += 1;
            }
        }
    }
    outcome(
        violations == 0,
        format!(
            "10000 draws: cut fraction in [{cut_lo:.4}, {cut_hi:.4}], deformed size change in [{:+.2}%, {:+.2}%] (bound ±10% ± half a pixel), {violations} violations",
            def_lo * 100.0,
            def_hi * 100.0
        ),
    )
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(180.0);
    d.min(180.0 - d)
}

fn c5_ingest_roundtrip(_: &mut Shared) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut worst_c, mut worst_d, mut worst_a) = (0f64, 0f64, 0f64);
    let mut failures = 0;
    for _ in 0..500 {
        let (w, h): (f64, f64) = (rng.random_range(10.0..=100.0), rng.random_range(10.0..=100.0));
        let angle: f64 = rng.random_range(0.0..180.0);
        let size = 160u32;
        let margin = w.hypot(h) / 2.0 + 2.0;
        let cx = rng.random_range(margin..size as f64 - margin);
        let cy = rng.random_range(margin..size as f64 - margin);
        let mut label = RgbImage::from_pixel(size, size, image::Rgb([255, 255, 255]));
        fill_rect(&mut label, cx, cy, w, h, angle, CAR_YELLOW);
        let regions = extract_class_regions(&label, CAR_YELLOW, 10);
        if regions.len() != 1 {
            failures += 1;
            continue;
        }
        let r = regions[0].obb();
        let dc = (r.center.x - cx).hypot(r.center.y - cy);
        // (w, h, θ) and (h, w, θ + 90) describe the same rectangle
        let straight = ((r.width - w).abs().max((r.height - h).abs()), angle_gap(r.angle(), angle));
        let swapped = ((r.width - h).abs().max((r.height - w).abs()), angle_gap(r.angle(), angle + 90.0));
        let (dd, da) = if straight.0 + straight.1 / 90.0 <= swapped.0 + swapped.1 / 90.0 { straight } else { swapped };
        worst_c = worst_c.max(dc);
        worst_d = worst_d.max(dd);
        worst_a = worst_a.max(da);
        if dc > 1.0 || dd > 1.0 || da > 2.0 {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!("500 rectangles: worst center {worst_c:.3} px, dimension {worst_d:.3} px, angle {worst_a:.3}°; {failures} failures"),
    )
}

fn c6_tiling(_: &mut Shared) -> Outcome {
    let pos = tile_positions(6000, 600, 200).unwrap();
    let expected: Vec<u32> = (0..14).map(|k| k * 400).chain([5400]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut annotations = Vec::new();
    for k in 0..1000 {
        // rotated box whose axis-aligned extent is at most 200 px per side
        let angle: f64 = rng.random_range(0.0..180.0);
        let (s, c) = angle.to_radians().sin_cos();
        let (s, c) = (s.abs(), c.abs());
        let w = rng.random_range(4.0..200.0);
        let h_max = ((200.0 - w * c) / s.max(1e-9)).min((200.0 - w * s) / c.max(1e-9));
        if h_max < 2.0 {
            continue;
        }
        let h = rng.random_range(2.0..h_max.min(200.0));
        let ext_x = w * c + h * s;
        let ext_y = w * s + h * c;
        let cx = rng.random_range(ext_x / 2.0..6000.0 - ext_x / 2.0);
        let cy = rng.random_range(ext_y / 2.0..6000.0 - ext_y / 2.0);
        let obb = RotatedRect::new(Point2::new(cx, cy), w, h, angle);
        annotations.push(Annotation::from_obb(0, obb, false, Some(Provenance::Region { centroid: [k as f64, -1.0] })));
    }
    let sample = AnnotatedSample { id: "big".into(), rgb: RgbImage::new(6000, 6000), gsd: 0.05, annotations };
    let all = TilingSpec { drop_empty: false, min_annotation_px: 0.0, ..Default::default() };
    let patches = tile(&sample, &all).unwrap();
    let n_patches = patches.len();
    let mut covered = 0;
    for a in &sample.annotations {
        let hit = patches.iter().any(|p| {
            let (row, col) = {
                let mut it = p.id.rsplitn(3, '_');
                let col: usize = it.next().unwrap().parse().unwrap();
                let row: usize = it.next().unwrap().parse().unwrap();
                (row, col)
            };
            let (x0, y0) = (pos[col] as f64, pos[row] as f64);
            p.annotations.iter().any(|b| {
                !b.is_partial && b.provenance == a.provenance && {
                    let s = a.aabb.translate(-x0, -y0);
                    (b.aabb.x_min - s.x_min).abs() < 1e-9 && (b.aabb.y_max - s.y_max).abs() < 1e-9
                }
            })
        });
        covered += hit as usize;
    }
    let trials = sample.annotations.len();
    outcome(
        pos == expected && n_patches == 225 && covered == trials && trials >= 990,
        format!("{} offsets per axis → {n_patches} patches; {covered}/{trials} random boxes (sides ≤ 200 px) whole in some patch", pos.len()),
    )
}

fn sweep_area(points: &[Point2]) -> f64 {
    (0..1800)
        .map(|k| {
            let (s, c) = (k as f64 * 0.05).to_radians().sin_cos();
            let (mut u0, mut u1, mut v0, mut v1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
            for p in points {
                let (u, v) = (p.x * c + p.y * s, -p.x * s + p.y * c);
                u0 = u0.min(u);
                u1 = u1.max(u);
                v0 = v0.min(v);
                v1 = v1.max(v);
            }
            (u1 - u0) * (v1 - v0)
        })
        .fold(f64::MAX, f64::min)
}

fn random_cloud(rng: &mut ChaCha8Rng, max_aspect: f64) -> Vec<Point2> {
    let n = rng.random_range(5..=50);
    let sx: f64 = rng.random_range(5.0..100.0);
    let sy = sx / rng.random_range(1.0..max_aspect);
    let t: f64 = rng.random_range(0.0..std::f64::consts::PI);
    let (s, c) = t.sin_cos();
    (0..n)
        .map(|_| {
            let (x, y) = (rng.random_range(-1.0..1.0) * sx, rng.random_range(-1.0..1.0) * sy);
            Point2::new(x * c - y * s + 50.0, x * s + y * c + 50.0)
        })
        .collect()
}

fn c7_min_area_rect(_: &mut Shared) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0f64;
    let mut failures = 0;
    for _ in 0..1000 {
        let pts = random_cloud(&mut rng, 4.0);
        let (area, oracle) = (min_area_rect(&pts).unwrap().area(), sweep_area(&pts));
        let rel = (area - oracle) / oracle;
        worst = worst.max(rel.abs());
        if rel.abs() > 0.005 || area > oracle * (1.0 + 1e-9) {
            failures += 1;
        }
    }
    // Needle-like clouds: the 0.05° grid itself misses the optimum by more
    // than 0.5%, so only the one-sided bound is meaningful there.
    let mut above = 0;
    let mut widest = 0f64;
    for _ in 0..1000 {
        let pts = random_cloud(&mut rng, 100.0);
        let (area, oracle) = (min_area_rect(&pts).unwrap().area(), sweep_area(&pts));
        widest = widest.max((oracle - area) / oracle);
        if area > oracle * (1.0 + 1e-9) {
            above += 1;
        }
    }
    outcome(
        failures == 0 && above == 0,
        format!(
            "1000 clouds (aspect ≤ 4): worst gap {:.4}%, {failures} failures; 1000 needle clouds (aspect ≤ 100): never above the sweep ({above} violations), sweep overshoot up to {:.3}%",
            worst * 100.0,
            widest * 100.0
        ),
    )
}

fn iou(a: &Aabb, b: &Aabb) -> f64 {
    let iw = (a.x_max.min(b.x_max) - a.x_min.max(b.x_min)).max(0.0);
    let ih = (a.y_max.min(b.y_max) - a.y_min.max(b.y_min)).max(0.0);
    let inter = iw * ih;
    let union = (a.x_max - a.x_min) * (a.y_max - a.y_min) + (b.x_max - b.x_min) * (b.y_max - b.y_min) - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

/// Ranks detections, then for every prefix re-runs the greedy assignment
/// from scratch and reads off precision and recall.
fn brute_force_ap(dets: &[Detection], gts: &[GroundTruth], thr: f64, floor: f64) -> f64 {
    let mut order: Vec<usize> = (0..dets.len()).filter(|&i| dets[i].confidence >= floor).collect();
    order.sort_by(|&a, &b| {
        dets[b].confidence.partial_cmp(&dets[a].confidence).unwrap().then(dets[a].image_id.cmp(&dets[b].image_id)).then(a.cmp(&b))
    });
    let n = gts.len() as u64;
    let mut points = Vec::new();
    for k in 1..=order.len() {
        let mut taken = vec![false; gts.len()];
        let mut tp = 0u64;
        for &d in &order[..k] {
            let mut best: Option<(f64, usize)> = None;
            for (g, gt) in gts.iter().enumerate() {
                if taken[g] || gt.image_id != dets[d].image_id {
                    continue;
                }
                let v = iou(&dets[d].aabb, &gt.aabb);
                if v >= thr && best.is_none_or(|(bv, _)| v > bv) {
                    best = Some((v, g));
                }
            }
            if let Some((_, g)) = best {
                taken[g] = true;
                tp += 1;
            }
        }
        points.push((tp, tp as f64 / k as f64));
    }
    let mut sum = 0.0;
    for r in 0..=100u64 {
        sum += points.iter().filter(|(tp, _)| 100 * tp >= r * n).map(|&(_, p)| p).fold(0.0, f64::max);
    }
    sum / 101.0
}

fn random_box(rng: &mut ChaCha8Rng) -> Aabb {
    let (x, y) = (rng.random_range(0.0..80.0), rng.random_range(0.0..80.0));
    Aabb::new(x, y, x + rng.random_range(5.0..25.0), y + rng.random_range(5.0..25.0))
}

fn c8_ap_oracle(_: &mut Shared) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut mismatches = 0;
    let mut nontrivial = 0;
    for _ in 0..500 {
        let images = ["a", "b", "c"];
        let n_gt = rng.random_range(1..=10);
        let gts: Vec<GroundTruth> = (0..n_gt)
            .map(|_| GroundTruth { image_id: images.choose(&mut rng).unwrap().to_string(), aabb: random_box(&mut rng) })
            .collect();
        let n_det = rng.random_range(0..=10);
        let dets: Vec<Detection> = (0..n_det)
            .map(|_| {
                // coarse scores force ties; half the boxes are jittered ground truths
                let conf = rng.random_range(0..=10) as f64 / 10.0;
                if rng.random_bool(0.5) {
                    let g = gts.choose(&mut rng).unwrap();
                    let j = |r: &mut ChaCha8Rng| r.random_range(-3.0..3.0);
                    let b = Aabb::new(g.aabb.x_min + j(&mut rng), g.aabb.y_min + j(&mut rng), g.aabb.x_max + j(&mut rng), g.aabb.y_max + j(&mut rng));
                    Detection::new(g.image_id.clone(), b, conf)
                } else {
                    Detection::new(images.choose(&mut rng).unwrap().to_string(), random_box(&mut rng), conf)
                }
            })
            .collect();
        let got = average_precision(&dets, &gts, 0.5, 0.1).unwrap().ap;
        let want = brute_force_ap(&dets, &gts, 0.5, 0.1);
        if got > 0.0 && got < 1.0 {
            nontrivial += 1;
        }
        if got != want {
            mismatches += 1;
        }
    }
    let gts = vec![
        GroundTruth { image_id: "x".into(), aabb: Aabb::new(0.0, 0.0, 10.0, 10.0) },
        GroundTruth { image_id: "x".into(), aabb: Aabb::new(50.0, 50.0, 60.0, 60.0) },
    ];
    let hand = average_precision(&[Detection::new("x", Aabb::new(0.0, 0.0, 10.0, 10.0), 0.9)], &gts, 0.5, 0.1).unwrap().ap;
    outcome(
        mismatches == 0 && (hand - 51.0 / 101.0).abs() <= 1e-9,
        format!("500 scenes ({nontrivial} with 0 < AP < 1): {mismatches} differ from the brute-force AP; 2-GT/1-TP AP = {hand:.9} (51/101 = {:.9})", 51.0 / 101.0),
    )
}

fn c9_composition(sh: &mut Shared) -> Outcome {
    let root = sh.root.join("compose");
    let rgb = root.join("rgb");
    let labels = root.join("labels");
    write_ortho(&rgb, &labels, "t1", 1800, 1200, 91);
    write_ortho(&rgb, &labels, "t2", 1800, 900, 92);
    let ingest = write_config(&root, "ingest.json", &json!({ "rgb_dir": "rgb", "label_dir": "labels" }));
    run_ok(&[&"ingest", &"--config", &ingest, &"--out", &root.join("ingest"), &"--seed", &"1"]);
    let tile_cfg = write_config(&root, "tile.json", &json!({ "manifest": "ingest/manifest.json", "spec": { "drop_empty": false } }));
    run_ok(&[&"tile", &"--config", &tile_cfg, &"--out", &root.join("tiles"), &"--seed", &"1"]);

    let gen = json!({ "image_count": 60 });
    let cfg = write_config(&root, "compose.json", &json!({ "generator": gen, "real_manifest": "tiles/manifest.json" }));
    let out = root.join("out");
    let seed = SEED.to_string();
    run_ok(&[&"compose", &"--config", &cfg, &"--out", &out, &"--seed", &seed]);
    let direct_cfg = write_config(&root, "gen.json", &gen);
    let direct = root.join("direct");
    run_ok(&[&"generate", &"--config", &direct_cfg, &"--out", &direct, &"--seed", &seed]);
    let equal = dataset_digest(&direct).unwrap() == dataset_digest(&out.join("artificial_vehicles/artificial_background")).unwrap();

    let mut report = Vec::new();
    let mut ok = equal;
    for v in ["artificial", "real"] {
        for b in ["artificial", "real"] {
            let dir = out.join(format!("{v}_vehicles/{b}_background"));
            let valid = DatasetManifest::load(&dir.join("manifest.json")).is_ok();
            let m = manifest(&dir);
            let images = m["images"].as_array().unwrap();
            let overlaps: usize = images.iter().map(|i| overlapping_pairs(i, 0.1)).sum();
            let inside = images.iter().all(contained);
            let boxes: usize = images.iter().map(|i| i["annotations"].as_array().unwrap().len()).sum();
            ok &= valid && overlaps == 0 && inside && images.len() == 60 && boxes > 0;
            report.push(format!("{v}/{b}: {} images, {boxes} boxes, {overlaps} overlaps, contained {inside}", images.len()));
        }
    }
    outcome(ok, format!("(artificial, artificial) hash-equal to generate: {equal}; {}", report.join("; ")))
}

fn c10_throughput(sh: &mut Shared) -> Outcome {
    let (_, _, elapsed) = default_runs(sh);
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    outcome(
        elapsed <= Duration::from_secs(300),
        format!("1000 default 600² images in {:.1}s on {cores} core(s) (soft budget 300 s on 4 cores)", elapsed.as_secs_f64()),
    )
}

type Criterion = fn(&mut Shared) -> Outcome;

fn main() {
    // `cargo test` passes harness flags such as `--list`; only run for real invocations
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let mut shared = Shared { root: tmp.path().to_path_buf(), runs: None };
    let criteria: [(&str, Criterion); 10] = [
        ("determinism", c1_determinism),
        ("non-overlap", c2_non_overlap),
        ("noise statistics", c3_noise),
        ("instance parameter bounds", c4_instance_bounds),
        ("ingest round-trip", c5_ingest_roundtrip),
        ("tiling arithmetic", c6_tiling),
        ("min_area_rect oracle", c7_min_area_rect),
        ("AP oracle", c8_ap_oracle),
        ("composition equivalence", c9_composition),
        ("throughput (soft)", c10_throughput),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(|| f(&mut shared)))
            .unwrap_or_else(|e| {
                let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
                outcome(false, format!("panicked: {}", msg.unwrap_or_default()))
            });
        if !res.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<26} {} ({:.1}s) {}",
            i + 1,
            name,
            if res.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            res.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

mod common;

use std::path::Path;

use aerosynth_cli::{dataset_digest, EXIT_CONFIG, EXIT_DATA, EXIT_IO};
use common::*;
use serde_json::json;

fn code(args: &[&dyn AsRef<std::ffi::OsStr>]) -> i32 {
    run_path(args).status.code().unwrap()
}

#[test]
fn generate_defaults_to_1000_images() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g");
    let plan = run_ok(&[&"generate", &"--dry-run", &"--seed", &"1", &"--out", &out]);
    assert_eq!(plan["images"], 1000);
    assert_eq!(plan["seed"], 1);
    assert!(!out.exists(), "dry run wrote files");
}

#[test]
fn generate_zero_images_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g");
    let s = run_ok(&[&"generate", &"--images", &"0", &"--seed", &"1", &"--out", &out]);
    assert_eq!(s["images"], 0);
    assert_eq!(manifest(&out)["images"].as_array().unwrap().len(), 0);
}

#[test]
fn generate_rerun_is_byte_identical_and_records_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "gen.json", &json!({ "image_count": 4, "canvas_px": 200 }));
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run_ok(&[&"generate", &"--config", &cfg, &"--out", &a, &"--seed", &"9"]);
    let first = dataset_digest(&a).unwrap();
    run_ok(&[&"generate", &"--config", &cfg, &"--out", &a, &"--seed", &"9"]);
    run_ok(&[&"generate", &"--config", &cfg, &"--out", &b, &"--seed", &"9", &"--workers", &"3"]);
    assert_eq!(first, dataset_digest(&a).unwrap());
    assert_eq!(first, dataset_digest(&b).unwrap());
    assert_eq!(manifest(&a)["config"]["seed"], 9);

    // no seed anywhere: one is drawn and written down
    let c = dir.path().join("c");
    run_ok(&[&"generate", &"--config", &cfg, &"--out", &c]);
    let seed = manifest(&c)["config"]["seed"].as_u64().unwrap();
    let d = dir.path().join("d");
    run_ok(&[&"generate", &"--config", &cfg, &"--out", &d, &"--seed", &seed.to_string()]);
    assert_eq!(dataset_digest(&c).unwrap(), dataset_digest(&d).unwrap());
}

#[test]
fn exit_codes_separate_config_data_and_io() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.json", &json!({ "no_such_key": 1 }));
    let out = dir.path().join("o");
    assert_eq!(code(&[&"generate", &"--config", &bad, &"--out", &out]), EXIT_CONFIG);
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&[&"generate", &"--config", &missing, &"--out", &out]), EXIT_IO);
    std::fs::write(dir.path().join("garbage.json"), b"{").unwrap();
    assert_eq!(code(&[&"eval", &"--config", &dir.path().join("garbage.json")]), EXIT_CONFIG);
    // unwritable output: a file where a directory is expected
    let blocker = dir.path().join("blocker");
    std::fs::write(&blocker, b"").unwrap();
    assert_eq!(code(&[&"generate", &"--images", &"1", &"--seed", &"1", &"--out", &blocker.join("x")]), EXIT_IO);
    // data error: eval against a manifest with no ground truth
    let empty = dir.path().join("empty");
    run_ok(&[&"generate", &"--images", &"0", &"--seed", &"1", &"--out", &empty]);
    std::fs::write(dir.path().join("dets.json"), b"[]").unwrap();
    let cfg = write_config(dir.path(), "eval.json", &json!({ "detections": "dets.json", "manifest": "empty/manifest.json" }));
    assert_eq!(code(&[&"eval", &"--config", &cfg]), EXIT_DATA);
}

#[test]
fn prepare_reports_eight_builtin_blueprints_and_exports_them() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p");
    let report = run_ok(&[&"prepare", &"--out", &out]);
    assert_eq!(report["count"], 8);
    assert_eq!(report["blueprints"].as_array().unwrap().len(), 8);
    assert!(out.join("report.json").is_file());

    // the exported masks load back as a directory
    let cfg = write_config(dir.path(), "prep.json", &json!({ "blueprints": "p/blueprints" }));
    let again = run_ok(&[&"prepare", &"--config", &cfg]);
    assert_eq!(again["count"], 8);
    for a in report["blueprints"].as_array().unwrap() {
        let b = again["blueprints"].as_array().unwrap().iter().find(|b| b["id"] == a["id"]).unwrap();
        assert_eq!(a["prepared"], b["prepared"], "{}", a["id"]);
    }
}

#[test]
fn prepare_rejects_empty_dir_and_names_bad_mask() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let cfg = write_config(dir.path(), "e.json", &json!({ "blueprints": "empty" }));
    assert_eq!(code(&[&"prepare", &"--config", &cfg]), EXIT_DATA);

    let out = dir.path().join("p");
    run_ok(&[&"prepare", &"--out", &out]);
    let bp = out.join("blueprints");
    let victim = bp.join("van_small.png");
    assert!(victim.is_file());
    image::RgbImage::from_pixel(40, 20, image::Rgb([1, 2, 3])).save(&victim).unwrap();
    let cfg = write_config(dir.path(), "b.json", &json!({ "blueprints": bp }));
    let res = run_path(&[&"prepare", &"--config", &cfg]);
    assert_eq!(res.status.code(), Some(EXIT_DATA));
    assert!(String::from_utf8_lossy(&res.stderr).contains("van_small.png"));
}

fn ingest_fixture(root: &Path) -> (std::path::PathBuf, usize) {
    let rgb = root.join("rgb");
    let labels = root.join("labels");
    let n = write_ortho(&rgb, &labels, "top_1", 900, 900, 1) + write_ortho(&rgb, &labels, "top_2", 900, 600, 2);
    let cfg = write_config(root, "ingest.json", &json!({ "rgb_dir": "rgb", "label_dir": "labels", "seed": 5 }));
    (cfg, n)
}

#[test]
fn ingest_counts_fixture_vehicles() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, n) = ingest_fixture(dir.path());
    assert_eq!(n, 9 + 4);
    let out = dir.path().join("i");
    let s = run_ok(&[&"ingest", &"--config", &cfg, &"--out", &out]);
    assert_eq!(s["annotations"], n);
    assert_eq!(s["per_image"]["top_1"], 9);
    assert_eq!(s["per_image"]["top_2"], 4);
    for img in manifest(&out)["images"].as_array().unwrap() {
        for a in img["annotations"].as_array().unwrap() {
            let (w, h) = (a["obb"]["w"].as_f64().unwrap(), a["obb"]["h"].as_f64().unwrap());
            assert!((w.max(h) - 90.0).abs() <= 1.0 && (w.min(h) - 36.0).abs() <= 1.0, "{w}x{h}");
        }
    }
}

#[test]
fn ingest_empty_labels_and_mismatched_dims() {
    let dir = tempfile::tempdir().unwrap();
    let rgb = dir.path().join("rgb");
    let labels = dir.path().join("labels");
    write_ortho(&rgb, &labels, "a", 300, 0, 1);
    let cfg = write_config(dir.path(), "c.json", &json!({ "rgb_dir": "rgb", "label_dir": "labels" }));
    let s = run_ok(&[&"ingest", &"--config", &cfg, &"--out", &dir.path().join("o")]);
    assert_eq!(s["annotations"], 0);
    assert_eq!(s["images"], 1);

    image::RgbImage::new(299, 300).save(labels.join("a_label.png")).unwrap();
    let res = run_path(&[&"ingest", &"--config", &cfg, &"--out", &dir.path().join("o2")]);
    assert_eq!(res.status.code(), Some(EXIT_DATA));
}

#[test]
fn tile_fixture_window_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, _) = ingest_fixture(dir.path());
    let ing = dir.path().join("i");
    run_ok(&[&"ingest", &"--config", &cfg, &"--out", &ing]);

    // 900 px with patch 600 / overlap 200: offsets 0, 300 → 4 windows per image
    let keep = write_config(
        dir.path(),
        "t.json",
        &json!({ "manifest": "i/manifest.json", "spec": { "drop_empty": false } }),
    );
    let out = dir.path().join("t_all");
    let s = run_ok(&[&"tile", &"--config", &keep, &"--out", &out, &"--seed", &"1"]);
    assert_eq!(s["windows"], 8);
    assert_eq!(s["patches"], 8);
    let m = manifest(&out);
    for img in m["images"].as_array().unwrap() {
        assert_eq!(img["width"], 300);
        assert!((img["gsd"].as_f64().unwrap() - 0.10).abs() < 1e-12, "output 300 doubles the GSD");
    }
    assert_eq!(m["notes"]["empty_drop"], 0);

    let split = write_config(
        dir.path(),
        "s.json",
        &json!({ "manifest": "i/manifest.json", "val_fraction": 0.25, "subsample": 3 }),
    );
    let out2 = dir.path().join("t_split");
    let s = run_ok(&[&"tile", &"--config", &split, &"--out", &out2, &"--seed", &"1"]);
    assert_eq!(s["train"], 3);
    let total = s["patches"].as_u64().unwrap();
    assert_eq!(s["val"].as_u64().unwrap(), ((total as f64) * 0.25).round() as u64);
    let first = std::fs::read(out2.join("train_manifest.json")).unwrap();
    run_ok(&[&"tile", &"--config", &split, &"--out", &out2, &"--seed", &"1"]);
    assert_eq!(first, std::fs::read(out2.join("train_manifest.json")).unwrap());
}

#[test]
fn tile_dry_run_on_6000_px_tile_plans_225_windows() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = json!({
        "version": 1,
        "tool_version": "test",
        "config": null,
        "images": [{ "id": "big", "file": "big.png", "width": 6000, "height": 6000, "gsd": 0.05, "split": null, "annotations": [] }],
    });
    std::fs::write(dir.path().join("m.json"), serde_json::to_vec(&m).unwrap()).unwrap();
    let cfg = write_config(dir.path(), "t.json", &json!({ "manifest": "m.json" }));
    let plan = run_ok(&[&"tile", &"--config", &cfg, &"--dry-run", &"--out", &dir.path().join("o")]);
    assert_eq!(plan["windows"], 225);
    assert!(!dir.path().join("o").exists());
    m["images"][0]["width"] = json!(500);
    std::fs::write(dir.path().join("m.json"), serde_json::to_vec(&m).unwrap()).unwrap();
    assert_eq!(code(&[&"tile", &"--config", &cfg, &"--dry-run"]), EXIT_DATA);
}

#[test]
fn compose_four_combinations_and_missing_pool() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, _) = ingest_fixture(dir.path());
    // a vehicle-free scene supplies the real backgrounds
    write_ortho(&dir.path().join("rgb"), &dir.path().join("labels"), "top_3", 900, 0, 3);
    run_ok(&[&"ingest", &"--config", &cfg, &"--out", &dir.path().join("i")]);
    let t = write_config(
        dir.path(),
        "t.json",
        &json!({ "manifest": "i/manifest.json", "spec": { "drop_empty": false } }),
    );
    run_ok(&[&"tile", &"--config", &t, &"--out", &dir.path().join("t"), &"--seed", &"1"]);

    let gen = json!({ "image_count": 3, "canvas_px": 300 });
    let c = write_config(
        dir.path(),
        "c.json",
        &json!({ "generator": gen, "real_manifest": "t/manifest.json" }),
    );
    let out = dir.path().join("c");
    let s = run_ok(&[&"compose", &"--config", &c, &"--out", &out, &"--seed", &"4"]);
    assert_eq!(s["datasets"].as_object().unwrap().len(), 4);
    for v in ["artificial", "real"] {
        for b in ["artificial", "real"] {
            let d = out.join(format!("{v}_vehicles/{b}_background"));
            let m = manifest(&d);
            assert_eq!(m["images"].as_array().unwrap().len(), 3);
            assert_eq!(m["config"]["composition"]["vehicles"].as_str().unwrap_or("artificial"), v);
        }
    }
    assert!(out.join("vehicle_pool.json").is_file());
    assert!(out.join("background_pool.json").is_file());

    // (artificial, artificial) equals plain generation
    let g = write_config(dir.path(), "g.json", &gen);
    let direct = dir.path().join("direct");
    run_ok(&[&"generate", &"--config", &g, &"--out", &direct, &"--seed", &"4"]);
    assert_eq!(
        dataset_digest(&direct).unwrap(),
        dataset_digest(&out.join("artificial_vehicles/artificial_background")).unwrap()
    );

    // pool index files restrict the pools and round-trip
    let restricted = write_config(
        dir.path(),
        "r.json",
        &json!({
            "generator": gen,
            "combinations": [{ "vehicles": "real", "background": "real" }],
            "vehicle_pool": "c/vehicle_pool.json",
            "background_pool": "c/background_pool.json",
        }),
    );
    let out2 = dir.path().join("c2");
    run_ok(&[&"compose", &"--config", &restricted, &"--out", &out2, &"--seed", &"4"]);
    assert_eq!(
        dataset_digest(&out.join("real_vehicles/real_background")).unwrap(),
        dataset_digest(&out2.join("real_vehicles/real_background")).unwrap()
    );

    let no_pool = write_config(
        dir.path(),
        "n.json",
        &json!({ "generator": gen, "combinations": [{ "vehicles": "real", "background": "artificial" }] }),
    );
    assert_eq!(code(&[&"compose", &"--config", &no_pool, &"--out", &dir.path().join("x")]), EXIT_CONFIG);
    let seeded = write_config(dir.path(), "sd.json", &json!({ "generator": { "seed": 3 } }));
    assert_eq!(code(&[&"compose", &"--config", &seeded, &"--out", &dir.path().join("y")]), EXIT_CONFIG);
}

#[test]
fn eval_perfect_empty_and_handcrafted() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g");
    run_ok(&[&"generate", &"--images", &"3", &"--seed", &"2", &"--out", &g]);
    let m = manifest(&g);
    let perfect: Vec<_> = m["images"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|img| {
            img["annotations"].as_array().unwrap().iter().map(move |a| json!({ "image_id": img["id"], "bbox": a["aabb"], "score": 0.9 }))
        })
        .collect();
    std::fs::write(dir.path().join("perfect.json"), serde_json::to_vec(&perfect).unwrap()).unwrap();
    std::fs::write(dir.path().join("none.json"), b"[]").unwrap();
    let cfg = write_config(dir.path(), "e.json", &json!({ "detections": "perfect.json", "manifest": "g/manifest.json" }));
    let r = run_ok(&[&"eval", &"--config", &cfg, &"--out", &dir.path().join("e")]);
    assert_eq!(r["ap"], 1.0);
    assert!(dir.path().join("e/results.json").is_file());
    let cfg = write_config(dir.path(), "e0.json", &json!({ "detections": "none.json", "manifest": "g/manifest.json" }));
    assert_eq!(run_ok(&[&"eval", &"--config", &cfg])["ap"], 0.0);

    // two ground truths, one found
    let hand = json!({
        "version": 1, "tool_version": "test", "config": null,
        "images": [{ "id": "x", "file": "x.png", "width": 100, "height": 100, "gsd": 0.1, "split": null, "annotations": [
            { "class_id": 0, "aabb": [0, 0, 10, 10], "obb": { "cx": 5, "cy": 5, "w": 10, "h": 10, "angle_deg": 0 } },
            { "class_id": 0, "aabb": [50, 50, 60, 60], "obb": { "cx": 55, "cy": 55, "w": 10, "h": 10, "angle_deg": 0 } }
        ]}],
    });
    std::fs::write(dir.path().join("hand.json"), serde_json::to_vec(&hand).unwrap()).unwrap();
    std::fs::write(dir.path().join("one.json"), br#"[{"image_id": "x", "bbox": [0, 0, 10, 10], "score": 0.8}]"#).unwrap();
    let cfg = write_config(dir.path(), "eh.json", &json!({ "detections": "one.json", "manifest": "hand.json" }));
    let r = run_ok(&[&"eval", &"--config", &cfg]);
    assert!((r["ap"].as_f64().unwrap() - 51.0 / 101.0).abs() < 1e-9);
}

#[test]
fn sweep_writes_recipes_and_results_skeleton() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let s = run_ok(&[&"sweep", &"fig7", &"--out", &out, &"--seed", &"1"]);
    assert_eq!(s["recipes"], 24);
    let files = std::fs::read_dir(out.join("recipes"))
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "json"))
        .count();
    assert_eq!(files, 24);
    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 25);
    let results: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("results.json")).unwrap()).unwrap();
    assert_eq!(results["rows"].as_array().unwrap().len(), 24);

    let s = run_ok(&[&"sweep", &"table3", &"--out", &dir.path().join("t3"), &"--seed", &"1"]);
    assert_eq!(s["recipes"], 11);
    assert_eq!(code(&[&"sweep", &"table9", &"--out", &dir.path().join("x")]), EXIT_CONFIG);
    let plan = run_ok(&[&"sweep", &"all", &"--dry-run", &"--out", &dir.path().join("d")]);
    assert_eq!(plan["recipes"], 60);
    assert!(!dir.path().join("d").exists());
}

#[test]
fn sweep_recipe_steps_run() {
    // a fig7 combined recipe, executed step by step on a tiny fixture
    let dir = tempfile::tempdir().unwrap();
    let rgb = dir.path().join("rgb");
    let labels = dir.path().join("labels");
    for (i, id) in ["a", "b", "c"].iter().enumerate() {
        write_ortho(&rgb, &labels, id, 1200, 1200, i as u64);
    }
    let cfg = write_config(
        dir.path(),
        "sweep.json",
        &json!({ "rgb_dir": "rgb", "label_dir": "labels", "artificial_images": 2, "generator": { "canvas_px": 300 } }),
    );
    let out = dir.path().join("s");
    run_ok(&[&"sweep", &"--config", &cfg, &"--out", &out, &"--seed", &"3"]);
    let recipe: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("recipes/fig7_r0008_a0002.json")).unwrap()).unwrap();
    let argv = recipe["argv"].as_array().unwrap();
    for step in &argv[..argv.len() - 1] {
        let args: Vec<String> = step.as_array().unwrap()[1..].iter().map(|a| a.as_str().unwrap().to_string()).collect();
        let refs: Vec<&dyn AsRef<std::ffi::OsStr>> = args.iter().map(|a| a as &dyn AsRef<std::ffi::OsStr>).collect();
        run_ok(&refs);
    }
    for m in recipe["train_manifests"].as_array().unwrap() {
        let m: serde_json::Value = serde_json::from_slice(&std::fs::read(m.as_str().unwrap()).unwrap()).unwrap();
        assert!(!m["images"].as_array().unwrap().is_empty());
    }
    let train: serde_json::Value =
        serde_json::from_slice(&std::fs::read(recipe["train_manifests"][0].as_str().unwrap()).unwrap()).unwrap();
    assert_eq!(train["images"].as_array().unwrap().len(), 8);
    assert!(Path::new(recipe["val_manifest"].as_str().unwrap()).is_file());
}

#[test]
fn every_subcommand_dry_run_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, _) = ingest_fixture(dir.path());
    let o = dir.path().join("never");
    let plan = run_ok(&[&"ingest", &"--config", &cfg, &"--out", &o, &"--dry-run"]);
    assert_eq!(plan["pairs"], 2);
    run_ok(&[&"prepare", &"--out", &o, &"--dry-run"]);
    run_ok(&[&"generate", &"--out", &o, &"--dry-run"]);
    run_ok(&[&"sweep", &"--out", &o, &"--dry-run"]);
    let c = write_config(dir.path(), "c.json", &json!({ "combinations": [{ "vehicles": "artificial", "background": "artificial" }] }));
    let plan = run_ok(&[&"compose", &"--config", &c, &"--out", &o, &"--dry-run", &"--seed", &"8"]);
    assert_eq!(plan["seed"], 8);
    run_ok(&[&"ingest", &"--config", &cfg, &"--out", &dir.path().join("i")]);
    let t = write_config(dir.path(), "t.json", &json!({ "manifest": "i/manifest.json" }));
    run_ok(&[&"tile", &"--config", &t, &"--out", &o, &"--dry-run"]);
    std::fs::write(dir.path().join("d.json"), b"[]").unwrap();
    let e = write_config(dir.path(), "e.json", &json!({ "detections": "d.json", "manifest": "i/manifest.json" }));
    run_ok(&[&"eval", &"--config", &e, &"--out", &o, &"--dry-run"]);
    assert!(!o.exists());
}

//! Experiment grids as ready-to-run recipes.
//!
//! A recipe is a list of subcommand invocations that build one training
//! set, the manifests it consists of, the validation manifest, and the
//! `eval` call to run once a detector has produced `detections.json`.
//! Step configs are written as files next to the recipe and reference
//! absolute paths, so each step runs as
//! `aerosynth <command> --config <file> --out <dir>`.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::commands::{TRAIN_MANIFEST, VAL_MANIFEST};
use crate::{write_json_file, CliError, RunConfig};

pub const GRIDS: [&str; 4] = ["fig7", "table2", "table3", "table4"];

/// Real training-set sizes of the size sweep; the last one is the whole
/// training split.
pub const FIG7_SIZES: [usize; 12] = [8, 16, 32, 64, 100, 150, 200, 300, 500, 750, 1000, 2039];
pub const FULL_REAL: usize = 2039;
pub const GSD_ROWS: [f64; 4] = [0.05, 0.10, 0.15, 0.20];
pub const SOURCE_GSD: f64 = 0.05;
pub const DETECTOR_PX: u32 = 300;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Grid name, or `all`.
    pub grid: String,
    pub rgb_dir: PathBuf,
    pub label_dir: PathBuf,
    pub class_map: Option<PathBuf>,
    pub exclusions: Option<PathBuf>,
    pub val_fraction: f64,
    pub artificial_images: u64,
    /// Generator keys applied to every artificial dataset.
    pub generator: Value,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            grid: "fig7".into(),
            rgb_dir: "data/potsdam/rgb".into(),
            label_dir: "data/potsdam/labels".into(),
            class_map: None,
            exclusions: None,
            val_fraction: 0.3,
            artificial_images: 1000,
            generator: json!({}),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub command: String,
    pub config: Value,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recipe {
    pub label: String,
    pub grid: String,
    pub description: String,
    pub real_images: usize,
    pub artificial_images: u64,
    pub gsd: f64,
    pub steps: Vec<Step>,
    pub train_manifests: Vec<PathBuf>,
    pub val_manifest: PathBuf,
    pub evaluate: Step,
}

struct Ctx<'a> {
    cfg: &'a SweepConfig,
    root: PathBuf,
    seed: u64,
}

fn tiling(gsd: f64) -> Value {
    let patch = (DETECTOR_PX as f64 * gsd / SOURCE_GSD).round() as u32;
    json!({ "patch_px": patch, "overlap_px": patch / 3, "output_px": DETECTOR_PX })
}

fn gsd_tag(gsd: f64) -> String {
    format!("{:03}", (gsd * 100.0).round() as u32)
}

impl Ctx<'_> {
    fn ingest(&self) -> (Step, PathBuf) {
        let out = self.root.join("real/ingest");
        let mut config = json!({
            "rgb_dir": self.cfg.rgb_dir,
            "label_dir": self.cfg.label_dir,
            "gsd": SOURCE_GSD,
            "seed": self.seed,
        });
        if let Some(p) = &self.cfg.class_map {
            config["class_map"] = json!(p);
        }
        if let Some(p) = &self.cfg.exclusions {
            config["exclusions"] = json!(p);
        }
        let manifest = out.join(aerosynth::manifest::MANIFEST_FILE);
        (Step { command: "ingest".into(), config, out }, manifest)
    }

    /// Tiles the real data at `gsd`; `subsample` of the training split, or
    /// all of it. Returns the step with its train and val manifests.
    fn tile(&self, dir: PathBuf, gsd: f64, subsample: Option<usize>, drop_empty: bool) -> (Step, PathBuf, PathBuf) {
        let (_, ingest_manifest) = self.ingest();
        let mut spec = tiling(gsd);
        spec["drop_empty"] = json!(drop_empty);
        let mut config = json!({
            "manifest": ingest_manifest,
            "spec": spec,
            "val_fraction": self.cfg.val_fraction,
            "seed": self.seed,
        });
        if let Some(n) = subsample {
            config["subsample"] = json!(n);
        }
        let train = dir.join(TRAIN_MANIFEST);
        let val = dir.join(VAL_MANIFEST);
        (Step { command: "tile".into(), config, out: dir }, train, val)
    }

    /// Grid `defaults` < the sweep's `generator` keys < row `overrides`.
    fn generator(&self, defaults: Value, overrides: Value) -> Value {
        let mut g = json!({ "image_count": self.cfg.artificial_images });
        merge(&mut g, &defaults);
        merge(&mut g, &self.cfg.generator);
        merge(&mut g, &overrides);
        g
    }

    fn generate(&self, dir: PathBuf, defaults: Value, overrides: Value) -> (Step, PathBuf) {
        let mut config = self.generator(defaults, overrides);
        config["seed"] = json!(self.seed);
        let manifest = dir.join(aerosynth::manifest::MANIFEST_FILE);
        (Step { command: "generate".into(), config, out: dir }, manifest)
    }

    fn evaluate(&self, label: &str, val: &Path) -> Step {
        let run = self.root.join("runs").join(label);
        Step {
            command: "eval".into(),
            config: json!({
                "detections": run.join("detections.json"),
                "manifest": val,
                "iou_threshold": aerosynth::eval::DEFAULT_IOU_THRESHOLD,
                "confidence_floor": aerosynth::eval::DEFAULT_CONFIDENCE_FLOOR,
                "seed": self.seed,
            }),
            out: run.join("eval"),
        }
    }

    /// Real subset plus optional artificial images at `gsd`.
    fn mixed(&self, grid: &str, label: String, description: String, gsd: f64, real: usize, artificial: bool, canvas: u32) -> Recipe {
        let data = self.root.join("data");
        let (ingest, _) = self.ingest();
        let subsample = (real != FULL_REAL).then_some(real);
        let tile_dir = match subsample {
            Some(n) => data.join(format!("real_gsd{}_n{n:04}", gsd_tag(gsd))),
            None => data.join(format!("real_gsd{}_full", gsd_tag(gsd))),
        };
        let (tile, train, val) = self.tile(tile_dir, gsd, subsample, true);
        let mut steps = vec![ingest, tile];
        let mut train_manifests = vec![train];
        let mut n_art = 0;
        if artificial {
            let (gen, m) = self.generate(
                data.join(format!("artificial_gsd{}", gsd_tag(gsd))),
                json!({ "canvas_px": canvas }),
                json!({ "gsd": gsd }),
            );
            steps.push(gen);
            train_manifests.push(m);
            n_art = self.cfg.artificial_images;
        }
        let evaluate = self.evaluate(&label, &val);
        Recipe {
            label,
            grid: grid.into(),
            description,
            real_images: real,
            artificial_images: n_art,
            gsd,
            steps,
            train_manifests,
            val_manifest: val,
            evaluate,
        }
    }

    fn fig7(&self) -> Vec<Recipe> {
        let mut out = Vec::new();
        for &n in &FIG7_SIZES {
            for art in [false, true] {
                let a = if art { self.cfg.artificial_images } else { 0 };
                out.push(self.mixed(
                    "fig7",
                    format!("fig7_r{n:04}_a{a:04}"),
                    format!("{n} real + {a} artificial images"),
                    0.10,
                    n,
                    art,
                    600,
                ));
            }
        }
        out
    }

    fn table2(&self) -> Vec<Recipe> {
        let mut out = Vec::new();
        for &gsd in &GSD_ROWS {
            let canvas = tiling(gsd)["patch_px"].as_u64().expect("patch") as u32;
            let a = self.cfg.artificial_images;
            for (real, art) in [(FULL_REAL, false), (8, false), (8, true), (150, false), (150, true)] {
                let real_tag = if real == FULL_REAL { "full".to_string() } else { format!("r{real:04}") };
                let n_art = if art { a } else { 0 };
                let mut r = self.mixed(
                    "table2",
                    format!("table2_gsd{}_{real_tag}_a{n_art:04}", gsd_tag(gsd)),
                    format!("GSD {gsd:.2} m/px, {} real + {n_art} artificial images", if real == FULL_REAL { "all".into() } else { real.to_string() }),
                    gsd,
                    real,
                    art,
                    canvas,
                );
                if real == FULL_REAL {
                    // the full training split differs in size per GSD
                    r.real_images = 0;
                }
                out.push(r);
            }
        }
        out
    }

    fn table3(&self) -> Vec<Recipe> {
        let off = json!({
            "enable_fine_noise": false,
            "enable_rough_noise": false,
            "enable_cut": false,
            "enable_deform": false,
        });
        let with = |extra: Value| {
            let mut v = off.clone();
            merge(&mut v, &extra);
            v
        };
        let mut rows: Vec<(String, String, Value)> = vec![
            ("body".into(), "body-colored outline".into(), with(json!({ "outline_mode": "body" }))),
            ("black".into(), "black outline".into(), with(json!({ "outline_mode": "black" }))),
            ("black_partial".into(), "black outline, partial vehicles".into(), with(json!({ "enable_cut": true }))),
        ];
        for d in [5u32, 10, 20] {
            rows.push((
                format!("deform{d:02}"),
                format!("partial vehicles, deform {d}%"),
                with(json!({ "enable_cut": true, "enable_deform": true, "deform_max": d as f64 / 100.0 })),
            ));
        }
        rows.push((
            "deform05_fine".into(),
            "deform 5%, fine noise".into(),
            with(json!({ "enable_cut": true, "enable_deform": true, "deform_max": 0.05, "enable_fine_noise": true })),
        ));
        for r in [5u32, 10, 15, 20] {
            rows.push((
                format!("deform05_fine_rough{r:02}"),
                format!("deform 5%, fine noise, rough noise variance {r}"),
                with(json!({
                    "enable_cut": true, "enable_deform": true, "deform_max": 0.05,
                    "enable_fine_noise": true, "enable_rough_noise": true, "rough_noise_var": r as f64,
                })),
            ));
        }
        let (ingest, _) = self.ingest();
        let (val_tile, _, val) = self.tile(self.root.join("data/real_gsd010_full"), 0.10, None, true);
        rows.into_iter()
            .map(|(tag, description, overrides)| {
                let label = format!("table3_{tag}");
                let (gen, m) = self.generate(self.root.join("data").join(&label), json!({}), overrides);
                let evaluate = self.evaluate(&label, &val);
                Recipe {
                    label,
                    grid: "table3".into(),
                    description: format!("artificial only: {description}"),
                    real_images: 0,
                    artificial_images: self.cfg.artificial_images,
                    gsd: 0.10,
                    steps: vec![ingest.clone(), val_tile.clone(), gen],
                    train_manifests: vec![m],
                    val_manifest: val.clone(),
                    evaluate,
                }
            })
            .collect()
    }

    fn table4(&self) -> Vec<Recipe> {
        let data = self.root.join("data");
        let (ingest, _) = self.ingest();
        let (real_tile, train, val) = self.tile(data.join("real_gsd010_full"), 0.10, None, true);
        // vehicle-free patches are only kept when empty patches are
        let (bg_tile, bg_train, _) = self.tile(data.join("real_gsd010_with_empty"), 0.10, None, false);
        let mut out = Vec::new();
        for (v, b) in [("artificial", "artificial"), ("real", "artificial"), ("artificial", "real"), ("real", "real")] {
            let label = format!("table4_{v}_vehicles_{b}_background");
            let dir = data.join(&label);
            let config = json!({
                "generator": self.generator(json!({}), json!({})),
                "combinations": [{ "vehicles": v, "background": b }],
                "real_manifest": train,
                "backgrounds_manifest": bg_train,
                "seed": self.seed,
            });
            let manifest = dir
                .join(format!("{v}_vehicles"))
                .join(format!("{b}_background"))
                .join(aerosynth::manifest::MANIFEST_FILE);
            let evaluate = self.evaluate(&label, &val);
            out.push(Recipe {
                label,
                grid: "table4".into(),
                description: format!("{v} vehicles on {b} background"),
                real_images: 0,
                artificial_images: self.cfg.artificial_images,
                gsd: 0.10,
                steps: vec![ingest.clone(), real_tile.clone(), bg_tile.clone(), Step { command: "compose".into(), config, out: dir }],
                train_manifests: vec![manifest],
                val_manifest: val.clone(),
                evaluate,
            });
        }
        let mut baseline = self.mixed("table4", "table4_real_baseline".into(), "real vehicles on their own background".into(), 0.10, FULL_REAL, false, 600);
        baseline.real_images = 0;
        out.push(baseline);
        out
    }
}

/// Shallow-merges object `src` into object `dst`.
fn merge(dst: &mut Value, src: &Value) {
    if let (Some(d), Some(s)) = (dst.as_object_mut(), src.as_object()) {
        for (k, v) in s {
            d.insert(k.clone(), v.clone());
        }
    }
}

/// Recipes of one named grid, or of every grid for `all`.
pub fn build_grid(name: &str, cfg: &SweepConfig, root: &Path, seed: u64) -> Result<Vec<Recipe>, CliError> {
    let ctx = Ctx { cfg, root: root.to_path_buf(), seed };
    let recipes = match name {
        "fig7" => ctx.fig7(),
        "table2" => ctx.table2(),
        "table3" => ctx.table3(),
        "table4" => ctx.table4(),
        "all" => GRIDS.iter().flat_map(|g| build_grid(g, cfg, root, seed).expect("known grid")).collect(),
        other => {
            return Err(CliError::Config(format!(
                "unknown grid {other:?}; expected one of {} or all",
                GRIDS.join(", ")
            )))
        }
    };
    let mut seen = BTreeSet::new();
    for r in &recipes {
        if !seen.insert(r.label.as_str()) {
            return Err(CliError::Config(format!("duplicate recipe label {}", r.label)));
        }
    }
    Ok(recipes)
}

fn results_row(r: &Recipe) -> Value {
    json!({
        "label": r.label,
        "grid": r.grid,
        "real_images": r.real_images,
        "artificial_images": r.artificial_images,
        "gsd": r.gsd,
        "ap_mean": null,
        "ap_std": null,
        "runs": [],
    })
}

fn results_csv(recipes: &[Recipe]) -> String {
    let mut s = String::from("label,grid,real_images,artificial_images,gsd,ap_mean,ap_std\n");
    for r in recipes {
        s.push_str(&format!("{},{},{},{},{:.2},,\n", r.label, r.grid, r.real_images, r.artificial_images, r.gsd));
    }
    s
}

fn step_file(label: &str, k: usize, command: &str) -> String {
    format!("{label}/{k:02}_{command}.json")
}

/// Writes `recipes/<label>.json`, one config file per step under
/// `recipes/<label>/`, and `results.json` / `results.csv` skeletons.
pub fn sweep(rc: &RunConfig, positional: Option<&str>) -> Result<Value, CliError> {
    let mut cfg: SweepConfig = rc.parse(&["seed"])?;
    if let Some(g) = positional {
        cfg.grid = g.to_string();
    }
    if !(0.0..1.0).contains(&cfg.val_fraction) {
        return Err(CliError::Config(format!("val_fraction {} outside [0, 1)", cfg.val_fraction)));
    }
    if !cfg.generator.is_object() {
        return Err(CliError::Config("generator must be an object".into()));
    }
    if cfg.generator.get("seed").is_some() {
        return Err(CliError::Config("set the seed at top level, not inside generator".into()));
    }
    let abs = |p: &Path| std::path::absolute(rc.path(p)).map_err(|e| CliError::Io(format!("{}: {e}", p.display())));
    cfg.rgb_dir = abs(&cfg.rgb_dir)?;
    cfg.label_dir = abs(&cfg.label_dir)?;
    cfg.class_map = cfg.class_map.as_deref().map(abs).transpose()?;
    cfg.exclusions = cfg.exclusions.as_deref().map(abs).transpose()?;
    let out = rc.out_dir()?;
    let root = std::path::absolute(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let recipes = build_grid(&cfg.grid, &cfg, &root, rc.seed())?;
    let labels: Vec<&str> = recipes.iter().map(|r| r.label.as_str()).collect();
    if rc.dry_run {
        return Ok(json!({
            "command": "sweep",
            "dry_run": true,
            "seed": rc.seed(),
            "grid": cfg.grid,
            "out": root,
            "recipes": labels.len(),
            "labels": labels,
        }));
    }
    let recipe_dir = root.join("recipes");
    for r in &recipes {
        let mut doc = serde_json::to_value(r).expect("recipe serializes");
        let mut argv = Vec::new();
        for (k, s) in r.steps.iter().chain(std::iter::once(&r.evaluate)).enumerate() {
            let rel = step_file(&r.label, k, &s.command);
            write_json_file(&recipe_dir.join(&rel), &s.config)?;
            argv.push(json!(["aerosynth", s.command, "--config", recipe_dir.join(&rel), "--out", s.out]));
        }
        doc["argv"] = Value::Array(argv);
        write_json_file(&recipe_dir.join(format!("{}.json", r.label)), &doc)?;
    }
    let results = json!({
        "grid": cfg.grid,
        "seed": rc.seed(),
        "config": cfg,
        "rows": recipes.iter().map(results_row).collect::<Vec<_>>(),
    });
    write_json_file(&root.join("results.json"), &results)?;
    aerosynth::io::write_atomic(&root.join("results.csv"), results_csv(&recipes).as_bytes())?;
    Ok(json!({ "grid": cfg.grid, "recipes": recipes.len(), "out": root, "labels": labels }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(name: &str) -> Result<Vec<Recipe>, CliError> {
        build_grid(name, &SweepConfig::default(), Path::new("/sweep"), 7)
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(grid("fig7").unwrap().len(), 24);
        assert_eq!(grid("table3").unwrap().len(), 11);
        assert_eq!(grid("table4").unwrap().len(), 5);
        assert_eq!(grid("table2").unwrap().len(), 20);
        assert_eq!(grid("all").unwrap().len(), 60);
        assert_eq!(grid("fig8").unwrap_err().exit_code(), crate::EXIT_CONFIG);
    }

    #[test]
    fn fig7_pairs_baseline_and_combined() {
        let r = grid("fig7").unwrap();
        let base: Vec<usize> = r.iter().filter(|x| x.artificial_images == 0).map(|x| x.real_images).collect();
        let comb: Vec<usize> = r.iter().filter(|x| x.artificial_images == 1000).map(|x| x.real_images).collect();
        assert_eq!(base, FIG7_SIZES);
        assert_eq!(comb, FIG7_SIZES);
        let first = &r[0];
        assert_eq!(first.steps[1].config["subsample"], 8);
        assert!(r.last().unwrap().steps[1].config.get("subsample").is_none());
    }

    #[test]
    fn table2_patch_sizes() {
        for (gsd, patch) in GSD_ROWS.iter().zip([300, 600, 900, 1200]) {
            let t = tiling(*gsd);
            assert_eq!(t["patch_px"], patch);
            assert_eq!(t["overlap_px"], patch / 3);
            assert_eq!(t["output_px"], 300);
        }
    }

    #[test]
    fn table3_rows_parse_as_generator_configs() {
        for r in grid("table3").unwrap() {
            let gen = r.steps.iter().find(|s| s.command == "generate").unwrap();
            let cfg: aerosynth::GeneratorConfig = serde_json::from_value(gen.config.clone()).unwrap();
            cfg.validate().unwrap();
            assert_eq!(cfg.image_count, 1000);
        }
        let rows = grid("table3").unwrap();
        let best: aerosynth::GeneratorConfig =
            serde_json::from_value(rows[8].steps[2].config.clone()).unwrap();
        let default = aerosynth::GeneratorConfig { seed: 7, ..Default::default() };
        assert_eq!(best, default, "the rough-10 row is the default generator");
    }

    #[test]
    fn every_step_config_parses() {
        for r in grid("all").unwrap() {
            for s in r.steps.iter().chain(std::iter::once(&r.evaluate)) {
                let mut c = s.config.clone();
                c.as_object_mut().unwrap().remove("seed");
                let ok = match s.command.as_str() {
                    "ingest" => serde_json::from_value::<crate::commands::IngestConfig>(c).is_ok(),
                    "tile" => serde_json::from_value::<crate::commands::TileConfig>(c).is_ok(),
                    "generate" => serde_json::from_value::<aerosynth::GeneratorConfig>(c).is_ok(),
                    "compose" => serde_json::from_value::<crate::commands::ComposeConfig>(c).is_ok(),
                    "eval" => serde_json::from_value::<crate::commands::EvalConfig>(c).is_ok(),
                    other => panic!("unexpected step {other}"),
                };
                assert!(ok, "{} step {} does not parse", r.label, s.command);
            }
        }
    }
}

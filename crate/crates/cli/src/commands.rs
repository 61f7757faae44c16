//! One function per subcommand. Each returns the JSON printed on stdout:
//! the plan under `--dry-run`, a summary otherwise.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use aerosynth::blueprint::{self, Blueprint, SurfaceClass};
use aerosynth::compose::{self, BackgroundPool, PoolIndex, PoolKind, Pools, Source, VehicleCropPool};
use aerosynth::eval;
use aerosynth::ingest::{self, AnnotatedSample, ClassColorMap, Exclusions};
use aerosynth::io;
use aerosynth::manifest::{DatasetManifest, MANIFEST_FILE};
use aerosynth::scene::{Generator, GeneratorConfig};
use aerosynth::standin;
use aerosynth::tiler::{self, TilingSpec, EMPTY_DROP_NOTE};

use crate::{write_json_file, CliError, RunConfig};

pub const REPORT_FILE: &str = "report.json";
pub const RESULTS_FILE: &str = "results.json";
pub const TRAIN_MANIFEST: &str = "train_manifest.json";
pub const VAL_MANIFEST: &str = "val_manifest.json";

fn plan(command: &str, rc: &RunConfig, extra: Value) -> Value {
    let mut v = json!({
        "command": command,
        "dry_run": true,
        "seed": rc.seed(),
        "out": rc.out.as_ref().map(|p| p.display().to_string()),
    });
    if let (Some(m), Value::Object(e)) = (v.as_object_mut(), extra) {
        m.extend(e);
    }
    v
}

fn config_with_seed<T: Serialize>(cfg: &T, seed: u64) -> Value {
    let mut v = serde_json::to_value(cfg).expect("config serializes");
    if let Some(m) = v.as_object_mut() {
        m.insert("seed".into(), seed.into());
    }
    v
}

fn require_dir(p: &Path, what: &str) -> Result<(), CliError> {
    if p.is_dir() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{what} {} is not a directory", p.display())))
    }
}

fn require_file(p: &Path, what: &str) -> Result<(), CliError> {
    if p.is_file() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{what} {} does not exist", p.display())))
    }
}

fn load_manifest(p: &Path) -> Result<DatasetManifest, CliError> {
    require_file(p, "manifest")?;
    Ok(DatasetManifest::load(p)?)
}

fn manifest_root(p: &Path) -> PathBuf {
    p.parent().map(Path::to_path_buf).unwrap_or_default()
}

// ---------------------------------------------------------------- prepare

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrepareConfig {
    /// Mask directory; the built-in stand-ins when absent.
    pub blueprints: Option<PathBuf>,
    pub gsd: f64,
    pub min_region_px: usize,
    pub tolerance: u8,
}

impl Default for PrepareConfig {
    fn default() -> Self {
        Self {
            blueprints: None,
            gsd: 0.10,
            min_region_px: 4,
            tolerance: blueprint::DEFAULT_TOLERANCE,
        }
    }
}

#[derive(Debug, Serialize)]
struct RasterSummary {
    width: u32,
    height: u32,
    pixel_pitch: f64,
    histogram: BTreeMap<SurfaceClass, usize>,
    body_fraction: f64,
}

impl RasterSummary {
    fn of(b: &Blueprint) -> Self {
        Self {
            width: b.width(),
            height: b.height(),
            pixel_pitch: b.pixel_pitch,
            histogram: b.histogram(),
            body_fraction: b.body_fraction(),
        }
    }
}

/// Validates a blueprint set and reports class histograms before and after
/// simplification and rescaling. With no directory, the built-in stand-ins
/// are reported and exported under `<out>/blueprints/`.
pub fn prepare(rc: &RunConfig) -> Result<Value, CliError> {
    let mut cfg: PrepareConfig = rc.parse(&["seed"])?;
    if !(cfg.gsd.is_finite() && cfg.gsd > 0.0) {
        return Err(CliError::Config(format!("gsd {}", cfg.gsd)));
    }
    cfg.blueprints = cfg.blueprints.map(|p| rc.path(p));
    if let Some(dir) = &cfg.blueprints {
        require_dir(dir, "blueprint directory")?;
    }
    if rc.dry_run {
        let masks = match &cfg.blueprints {
            Some(dir) => blueprint::load_blueprint_dir(dir, cfg.tolerance)?.len(),
            None => standin::standin_masks().len(),
        };
        return Ok(plan("prepare", rc, json!({ "config": cfg, "masks": masks })));
    }

    let loaded: Vec<(String, Blueprint)> = match &cfg.blueprints {
        Some(dir) => {
            let all = blueprint::load_blueprint_dir(dir, cfg.tolerance)?;
            if all.is_empty() {
                return Err(CliError::Data(format!("no blueprint masks in {}", dir.display())));
            }
            all.into_iter()
                .map(|(p, r)| r.map(|b| (p.display().to_string(), b)).map_err(|e| CliError::Data(format!("{}: {e}", p.display()))))
                .collect::<Result<_, _>>()?
        }
        None => standin::standin_blueprints()
            .into_iter()
            .map(|b| (format!("builtin:{}", b.id), b))
            .collect(),
    };

    let mut entries = Vec::new();
    let mut prepared_masks = Vec::new();
    for (file, raw) in &loaded {
        let prepared = blueprint::rescale(&blueprint::simplify(raw, cfg.min_region_px), cfg.gsd)
            .map_err(|e| CliError::Data(format!("{file}: {e}")))?;
        entries.push(json!({
            "id": raw.id,
            "file": file,
            "vehicle_label": raw.vehicle_label,
            "physical_length_m": raw.physical_length,
            "physical_width_m": raw.physical_width,
            "raw": RasterSummary::of(raw),
            "prepared": RasterSummary::of(&prepared),
        }));
        prepared_masks.push(prepared);
    }
    let report = json!({
        "config": cfg,
        "source": cfg.blueprints.as_ref().map_or("builtin".to_string(), |p| p.display().to_string()),
        "count": entries.len(),
        "blueprints": entries,
    });

    if let Some(out) = &rc.out {
        if cfg.blueprints.is_none() {
            for (meta, img) in standin::standin_masks() {
                let dir = out.join("blueprints");
                io::save_rgb_png(&dir.join(format!("{}.png", meta.id)), &img)?;
                write_json_file(&dir.join(format!("{}.json", meta.id)), &meta)?;
            }
        }
        let key = aerosynth::blueprint::ColorKey::default();
        for b in &prepared_masks {
            io::save_rgb_png(&out.join("prepared").join(format!("{}.png", b.id)), &b.to_rgb(&key))?;
        }
        write_json_file(&out.join(REPORT_FILE), &report)?;
    }
    Ok(report)
}

// --------------------------------------------------------------- generate

fn generator_config(rc: &RunConfig, v: Value) -> Result<GeneratorConfig, CliError> {
    let mut cfg: GeneratorConfig = serde_json::from_value(v).map_err(|e| CliError::Config(e.to_string()))?;
    cfg.blueprints = cfg.blueprints.map(|p| rc.path(p));
    cfg.palette = cfg.palette.map(|p| rc.path(p));
    if let Some(dir) = &cfg.blueprints {
        require_dir(dir, "blueprint directory")?;
    }
    if let Some(p) = &cfg.palette {
        require_file(p, "palette")?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dataset_summary(m: &DatasetManifest, out: &Path) -> Value {
    json!({
        "manifest": out.join(MANIFEST_FILE).display().to_string(),
        "images": m.images.len(),
        "annotations": m.annotation_count(),
        "partial": m.images.iter().flat_map(|i| &i.annotations).filter(|a| a.is_partial).count(),
        "dropped": m.images.iter().map(|i| i.dropped as u64).sum::<u64>(),
    })
}

/// Renders an artificial dataset; the config is a generator config with
/// `seed` and `image_count` at top level.
pub fn generate(rc: &RunConfig) -> Result<Value, CliError> {
    let cfg = generator_config(rc, rc.config.clone())?;
    let out = rc.out_dir()?;
    if rc.dry_run {
        return Ok(plan(
            "generate",
            rc,
            json!({
                "images": cfg.image_count,
                "files": cfg.image_count * 2 + 1,
                "canvas_px": cfg.canvas_px,
                "gsd": cfg.gsd,
                "vehicles_per_image": cfg.vehicles_per_image,
                "config": cfg,
            }),
        ));
    }
    let generator = Generator::from_config(cfg)?;
    let manifest = generator.generate_dataset(out)?;
    Ok(dataset_summary(&manifest, out))
}

// ----------------------------------------------------------------- ingest

fn default_min_area() -> usize {
    1
}

fn default_ingest_gsd() -> f64 {
    0.05
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestConfig {
    pub rgb_dir: PathBuf,
    pub label_dir: PathBuf,
    /// Class color map file; cars only (Potsdam yellow) when absent.
    #[serde(default)]
    pub class_map: Option<PathBuf>,
    #[serde(default)]
    pub exclusions: Option<PathBuf>,
    #[serde(default = "default_min_area")]
    pub min_area_px: usize,
    #[serde(default = "default_ingest_gsd")]
    pub gsd: f64,
}

/// Converts label rasters into annotations. Manifest `file` entries point
/// at the source RGB rasters by absolute path; nothing is copied.
pub fn ingest(rc: &RunConfig) -> Result<Value, CliError> {
    let mut cfg: IngestConfig = rc.parse(&["seed"])?;
    cfg.rgb_dir = rc.path(&cfg.rgb_dir);
    cfg.label_dir = rc.path(&cfg.label_dir);
    cfg.class_map = cfg.class_map.map(|p| rc.path(p));
    cfg.exclusions = cfg.exclusions.map(|p| rc.path(p));
    require_dir(&cfg.rgb_dir, "rgb_dir")?;
    require_dir(&cfg.label_dir, "label_dir")?;
    if !(cfg.gsd.is_finite() && cfg.gsd > 0.0) {
        return Err(CliError::Config(format!("gsd {}", cfg.gsd)));
    }
    let class_map = match &cfg.class_map {
        Some(p) => {
            require_file(p, "class map")?;
            ClassColorMap::from_json(&std::fs::read(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?)?
        }
        None => ClassColorMap::potsdam_cars(),
    };
    let exclusions = match &cfg.exclusions {
        Some(p) => {
            require_file(p, "exclusions")?;
            Exclusions::from_json(&std::fs::read(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?)?
        }
        None => Exclusions::default(),
    };
    let pairs = ingest::pair_rasters(&cfg.rgb_dir, &cfg.label_dir)?;
    if rc.dry_run {
        let ids: Vec<&str> = pairs.iter().map(|(id, _, _)| id.as_str()).collect();
        return Ok(plan("ingest", rc, json!({ "config": cfg, "pairs": pairs.len(), "ids": ids })));
    }
    let out = rc.out_dir()?;
    let records = pairs
        .par_iter()
        .map(|(id, rgb_path, label_path)| {
            let rgb = io::load_rgb(rgb_path)?;
            let label = io::load_rgb(label_path)?;
            let sample = ingest::convert_tile(id, rgb, &label, &class_map, cfg.min_area_px, &exclusions.for_image(id), cfg.gsd)
                .map_err(|e| CliError::Data(format!("{id}: {e}")))?;
            let abs = std::path::absolute(rgb_path).map_err(|e| CliError::Io(format!("{}: {e}", rgb_path.display())))?;
            Ok(sample.record(abs.display().to_string()))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut manifest = DatasetManifest::new(config_with_seed(&cfg, rc.seed()));
    manifest.images = records;
    manifest.sort_images();
    manifest.save(&out.join(MANIFEST_FILE))?;
    let per_image: BTreeMap<&str, usize> = manifest.images.iter().map(|i| (i.id.as_str(), i.annotations.len())).collect();
    let mut summary = dataset_summary(&manifest, out);
    summary["per_image"] = json!(per_image);
    Ok(summary)
}

// ------------------------------------------------------------------- tile

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TileConfig {
    pub manifest: PathBuf,
    #[serde(default)]
    pub spec: TilingSpec,
    /// Writes train/val manifests when set.
    #[serde(default)]
    pub val_fraction: Option<f64>,
    /// Keeps this many training patches.
    #[serde(default)]
    pub subsample: Option<usize>,
}

fn patch_count(w: u32, h: u32, spec: &TilingSpec) -> Result<usize, CliError> {
    Ok(tiler::tile_positions(w, spec.patch_px, spec.overlap_px)?.len() * tiler::tile_positions(h, spec.patch_px, spec.overlap_px)?.len())
}

/// Tiles every image of a manifest, resamples patches, and optionally
/// splits and subsamples. Writes `manifest.json` with all patches (split
/// labels filled in when splitting), plus train/val manifests.
pub fn tile(rc: &RunConfig) -> Result<Value, CliError> {
    let mut cfg: TileConfig = rc.parse(&["seed"])?;
    cfg.manifest = rc.path(&cfg.manifest);
    cfg.spec.validate()?;
    if let Some(f) = cfg.val_fraction {
        if !(0.0..1.0).contains(&f) {
            return Err(CliError::Config(format!("val_fraction {f} outside [0, 1)")));
        }
    }
    let source = load_manifest(&cfg.manifest)?;
    let root = manifest_root(&cfg.manifest);
    let seed = rc.seed();
    if rc.dry_run {
        let windows = source
            .images
            .iter()
            .map(|i| patch_count(i.width, i.height, &cfg.spec))
            .collect::<Result<Vec<_>, _>>()?;
        return Ok(plan(
            "tile",
            rc,
            json!({
                "config": cfg,
                "source_images": source.images.len(),
                "windows": windows.iter().sum::<usize>(),
            }),
        ));
    }
    let out = rc.out_dir()?;
    let per_image = source
        .images
        .par_iter()
        .map(|rec| {
            let rgb = io::load_rgb(&root.join(&rec.file))?;
            if rgb.dimensions() != (rec.width, rec.height) {
                return Err(CliError::Data(format!(
                    "{}: raster is {:?}, manifest says {}x{}",
                    rec.id,
                    rgb.dimensions(),
                    rec.width,
                    rec.height
                )));
            }
            let windows = patch_count(rec.width, rec.height, &cfg.spec)?;
            let sample = AnnotatedSample {
                id: rec.id.clone(),
                rgb,
                gsd: rec.gsd,
                annotations: rec.annotations.clone(),
            };
            let patches = tiler::tile_and_resample(&sample, &cfg.spec)?;
            let records = tiler::write_samples(out, &patches)?;
            Ok((windows, records))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let windows: usize = per_image.iter().map(|(w, _)| w).sum();
    let mut all = DatasetManifest::new(json!({
        "tile": config_with_seed(&cfg, seed),
        "source": source.config,
    }));
    all.images = per_image.into_iter().flat_map(|(_, r)| r).collect();
    all.sort_images();
    all.notes.insert(EMPTY_DROP_NOTE.into(), json!(windows - all.images.len()));

    let mut summary = json!({ "windows": windows, "patches": all.images.len(), "empty_dropped": windows - all.images.len() });
    let train = match cfg.val_fraction {
        Some(f) => {
            let (train, val) = tiler::split(&all, f, seed)?;
            summary["val"] = json!(val.images.len());
            let mut labelled = train.clone();
            labelled.images.extend(val.images.iter().cloned());
            labelled.sort_images();
            all = labelled;
            val.save(&out.join(VAL_MANIFEST))?;
            Some(train)
        }
        None => None,
    };
    let train = match (cfg.subsample, train) {
        (Some(n), t) => {
            let base = t.as_ref().unwrap_or(&all);
            let mut sub = tiler::subsample(base, n, seed)?;
            sub.notes.insert("subsample".into(), json!(n));
            Some(sub)
        }
        (None, t) => t,
    };
    if let Some(t) = &train {
        summary["train"] = json!(t.images.len());
        t.save(&out.join(TRAIN_MANIFEST))?;
    }
    all.save(&out.join(MANIFEST_FILE))?;
    summary["annotations"] = json!(all.annotation_count());
    summary["manifest"] = json!(out.join(MANIFEST_FILE).display().to_string());
    Ok(summary)
}

// ---------------------------------------------------------------- compose

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Combination {
    pub vehicles: Source,
    pub background: Source,
}

impl Combination {
    pub fn label(&self) -> String {
        compose::combination_label(self.vehicles, self.background)
    }

    pub fn all() -> Vec<Combination> {
        Source::ALL
            .iter()
            .flat_map(|&v| Source::ALL.iter().map(move |&b| Combination { vehicles: v, background: b }))
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Combinations {
    /// The literal string `"all"`.
    Keyword(String),
    List(Vec<Combination>),
}

impl Default for Combinations {
    fn default() -> Self {
        Combinations::Keyword("all".into())
    }
}

impl Combinations {
    fn resolve(&self) -> Result<Vec<Combination>, CliError> {
        match self {
            Combinations::Keyword(k) if k == "all" => Ok(Combination::all()),
            Combinations::Keyword(k) => Err(CliError::Config(format!("unknown combinations keyword {k:?}"))),
            Combinations::List(l) if l.is_empty() => Err(CliError::Config("no combinations".into())),
            Combinations::List(l) => {
                for (i, c) in l.iter().enumerate() {
                    if l[..i].contains(c) {
                        return Err(CliError::Config(format!("duplicate combination {}", c.label())));
                    }
                }
                Ok(l.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComposeConfig {
    /// Generator config; its seed comes from the top-level `seed`.
    #[serde(default)]
    pub generator: Value,
    #[serde(default)]
    pub combinations: Combinations,
    /// Annotated real patches: the vehicle pool source and, by default,
    /// the background pool source (its vehicle-free images).
    #[serde(default)]
    pub real_manifest: Option<PathBuf>,
    #[serde(default)]
    pub backgrounds_manifest: Option<PathBuf>,
    /// Pool index files restricting a pool to listed entries.
    #[serde(default)]
    pub vehicle_pool: Option<PathBuf>,
    #[serde(default)]
    pub background_pool: Option<PathBuf>,
}

fn read_pool_index(rc: &RunConfig, p: &Path, kind: PoolKind) -> Result<(PoolIndex, PathBuf), CliError> {
    require_file(p, "pool index")?;
    let bytes = std::fs::read(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
    let idx = PoolIndex::from_json(&bytes)?;
    if idx.kind != kind {
        return Err(CliError::Config(format!("{} is a {:?} pool index", p.display(), idx.kind)));
    }
    let src = rc.path(&idx.source_manifest);
    Ok((idx, src))
}

fn vehicle_pool(rc: &RunConfig, cfg: &ComposeConfig) -> Result<(VehicleCropPool, PathBuf), CliError> {
    let (index, src) = match &cfg.vehicle_pool {
        Some(p) => {
            let (idx, src) = read_pool_index(rc, p, PoolKind::Vehicles)?;
            (Some(idx), src)
        }
        None => (
            None,
            cfg.real_manifest.clone().ok_or_else(|| CliError::Config("real vehicles need real_manifest or vehicle_pool".into()))?,
        ),
    };
    let manifest = load_manifest(&src)?;
    let mut pool = compose::harvest_vehicles(&manifest, &manifest_root(&src))?;
    if let Some(idx) = index {
        let keep: std::collections::HashSet<(String, usize)> = idx
            .entries
            .into_iter()
            .map(|r| (r.image_id, r.annotation_index.unwrap_or(0)))
            .collect();
        pool.entries.retain(|c| keep.contains(&(c.image_id.clone(), c.annotation_index)));
    }
    Ok((pool, src))
}

fn background_pool(rc: &RunConfig, cfg: &ComposeConfig) -> Result<(BackgroundPool, PathBuf), CliError> {
    let (index, src) = match &cfg.background_pool {
        Some(p) => {
            let (idx, src) = read_pool_index(rc, p, PoolKind::Backgrounds)?;
            (Some(idx), src)
        }
        None => (
            None,
            cfg.backgrounds_manifest
                .clone()
                .or_else(|| cfg.real_manifest.clone())
                .ok_or_else(|| CliError::Config("real backgrounds need backgrounds_manifest, real_manifest or background_pool".into()))?,
        ),
    };
    let mut manifest = load_manifest(&src)?;
    if let Some(idx) = index {
        let keep: std::collections::HashSet<String> = idx.entries.into_iter().map(|r| r.image_id).collect();
        manifest.images.retain(|i| keep.contains(&i.id));
    }
    Ok((compose::harvest_backgrounds(&manifest, &manifest_root(&src))?, src))
}

/// Builds each requested vehicle/background combination into
/// `<out>/<vehicles>_vehicles/<background>_background/`.
pub fn compose(rc: &RunConfig) -> Result<Value, CliError> {
    let mut cfg: ComposeConfig = rc.parse(&["seed"])?;
    cfg.real_manifest = cfg.real_manifest.map(|p| rc.path(p));
    cfg.backgrounds_manifest = cfg.backgrounds_manifest.map(|p| rc.path(p));
    cfg.vehicle_pool = cfg.vehicle_pool.map(|p| rc.path(p));
    cfg.background_pool = cfg.background_pool.map(|p| rc.path(p));
    let combos = cfg.combinations.resolve()?;
    let mut gen_value = match &cfg.generator {
        Value::Null => json!({}),
        v @ Value::Object(_) => v.clone(),
        _ => return Err(CliError::Config("generator must be an object".into())),
    };
    if gen_value.get("seed").is_some() {
        return Err(CliError::Config("set the seed at top level, not inside generator".into()));
    }
    gen_value["seed"] = json!(rc.seed());
    let gen_cfg = generator_config(rc, gen_value)?;
    let need_vehicles = combos.iter().any(|c| c.vehicles == Source::Real);
    let need_backgrounds = combos.iter().any(|c| c.background == Source::Real);
    if need_vehicles && cfg.real_manifest.is_none() && cfg.vehicle_pool.is_none() {
        return Err(compose::ComposeError::MissingPool("vehicle").into());
    }
    if need_backgrounds && cfg.real_manifest.is_none() && cfg.backgrounds_manifest.is_none() && cfg.background_pool.is_none() {
        return Err(compose::ComposeError::MissingPool("background").into());
    }
    let labels: Vec<String> = combos.iter().map(Combination::label).collect();
    if rc.dry_run {
        return Ok(plan(
            "compose",
            rc,
            json!({
                "combinations": labels,
                "images_per_combination": gen_cfg.image_count,
                "generator": gen_cfg,
            }),
        ));
    }
    let out = rc.out_dir()?;
    let mut pools = Pools::default();
    let mut summary = serde_json::Map::new();
    if need_vehicles {
        let (pool, src) = vehicle_pool(rc, &cfg)?;
        write_json_file(&out.join(compose::VEHICLE_INDEX_FILE), &pool.index(&src))?;
        summary.insert("vehicle_pool".into(), json!(pool.entries.len()));
        pools.vehicles = Some(pool);
    }
    if need_backgrounds {
        let (pool, src) = background_pool(rc, &cfg)?;
        write_json_file(&out.join(compose::BACKGROUND_INDEX_FILE), &pool.index(&src))?;
        summary.insert("background_pool".into(), json!(pool.entries.len()));
        pools.backgrounds = Some(pool);
    }
    let generator = Generator::from_config(gen_cfg)?;
    let mut datasets = serde_json::Map::new();
    for (c, label) in combos.iter().zip(&labels) {
        let dir = out.join(label);
        let m = compose::compose_dataset(c.vehicles, c.background, &generator, &pools, &dir)?;
        datasets.insert(label.clone(), dataset_summary(&m, &dir));
    }
    summary.insert("datasets".into(), Value::Object(datasets));
    Ok(Value::Object(summary))
}

// ------------------------------------------------------------------- eval

fn default_iou() -> f64 {
    eval::DEFAULT_IOU_THRESHOLD
}

fn default_floor() -> f64 {
    eval::DEFAULT_CONFIDENCE_FLOOR
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    pub detections: PathBuf,
    pub manifest: PathBuf,
    #[serde(default = "default_iou")]
    pub iou_threshold: f64,
    #[serde(default = "default_floor")]
    pub confidence_floor: f64,
}

/// Scores a detections file against a manifest's ground truth.
pub fn evaluate(rc: &RunConfig) -> Result<Value, CliError> {
    let mut cfg: EvalConfig = rc.parse(&["seed"])?;
    cfg.detections = rc.path(&cfg.detections);
    cfg.manifest = rc.path(&cfg.manifest);
    if !(cfg.iou_threshold > 0.0 && cfg.iou_threshold <= 1.0) {
        return Err(CliError::Config(format!("iou_threshold {} outside (0, 1]", cfg.iou_threshold)));
    }
    if !cfg.confidence_floor.is_finite() {
        return Err(CliError::Config(format!("confidence_floor {}", cfg.confidence_floor)));
    }
    require_file(&cfg.detections, "detections")?;
    let manifest = load_manifest(&cfg.manifest)?;
    let bytes = std::fs::read(&cfg.detections).map_err(|e| CliError::Io(format!("{}: {e}", cfg.detections.display())))?;
    let dets = eval::detections_from_json(&bytes)?;
    let gts = eval::ground_truth(&manifest);
    if rc.dry_run {
        return Ok(plan(
            "eval",
            rc,
            json!({ "config": cfg, "detections": dets.len(), "ground_truths": gts.len() }),
        ));
    }
    let result = eval::average_precision(&dets, &gts, cfg.iou_threshold, cfg.confidence_floor)?;
    if let Some(out) = &rc.out {
        io::write_atomic(&out.join(RESULTS_FILE), &result.to_json())?;
    }
    Ok(serde_json::to_value(&result).expect("result serializes"))
}

//! Subcommand implementations behind the `aerosynth` binary.
//!
//! Every subcommand takes one JSON config (possibly empty) with CLI flags
//! merged in as key overrides, an output directory, and a dry-run switch
//! that reports the resolved plan without touching the disk.

pub mod commands;
pub mod sweep;

use std::path::{Path, PathBuf};

use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use aerosynth::blueprint::BlueprintError;
use aerosynth::compose::ComposeError;
use aerosynth::eval::EvalError;
use aerosynth::ingest::IngestError;
use aerosynth::io::IoError;
use aerosynth::manifest::{DatasetManifest, ManifestError, MANIFEST_FILE};
use aerosynth::scene::SceneError;
use aerosynth::tiler::TilerError;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Failure classes with distinct exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Data(_) => EXIT_DATA,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Io { .. } => CliError::Io(e.to_string()),
            IoError::Image { .. } | IoError::Json { .. } => CliError::Data(e.to_string()),
        }
    }
}

impl From<BlueprintError> for CliError {
    fn from(e: BlueprintError) -> Self {
        match e {
            BlueprintError::Io(io) => io.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<SceneError> for CliError {
    fn from(e: SceneError) -> Self {
        match e {
            SceneError::Config(m) => CliError::Config(m),
            SceneError::Io(io) => io.into(),
            SceneError::Blueprint(b) => b.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<ManifestError> for CliError {
    fn from(e: ManifestError) -> Self {
        match e {
            ManifestError::Io(io) => io.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Io(io) => io.into(),
            IngestError::ClassMap(_) | IngestError::Exclusions(_) => CliError::Config(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<TilerError> for CliError {
    fn from(e: TilerError) -> Self {
        match e {
            TilerError::TooSmall { .. } => CliError::Data(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<ComposeError> for CliError {
    fn from(e: ComposeError) -> Self {
        match e {
            ComposeError::Scene(s) => s.into(),
            ComposeError::Manifest(m) => m.into(),
            ComposeError::Io(io) => io.into(),
            ComposeError::MissingPool(_) | ComposeError::PoolIndex(_) => CliError::Config(e.to_string()),
            ComposeError::EmptyPool(_) => CliError::Data(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::Data(e.to_string())
    }
}

/// Resolved invocation shared by all subcommands.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Config object with overrides applied; always carries `seed`.
    pub config: Value,
    /// Directory relative paths in the config resolve against.
    pub base_dir: PathBuf,
    pub out: Option<PathBuf>,
    pub dry_run: bool,
}

impl RunConfig {
    /// Reads `config_path` (or starts from `{}`), applies `overrides`
    /// (dotted keys allowed) and fills in a fresh seed when none is set.
    pub fn resolve(
        config_path: Option<&Path>,
        overrides: &[(&str, Value)],
        out: Option<PathBuf>,
        dry_run: bool,
    ) -> Result<Self, CliError> {
        let (mut config, base_dir) = match config_path {
            Some(p) => {
                let bytes = std::fs::read(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                let v: Value = serde_json::from_slice(&bytes)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                let dir = p.parent().map(Path::to_path_buf).unwrap_or_default();
                (v, dir)
            }
            None => (Value::Object(Map::new()), PathBuf::new()),
        };
        if !config.is_object() {
            return Err(CliError::Config("config must be a JSON object".into()));
        }
        for (key, value) in overrides {
            set_path(&mut config, key, value.clone());
        }
        match config.get("seed") {
            None | Some(Value::Null) => {
                let seed: u64 = rand::random();
                log::info!("no seed given, using {seed}");
                set_path(&mut config, "seed", Value::from(seed));
            }
            Some(v) if v.as_u64().is_none() => {
                return Err(CliError::Config(format!("seed {v} is not a 64-bit unsigned integer")));
            }
            Some(_) => {}
        }
        Ok(Self { config, base_dir, out, dry_run })
    }

    pub fn seed(&self) -> u64 {
        self.config["seed"].as_u64().expect("seed resolved")
    }

    /// Resolves a config path against the config file's directory.
    pub fn path(&self, p: impl AsRef<Path>) -> PathBuf {
        let p = p.as_ref();
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn out_dir(&self) -> Result<&Path, CliError> {
        self.out.as_deref().ok_or_else(|| CliError::Config("--out is required".into()))
    }

    /// Deserializes the whole config (minus listed keys) into `T`.
    pub fn parse<T: serde::de::DeserializeOwned>(&self, drop: &[&str]) -> Result<T, CliError> {
        let mut v = self.config.clone();
        if let Some(m) = v.as_object_mut() {
            for k in drop {
                m.remove(*k);
            }
        }
        serde_json::from_value(v).map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Sets `a.b.c` inside a JSON object, creating intermediate objects.
pub fn set_path(root: &mut Value, dotted: &str, value: Value) {
    let mut cur = root;
    let mut parts = dotted.split('.').peekable();
    while let Some(part) = parts.next() {
        if !cur.is_object() {
            *cur = Value::Object(Map::new());
        }
        let map = cur.as_object_mut().expect("object");
        if parts.peek().is_none() {
            map.insert(part.to_string(), value);
            return;
        }
        cur = map.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
}

/// SHA-256 over the manifest and every file it references, in manifest order.
pub fn dataset_digest(dir: &Path) -> Result<String, CliError> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let bytes = std::fs::read(&manifest_path).map_err(|e| CliError::Io(format!("{}: {e}", manifest_path.display())))?;
    let manifest = DatasetManifest::from_json(&bytes)?;
    let mut h = Sha256::new();
    h.update(&bytes);
    for img in &manifest.images {
        for f in std::iter::once(&img.file).chain(img.seg_mask_file.as_ref()) {
            let p = dir.join(f);
            let data = std::fs::read(&p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            h.update((f.len() as u64).to_le_bytes());
            h.update(f.as_bytes());
            h.update((data.len() as u64).to_le_bytes());
            h.update(&data);
        }
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

/// Pretty JSON with a trailing newline, written atomically.
pub fn write_json_file(path: &Path, value: &impl serde::Serialize) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Data(e.to_string()))?;
    bytes.push(b'\n');
    aerosynth::io::write_atomic(path, &bytes)?;
    Ok(())
}

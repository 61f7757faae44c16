//! Artificial aerial vehicle imagery and dataset engineering.
//!
//! The crate covers the whole data side of a top-down vehicle detector:
//!
//! - [`blueprint`]: color-masked 2D drawings turned into surface-class rasters.
//! - [`instance`]: colorized, optionally cut and deformed vehicle instances.
//! - [`scene`]: noised backgrounds, non-overlapping placement, annotations.
//! - [`ingest`]: semantic label rasters converted to detection annotations.
//! - [`tiler`]: overlapping patches, GSD resampling, splits and subsets.
//! - [`compose`]: real/artificial vehicle and background mixtures.
//! - [`eval`]: AP at IoU 0.5 with a confidence floor.
//!
//! Every random draw goes through [`rng::stream`], so any image of a dataset
//! can be regenerated from `(seed, index)` alone.

pub mod blueprint;
pub mod compose;
pub mod eval;
pub mod geometry;
pub mod ingest;
pub mod instance;
pub mod io;
pub mod manifest;
pub mod raster;
pub mod rng;
pub mod scene;
pub mod standin;
pub mod tiler;

pub use geometry::{Aabb, Point2, RotatedRect};
pub use manifest::DatasetManifest;
pub use scene::{GeneratorConfig, Generator};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

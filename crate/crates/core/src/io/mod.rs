//! File formats and run configuration.

pub mod config;
mod fit;
pub mod manifest;
pub mod report;
pub mod svg;
mod tables;

pub use config::{parse_config, ModelKind, RunConfig, RunPlan};
pub use fit::{read_fit_document, write_fit_document, AdjustedRho, FitBlock, FitDocument};
pub use manifest::{read_manifest, RunManifest, MANIFEST_FILE};
pub use report::write_report;
pub use tables::*;

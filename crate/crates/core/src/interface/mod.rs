//! File formats, projection and the pipeline commands behind the CLI.

pub mod cli;
pub mod commands;
pub mod formats;
pub mod manifest;
pub mod projection;

pub use manifest::{OutputLock, RunManifest};
pub use projection::{pca_2d, scatter_svg};

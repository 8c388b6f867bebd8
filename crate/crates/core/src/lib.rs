//! Face morph generation and morphing-attack evaluation.

mod error;
pub mod geometry;
pub mod raster;
pub mod landmark;
pub mod latent;
pub mod vuln;
pub mod mad;
pub mod protocol;
pub mod report;

pub use error::{Error, EXIT_DATA, EXIT_NUMERICAL, EXIT_USAGE};

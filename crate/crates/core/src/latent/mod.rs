//! Latent-space morphing: embed each face into a generator's extended latent
//! space by minimising a perceptual loss, combine the two codes and
//! re-synthesise.
//!
//! The generator and the feature network are traits. Pretrained networks live
//! outside this crate; the toy implementations here are small, differentiable
//! and exact enough to test the optimisation end to end.

mod embed;
mod features;
mod generator;

pub use embed::{
    embed, generate_latent_morph, latent_gradient, perceptual_loss, Adam, EmbedConfig, Embedding,
    LatentMorph,
};
pub use features::{BlurPyramid, FeatureExtractor, IdentityFeatures};
pub use generator::{Activation, DenseGenerator, ExternalGenerator, Generator, ReshapeGenerator};

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::RasterError;

/// Extended latent layout of the reference synthesis network: 18 style
/// inputs of 512 values each.
pub const REFERENCE_LAYERS: usize = 18;
pub const REFERENCE_DIMS: usize = 512;

#[derive(Debug, Error)]
pub enum LatentError {
    #[error("latent shape {got:?} does not match expected {want:?}")]
    Shape {
        got: (usize, usize),
        want: (usize, usize),
    },
    #[error("{layers}x{dims} latent needs {} values, got {len}", layers * dims)]
    Length { layers: usize, dims: usize, len: usize },
    #[error("image shape {got:?} does not match generator output {want:?}")]
    ImageShape {
        got: (usize, usize, usize),
        want: (usize, usize, usize),
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("non-finite {what} at step {step}")]
    NonFinite { what: &'static str, step: usize },
    #[error("generator {0:?} does not provide gradients")]
    GradientUnsupported(String),
    #[error("external generator failed: {0}")]
    External(String),
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Raster(#[from] RasterError),
}

type Result<T, E = LatentError> = std::result::Result<T, E>;

/// `layers x dims` generator input, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentCode {
    layers: usize,
    dims: usize,
    values: Vec<f64>,
}

impl LatentCode {
    pub fn new(layers: usize, dims: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != layers * dims {
            return Err(LatentError::Length {
                layers,
                dims,
                len: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LatentError::NonFinite { what: "latent value", step: 0 });
        }
        Ok(Self { layers, dims, values })
    }

    pub fn zeros(layers: usize, dims: usize) -> Self {
        Self {
            layers,
            dims,
            values: vec![0.0; layers * dims],
        }
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.layers, self.dims)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn layer(&self, l: usize) -> &[f64] {
        &self.values[l * self.dims..(l + 1) * self.dims]
    }
}

/// How two embedded codes are combined into the morph code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombineMode {
    /// `(w1 a + w2 b) / (w1 + w2)`, evaluated as `t1 a + t2 b` with
    /// `t_i = w_i / (w1 + w2)`.
    #[default]
    Normalized,
    /// `(w1 a + w2 b) / 2` exactly as printed; halves the code magnitude at
    /// `w1 = w2 = 0.5`.
    Literal,
}

/// Default morph weights.
pub const DEFAULT_WEIGHTS: (f64, f64) = (0.5, 0.5);

/// Weighted combination of two latent codes.
pub fn combine_latents(
    a: &LatentCode,
    b: &LatentCode,
    w1: f64,
    w2: f64,
    mode: CombineMode,
) -> Result<LatentCode> {
    if a.shape() != b.shape() {
        return Err(LatentError::Shape {
            got: b.shape(),
            want: a.shape(),
        });
    }
    if !(w1.is_finite() && w2.is_finite()) {
        return Err(LatentError::Config("weights must be finite".into()));
    }
    // Normalising the weights first keeps equal weights at exactly 0.5, so
    // equal-weight combination is exactly commutative and a == b maps to a.
    let (t1, t2) = match mode {
        CombineMode::Normalized => {
            let sum = w1 + w2;
            if !(sum > 0.0) {
                return Err(LatentError::Config(format!("w1 + w2 must be positive, got {sum}")));
            }
            (w1 / sum, w2 / sum)
        }
        CombineMode::Literal => (w1 / 2.0, w2 / 2.0),
    };
    let values = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(&x, &y)| t1 * x + t2 * y)
        .collect();
    LatentCode::new(a.layers, a.dims, values)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatentSidecar {
    pub layers: usize,
    pub dims: usize,
    pub generator_id: String,
}

/// Sidecar location for a latent file: same stem, `.json` extension.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Writes little-endian `f32` row-major values plus the JSON sidecar.
pub fn write_latent(path: impl AsRef<Path>, code: &LatentCode, generator_id: &str) -> Result<()> {
    let path = path.as_ref();
    let io = |p: &Path| {
        let p = p.display().to_string();
        move |source| LatentError::Io { path: p, source }
    };
    let bytes: Vec<u8> = code.values.iter().flat_map(|&v| (v as f32).to_le_bytes()).collect();
    std::fs::write(path, bytes).map_err(io(path))?;
    let sidecar = LatentSidecar {
        layers: code.layers,
        dims: code.dims,
        generator_id: generator_id.to_string(),
    };
    let side = sidecar_path(path);
    let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    std::fs::write(&side, json + "\n").map_err(io(&side))
}

pub fn read_latent(path: impl AsRef<Path>) -> Result<(LatentCode, LatentSidecar)> {
    let path = path.as_ref();
    let side = sidecar_path(path);
    let text = std::fs::read_to_string(&side).map_err(|source| LatentError::Io {
        path: side.display().to_string(),
        source,
    })?;
    let sidecar: LatentSidecar = serde_json::from_str(&text).map_err(|e| LatentError::Format {
        path: side.display().to_string(),
        message: e.to_string(),
    })?;
    let bytes = std::fs::read(path).map_err(|source| LatentError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let want = sidecar.layers * sidecar.dims * 4;
    if bytes.len() != want {
        return Err(LatentError::Format {
            path: path.display().to_string(),
            message: format!("expected {want} bytes for {}x{} f32, found {}", sidecar.layers, sidecar.dims, bytes.len()),
        });
    }
    let values = bytes
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
        .collect();
    let code = LatentCode::new(sidecar.layers, sidecar.dims, values).map_err(|e| LatentError::Format {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    Ok((code, sidecar))
}

//! Morphing attack detection: texture descriptors, a linear SVM back-end and
//! ISO/IEC 30107-3 style error rates. Detector scores follow the convention
//! higher = more morph-like.

mod det;
mod hog;
mod lbp;
mod svm;

pub use det::{bpcer_at_apcer, compute_det, d_eer, det_curve, error_rates, DetPoint, DetReport};
pub use hog::{cell_histograms, hog_features, HogParams};
pub use lbp::{lbp_channel_features, lbp_code, lbp_features, LBP_BINS, UNIFORM_BIN};
pub use svm::{train_linear_svm, LinearModel, SvmParams};

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::{convert_color, resize_bilinear, to_grayscale, ColorSpace, Raster, RasterError};

#[derive(Debug, Error)]
pub enum MadError {
    #[error("{0}")]
    ImageTooSmall(String),
    #[error("expected {want} input, got {got} channels")]
    Channels { want: &'static str, got: usize },
    #[error("{0}")]
    Config(String),
    #[error("training data must contain both bona fide and morph examples")]
    SingleClass,
    #[error("feature vector {index} has length {got}, expected {want}")]
    FeatureLength { index: usize, got: usize, want: usize },
    #[error("attack and bona fide score lists must both be non-empty")]
    EmptyScores,
    #[error("feature set was produced by {got}, model expects {want}")]
    PipelineMismatch { got: String, want: String },
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

pub type Result<T> = std::result::Result<T, MadError>;

/// Multi-channel LBP over H, S, V, Y, Cb, Cr, in that order.
pub fn color_texture_features(img: &Raster, grid: (usize, usize)) -> Result<Vec<f64>> {
    if img.channels() != 3 {
        return Err(MadError::Channels { want: "RGB", got: img.channels() });
    }
    let mut out = Vec::with_capacity(6 * grid.0 * grid.1 * LBP_BINS);
    for space in [ColorSpace::Hsv, ColorSpace::YCbCr] {
        let converted = convert_color(img, space)?;
        for c in 0..3 {
            out.extend(lbp_channel_features(&converted, c, grid)?);
        }
    }
    Ok(out)
}

pub const DEFAULT_SIZE: usize = 256;
pub const DEFAULT_GRID: (usize, usize) = (4, 4);

/// A feature extractor together with its preprocessing. Inputs are resized
/// (bilinear) to `size x size`; LBP and HoG then work on luma.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Pipeline {
    Lbp { size: usize, grid: (usize, usize) },
    Hog { size: usize, params: HogParams },
    ColorTexture { size: usize, grid: (usize, usize) },
}

impl Pipeline {
    pub fn lbp() -> Self {
        Pipeline::Lbp { size: DEFAULT_SIZE, grid: DEFAULT_GRID }
    }

    pub fn hog() -> Self {
        Pipeline::Hog { size: DEFAULT_SIZE, params: HogParams::default() }
    }

    pub fn color_texture() -> Self {
        Pipeline::ColorTexture { size: DEFAULT_SIZE, grid: DEFAULT_GRID }
    }

    /// `lbp`, `hog` or `color-texture` with default parameters.
    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "lbp" => Some(Self::lbp()),
            "hog" => Some(Self::hog()),
            "color-texture" => Some(Self::color_texture()),
            _ => None,
        }
    }

    pub fn with_size(self, size: usize) -> Self {
        match self {
            Pipeline::Lbp { grid, .. } => Pipeline::Lbp { size, grid },
            Pipeline::Hog { params, .. } => Pipeline::Hog { size, params },
            Pipeline::ColorTexture { grid, .. } => Pipeline::ColorTexture { size, grid },
        }
    }

    pub fn id(&self) -> String {
        match self {
            Pipeline::Lbp { size, grid } => format!("lbp-u8r1-{}x{}-s{size}", grid.0, grid.1),
            Pipeline::Hog { size, params: p } => {
                format!("hog-c{}-b{}-n{}-clip{}-s{size}", p.cell, p.block, p.bins, p.clip)
            }
            Pipeline::ColorTexture { size, grid } => format!("ctex-hsv-ycbcr-lbp-{}x{}-s{size}", grid.0, grid.1),
        }
    }

    pub fn feature_len(&self) -> usize {
        match *self {
            Pipeline::Lbp { grid, .. } => grid.0 * grid.1 * LBP_BINS,
            Pipeline::Hog { size, params } => params.descriptor_len(size, size),
            Pipeline::ColorTexture { grid, .. } => 6 * grid.0 * grid.1 * LBP_BINS,
        }
    }

    fn size(&self) -> usize {
        match *self {
            Pipeline::Lbp { size, .. } | Pipeline::Hog { size, .. } | Pipeline::ColorTexture { size, .. } => size,
        }
    }

    pub fn extract(&self, img: &Raster) -> Result<Vec<f64>> {
        let size = self.size();
        let resized;
        let img = if img.width() == size && img.height() == size {
            img
        } else {
            resized = resize_bilinear(img, size, size);
            &resized
        };
        match *self {
            Pipeline::Lbp { grid, .. } => lbp_features(&to_grayscale(img), grid),
            Pipeline::Hog { params, .. } => hog_features(&to_grayscale(img), &params),
            Pipeline::ColorTexture { grid, .. } => color_texture_features(img, grid),
        }
    }

    /// Extracts every image in parallel; output order follows input order.
    pub fn extract_all(&self, images: &[Raster]) -> Result<Vec<Vec<f64>>> {
        images.par_iter().map(|img| self.extract(img)).collect()
    }
}

mod b64 {
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn encode(values: &[f64]) -> String {
        let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
        STANDARD.encode(bytes)
    }

    pub fn decode(text: &str) -> Result<Vec<f64>, String> {
        let bytes = STANDARD.decode(text).map_err(|e| e.to_string())?;
        if bytes.len() % 8 != 0 {
            return Err(format!("{} bytes is not a whole number of float64 values", bytes.len()));
        }
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect())
    }

    pub fn serialize<S: Serializer>(values: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&encode(values))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        decode(&String::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Attack,
    Bonafide,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSample {
    pub id: String,
    pub label: Option<Label>,
    #[serde(with = "b64")]
    pub values: Vec<f64>,
}

/// Feature vectors of one pipeline, stored as JSON with base64 float64 payloads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub pipeline_id: String,
    pub pipeline: Pipeline,
    pub dim: usize,
    pub samples: Vec<FeatureSample>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| MadError::Io { path: name.clone(), source })?;
    serde_json::from_str(&text).map_err(|e| MadError::Format { path: name, message: e.to_string() })
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serialisable");
    text.push('\n');
    std::fs::write(path, text).map_err(|source| MadError::Io { path: path.display().to_string(), source })
}

impl FeatureSet {
    pub fn new(pipeline: Pipeline) -> Self {
        Self {
            pipeline_id: pipeline.id(),
            pipeline,
            dim: pipeline.feature_len(),
            samples: Vec::new(),
        }
    }

    pub fn push(&mut self, id: &str, label: Option<Label>, values: Vec<f64>) -> Result<()> {
        if values.len() != self.dim {
            return Err(MadError::FeatureLength { index: self.samples.len(), got: values.len(), want: self.dim });
        }
        self.samples.push(FeatureSample { id: id.to_string(), label, values });
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let set: FeatureSet = read_json(path)?;
        let name = path.display().to_string();
        if set.pipeline_id != set.pipeline.id() || set.dim != set.pipeline.feature_len() {
            return Err(MadError::Format { path: name, message: "pipeline header is inconsistent".into() });
        }
        if let Some((i, s)) = set.samples.iter().enumerate().find(|(_, s)| s.values.len() != set.dim) {
            return Err(MadError::Format {
                path: name,
                message: format!("sample {i} ({}) has {} values, expected {}", s.id, s.values.len(), set.dim),
            });
        }
        Ok(set)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(self, path)
    }

    /// Values and labels (`true` = attack) of the labelled samples.
    pub fn labelled(&self) -> (Vec<Vec<f64>>, Vec<bool>) {
        self.samples
            .iter()
            .filter_map(|s| s.label.map(|l| (s.values.clone(), l == Label::Attack)))
            .unzip()
    }
}

/// A trained detector as persisted on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub pipeline_id: String,
    pub pipeline: Pipeline,
    pub hyperparameters: SvmParams,
    pub seed: u64,
    pub bias: f64,
    #[serde(with = "b64")]
    pub weights: Vec<f64>,
}

impl DetectorModel {
    /// Trains on the labelled samples of `set`.
    pub fn train(set: &FeatureSet, params: SvmParams, seed: u64) -> Result<Self> {
        let (x, y) = set.labelled();
        if x.is_empty() {
            return Err(MadError::SingleClass);
        }
        let m = train_linear_svm(&x, &y, params, seed)?;
        Ok(Self {
            pipeline_id: set.pipeline_id.clone(),
            pipeline: set.pipeline,
            hyperparameters: params,
            seed,
            bias: m.bias,
            weights: m.weights,
        })
    }

    pub fn score(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.weights.len() {
            return Err(MadError::FeatureLength { index: 0, got: features.len(), want: self.weights.len() });
        }
        Ok(features.iter().zip(&self.weights).map(|(x, w)| x * w).sum::<f64>() + self.bias)
    }

    pub fn score_set(&self, set: &FeatureSet) -> Result<Vec<f64>> {
        if set.pipeline_id != self.pipeline_id {
            return Err(MadError::PipelineMismatch { got: set.pipeline_id.clone(), want: self.pipeline_id.clone() });
        }
        set.samples.iter().map(|s| self.score(&s.values)).collect()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let m: DetectorModel = read_json(path)?;
        if m.weights.len() != m.pipeline.feature_len() || m.pipeline_id != m.pipeline.id() {
            return Err(MadError::Format {
                path: path.display().to_string(),
                message: "weights do not match the pipeline".into(),
            });
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(self, path)
    }
}

use std::path::PathBuf;
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{write_latent, LatentCode, LatentError, Result};
use crate::raster::{load_png, Raster};

/// A synthesis network `latent -> image` with a vector-Jacobian product.
///
/// Implementations must be deterministic and safe to share read-only
/// across threads.
pub trait Generator: Send + Sync {
    fn id(&self) -> &str;
    /// `(layers, dims)`.
    fn latent_shape(&self) -> (usize, usize);
    /// `(width, height, channels)`.
    fn output_shape(&self) -> (usize, usize, usize);
    fn synthesize(&self, latent: &LatentCode) -> Result<Raster>;
    /// `J^T cotangent`, where `J` is the Jacobian of [`Generator::synthesize`]
    /// at `latent`.
    fn synthesize_grad(&self, latent: &LatentCode, cotangent: &Raster) -> Result<LatentCode>;

    fn check_latent(&self, latent: &LatentCode) -> Result<()> {
        if latent.shape() != self.latent_shape() {
            return Err(LatentError::Shape {
                got: latent.shape(),
                want: self.latent_shape(),
            });
        }
        Ok(())
    }

    fn check_image(&self, img: &Raster) -> Result<()> {
        if img.shape() != self.output_shape() {
            return Err(LatentError::ImageShape {
                got: img.shape(),
                want: self.output_shape(),
            });
        }
        Ok(())
    }
}

/// The latent values laid out directly as image samples.
#[derive(Debug, Clone)]
pub struct ReshapeGenerator {
    layers: usize,
    dims: usize,
    width: usize,
    height: usize,
    channels: usize,
}

impl ReshapeGenerator {
    /// One latent layer per image row.
    pub fn for_image(width: usize, height: usize, channels: usize) -> Self {
        Self {
            layers: height,
            dims: width * channels,
            width,
            height,
            channels,
        }
    }

    pub fn with_layout(layers: usize, dims: usize, width: usize, height: usize, channels: usize) -> Result<Self> {
        if layers * dims != width * height * channels {
            return Err(LatentError::Config(format!(
                "{layers}x{dims} latent cannot be reshaped to {width}x{height}x{channels}"
            )));
        }
        Ok(Self {
            layers,
            dims,
            width,
            height,
            channels,
        })
    }
}

impl Generator for ReshapeGenerator {
    fn id(&self) -> &str {
        "toy-reshape"
    }

    fn latent_shape(&self) -> (usize, usize) {
        (self.layers, self.dims)
    }

    fn output_shape(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    fn synthesize(&self, latent: &LatentCode) -> Result<Raster> {
        self.check_latent(latent)?;
        Ok(Raster::from_vec(self.width, self.height, self.channels, latent.values().to_vec())?)
    }

    fn synthesize_grad(&self, latent: &LatentCode, cotangent: &Raster) -> Result<LatentCode> {
        self.check_latent(latent)?;
        self.check_image(cotangent)?;
        LatentCode::new(self.layers, self.dims, cotangent.data().to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Sigmoid,
}

/// `image = act(W z + b)` with seeded Gaussian weights. A small nonlinear
/// stand-in for a synthesis network.
#[derive(Debug, Clone)]
pub struct DenseGenerator {
    layers: usize,
    dims: usize,
    width: usize,
    height: usize,
    channels: usize,
    /// `outputs x inputs`, row-major.
    weights: Vec<f64>,
    bias: Vec<f64>,
    activation: Activation,
}

impl DenseGenerator {
    pub fn seeded(
        (layers, dims): (usize, usize),
        (width, height, channels): (usize, usize, usize),
        activation: Activation,
        seed: u64,
    ) -> Self {
        let inputs = layers * dims;
        let outputs = width * height * channels;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = Normal::new(0.0, 1.0 / (inputs as f64).sqrt()).expect("valid sigma");
        let b = Normal::new(0.0, 0.1).expect("valid sigma");
        let weights = (0..outputs * inputs).map(|_| w.sample(&mut rng)).collect();
        let bias = (0..outputs).map(|_| b.sample(&mut rng)).collect();
        Self {
            layers,
            dims,
            width,
            height,
            channels,
            weights,
            bias,
            activation,
        }
    }

    fn pre_activation(&self, z: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(z.len())
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(z).map(|(w, x)| w * x).sum::<f64>() + b)
            .collect()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl Generator for DenseGenerator {
    fn id(&self) -> &str {
        match self.activation {
            Activation::Identity => "toy-dense-linear",
            Activation::Sigmoid => "toy-dense-sigmoid",
        }
    }

    fn latent_shape(&self) -> (usize, usize) {
        (self.layers, self.dims)
    }

    fn output_shape(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    fn synthesize(&self, latent: &LatentCode) -> Result<Raster> {
        self.check_latent(latent)?;
        let mut out = self.pre_activation(latent.values());
        if self.activation == Activation::Sigmoid {
            out.iter_mut().for_each(|v| *v = sigmoid(*v));
        }
        Ok(Raster::from_vec(self.width, self.height, self.channels, out)?)
    }

    fn synthesize_grad(&self, latent: &LatentCode, cotangent: &Raster) -> Result<LatentCode> {
        self.check_latent(latent)?;
        self.check_image(cotangent)?;
        let z = latent.values();
        let mut upstream = cotangent.data().to_vec();
        if self.activation == Activation::Sigmoid {
            for (u, a) in upstream.iter_mut().zip(self.pre_activation(z)) {
                let s = sigmoid(a);
                *u *= s * (1.0 - s);
            }
        }
        let mut grad = vec![0.0; z.len()];
        for (row, u) in self.weights.chunks_exact(z.len()).zip(&upstream) {
            for (g, w) in grad.iter_mut().zip(row) {
                *g += w * u;
            }
        }
        LatentCode::new(self.layers, self.dims, grad)
    }
}

/// Synthesis through an external program (file exchange).
///
/// Each call writes the latent (and sidecar) to a scratch directory, runs
/// `program args...` with `{latent}` and `{output}` placeholders replaced by
/// the latent path and the expected PNG path, and reads the PNG back.
/// Gradients are not available in this mode.
#[derive(Debug, Clone)]
pub struct ExternalGenerator {
    pub id: String,
    pub program: String,
    pub args: Vec<String>,
    pub latent_shape: (usize, usize),
    pub output_shape: (usize, usize, usize),
    pub scratch: PathBuf,
}

static SCRATCH_COUNTER: AtomicU64 = AtomicU64::new(0);

impl Generator for ExternalGenerator {
    fn id(&self) -> &str {
        &self.id
    }

    fn latent_shape(&self) -> (usize, usize) {
        self.latent_shape
    }

    fn output_shape(&self) -> (usize, usize, usize) {
        self.output_shape
    }

    fn synthesize(&self, latent: &LatentCode) -> Result<Raster> {
        self.check_latent(latent)?;
        let n = SCRATCH_COUNTER.fetch_add(1, Ordering::Relaxed);
        let stem = format!("synth-{}-{n}", std::process::id());
        let latent_path = self.scratch.join(format!("{stem}.bin"));
        let output_path = self.scratch.join(format!("{stem}.png"));
        write_latent(&latent_path, latent, &self.id)?;
        let fill = |a: &String| {
            a.replace("{latent}", &latent_path.display().to_string())
                .replace("{output}", &output_path.display().to_string())
        };
        let status = Command::new(&self.program)
            .args(self.args.iter().map(fill))
            .status()
            .map_err(|e| LatentError::External(format!("{}: {e}", self.program)))?;
        let cleanup = || {
            let _ = std::fs::remove_file(&latent_path);
            let _ = std::fs::remove_file(super::sidecar_path(&latent_path));
            let _ = std::fs::remove_file(&output_path);
        };
        if !status.success() {
            cleanup();
            return Err(LatentError::External(format!("{} exited with {status}", self.program)));
        }
        let img = load_png(&output_path);
        cleanup();
        let img = img?;
        self.check_image(&img)?;
        Ok(img)
    }

    fn synthesize_grad(&self, _latent: &LatentCode, _cotangent: &Raster) -> Result<LatentCode> {
        Err(LatentError::GradientUnsupported(self.id.clone()))
    }
}

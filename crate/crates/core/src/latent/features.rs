use super::{LatentError, Result};
use crate::raster::Raster;

/// A fixed feature network: image -> per-layer feature maps, with a
/// vector-Jacobian product back to the image.
pub trait FeatureExtractor: Send + Sync {
    fn id(&self) -> &str;
    fn layer_count(&self) -> usize;
    fn features(&self, img: &Raster) -> Result<Vec<Vec<f64>>>;
    /// `sum_j J_j^T cotangents[j]`, shaped like `img`.
    fn features_grad(&self, img: &Raster, cotangents: &[Vec<f64>]) -> Result<Raster>;
}

/// A single layer holding the raw samples.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityFeatures;

impl FeatureExtractor for IdentityFeatures {
    fn id(&self) -> &str {
        "identity"
    }

    fn layer_count(&self) -> usize {
        1
    }

    fn features(&self, img: &Raster) -> Result<Vec<Vec<f64>>> {
        Ok(vec![img.data().to_vec()])
    }

    fn features_grad(&self, img: &Raster, cotangents: &[Vec<f64>]) -> Result<Raster> {
        check_layers(cotangents, 1)?;
        let (w, h, c) = img.shape();
        Ok(Raster::from_vec(w, h, c, cotangents[0].clone())?)
    }
}

/// Layer 0 is the image; layer `j` is a 2x2 mean-pool of layer `j - 1`
/// (odd trailing rows/columns dropped). Four levels mirror the four
/// perceptual layers of the reference loss.
#[derive(Debug, Clone, Copy)]
pub struct BlurPyramid {
    pub levels: usize,
}

impl Default for BlurPyramid {
    fn default() -> Self {
        Self { levels: 4 }
    }
}

struct Level {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

fn pool(prev: &Level, channels: usize) -> Level {
    let (w, h) = (prev.width / 2, prev.height / 2);
    let mut data = vec![0.0; w * h * channels];
    for y in 0..h {
        for x in 0..w {
            for c in 0..channels {
                let at = |xx: usize, yy: usize| prev.data[(yy * prev.width + xx) * channels + c];
                data[(y * w + x) * channels + c] =
                    0.25 * (at(2 * x, 2 * y) + at(2 * x + 1, 2 * y) + at(2 * x, 2 * y + 1) + at(2 * x + 1, 2 * y + 1));
            }
        }
    }
    Level { width: w, height: h, data }
}

impl BlurPyramid {
    fn check(&self, img: &Raster) -> Result<()> {
        let need = 1usize << self.levels.saturating_sub(1);
        if self.levels == 0 || img.width() < need || img.height() < need {
            return Err(LatentError::Config(format!(
                "{}-level pyramid needs images of at least {need}x{need}",
                self.levels
            )));
        }
        Ok(())
    }
}

impl FeatureExtractor for BlurPyramid {
    fn id(&self) -> &str {
        "blur-pyramid"
    }

    fn layer_count(&self) -> usize {
        self.levels
    }

    fn features(&self, img: &Raster) -> Result<Vec<Vec<f64>>> {
        self.check(img)?;
        let mut level = Level {
            width: img.width(),
            height: img.height(),
            data: img.data().to_vec(),
        };
        let mut out = Vec::with_capacity(self.levels);
        for _ in 1..self.levels {
            let next = pool(&level, img.channels());
            out.push(std::mem::replace(&mut level, next).data);
        }
        out.push(level.data);
        Ok(out)
    }

    fn features_grad(&self, img: &Raster, cotangents: &[Vec<f64>]) -> Result<Raster> {
        self.check(img)?;
        check_layers(cotangents, self.levels)?;
        let c = img.channels();
        let mut dims = vec![(img.width(), img.height())];
        for j in 1..self.levels {
            let (w, h) = dims[j - 1];
            dims.push((w / 2, h / 2));
        }
        // Back-propagate from the coarsest level, accumulating each level's own cotangent.
        let mut acc = cotangents[self.levels - 1].clone();
        for j in (0..self.levels - 1).rev() {
            let (w, _) = dims[j];
            let (pw, ph) = dims[j + 1];
            let mut up = cotangents[j].clone();
            for y in 0..ph {
                for x in 0..pw {
                    for ch in 0..c {
                        let g = 0.25 * acc[(y * pw + x) * c + ch];
                        for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                            up[((2 * y + dy) * w + 2 * x + dx) * c + ch] += g;
                        }
                    }
                }
            }
            acc = up;
        }
        Ok(Raster::from_vec(img.width(), img.height(), c, acc)?)
    }
}

fn check_layers(cotangents: &[Vec<f64>], want: usize) -> Result<()> {
    if cotangents.len() != want {
        return Err(LatentError::Config(format!(
            "expected {want} cotangent layers, got {}",
            cotangents.len()
        )));
    }
    Ok(())
}

//! Floating-point raster images and the pixel operations every morph builds on.
//!
//! Samples are stored row-major, interleaved by channel, as `f64` values that
//! nominally live in `[0, 1]`. Quantization to 8 bits happens only when an
//! image is written out.
//!
//! Pixel `(x, y)` is centred on the integer coordinate `(x, y)`, so the image
//! plane spans `[0, width - 1] x [0, height - 1]`.

mod codec;
mod color;
mod warp;

pub use codec::{load_png, save_png, save_ppm, decode_png, encode_png};
pub use color::{convert_color, to_grayscale, ColorSpace};
pub use warp::{warp_triangle, warp_triangle_with, AffineMap2D, FillRule, TriangleWarp, DEGENERATE_AREA};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("raster dimensions {width}x{height}x{channels} do not match {len} samples")]
    BadLength {
        width: usize,
        height: usize,
        channels: usize,
        len: usize,
    },
    #[error("unsupported channel count {0} (expected 1 or 3)")]
    Channels(usize),
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("shape mismatch: {0:?} vs {1:?}")]
    ShapeMismatch((usize, usize, usize), (usize, usize, usize)),
    #[error("operation requires an RGB raster")]
    NotRgb,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: PNG decode failed: {message}")]
    Codec { path: String, message: String },
    #[error("PNG encode failed: {0}")]
    Encode(String),
    #[error("affine map is singular (|det| = {0:e})")]
    Singular(f64),
}

pub type Result<T, E = RasterError> = std::result::Result<T, E>;

/// A `width x height` image with 1 (gray) or 3 (RGB) interleaved channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Raster {
    /// All-zero raster.
    pub fn new(width: usize, height: usize, channels: usize) -> Result<Self> {
        check_channels(channels)?;
        Ok(Self {
            width,
            height,
            channels,
            data: vec![0.0; width * height * channels],
        })
    }

    pub fn filled(width: usize, height: usize, value: &[f64]) -> Result<Self> {
        let channels = value.len();
        check_channels(channels)?;
        let data = value
            .iter()
            .copied()
            .cycle()
            .take(width * height * channels)
            .collect();
        Self::from_vec(width, height, channels, data)
    }

    /// Wraps existing samples. Fails on length mismatch or non-finite data.
    pub fn from_vec(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        check_channels(channels)?;
        if data.len() != width * height * channels {
            return Err(RasterError::BadLength {
                width,
                height,
                channels,
                len: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(RasterError::NonFinite(i));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        Self::from_vec(width, height, channels, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// `(width, height, channels)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    fn offset(&self, x: usize, y: usize) -> usize {
        (y * self.width + x) * self.channels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[self.offset(x, y) + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f64) {
        let o = self.offset(x, y);
        self.data[o + c] = v;
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let o = self.offset(x, y);
        &self.data[o..o + self.channels]
    }

    #[inline]
    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [f64] {
        let o = self.offset(x, y);
        let c = self.channels;
        &mut self.data[o..o + c]
    }

    /// Extracts channel `c` as a grayscale raster.
    pub fn channel(&self, c: usize) -> Raster {
        let data = self.data.iter().skip(c).step_by(self.channels).copied().collect();
        Raster {
            width: self.width,
            height: self.height,
            channels: 1,
            data,
        }
    }

    /// Bilinear sample with edge clamping. Writes `channels` values into `out`.
    pub fn sample_into(&self, x: f64, y: f64, out: &mut [f64]) {
        let max_x = self.width.saturating_sub(1) as f64;
        let max_y = self.height.saturating_sub(1) as f64;
        let x = x.clamp(0.0, max_x);
        let y = y.clamp(0.0, max_y);
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let (p00, p10) = (self.offset(x0, y0), self.offset(x1, y0));
        let (p01, p11) = (self.offset(x0, y1), self.offset(x1, y1));
        for (c, o) in out.iter_mut().enumerate().take(self.channels) {
            let top = self.data[p00 + c] * (1.0 - fx) + self.data[p10 + c] * fx;
            let bottom = self.data[p01 + c] * (1.0 - fx) + self.data[p11 + c] * fx;
            *o = top * (1.0 - fy) + bottom * fy;
        }
    }

    /// Samples are clamped to `[0, 1]` and rounded to the nearest byte.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.data.iter().map(|&v| quantize(v)).collect()
    }

    pub fn from_bytes(width: usize, height: usize, channels: usize, bytes: &[u8]) -> Result<Self> {
        Self::from_vec(
            width,
            height,
            channels,
            bytes.iter().map(|&b| f64::from(b) / 255.0).collect(),
        )
    }
}

fn check_channels(channels: usize) -> Result<()> {
    match channels {
        1 | 3 => Ok(()),
        other => Err(RasterError::Channels(other)),
    }
}

#[inline]
pub(crate) fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Bilinear sample at a real-valued position; out-of-range coordinates clamp
/// to the nearest edge pixel.
pub fn sample_bilinear(img: &Raster, x: f64, y: f64) -> Vec<f64> {
    let mut out = vec![0.0; img.channels()];
    img.sample_into(x, y, &mut out);
    out
}

/// Interpolation weights for [`blend`]-style convex combinations.
///
/// The first weight is `1 - alpha` and the second is `1 - (1 - alpha)`, both
/// as rounded in `f64`. Computing the second weight from the first (rather
/// than using `alpha` directly) makes `mix_weights(1 - alpha)` return exactly
/// the swapped pair, so swapping the operands together with `alpha <-> 1 - alpha`
/// gives bit-identical results.
#[inline]
pub fn mix_weights(alpha: f64) -> (f64, f64) {
    let first = 1.0 - alpha;
    (first, 1.0 - first)
}

/// Per-sample `(1 - alpha) * a + alpha * b`.
pub fn blend(a: &Raster, b: &Raster, alpha: f64) -> Result<Raster> {
    if a.shape() != b.shape() {
        return Err(RasterError::ShapeMismatch(a.shape(), b.shape()));
    }
    let (wa, wb) = mix_weights(alpha);
    let data = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(&x, &y)| wa * x + wb * y)
        .collect();
    Ok(Raster {
        data,
        ..a.clone_shape()
    })
}

impl Raster {
    fn clone_shape(&self) -> Raster {
        Raster {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: Vec::new(),
        }
    }
}

/// Bilinear resize to `width x height`, aligning corner pixel centres.
pub fn resize_bilinear(img: &Raster, width: usize, height: usize) -> Raster {
    if img.width() == width && img.height() == height {
        return img.clone();
    }
    let sx = if width > 1 {
        (img.width() as f64 - 1.0) / (width as f64 - 1.0)
    } else {
        0.0
    };
    let sy = if height > 1 {
        (img.height() as f64 - 1.0) / (height as f64 - 1.0)
    } else {
        0.0
    };
    let c = img.channels();
    let mut out = Raster {
        width,
        height,
        channels: c,
        data: vec![0.0; width * height * c],
    };
    for y in 0..height {
        for x in 0..width {
            let o = out.offset(x, y);
            img.sample_into(x as f64 * sx, y as f64 * sy, &mut out.data[o..o + c]);
        }
    }
    out
}

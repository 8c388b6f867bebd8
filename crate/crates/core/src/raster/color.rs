use super::{Raster, RasterError, Result};

/// Target space for [`convert_color`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorSpace {
    /// Hue (scaled from degrees to `[0, 1)`), saturation, value.
    Hsv,
    /// Full-range ITU-R BT.601 luma and chroma, chroma offset so that
    /// achromatic input maps to `0.5`.
    YCbCr,
}

pub const LUMA_R: f64 = 0.299;
pub const LUMA_G: f64 = 0.587;
pub const LUMA_B: f64 = 0.114;

/// BT.601 luma. Single-channel input is returned unchanged.
pub fn to_grayscale(img: &Raster) -> Raster {
    if img.channels() == 1 {
        return img.clone();
    }
    let data = img
        .data()
        .chunks_exact(3)
        .map(|p| LUMA_R * p[0] + LUMA_G * p[1] + LUMA_B * p[2])
        .collect();
    Raster::from_vec(img.width(), img.height(), 1, data).expect("shape preserved")
}

pub fn convert_color(img: &Raster, space: ColorSpace) -> Result<Raster> {
    if img.channels() != 3 {
        return Err(RasterError::NotRgb);
    }
    let convert = match space {
        ColorSpace::Hsv => rgb_to_hsv,
        ColorSpace::YCbCr => rgb_to_ycbcr,
    };
    let data = img
        .data()
        .chunks_exact(3)
        .flat_map(|p| convert(p[0], p[1], p[2]))
        .collect();
    Raster::from_vec(img.width(), img.height(), 3, data)
}

fn rgb_to_hsv(r: f64, g: f64, b: f64) -> [f64; 3] {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    };
    [h / 6.0, s, max]
}

fn rgb_to_ycbcr(r: f64, g: f64, b: f64) -> [f64; 3] {
    let y = LUMA_R * r + LUMA_G * g + LUMA_B * b;
    let cb = 0.5 + (b - y) / (2.0 * (1.0 - LUMA_B));
    let cr = 0.5 + (r - y) / (2.0 * (1.0 - LUMA_R));
    [y, cb, cr]
}

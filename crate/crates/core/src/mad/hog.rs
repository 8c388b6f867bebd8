use std::f64::consts::PI;

use super::{MadError, Result};
use crate::raster::Raster;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HogParams {
    pub cell: usize,
    pub block: usize,
    pub bins: usize,
    pub clip: f64,
}

impl Default for HogParams {
    fn default() -> Self {
        Self {
            cell: 8,
            block: 2,
            bins: 9,
            clip: 0.2,
        }
    }
}

const NORM_EPS: f64 = 1e-6;

impl HogParams {
    pub fn descriptor_len(&self, width: usize, height: usize) -> usize {
        let (cx, cy) = (width / self.cell, height / self.cell);
        (cx + 1 - self.block) * (cy + 1 - self.block) * self.block * self.block * self.bins
    }

    fn check(&self, w: usize, h: usize) -> Result<()> {
        if self.cell == 0 || self.block == 0 || self.bins == 0 {
            return Err(MadError::Config("HoG cell, block and bins must be positive".into()));
        }
        let need = self.cell * self.block;
        if !w.is_multiple_of(self.cell) || !h.is_multiple_of(self.cell) || w < need || h < need {
            let pad = |v: usize| v.max(need).div_ceil(self.cell) * self.cell - v;
            return Err(MadError::ImageTooSmall(format!(
                "HoG needs dimensions that are multiples of {} and at least {need}; pad {w}x{h} by {}x{} pixels",
                self.cell,
                pad(w),
                pad(h)
            )));
        }
        Ok(())
    }
}

/// Per-cell orientation histograms, `cells_y x cells_x x bins`.
///
/// Gradients use centred differences with replicated borders. Orientations
/// are unsigned in `[0, pi)`; bin `i` is centred on `i * pi / bins` and each
/// pixel splits its magnitude linearly between the two nearest centres.
pub fn cell_histograms(img: &Raster, p: &HogParams) -> Result<Vec<f64>> {
    let (w, h) = (img.width(), img.height());
    p.check(w, h)?;
    let (cx, cy) = (w / p.cell, h / p.cell);
    let mut hist = vec![0.0; cx * cy * p.bins];
    for y in 0..h {
        for x in 0..w {
            let at = |xx: usize, yy: usize| img.get(xx, yy, 0);
            let gx = at((x + 1).min(w - 1), y) - at(x.saturating_sub(1), y);
            let gy = at(x, (y + 1).min(h - 1)) - at(x, y.saturating_sub(1));
            let base = ((y / p.cell) * cx + x / p.cell) * p.bins;
            vote(&mut hist[base..base + p.bins], gx, gy);
        }
    }
    Ok(hist)
}

fn vote(cell: &mut [f64], gx: f64, gy: f64) {
    let mag = gx.hypot(gy);
    if mag == 0.0 {
        return;
    }
    let bins = cell.len();
    let pos = gy.atan2(gx).rem_euclid(PI) / (PI / bins as f64);
    let lo = pos.floor();
    let frac = pos - lo;
    let b0 = (lo as usize) % bins;
    cell[b0] += mag * (1.0 - frac);
    cell[(b0 + 1) % bins] += mag * frac;
}

/// Dense HoG descriptor: overlapping `block x block` cell groups with stride
/// one cell, each L2-Hys normalised, concatenated row-major.
pub fn hog_features(img: &Raster, p: &HogParams) -> Result<Vec<f64>> {
    if img.channels() != 1 {
        return Err(MadError::Channels {
            want: "grayscale",
            got: img.channels(),
        });
    }
    let hist = cell_histograms(img, p)?;
    let (cx, cy) = (img.width() / p.cell, img.height() / p.cell);
    let mut out = Vec::with_capacity(p.descriptor_len(img.width(), img.height()));
    let mut block = Vec::with_capacity(p.block * p.block * p.bins);
    for by in 0..=cy - p.block {
        for bx in 0..=cx - p.block {
            block.clear();
            for y in by..by + p.block {
                for x in bx..bx + p.block {
                    let base = (y * cx + x) * p.bins;
                    block.extend_from_slice(&hist[base..base + p.bins]);
                }
            }
            l2_hys(&mut block, p.clip);
            out.extend_from_slice(&block);
        }
    }
    Ok(out)
}

fn l2_hys(v: &mut [f64], clip: f64) {
    let normalise = |v: &mut [f64]| {
        let n = (v.iter().map(|x| x * x).sum::<f64>() + NORM_EPS * NORM_EPS).sqrt();
        v.iter_mut().for_each(|x| *x /= n);
    };
    normalise(v);
    v.iter_mut().for_each(|x| *x = x.min(clip));
    normalise(v);
}

use super::{MadError, Result};
use crate::raster::Raster;

/// 58 uniform codes plus one bin shared by all non-uniform codes.
pub const LBP_BINS: usize = 59;

const fn transitions(code: u8) -> u32 {
    (code ^ code.rotate_left(1)).count_ones()
}

/// Histogram bin of each 8-bit code: uniform codes take bins 0..58 in
/// ascending code order, every other code maps to bin 58.
pub const UNIFORM_BIN: [u8; 256] = {
    let mut table = [58u8; 256];
    let mut next = 0u8;
    let mut code = 0usize;
    while code < 256 {
        if transitions(code as u8) <= 2 {
            table[code] = next;
            next += 1;
        }
        code += 1;
    }
    table
};

/// LBP(8,1) code at an interior pixel of channel `c`. Neighbours are read
/// clockwise from the top-left one, which lands in the most significant
/// bit; a bit is set when the neighbour is `>=` the centre.
pub fn lbp_code(img: &Raster, x: usize, y: usize, c: usize) -> u8 {
    const RING: [(isize, isize); 8] = [(-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0)];
    let center = img.get(x, y, c);
    let mut code = 0u8;
    for (dx, dy) in RING {
        let v = img.get((x as isize + dx) as usize, (y as isize + dy) as usize, c);
        code = (code << 1) | u8::from(v >= center);
    }
    code
}

/// Uniform LBP histograms of channel `c` over a `gx x gy` grid.
///
/// Codes exist for interior pixels only; that `(w-2) x (h-2)` code map is split
/// into cells and each cell histogram is L1-normalised.
pub fn lbp_channel_features(img: &Raster, c: usize, grid: (usize, usize)) -> Result<Vec<f64>> {
    let (gx, gy) = grid;
    let (w, h) = (img.width(), img.height());
    if gx == 0 || gy == 0 || w < 3 * gx || h < 3 * gy {
        return Err(MadError::ImageTooSmall(format!(
            "{w}x{h} image cannot hold a {gx}x{gy} LBP grid of 3x3 cells"
        )));
    }
    let (cw, ch) = (w - 2, h - 2);
    let mut hist = vec![0.0; gx * gy * LBP_BINS];
    let mut counts = vec![0usize; gx * gy];
    for y in 0..ch {
        let cy = y * gy / ch;
        for x in 0..cw {
            let cell = cy * gx + x * gx / cw;
            let bin = UNIFORM_BIN[lbp_code(img, x + 1, y + 1, c) as usize] as usize;
            hist[cell * LBP_BINS + bin] += 1.0;
            counts[cell] += 1;
        }
    }
    for (cell, n) in counts.into_iter().enumerate() {
        for v in &mut hist[cell * LBP_BINS..(cell + 1) * LBP_BINS] {
            *v /= n as f64;
        }
    }
    Ok(hist)
}

/// Grid LBP descriptor of a single-channel image.
pub fn lbp_features(img: &Raster, grid: (usize, usize)) -> Result<Vec<f64>> {
    if img.channels() != 1 {
        return Err(MadError::Channels {
            want: "grayscale",
            got: img.channels(),
        });
    }
    lbp_channel_features(img, 0, grid)
}

//! Synthetic fixtures shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::Path;

use morphbench::geometry::Point;
use morphbench::landmark::LandmarkSet;
use morphbench::protocol::{ImageRecord, Subject, SubjectManifest};
use morphbench::raster::{save_png, Raster};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy)]
pub struct FaceParams {
    pub cx: f64,
    pub cy: f64,
    pub rx: f64,
    pub ry: f64,
    pub eye_dx: f64,
    pub eye_y: f64,
    pub mouth_y: f64,
    pub mouth_w: f64,
    pub tone: [f64; 3],
}

impl FaceParams {
    pub fn random(rng: &mut ChaCha8Rng, size: usize) -> Self {
        let s = size as f64;
        Self {
            cx: s * rng.random_range(0.45..0.55),
            cy: s * rng.random_range(0.45..0.55),
            rx: s * rng.random_range(0.26..0.32),
            ry: s * rng.random_range(0.33..0.40),
            eye_dx: s * rng.random_range(0.10..0.14),
            eye_y: s * rng.random_range(0.10..0.14),
            mouth_y: s * rng.random_range(0.15..0.20),
            mouth_w: s * rng.random_range(0.08..0.12),
            tone: [rng.random_range(0.5..0.9), rng.random_range(0.35..0.7), rng.random_range(0.25..0.6)],
        }
    }

    /// Small per-capture variation of the same face.
    pub fn jitter(&self, rng: &mut ChaCha8Rng) -> Self {
        let mut p = *self;
        p.cx += rng.random_range(-1.0..1.0);
        p.cy += rng.random_range(-1.0..1.0);
        p.mouth_w *= rng.random_range(0.95..1.05);
        p
    }

    /// 12 outline points, 2 per eye, nose tip, 3 mouth points.
    pub fn landmarks(&self) -> LandmarkSet {
        let mut pts: Vec<Point> = (0..12)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / 12.0;
                Point::new(self.cx + self.rx * t.cos(), self.cy + self.ry * t.sin())
            })
            .collect();
        for side in [-1.0, 1.0] {
            let ex = self.cx + side * self.eye_dx;
            let ey = self.cy - self.eye_y;
            pts.push(Point::new(ex - 3.0, ey));
            pts.push(Point::new(ex + 3.0, ey));
        }
        pts.push(Point::new(self.cx, self.cy + 0.02 * self.ry));
        let my = self.cy + self.mouth_y;
        pts.push(Point::new(self.cx - self.mouth_w, my));
        pts.push(Point::new(self.cx, my + 2.0));
        pts.push(Point::new(self.cx + self.mouth_w, my));
        LandmarkSet::new(pts).unwrap()
    }

    pub fn render(&self, size: usize) -> Raster {
        let eyes = [(self.cx - self.eye_dx, self.cy - self.eye_y), (self.cx + self.eye_dx, self.cy - self.eye_y)];
        Raster::from_fn(size, size, 3, |x, y, c| {
            let (xf, yf) = (x as f64, y as f64);
            let bg = 0.15 + 0.3 * yf / size as f64 + 0.1 * c as f64;
            let e = ((xf - self.cx) / self.rx).powi(2) + ((yf - self.cy) / self.ry).powi(2);
            if e > 1.0 {
                return bg;
            }
            let mut v = self.tone[c] * (1.0 - 0.25 * e);
            if eyes.iter().any(|&(ex, ey)| (xf - ex).hypot(yf - ey) < 3.5) {
                v = 0.1;
            }
            let my = self.cy + self.mouth_y;
            if (yf - my).abs() < 1.5 && (xf - self.cx).abs() < self.mouth_w {
                v = 0.3 * self.tone[c];
            }
            v
        })
        .unwrap()
    }
}

/// Writes a manifest directory: `subjects` subjects alternating F/M, two
/// sessions each, PNGs and landmark text files side by side.
pub fn write_face_corpus(dir: &Path, subjects: usize, size: usize, seed: u64) -> SubjectManifest {
    let mut r = rng(seed);
    let mut out = Vec::new();
    for s in 0..subjects {
        let base = FaceParams::random(&mut r, size);
        let id = format!("subj{s:02}");
        let mut images = Vec::new();
        for session in ["s1", "s2"] {
            let face = base.jitter(&mut r);
            let img = format!("{id}_{session}.png");
            let lm = format!("{id}_{session}.txt");
            save_png(&face.render(size), dir.join(&img)).unwrap();
            std::fs::write(dir.join(&lm), face.landmarks().to_text()).unwrap();
            images.push(ImageRecord { path: img.into(), session: session.into(), landmarks: Some(lm.into()) });
        }
        out.push(Subject { id, gender: if s % 2 == 0 { "F".into() } else { "M".into() }, images });
    }
    SubjectManifest { subjects: out }
}

/// Toy similarity in (0, 1]: `1 / (1 + rmse)` on 8x-downsampled luma,
/// scaled so that unrelated synthetic faces sit well below related ones.
pub fn similarity(a: &Raster, b: &Raster) -> f64 {
    let small = |img: &Raster| morphbench::raster::to_grayscale(&morphbench::raster::resize_bilinear(img, 16, 16));
    let (a, b) = (small(a), small(b));
    let mse: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.data().len() as f64;
    1.0 / (1.0 + 20.0 * mse.sqrt())
}

/// Piecewise-constant scene of random discs and boxes with pixel noise.
pub fn texture(rng: &mut ChaCha8Rng, size: usize) -> Raster {
    let s = size as f64;
    let mut img = Raster::filled(size, size, &[rng.random_range(0.3..0.7); 3]).unwrap();
    for _ in 0..12 {
        let color = [rng.random_range(0.1..0.9), rng.random_range(0.1..0.9), rng.random_range(0.1..0.9)];
        let (cx, cy) = (rng.random_range(0.0..s), rng.random_range(0.0..s));
        let (rx, ry) = (rng.random_range(0.05..0.2) * s, rng.random_range(0.05..0.2) * s);
        let disc = rng.random_bool(0.5);
        for y in 0..size {
            for x in 0..size {
                let (dx, dy) = ((x as f64 - cx) / rx, (y as f64 - cy) / ry);
                let inside = if disc { dx * dx + dy * dy <= 1.0 } else { dx.abs() <= 1.0 && dy.abs() <= 1.0 };
                if inside {
                    img.pixel_mut(x, y).copy_from_slice(&color);
                }
            }
        }
    }
    let noise = Normal::new(0.0, 0.02).unwrap();
    for v in img.data_mut() {
        *v = (*v + noise.sample(rng)).clamp(0.0, 1.0);
    }
    img
}

/// `n` bona fide textures and `n` blends of two fresh textures.
pub fn texture_corpus(n: usize, size: usize, seed: u64) -> (Vec<Raster>, Vec<Raster>) {
    let mut r = rng(seed);
    let bonafide = (0..n).map(|_| texture(&mut r, size)).collect();
    let morphs = (0..n)
        .map(|_| {
            let a = texture(&mut r, size);
            let b = texture(&mut r, size);
            morphbench::raster::blend(&a, &b, 0.5).unwrap()
        })
        .collect();
    (bonafide, morphs)
}
pub type TestRng = ChaCha8Rng;

//! Landmark-driven morphing: landmark averaging, Delaunay triangulation and
//! dual piecewise-affine warps followed by a cross-dissolve.

mod delaunay;
mod morph;

pub use delaunay::{delaunay, Triangulation};
pub use morph::{generate_landmark_morph, LandmarkMorph, MorphMetadata};

use std::path::Path;

use thiserror::Error;

use crate::geometry::Point;
use crate::raster::{mix_weights, RasterError};

/// Conventional 68-point facial landmark layout (iBUG 300-W ordering).
pub const DEFAULT_LANDMARK_COUNT: usize = 68;

#[derive(Debug, Error)]
pub enum LandmarkError {
    #[error("landmark count mismatch: {0} vs {1}")]
    CountMismatch(usize, usize),
    #[error("need at least 3 distinct points, got {0}")]
    TooFewPoints(usize),
    #[error("all points are collinear")]
    Collinear,
    #[error("non-finite coordinate at point {index}")]
    NonFinite { index: usize },
    #[error("image shapes differ: {0:?} vs {1:?}")]
    ImageMismatch((usize, usize, usize), (usize, usize, usize)),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// Ordered 2-D landmark coordinates for one image, in pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet {
    points: Vec<Point>,
}

impl LandmarkSet {
    pub fn new(points: Vec<Point>) -> Result<Self, LandmarkError> {
        if let Some(index) = points.iter().position(|p| !p.is_finite()) {
            return Err(LandmarkError::NonFinite { index });
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Parses the text format: one `x y` pair per line, blank lines ignored.
    pub fn parse(text: &str, origin: &str) -> Result<Self, LandmarkError> {
        let mut points = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| LandmarkError::Parse {
                path: origin.to_string(),
                line: i + 1,
                message,
            };
            let mut fields = line.split_whitespace();
            let mut coord = |name: &str| -> Result<f64, LandmarkError> {
                let tok = fields.next().ok_or_else(|| err(format!("missing {name}")))?;
                let v: f64 = tok.parse().map_err(|_| err(format!("bad {name} value {tok:?}")))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(err(format!("non-finite {name}")))
                }
            };
            let x = coord("x")?;
            let y = coord("y")?;
            if fields.next().is_some() {
                return Err(err("expected exactly two values".into()));
            }
            points.push(Point::new(x, y));
        }
        Ok(Self { points })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LandmarkError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| LandmarkError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn to_text(&self) -> String {
        self.points.iter().map(|p| format!("{} {}\n", p.x, p.y)).collect()
    }
}

/// `p_i = (1 - alpha) a_i + alpha b_i`, with the weights of
/// [`mix_weights`] so that swapping inputs and `alpha <-> 1 - alpha` is exact.
pub fn average_landmarks(
    a: &LandmarkSet,
    b: &LandmarkSet,
    alpha: f64,
) -> Result<LandmarkSet, LandmarkError> {
    if a.len() != b.len() {
        return Err(LandmarkError::CountMismatch(a.len(), b.len()));
    }
    let (wa, wb) = mix_weights(alpha);
    let points = a
        .points
        .iter()
        .zip(&b.points)
        .map(|(p, q)| Point::new(wa * p.x + wb * q.x, wa * p.y + wb * q.y))
        .collect();
    LandmarkSet::new(points)
}

/// The 8 frame points appended by [`augment_boundary`], in order: corners
/// clockwise from the origin `(0,0), (w-1,0), (w-1,h-1), (0,h-1)`, then the
/// edge midpoints top, right, bottom, left.
pub fn frame_points(width: usize, height: usize) -> [Point; 8] {
    let mx = width.saturating_sub(1) as f64;
    let my = height.saturating_sub(1) as f64;
    [
        Point::new(0.0, 0.0),
        Point::new(mx, 0.0),
        Point::new(mx, my),
        Point::new(0.0, my),
        Point::new(mx / 2.0, 0.0),
        Point::new(mx, my / 2.0),
        Point::new(mx / 2.0, my),
        Point::new(0.0, my / 2.0),
    ]
}

/// Clamps the landmarks into the image and appends [`frame_points`], so the
/// triangulation covers the whole frame.
///
/// Not idempotent: every call appends another 8 points.
pub fn augment_boundary(lms: &LandmarkSet, width: usize, height: usize) -> LandmarkSet {
    let mx = width.saturating_sub(1) as f64;
    let my = height.saturating_sub(1) as f64;
    let mut points: Vec<Point> = lms
        .points
        .iter()
        .map(|p| Point::new(p.x.clamp(0.0, mx), p.y.clamp(0.0, my)))
        .collect();
    points.extend(frame_points(width, height));
    LandmarkSet { points }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(v: &[(f64, f64)]) -> LandmarkSet {
        LandmarkSet::new(v.iter().map(|&p| p.into()).collect()).unwrap()
    }

    #[test]
    fn average_midpoint_and_endpoints() {
        let a = set(&[(0.0, 0.0)]);
        let b = set(&[(2.0, 4.0)]);
        assert_eq!(average_landmarks(&a, &b, 0.5).unwrap().points()[0], Point::new(1.0, 2.0));
        assert_eq!(average_landmarks(&a, &b, 0.0).unwrap(), a);
        assert_eq!(average_landmarks(&a, &b, 1.0).unwrap(), b);
        let c = set(&[(0.0, 0.0), (1.0, 1.0)]);
        assert!(matches!(average_landmarks(&a, &c, 0.5), Err(LandmarkError::CountMismatch(1, 2))));
    }

    #[test]
    fn augment_appends_fixed_frame() {
        let lms = set(&[(10.0, 20.0), (150.0, -3.0)]);
        let aug = augment_boundary(&lms, 100, 100);
        assert_eq!(aug.len(), 10);
        assert_eq!(aug.points()[1], Point::new(99.0, 0.0));
        assert_eq!(aug.points()[2], Point::new(0.0, 0.0));
        assert_eq!(aug.points()[7], Point::new(99.0, 49.5));
        let other = augment_boundary(&set(&[(1.0, 1.0), (2.0, 2.0)]), 100, 100);
        assert_eq!(aug.points()[2..], other.points()[2..]);
        // calling twice duplicates the frame
        assert_eq!(augment_boundary(&aug, 100, 100).len(), 18);
    }

    #[test]
    fn parse_text_format() {
        let l = LandmarkSet::parse("1 2\n3.5   4e1\n\n", "mem").unwrap();
        assert_eq!(l.points(), &[Point::new(1.0, 2.0), Point::new(3.5, 40.0)]);
        assert_eq!(LandmarkSet::parse(&l.to_text(), "mem").unwrap(), l);
        let e = LandmarkSet::parse("1 2\n3 x\n", "f.txt").unwrap_err();
        assert!(e.to_string().starts_with("f.txt:2:"), "{e}");
        assert!(LandmarkSet::parse("1 2 3\n", "f").is_err());
        assert!(LandmarkSet::parse("1\n", "f").is_err());
        assert!(LandmarkSet::parse("inf 1\n", "f").is_err());
    }

    proptest! {
        #[test]
        fn average_is_componentwise_convex(
            a in proptest::collection::vec((-500.0f64..500.0, -500.0f64..500.0), 1..30),
            shift in proptest::collection::vec((-500.0f64..500.0, -500.0f64..500.0), 30),
            alpha in 0.0f64..=1.0,
        ) {
            let b: Vec<(f64, f64)> = a.iter().zip(&shift).map(|(p, s)| (p.0 + s.0, p.1 + s.1)).collect();
            let (sa, sb) = (set(&a), set(&b));
            let m = average_landmarks(&sa, &sb, alpha).unwrap();
            for ((p, q), r) in sa.points().iter().zip(sb.points()).zip(m.points()) {
                prop_assert!(r.x >= p.x.min(q.x) - 1e-12 && r.x <= p.x.max(q.x) + 1e-12);
                prop_assert!(r.y >= p.y.min(q.y) - 1e-12 && r.y <= p.y.max(q.y) + 1e-12);
            }
        }
    }
}

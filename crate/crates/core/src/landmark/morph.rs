use serde::{Deserialize, Serialize};

use super::{augment_boundary, average_landmarks, delaunay, LandmarkError, LandmarkSet};
use crate::geometry::Point;
use crate::raster::{blend, warp_triangle_with, FillRule, Raster, TriangleWarp};

/// Sidecar metadata written next to a landmark morph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorphMetadata {
    pub source_ids: Vec<String>,
    pub alpha: f64,
    pub skipped_triangles: usize,
}

#[derive(Debug, Clone)]
pub struct LandmarkMorph {
    pub image: Raster,
    pub triangles: usize,
    /// Triangles whose destination was degenerate in the averaged geometry.
    pub skipped_triangles: usize,
}

/// Warps both images onto the `alpha`-averaged landmark geometry and
/// cross-dissolves them with the same `alpha`.
///
/// The triangulation is built once on the averaged, frame-augmented landmarks
/// and its index structure drives both source warps, so triangles always
/// correspond between the two images.
pub fn generate_landmark_morph(
    img1: &Raster,
    lm1: &LandmarkSet,
    img2: &Raster,
    lm2: &LandmarkSet,
    alpha: f64,
) -> Result<LandmarkMorph, LandmarkError> {
    if img1.shape() != img2.shape() {
        return Err(LandmarkError::ImageMismatch(img1.shape(), img2.shape()));
    }
    if lm1.len() != lm2.len() {
        return Err(LandmarkError::CountMismatch(lm1.len(), lm2.len()));
    }
    let (w, h, c) = img1.shape();
    let aug1 = augment_boundary(lm1, w, h);
    let aug2 = augment_boundary(lm2, w, h);
    let mean = average_landmarks(&aug1, &aug2, alpha)?;
    let tri = delaunay(mean.points())?;

    let mut warped1 = Raster::new(w, h, c)?;
    let mut warped2 = Raster::new(w, h, c)?;
    let mut skipped = 0;
    let corner = |set: &LandmarkSet, t: &[usize; 3]| -> [Point; 3] {
        t.map(|v| set.points()[tri.source_index[v]])
    };
    for t in &tri.triangles {
        let dst = corner(&mean, t);
        let r1 = warp_triangle_with(img1, &mut warped1, &corner(&aug1, t), &dst, FillRule::TopLeftClosedFrame)?;
        let r2 = warp_triangle_with(img2, &mut warped2, &corner(&aug2, t), &dst, FillRule::TopLeftClosedFrame)?;
        if r1 == TriangleWarp::SkippedDegenerate || r2 == TriangleWarp::SkippedDegenerate {
            skipped += 1;
        }
    }
    if skipped > 0 {
        log::warn!("{skipped} degenerate triangle(s) skipped during morph");
    }
    Ok(LandmarkMorph {
        image: blend(&warped1, &warped2, alpha)?,
        triangles: tri.triangles.len(),
        skipped_triangles: skipped,
    })
}

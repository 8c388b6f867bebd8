use super::{Raster, RasterError, Result};
use crate::geometry::{cross, triangle_area, Point};

/// Destination triangles with area at or below this (px²) are skipped.
pub const DEGENERATE_AREA: f64 = 1e-9;

/// `(x, y) -> (a x + b y + c, d x + e y + f)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap2D {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

impl AffineMap2D {
    pub const IDENTITY: Self = Self {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 0.0,
        e: 1.0,
        f: 0.0,
    };

    /// The unique affine map taking `from[i]` to `to[i]`.
    pub fn from_triangles(from: &[Point; 3], to: &[Point; 3]) -> Result<Self> {
        let [p0, p1, p2] = *from;
        let det = cross(p0, p1, p2);
        if !(det.abs() > 1e-12) {
            return Err(RasterError::Singular(det.abs()));
        }
        // Solve [x_i y_i 1] . (a, b, c) = u_i by Cramer's rule.
        let solve = |u0: f64, u1: f64, u2: f64| {
            let a = (u0 * (p1.y - p2.y) + u1 * (p2.y - p0.y) + u2 * (p0.y - p1.y)) / det;
            let b = (u0 * (p2.x - p1.x) + u1 * (p0.x - p2.x) + u2 * (p1.x - p0.x)) / det;
            let c = (u0 * (p1.x * p2.y - p2.x * p1.y)
                + u1 * (p2.x * p0.y - p0.x * p2.y)
                + u2 * (p0.x * p1.y - p1.x * p0.y))
                / det;
            (a, b, c)
        };
        let (a, b, c) = solve(to[0].x, to[1].x, to[2].x);
        let (d, e, f) = solve(to[0].y, to[1].y, to[2].y);
        Ok(Self { a, b, c, d, e, f })
    }

    pub fn determinant(&self) -> f64 {
        self.a * self.e - self.b * self.d
    }

    #[inline]
    pub fn apply(&self, p: Point) -> Point {
        Point::new(
            self.a * p.x + self.b * p.y + self.c,
            self.d * p.x + self.e * p.y + self.f,
        )
    }

    pub fn inverse(&self) -> Result<Self> {
        let det = self.determinant();
        if !(det.abs() > 1e-12) {
            return Err(RasterError::Singular(det.abs()));
        }
        let a = self.e / det;
        let b = -self.b / det;
        let d = -self.d / det;
        let e = self.a / det;
        Ok(Self {
            a,
            b,
            c: -(a * self.c + b * self.f),
            d,
            e,
            f: -(d * self.c + e * self.f),
        })
    }
}

/// Outcome of a single triangle warp.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriangleWarp {
    Painted(usize),
    SkippedDegenerate,
}

/// How pixel centres lying exactly on a triangle edge are assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FillRule {
    /// Top-left rule: a shared edge belongs to exactly one of its triangles.
    TopLeft,
    /// Top-left rule, except edges lying on the destination frame border are
    /// closed. Used when the triangulation tiles the whole frame, so border
    /// pixels are never dropped.
    TopLeftClosedFrame,
}

/// Edge function evaluated with endpoints in a canonical order, so that the
/// two triangles sharing an edge compute exact negatives of each other.
#[inline]
fn edge_value(u: Point, v: Point, p: Point) -> f64 {
    if (u.x, u.y) <= (v.x, v.y) {
        cross(u, v, p)
    } else {
        -cross(v, u, p)
    }
}

#[inline]
fn owns_edge(u: Point, v: Point) -> bool {
    let dx = v.x - u.x;
    let dy = v.y - u.y;
    dy > 0.0 || (dy == 0.0 && dx < 0.0)
}

fn on_frame(u: Point, v: Point, max_x: f64, max_y: f64) -> bool {
    (u.x == 0.0 && v.x == 0.0)
        || (u.y == 0.0 && v.y == 0.0)
        || (u.x == max_x && v.x == max_x)
        || (u.y == max_y && v.y == max_y)
}

/// Inverse-maps every destination pixel centre inside `dst_tri` into `src`
/// and writes the bilinear sample into `dst`. Pixels outside are untouched.
pub fn warp_triangle(
    src: &Raster,
    dst: &mut Raster,
    src_tri: &[Point; 3],
    dst_tri: &[Point; 3],
) -> Result<TriangleWarp> {
    warp_triangle_with(src, dst, src_tri, dst_tri, FillRule::TopLeft)
}

pub fn warp_triangle_with(
    src: &Raster,
    dst: &mut Raster,
    src_tri: &[Point; 3],
    dst_tri: &[Point; 3],
    rule: FillRule,
) -> Result<TriangleWarp> {
    if src.channels() != dst.channels() {
        return Err(RasterError::ShapeMismatch(src.shape(), dst.shape()));
    }
    if !(triangle_area(dst_tri) > DEGENERATE_AREA) || dst.width() == 0 || dst.height() == 0 {
        return Ok(TriangleWarp::SkippedDegenerate);
    }
    let map = AffineMap2D::from_triangles(dst_tri, src_tri)?;

    // Counter-clockwise vertex order for the edge tests.
    let [p0, mut p1, mut p2] = *dst_tri;
    if cross(p0, p1, p2) < 0.0 {
        std::mem::swap(&mut p1, &mut p2);
    }
    let max_x = (dst.width() - 1) as f64;
    let max_y = (dst.height() - 1) as f64;
    let edges = [(p0, p1), (p1, p2), (p2, p0)];
    let closed: [bool; 3] = edges.map(|(u, v)| {
        owns_edge(u, v) || (rule == FillRule::TopLeftClosedFrame && on_frame(u, v, max_x, max_y))
    });

    let lo_x = p0.x.min(p1.x).min(p2.x).ceil().max(0.0);
    let hi_x = p0.x.max(p1.x).max(p2.x).floor().min(max_x);
    let lo_y = p0.y.min(p1.y).min(p2.y).ceil().max(0.0);
    let hi_y = p0.y.max(p1.y).max(p2.y).floor().min(max_y);
    if lo_x > hi_x || lo_y > hi_y {
        return Ok(TriangleWarp::Painted(0));
    }

    let channels = dst.channels();
    let mut sample = vec![0.0; channels];
    let mut painted = 0;
    for y in lo_y as usize..=hi_y as usize {
        for x in lo_x as usize..=hi_x as usize {
            let p = Point::new(x as f64, y as f64);
            let inside = edges.iter().zip(&closed).all(|(&(u, v), &closed)| {
                let e = edge_value(u, v, p);
                e > 0.0 || (e == 0.0 && closed)
            });
            if !inside {
                continue;
            }
            let q = map.apply(p);
            src.sample_into(q.x, q.y, &mut sample);
            dst.pixel_mut(x, y).copy_from_slice(&sample);
            painted += 1;
        }
    }
    Ok(TriangleWarp::Painted(painted))
}

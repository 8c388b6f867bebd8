//! Bowyer–Watson Delaunay triangulation.
//!
//! The bounding super-triangle is symbolic: hull edges are closed off by
//! "ghost" triangles sharing a vertex at infinity, so no finite super-triangle
//! vertices can leak into (or carve holes in) the final hull. Orientation and
//! in-circle tests use adaptive exact predicates.

use std::collections::{HashMap, HashSet};

use robust::Coord;
use serde::Serialize;

use super::LandmarkError;
use crate::geometry::{cross, Point};

const GHOST: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Triangulation {
    /// Distinct input points, in first-occurrence order.
    pub vertices: Vec<Point>,
    /// Counter-clockwise (positive [`cross`]) vertex-index triples.
    pub triangles: Vec<[usize; 3]>,
    /// For every vertex, the index of its first occurrence in the input.
    pub source_index: Vec<usize>,
    /// For every input point, the vertex it was merged into.
    pub input_to_vertex: Vec<usize>,
}

impl Triangulation {
    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|i| self.vertices[i])
    }

    /// Total area of all triangles.
    pub fn area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.triangle_points(t);
                0.5 * cross(a, b, c)
            })
            .sum()
    }
}

#[inline]
fn coord(p: Point) -> Coord<f64> {
    Coord { x: p.x, y: p.y }
}

#[inline]
fn orient(a: Point, b: Point, c: Point) -> f64 {
    robust::orient2d(coord(a), coord(b), coord(c))
}

fn in_conflict(tri: &[usize; 3], pts: &[Point], p: Point) -> bool {
    let [a, b, c] = *tri;
    if c == GHOST {
        // Outside lies to the left of a -> b.
        let (u, v) = (pts[a], pts[b]);
        let o = orient(u, v, p);
        if o != 0.0 {
            return o > 0.0;
        }
        let along = (p.x - u.x) * (v.x - u.x) + (p.y - u.y) * (v.y - u.y);
        let back = (p.x - v.x) * (u.x - v.x) + (p.y - v.y) * (u.y - v.y);
        return along > 0.0 && back > 0.0;
    }
    robust::incircle(coord(pts[a]), coord(pts[b]), coord(pts[c]), coord(p)) > 0.0
}

/// Merges exactly coincident points, returning the distinct points, the first
/// input index of each, and the input -> distinct index map.
fn dedup(points: &[Point]) -> (Vec<Point>, Vec<usize>, Vec<usize>) {
    let mut seen: HashMap<(u64, u64), usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut source = Vec::new();
    let mut remap = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        // +0.0 folds -0.0 into 0.0.
        let key = ((p.x + 0.0).to_bits(), (p.y + 0.0).to_bits());
        let v = *seen.entry(key).or_insert_with(|| {
            vertices.push(*p);
            source.push(i);
            vertices.len() - 1
        });
        remap.push(v);
    }
    (vertices, source, remap)
}

/// Delaunay triangulation of `points` by incremental insertion in input order.
///
/// Duplicate points are merged. Co-circular configurations are resolved by
/// insertion order (a point exactly on a circumcircle does not conflict).
pub fn delaunay(points: &[Point]) -> Result<Triangulation, LandmarkError> {
    if let Some(i) = points.iter().position(|p| !p.is_finite()) {
        return Err(LandmarkError::NonFinite { index: i });
    }
    let (vertices, source_index, input_to_vertex) = dedup(points);
    if vertices.len() < 3 {
        return Err(LandmarkError::TooFewPoints(vertices.len()));
    }
    let (p0, p1) = (vertices[0], vertices[1]);
    let third = (2..vertices.len())
        .find(|&k| orient(p0, p1, vertices[k]) != 0.0)
        .ok_or(LandmarkError::Collinear)?;

    let (mut a, mut b) = (1, third);
    if orient(p0, vertices[a], vertices[b]) < 0.0 {
        std::mem::swap(&mut a, &mut b);
    }
    let mut tris: Vec<[usize; 3]> = vec![[0, a, b], [a, 0, GHOST], [b, a, GHOST], [0, b, GHOST]];

    let mut in_cavity = Vec::new();
    let mut edges: HashSet<(usize, usize)> = HashSet::new();
    for k in (2..vertices.len()).filter(|&k| k != third) {
        let p = vertices[k];
        in_cavity.clear();
        in_cavity.extend(tris.iter().map(|t| in_conflict(t, &vertices, p)));

        edges.clear();
        for (t, _) in tris.iter().zip(&in_cavity).filter(|(_, c)| **c) {
            edges.extend([(t[0], t[1]), (t[1], t[2]), (t[2], t[0])]);
        }
        let mut fresh = Vec::new();
        for (t, _) in tris.iter().zip(&in_cavity).filter(|(_, c)| **c) {
            for (u, v) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                if edges.contains(&(v, u)) {
                    continue;
                }
                fresh.push(if u == GHOST {
                    [v, k, GHOST]
                } else if v == GHOST {
                    [k, u, GHOST]
                } else {
                    [u, v, k]
                });
            }
        }
        debug_assert!(!fresh.is_empty(), "point {k} conflicts with nothing");
        let mut flags = in_cavity.iter();
        tris.retain(|_| !*flags.next().unwrap());
        tris.extend(fresh);
    }

    let triangles = tris.into_iter().filter(|t| t[2] != GHOST).collect();
    Ok(Triangulation {
        vertices,
        triangles,
        source_index,
        input_to_vertex,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    /// Naive floating-point in-circle determinant.
    fn incircle_det(a: Point, b: Point, c: Point, d: Point) -> f64 {
        let (adx, ady) = (a.x - d.x, a.y - d.y);
        let (bdx, bdy) = (b.x - d.x, b.y - d.y);
        let (cdx, cdy) = (c.x - d.x, c.y - d.y);
        (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy)
            - (bdx * bdx + bdy * bdy) * (adx * cdy - cdx * ady)
            + (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady)
    }

    fn check_delaunay(tri: &Triangulation) {
        for t in 0..tri.triangles.len() {
            let [a, b, c] = tri.triangle_points(t);
            assert!(cross(a, b, c) > 0.0, "triangle {t} not ccw");
            for (i, &d) in tri.vertices.iter().enumerate() {
                if tri.triangles[t].contains(&i) {
                    continue;
                }
                assert!(incircle_det(a, b, c, d) <= 1e-9, "point {i} inside circumcircle of {t}");
            }
        }
    }

    #[test]
    fn single_triangle() {
        let t = delaunay(&[p(0.0, 0.0), p(1.0, 0.0), p(0.0, 1.0)]).unwrap();
        assert_eq!(t.triangles.len(), 1);
        check_delaunay(&t);
    }

    #[test]
    fn unit_square_two_triangles() {
        let t = delaunay(&[p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)]).unwrap();
        assert_eq!(t.triangles.len(), 2);
        check_delaunay(&t);
        assert!((t.area() - 1.0).abs() < 1e-12);
        // both triangles share exactly one diagonal
        let shared: Vec<usize> = t.triangles[0]
            .iter()
            .copied()
            .filter(|v| t.triangles[1].contains(v))
            .collect();
        assert_eq!(shared.len(), 2);
        assert!(shared == [0, 2] || shared == [2, 0] || shared.contains(&1) && shared.contains(&3));
    }

    #[test]
    fn too_few_or_collinear() {
        assert!(matches!(delaunay(&[p(0.0, 0.0), p(1.0, 1.0)]), Err(LandmarkError::TooFewPoints(2))));
        assert!(matches!(
            delaunay(&[p(0.0, 0.0), p(1.0, 1.0), p(0.0, 0.0)]),
            Err(LandmarkError::TooFewPoints(2))
        ));
        assert!(matches!(
            delaunay(&[p(0.0, 0.0), p(1.0, 1.0), p(2.0, 2.0), p(5.0, 5.0)]),
            Err(LandmarkError::Collinear)
        ));
        assert!(matches!(
            delaunay(&[p(0.0, 0.0), p(f64::NAN, 1.0), p(2.0, 0.0)]),
            Err(LandmarkError::NonFinite { index: 1 })
        ));
    }

    #[test]
    fn duplicates_are_remapped() {
        let pts = [p(0.0, 0.0), p(1.0, 0.0), p(0.0, 0.0), p(0.0, 1.0), p(-0.0, 1.0)];
        let t = delaunay(&pts).unwrap();
        assert_eq!(t.vertices.len(), 3);
        assert_eq!(t.input_to_vertex, vec![0, 1, 0, 2, 2]);
        assert_eq!(t.source_index, vec![0, 1, 3]);
    }

    #[test]
    fn collinear_prefix_then_offset_point() {
        let pts = [p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0), p(3.0, 0.0), p(1.5, 1.0), p(4.0, 0.0)];
        let t = delaunay(&pts).unwrap();
        check_delaunay(&t);
        assert!((t.area() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn grid_with_cocircular_points() {
        let pts: Vec<Point> = (0..6)
            .flat_map(|y| (0..7).map(move |x| p(x as f64, y as f64)))
            .collect();
        let t = delaunay(&pts).unwrap();
        check_delaunay(&t);
        assert_eq!(t.triangles.len(), 2 * 6 * 5);
        assert!((t.area() - 30.0).abs() < 1e-12);
    }

    #[test]
    fn random_points_pass_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20);
        for _ in 0..20 {
            let pts: Vec<Point> = (0..20).map(|_| p(rng.random(), rng.random())).collect();
            check_delaunay(&delaunay(&pts).unwrap());
        }
    }

    #[test]
    fn deterministic_output() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let pts: Vec<Point> = (0..50).map(|_| p(rng.random(), rng.random())).collect();
        assert_eq!(delaunay(&pts).unwrap(), delaunay(&pts).unwrap());
    }
}

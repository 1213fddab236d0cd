//! Foundational planar types and chart-tagged arithmetic.
//!
//! Every geometric object in this crate lives in a named Euclidean chart:
//! one of the two hexagon charts of a building block on a dislocated
//! surface, or the single polar/Cartesian chart of the continuum sector.
//! Cross-chart arithmetic is rejected at run time — silently mixing charts
//! is the dominant bug class in atlas-based geometry.

use nalgebra::{Isometry2, Point2, Rotation2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Planar point in some chart's coordinates.
pub type Point = Point2<f64>;
/// Planar tangent vector in some chart's coordinates.
pub type Vec2 = Vector2<f64>;
/// Orientation-preserving rigid motion between charts (rotation + translation).
pub type Motion = Isometry2<f64>;

/// Global tolerance for point identity and on-boundary tests.
///
/// All geometry here is O(1) in magnitude (block side lengths are at most a
/// few units), so an absolute tolerance is appropriate: 1e-9 sits far above
/// f64 roundoff accumulated by the short motion compositions we perform, and
/// far below every feature size (the smallest features, the defect segments,
/// have length eps/n^2 ~ 1e-3 at the deepest sweeps). Predicates that take an
/// explicit `tol` parameter accept overrides per call.
pub const TOL: f64 = 1e-9;

/// Which of the two glued hexagon copies of a building block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Hexagon {
    /// The copy containing the bottom edge of the block.
    First,
    /// The copy containing the top edge of the block.
    Second,
}

/// Identifier of a Euclidean chart.
///
/// `i`/`j` are 1-based grid indices of the block on a surface (both 1 for a
/// standalone block); `i` counts columns (the radial direction in the
/// continuum limit), `j` counts rows (the angular direction).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChartId {
    /// The single chart of the continuum sector (Cartesian coordinates).
    Sector,
    /// One hexagon chart of block (i, j).
    Hex { i: u16, j: u16, hexagon: Hexagon },
}

/// A point together with the chart its coordinates refer to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartPoint {
    pub chart: ChartId,
    pub pos: Point,
}

impl ChartPoint {
    pub fn new(chart: ChartId, x: f64, y: f64) -> Self {
        Self { chart, pos: Point::new(x, y) }
    }
}

/// Point of the continuum sector in polar coordinates (radius, angle).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarPoint {
    pub r: f64,
    pub phi: f64,
}

impl PolarPoint {
    pub fn new(r: f64, phi: f64) -> Self {
        Self { r, phi }
    }
}

/// A frame (pair of tangent vectors) at a base point of a named chart.
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    pub chart: ChartId,
    pub base: Point,
    pub e1: Vec2,
    pub e2: Vec2,
}

/// Euclidean distance between two points of the same chart.
///
/// Errors with [`Error::ChartMismatch`] when the tags differ.
pub fn euclid_dist(p: &ChartPoint, q: &ChartPoint) -> Result<f64> {
    if p.chart != q.chart {
        return Err(Error::ChartMismatch(format!(
            "distance between {:?} and {:?}",
            p.chart, q.chart
        )));
    }
    Ok((p.pos - q.pos).norm())
}

/// Cartesian image (r cos phi, r sin phi) of a polar point.
pub fn polar_to_cart(p: &PolarPoint) -> Point {
    Point::new(p.r * p.phi.cos(), p.r * p.phi.sin())
}

/// Polar coordinates of a Cartesian point (principal angle branch).
pub fn cart_to_polar(p: &Point) -> PolarPoint {
    PolarPoint::new(p.coords.norm(), p.y.atan2(p.x))
}

/// The unique orientation-preserving rigid motion mapping segment
/// `(src.0, src.1)` onto `(dst.0, dst.1)` endpoint-to-endpoint.
///
/// The segments must have equal lengths (up to roundoff); no check is made
/// here because all call sites construct matching segments.
pub fn motion_from_segments(src: (Point, Point), dst: (Point, Point)) -> Motion {
    let vs = src.1 - src.0;
    let vd = dst.1 - dst.0;
    let angle = vd.y.atan2(vd.x) - vs.y.atan2(vs.x);
    let rot = Rotation2::new(angle);
    let translation = dst.0.coords - rot * src.0.coords;
    Motion::new(translation, angle)
}

/// Rotation angle of a rigid motion, in (-pi, pi].
pub fn rotation_angle(m: &Motion) -> f64 {
    m.rotation.angle()
}

/// Signed area of a simple polygon (positive when counterclockwise).
pub fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    let mut sum = 0.0;
    for k in 0..n {
        let p = poly[k];
        let q = poly[(k + 1) % n];
        sum += p.x * q.y - q.x * p.y;
    }
    0.5 * sum
}

/// Twice the signed area of triangle (a, b, c).
fn orient(a: &Point, b: &Point, c: &Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Distance from `p` to segment [a, b].
pub fn dist_point_segment(p: &Point, a: &Point, b: &Point) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Whether `p` lies within `tol` of segment [a, b].
pub fn on_segment(p: &Point, a: &Point, b: &Point, tol: f64) -> bool {
    dist_point_segment(p, a, b) <= tol
}

/// Which side of the directed line a->b the point c falls on:
/// +1 left, -1 right, 0 within `tol` of the line.
fn side(a: &Point, b: &Point, c: &Point, tol: f64) -> i32 {
    let len = (b - a).norm();
    if len == 0.0 {
        return 0;
    }
    let d = orient(a, b, c) / len;
    if d > tol {
        1
    } else if d < -tol {
        -1
    } else {
        0
    }
}

/// Whether the open interiors of segments [p1,p2] and [q1,q2] cross
/// transversally (shared endpoints and collinear overlap do not count).
pub fn segments_properly_cross(p1: &Point, p2: &Point, q1: &Point, q2: &Point, tol: f64) -> bool {
    side(p1, p2, q1, tol) * side(p1, p2, q2, tol) == -1
        && side(q1, q2, p1, tol) * side(q1, q2, p2, tol) == -1
}

/// Whether `p` lies inside or within `tol` of the boundary of the simple
/// polygon `poly`.
pub fn point_in_polygon(poly: &[Point], p: &Point, tol: f64) -> bool {
    let n = poly.len();
    for k in 0..n {
        if on_segment(p, &poly[k], &poly[(k + 1) % n], tol) {
            return true;
        }
    }
    // Crossing-number test; boundary-grazing cases were handled above.
    let mut inside = false;
    for k in 0..n {
        let a = poly[k];
        let b = poly[(k + 1) % n];
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

/// Conservative test that the straight segment [a, b] stays inside the
/// simple polygon `poly` (both endpoints are assumed inside or on the
/// boundary).
///
/// Rejects segments that properly cross a boundary edge, and — conservatively
/// — segments passing within `tol` of a polygon vertex other than at their
/// own endpoints (such paths are re-found as broken paths through that
/// vertex, so rejecting them here never loses a distance candidate).
pub fn segment_in_polygon(poly: &[Point], a: &Point, b: &Point, tol: f64) -> bool {
    let n = poly.len();
    for k in 0..n {
        let e1 = poly[k];
        let e2 = poly[(k + 1) % n];
        if segments_properly_cross(a, b, &e1, &e2, tol) {
            return false;
        }
    }
    for v in poly {
        if (v - a).norm() > tol && (v - b).norm() > tol && on_segment(v, a, b, tol) {
            return false;
        }
    }
    let mid = nalgebra::center(a, b);
    point_in_polygon(poly, &mid, tol)
}

/// Intersection parameters (t, u) with a + t(b-a) = c + u(d-c), or `None`
/// for (near-)parallel lines.
pub fn line_intersection_params(
    a: &Point,
    b: &Point,
    c: &Point,
    d: &Point,
) -> Option<(f64, f64)> {
    let r = b - a;
    let s = d - c;
    let denom = r.x * s.y - r.y * s.x;
    let scale = r.norm() * s.norm();
    if denom.abs() <= 1e-14 * scale.max(1e-300) {
        return None;
    }
    let qp = c - a;
    let t = (qp.x * s.y - qp.y * s.x) / denom;
    let u = (qp.x * r.y - qp.y * r.x) / denom;
    Some((t, u))
}

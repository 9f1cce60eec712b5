//! Small planar helpers shared by the mesh, basis and geometry code.

use nalgebra::{Matrix2, Vector2};

pub type Vec2 = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;

#[inline]
pub fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Twice the signed area of (a, b, c); positive when counterclockwise.
#[inline]
pub fn orient2(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    cross(b - a, c - a)
}

/// Barycentric coordinates of `p` with respect to (a, b, c).
#[inline]
pub fn barycentric(p: Vec2, a: Vec2, b: Vec2, c: Vec2) -> [f64; 3] {
    let d = orient2(a, b, c);
    let l0 = orient2(p, b, c) / d;
    let l1 = orient2(a, p, c) / d;
    [l0, l1, 1.0 - l0 - l1]
}

#[inline]
pub fn from_barycentric(l: [f64; 3], a: Vec2, b: Vec2, c: Vec2) -> Vec2 {
    a * l[0] + b * l[1] + c * l[2]
}

/// Intersection of the lines p + s·d and q + t·e, returned as (s, t).
pub fn line_intersection(p: Vec2, d: Vec2, q: Vec2, e: Vec2) -> Option<(f64, f64)> {
    let den = cross(d, e);
    if den.abs() <= 1e-14 * d.norm() * e.norm() {
        return None;
    }
    let w = q - p;
    Some((cross(w, e) / den, cross(w, d) / den))
}

/// Incenter of triangle (a, b, c).
pub fn incenter(a: Vec2, b: Vec2, c: Vec2) -> Vec2 {
    let la = (c - b).norm();
    let lb = (a - c).norm();
    let lc = (b - a).norm();
    (a * la + b * lb + c * lc) / (la + lb + lc)
}

//! Exact conversion of the quadratic-arc ruled surfaces into the rational Powell–Sabin space.

use std::f64::consts::SQRT_2;

use nalgebra::Vector3;

use super::GeometryMap;
use crate::error::{Error, Result};
use crate::geom::{Mat2, Vec2};
use crate::mesh::{builders, PsRefinement, Triangulation};
use crate::psbasis::{Jet, PsBasis, RationalBasis};
use crate::space::{Active, Space};

/// Homogeneous B-spline control points (w·x, w·y, w) of the quarter unit arc.
fn arc_controls() -> [[f64; 3]; 4] {
    let w = 0.25 * (2.0 + SQRT_2);
    let p = [[1.0, 0.0], [1.0, SQRT_2 - 1.0], [SQRT_2 - 1.0, 1.0], [0.0, 1.0]];
    let ws = [1.0, w, w, 1.0];
    let mut q = [[0.0; 3]; 4];
    for i in 0..4 {
        q[i] = [ws[i] * p[i][0], ws[i] * p[i][1], ws[i]];
    }
    q
}

/// Homogeneous arc component values and first two u-derivatives on one knot span.
///
/// `piece` 0 covers [0, ½], piece 1 covers [½, 1]; both are quadratic Bézier
/// curves and are evaluated as polynomials, so either may be used slightly outside its span.
fn arc_homogeneous(u: f64, piece: usize) -> [[f64; 3]; 3] {
    let q = arc_controls();
    let mid = [0, 1, 2].map(|c| 0.5 * (q[1][c] + q[2][c]));
    let (b0, b1, b2, t) = if piece == 0 {
        (q[0], q[1], mid, 2.0 * u)
    } else {
        (mid, q[2], q[3], 2.0 * u - 1.0)
    };
    let mut out = [[0.0; 3]; 3];
    for c in 0..3 {
        let s = 1.0 - t;
        out[0][c] = b0[c] * s * s + 2.0 * b1[c] * s * t + b2[c] * t * t;
        out[1][c] = 2.0 * (2.0 * (b1[c] - b0[c]) * s + 2.0 * (b2[c] - b1[c]) * t);
        out[2][c] = 4.0 * 2.0 * (b2[c] - 2.0 * b1[c] + b0[c]);
    }
    out
}

/// Point of the quarter unit arc at parameter u.
pub fn arc_point(u: f64) -> Vec2 {
    let h = arc_homogeneous(u, usize::from(u >= 0.5))[0];
    Vec2::new(h[0] / h[2], h[1] / h[2])
}

/// Convert a map given by homogeneous components into the rational space.
///
/// `comps(p, piece)` returns the jets of the numerators (first `dim`) and the denominator (last).
fn from_homogeneous(
    basis: PsBasis,
    dim: usize,
    comps: &dyn Fn(Vec2, usize) -> Vec<Jet>,
) -> Result<GeometryMap> {
    let mesh = basis.mesh().clone();
    check_knot_line(&mesh)?;
    let piece_of = |m: usize| -> usize {
        let [a, b, c] = mesh.triangle_points(m);
        usize::from((a.x + b.x + c.x) / 3.0 > 0.5)
    };
    let ncomp = dim + 1;
    let coeffs: Vec<Vec<f64>> = (0..ncomp)
        .map(|j| basis.interpolate(&|p, m| comps(p, piece_of(m))[j]))
        .collect();

    // every component lies in the space, so the interpolant must reproduce it
    let mut act = Active::default();
    let lattice = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.2, 0.3, 0.5], [0.6, 0.2, 0.2], [0.1, 0.1, 0.8]];
    for c in 0..basis.num_cells() {
        for l in lattice {
            basis.eval(c, l, &mut act);
            let p = basis.cell_point(c, l);
            let exact = comps(p, piece_of(c / 6));
            for j in 0..ncomp {
                let s = act.combine(&coeffs[j]).0;
                if (s - exact[j].0).abs() > 1e-12 * exact[j].0.abs().max(1.0) {
                    return Err(Error::Conversion(format!(
                        "homogeneous component {j} misses by {:e} at ({}, {})",
                        (s - exact[j].0).abs(),
                        p.x,
                        p.y
                    )));
                }
            }
        }
    }

    let weights = coeffs[dim].clone();
    if let Some(k) = weights.iter().position(|&w| !(w > 0.0)) {
        return Err(Error::Conversion(format!("weight {k} is not positive ({})", weights[k])));
    }
    let controls = (0..weights.len())
        .map(|k| {
            let mut p = [0.0; 3];
            for c in 0..dim {
                p[c] = coeffs[c][k] / weights[k];
            }
            p
        })
        .collect();
    GeometryMap::new(RationalBasis::new(basis, weights)?, controls, dim)
}

/// The knot line u = ½ must not cross any triangle.
fn check_knot_line(mesh: &Triangulation) -> Result<()> {
    for t in 0..mesh.num_triangles() {
        let pts = mesh.triangle_points(t);
        let lo = pts.iter().any(|p| p.x < 0.5);
        let hi = pts.iter().any(|p| p.x > 0.5);
        if lo && hi {
            return Err(Error::Conversion(format!("triangle {t} crosses the knot line u = 1/2")));
        }
    }
    Ok(())
}

fn jet(v: f64, du: f64, dv: f64, duu: f64, duv: f64, dvv: f64) -> Jet {
    (v, Vec2::new(du, dv), Mat2::new(duu, duv, duv, dvv))
}

/// Quarter annulus r1 ≤ |x| ≤ r2 in the first quadrant over the 4-triangle parameter mesh.
pub fn quarter_annulus(r1: f64, r2: f64) -> Result<GeometryMap> {
    quarter_annulus_on(&builders::annulus_parameter(), r1, r2)
}

/// Quarter annulus on any refinement of the parameter mesh that keeps u = ½ on edges.
///
/// v = 0 maps to the inner arc and v = 1 to the outer arc.
pub fn quarter_annulus_on(mesh: &Triangulation, r1: f64, r2: f64) -> Result<GeometryMap> {
    if !(r1 > 0.0 && r1 < r2) {
        return Err(Error::Validation(format!("radii must satisfy 0 < r1 < r2, got {r1}, {r2}")));
    }
    let basis = PsBasis::new(&PsRefinement::new(mesh)?)?;
    let dr = r2 - r1;
    from_homogeneous(basis, 2, &move |p, piece| {
        let h = arc_homogeneous(p.x, piece);
        let rho = r1 + dr * p.y;
        let num = |c: usize| jet(rho * h[0][c], rho * h[1][c], dr * h[0][c], rho * h[2][c], dr * h[1][c], 0.0);
        vec![num(0), num(1), jet(h[0][2], h[1][2], 0.0, h[2][2], 0.0, 0.0)]
    })
}

/// Quarter cylinder shell of radius r and height h over the 12-triangle parameter mesh.
pub fn cylinder_shell(r: f64, h: f64) -> Result<GeometryMap> {
    cylinder_shell_on(&builders::cylinder_parameter(), r, h)
}

/// Cylinder shell on a refinement of its parameter mesh; v = 0 maps to z = 0.
pub fn cylinder_shell_on(mesh: &Triangulation, r: f64, height: f64) -> Result<GeometryMap> {
    if !(r > 0.0 && height > 0.0) {
        return Err(Error::Validation(format!("radius and height must be positive, got {r}, {height}")));
    }
    let basis = PsBasis::new(&PsRefinement::new(mesh)?)?;
    from_homogeneous(basis, 3, &move |p, piece| {
        let a = arc_homogeneous(p.x, piece);
        let v = p.y;
        vec![
            jet(r * a[0][0], r * a[1][0], 0.0, r * a[2][0], 0.0, 0.0),
            jet(r * a[0][1], r * a[1][1], 0.0, r * a[2][1], 0.0, 0.0),
            jet(height * v * a[0][2], height * v * a[1][2], height * a[0][2], height * v * a[2][2], height * a[1][2], 0.0),
            jet(a[0][2], a[1][2], 0.0, a[2][2], 0.0, 0.0),
        ]
    })
}

impl GeometryMap {
    /// Mapped point at parameter `p`, for boundary and surface checks.
    pub fn point(&self, p: Vec2) -> Result<Vector3<f64>> {
        self.map_point(p)
    }
}

//! Parametric meshes of the named test domains.

use std::f64::consts::PI;

use super::triangulation::Triangulation;
use crate::geom::Vec2;

fn build(points: &[(f64, f64)], tris: Vec<[usize; 3]>) -> Triangulation {
    let points = points.iter().map(|&(x, y)| Vec2::new(x, y)).collect();
    Triangulation::new(points, tris).expect("builder meshes are conforming")
}

/// Unit square split along the diagonal (0,0)-(1,1).
pub fn unit_square() -> Triangulation {
    build(
        &[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)],
        vec![[0, 1, 2], [0, 2, 3]],
    )
}

/// Regular pentagon fan around the origin; vertex 1 is (-sin π/5, -cos π/5).
pub fn pentagon() -> Triangulation {
    let mut pts = vec![(0.0, 0.0)];
    let (s, c) = ((PI / 5.0).sin(), (PI / 5.0).cos());
    for m in 0..5 {
        let a = 2.0 * PI * m as f64 / 5.0;
        let (sa, ca) = a.sin_cos();
        pts.push((ca * -s - sa * -c, sa * -s + ca * -c));
    }
    let tris = (0..5).map(|m| [0, 1 + m, 1 + (m + 1) % 5]).collect();
    build(&pts, tris)
}

/// Θ = [0,1]² with boundary vertices at u = 1/2; diagonals mirror across u = 1/2.
pub fn annulus_parameter() -> Triangulation {
    build(
        &[(0.0, 0.0), (0.5, 0.0), (1.0, 0.0), (1.0, 1.0), (0.5, 1.0), (0.0, 1.0)],
        vec![[0, 1, 4], [0, 4, 5], [1, 2, 4], [2, 3, 4]],
    )
}

/// Θ = [0,1]² with u ∈ {0, 1/2, 1} and v ∈ {0, 1/3, 2/3, 1}.
pub fn cylinder_parameter() -> Triangulation {
    let us = [0.0, 0.5, 1.0];
    let vs = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
    let mut pts = Vec::new();
    for &v in &vs {
        for &u in &us {
            pts.push((u, v));
        }
    }
    let id = |i: usize, j: usize| 3 * j + i;
    let mut tris = Vec::new();
    for j in 0..3 {
        // left cell: diagonal (0, v_j)-(1/2, v_{j+1})
        tris.push([id(0, j), id(1, j), id(1, j + 1)]);
        tris.push([id(0, j), id(1, j + 1), id(0, j + 1)]);
        // right cell: diagonal (1, v_j)-(1/2, v_{j+1})
        tris.push([id(1, j), id(2, j), id(1, j + 1)]);
        tris.push([id(2, j), id(2, j + 1), id(1, j + 1)]);
    }
    build(&pts, tris)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        let p = pentagon();
        assert_eq!((p.num_vertices(), p.num_edges(), p.num_triangles()), (6, 10, 5));
        let a = annulus_parameter();
        assert_eq!((a.num_vertices(), a.num_edges(), a.num_triangles()), (6, 9, 4));
        let c = cylinder_parameter();
        assert_eq!((c.num_vertices(), c.num_triangles()), (12, 12));
    }

    #[test]
    fn pentagon_first_vertex() {
        let p = pentagon();
        let v = p.vertex(1);
        assert!((v - Vec2::new(-(PI / 5.0).sin(), -(PI / 5.0).cos())).norm() < 1e-15);
    }
}

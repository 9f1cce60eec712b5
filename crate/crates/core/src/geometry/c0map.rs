//! Continuous piecewise cubic maps, one Bézier patch per triangle and component.

use std::f64::consts::PI;

use nalgebra::{Matrix3x2, Vector3};

use super::{MapJet, Mapping};
use crate::bernstein::{index, BernsteinJet};
use crate::error::{Error, Result};
use crate::geom::{barycentric, Mat2, Vec2};
use crate::mesh::{builders, Triangulation};
use crate::space::Active;

/// Shared edge ordinates must agree to this tolerance.
pub const C0_TOL: f64 = 1e-13;

/// A C0 piecewise cubic map over a triangulation.
///
/// `bound[m]` names the patch used for macro-triangle m of the mesh it was bound to;
/// on its own mesh this is the identity.
#[derive(Clone, Debug)]
pub struct C0Map {
    mesh: Triangulation,
    dim: usize,
    ordinates: Vec<[[f64; 10]; 3]>,
    bound: Vec<usize>,
}

impl C0Map {
    /// Ordinates are in the vertex order of each mesh triangle; unused components are zero.
    pub fn new(mesh: Triangulation, dim: usize, ordinates: Vec<[[f64; 10]; 3]>) -> Result<Self> {
        if !(dim == 2 || dim == 3) {
            return Err(Error::Validation(format!("map dimension {dim} is not 2 or 3")));
        }
        if ordinates.len() != mesh.num_triangles() {
            return Err(Error::Validation(format!(
                "{} patches for {} triangles",
                ordinates.len(),
                mesh.num_triangles()
            )));
        }
        let map = C0Map {
            bound: (0..mesh.num_triangles()).collect(),
            mesh,
            dim,
            ordinates,
        };
        let gap = map.continuity_defect();
        if gap > C0_TOL {
            return Err(Error::Validation(format!("patches disagree by {gap:e} on a shared edge")));
        }
        Ok(map)
    }

    pub fn mesh(&self) -> &Triangulation {
        &self.mesh
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn ordinates(&self, t: usize) -> &[[f64; 10]; 3] {
        &self.ordinates[t]
    }

    /// Ordinates along the edge from local vertex a to local vertex b, starting at a.
    fn edge_ordinates(&self, t: usize, a: usize, b: usize, comp: usize) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (s, o) in out.iter_mut().enumerate() {
            let mut m = [0; 3];
            m[a] = 3 - s;
            m[b] = s;
            *o = self.ordinates[t][comp][index(m[0], m[1], m[2])];
        }
        out
    }

    /// Largest mismatch of shared edge ordinates.
    pub fn continuity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for l in 0..self.mesh.num_edges() {
            let (t0, Some(t1)) = self.mesh.edge_triangles(l) else {
                continue;
            };
            let [p, q] = self.mesh.edge(l);
            let pos = |t: usize, v: usize| self.mesh.triangle(t).iter().position(|&w| w == v).unwrap();
            for c in 0..self.dim {
                let e0 = self.edge_ordinates(t0, pos(t0, p), pos(t0, q), c);
                let e1 = self.edge_ordinates(t1, pos(t1, p), pos(t1, q), c);
                for s in 0..4 {
                    worst = worst.max((e0[s] - e1[s]).abs());
                }
            }
        }
        worst
    }

    /// The same map with patches assigned to the macro-triangles of a nested refinement `fine`.
    ///
    /// Each fine triangle takes the patch of the coarse triangle containing its centroid.
    pub fn bind(&self, fine: &Triangulation) -> Result<C0Map> {
        let mut bound = Vec::with_capacity(fine.num_triangles());
        for m in 0..fine.num_triangles() {
            let [a, b, c] = fine.triangle_points(m);
            bound.push(self.locate((a + b + c) / 3.0)?);
        }
        Ok(C0Map {
            bound,
            ..self.clone()
        })
    }

    /// Triangle of the own mesh containing `p`.
    pub fn locate(&self, p: Vec2) -> Result<usize> {
        self.mesh.locate_triangle(p)
    }

    /// Jet of patch `t` at `p`.
    pub fn patch_jet(&self, t: usize, p: Vec2) -> MapJet {
        let tri = self.mesh.triangle_points(t);
        let l = barycentric(p, tri[0], tri[1], tri[2]);
        self.jet_bary(t, l)
    }

    fn jet_bary(&self, t: usize, l: [f64; 3]) -> MapJet {
        let bj = BernsteinJet::new(&self.mesh.triangle_points(t), l);
        let mut j = MapJet {
            x: Vector3::zeros(),
            jac: Matrix3x2::zeros(),
            hess: [Mat2::zeros(); 3],
        };
        for c in 0..self.dim {
            let (v, g, h) = bj.apply(&self.ordinates[t][c]);
            j.x[c] = v;
            j.jac[(c, 0)] = g.x;
            j.jac[(c, 1)] = g.y;
            j.hess[c] = h;
        }
        j
    }

    /// Jet at `p` inside macro-triangle `m` of the bound mesh.
    pub fn jet(&self, m: usize, p: Vec2) -> MapJet {
        self.patch_jet(self.bound[m], p)
    }

    pub fn eval(&self, p: Vec2) -> Result<Vector3<f64>> {
        Ok(self.patch_jet(self.locate(p)?, p).x)
    }
}

impl Mapping for C0Map {
    fn num_cells(&self) -> usize {
        self.mesh.num_triangles()
    }
    fn cell_points(&self, c: usize) -> [Vec2; 3] {
        self.mesh.triangle_points(c)
    }
    fn cell_jet(&self, c: usize, l: [f64; 3], _act: &mut Active) -> MapJet {
        self.jet_bary(c, l)
    }
}

/// Control point at BB index (3 − j, j − k, k) of the base pentagon patch, 0 ≤ k ≤ j ≤ 3.
pub fn pentagon_control_point(j: usize, k: usize) -> Vec2 {
    if j == 0 {
        return Vec2::zeros();
    }
    let a = (j as f64 - 2.0 * k as f64) * PI / (5.0 * j as f64);
    Vec2::new(-a.sin(), -a.cos()) * (j as f64 / 3.0)
}

/// The pentagon map: five rotations of the base patch over the pentagon fan.
pub fn pentagon() -> (C0Map, Triangulation) {
    let mesh = builders::pentagon();
    let ordinates = (0..5)
        .map(|m| {
            let (s, c) = (2.0 * PI * m as f64 / 5.0).sin_cos();
            let mut o = [[0.0; 10]; 3];
            for j in 0..=3 {
                for k in 0..=j {
                    let p = pentagon_control_point(j, k);
                    let n = index(3 - j, j - k, k);
                    o[0][n] = c * p.x - s * p.y;
                    o[1][n] = s * p.x + c * p.y;
                }
            }
            o
        })
        .collect();
    let map = C0Map::new(mesh.clone(), 2, ordinates).expect("rotated patches match on shared edges");
    (map, mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_control_points() {
        let p = pentagon_control_point(3, 0);
        assert!((p - Vec2::new(-(PI / 5.0).sin(), -(PI / 5.0).cos())).norm() < 1e-15);
        assert_eq!(pentagon_control_point(0, 0), Vec2::zeros());
    }

    #[test]
    fn pentagon_is_continuous_and_fixes_corners() {
        let (g, mesh) = pentagon();
        assert!(g.continuity_defect() <= C0_TOL);
        for v in 0..mesh.num_vertices() {
            let x = g.eval(mesh.vertex(v)).unwrap();
            assert!((x.xy() - mesh.vertex(v)).norm() < 1e-14);
        }
    }
}

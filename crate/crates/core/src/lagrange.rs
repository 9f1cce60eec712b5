//! C0 cubic Lagrange elements, the comparison baseline.
//!
//! DOFs: vertices first, then two points per edge at thirds (the one nearer
//! `edge(l)[0]` first), then one barycenter per triangle.

use std::sync::OnceLock;

use nalgebra::SMatrix;

use crate::bernstein::{bernstein_values, BernsteinJet, MULTI};
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::geometry::C0Map;
use crate::mesh::{Triangulation, LOCATE_TOL};
use crate::space::{Active, Space};

/// BB ordinates of the ten nodal functions: column n holds nodal function n.
fn nodal_to_bb() -> &'static SMatrix<f64, 10, 10> {
    static M: OnceLock<SMatrix<f64, 10, 10>> = OnceLock::new();
    M.get_or_init(|| {
        // the BB domain points coincide with the Lagrange nodes
        let mut vals = SMatrix::<f64, 10, 10>::zeros();
        for (p, m) in MULTI.iter().enumerate() {
            let l = m.map(|e| e as f64 / 3.0);
            let b = bernstein_values(l);
            for q in 0..10 {
                vals[(p, q)] = b[q];
            }
        }
        vals.try_inverse().expect("cubic Bernstein collocation matrix is invertible")
    })
}

#[derive(Clone, Debug)]
pub struct LagrangeBasis {
    mesh: Triangulation,
    /// Global DOF of each local node, in `MULTI` order.
    local: Vec<[usize; 10]>,
    boundary: Vec<bool>,
}

impl LagrangeBasis {
    pub fn new(mesh: &Triangulation) -> Self {
        let nv = mesh.num_vertices();
        let ne = mesh.num_edges();
        let mut local = Vec::with_capacity(mesh.num_triangles());
        for t in 0..mesh.num_triangles() {
            let tri = mesh.triangle(t);
            let mut dofs = [0; 10];
            for (n, m) in MULTI.iter().enumerate() {
                let nonzero: Vec<usize> = (0..3).filter(|&i| m[i] > 0).collect();
                dofs[n] = match nonzero.len() {
                    1 => tri[nonzero[0]],
                    2 => {
                        let (a, b) = (nonzero[0], nonzero[1]);
                        let l = mesh.edge_between(tri[a], tri[b]).expect("triangle edge");
                        let first = mesh.edge(l)[0];
                        let near_first = if tri[a] == first { m[a] == 2 } else { m[b] == 2 };
                        nv + 2 * l + usize::from(!near_first)
                    }
                    _ => nv + 2 * ne + t,
                };
            }
            local.push(dofs);
        }
        let mut boundary = vec![false; nv + 2 * ne + mesh.num_triangles()];
        for l in mesh.boundary_edges() {
            let [a, b] = mesh.edge(l);
            boundary[a] = true;
            boundary[b] = true;
            boundary[nv + 2 * l] = true;
            boundary[nv + 2 * l + 1] = true;
        }
        LagrangeBasis {
            mesh: mesh.clone(),
            local,
            boundary,
        }
    }

    /// Location of node `k`.
    pub fn node(&self, k: usize) -> Vec2 {
        let nv = self.mesh.num_vertices();
        let ne = self.mesh.num_edges();
        if k < nv {
            self.mesh.vertex(k)
        } else if k < nv + 2 * ne {
            let l = (k - nv) / 2;
            let [a, b] = self.mesh.edge(l);
            let (pa, pb) = (self.mesh.vertex(a), self.mesh.vertex(b));
            if (k - nv) % 2 == 0 {
                (pa * 2.0 + pb) / 3.0
            } else {
                (pa + pb * 2.0) / 3.0
            }
        } else {
            let [a, b, c] = self.mesh.triangle_points(k - nv - 2 * ne);
            (a + b + c) / 3.0
        }
    }

    pub fn is_boundary_node(&self, k: usize) -> bool {
        self.boundary[k]
    }

    /// Number of nodes on ∂Θ: |V^b| + 2|E^b|.
    pub fn boundary_count(&self) -> usize {
        self.mesh.num_boundary_vertices() + 2 * self.mesh.num_boundary_edges()
    }

    pub fn local_dofs(&self, t: usize) -> &[usize; 10] {
        &self.local[t]
    }

    /// BB ordinates on triangle t of Σ uₖ φₖ.
    pub fn ordinates(&self, t: usize, nodal: &[f64]) -> [f64; 10] {
        let m = nodal_to_bb();
        let mut out = [0.0; 10];
        for (n, &k) in self.local[t].iter().enumerate() {
            for q in 0..10 {
                out[q] += m[(q, n)] * nodal[k];
            }
        }
        out
    }
}

impl Space for LagrangeBasis {
    fn dim(&self) -> usize {
        self.boundary.len()
    }
    fn mesh(&self) -> &Triangulation {
        &self.mesh
    }
    fn num_cells(&self) -> usize {
        self.mesh.num_triangles()
    }
    fn cell_points(&self, c: usize) -> [Vec2; 3] {
        self.mesh.triangle_points(c)
    }
    fn cell_group(&self, c: usize) -> usize {
        c
    }
    fn group_functions(&self, g: usize) -> &[usize] {
        &self.local[g]
    }
    fn group_cells(&self, g: usize) -> Vec<usize> {
        vec![g]
    }
    fn eval(&self, c: usize, l: [f64; 3], out: &mut Active) {
        let jet = BernsteinJet::new(&self.mesh.triangle_points(c), l);
        let m = nodal_to_bb();
        out.clear();
        for (n, &k) in self.local[c].iter().enumerate() {
            let ord: [f64; 10] = std::array::from_fn(|q| m[(q, n)]);
            let (v, g, h) = jet.apply(&ord);
            out.push(k, v, g, h);
        }
    }
    fn locate(&self, p: Vec2) -> Result<(usize, [f64; 3])> {
        let mut best = (0, [0.0; 3], f64::NEG_INFINITY);
        for t in 0..self.mesh.num_triangles() {
            let [a, b, c] = self.mesh.triangle_points(t);
            let l = crate::geom::barycentric(p, a, b, c);
            let w = l[0].min(l[1]).min(l[2]);
            if w >= 0.0 {
                return Ok((t, l));
            }
            if w > best.2 {
                best = (t, l, w);
            }
        }
        if best.2 < -LOCATE_TOL {
            return Err(Error::Domain(format!("point ({}, {}) outside the mesh", p.x, p.y)));
        }
        let l = best.1.map(|x| x.max(0.0));
        let s: f64 = l.iter().sum();
        Ok((best.0, l.map(|x| x / s)))
    }
    fn is_c1(&self) -> bool {
        false
    }
}

/// The C0 piecewise cubic map taking node k to `images[k]`.
pub fn isoparametric_c0_map(basis: &LagrangeBasis, images: &[[f64; 3]], dim: usize) -> Result<C0Map> {
    if images.len() != basis.dim() {
        return Err(Error::Validation(format!(
            "{} node images for {} nodes",
            images.len(),
            basis.dim()
        )));
    }
    let ords = (0..basis.mesh.num_triangles())
        .map(|t| {
            let mut o = [[0.0; 10]; 3];
            for (c, oc) in o.iter_mut().enumerate().take(dim) {
                let comp: Vec<f64> = images.iter().map(|p| p[c]).collect();
                *oc = basis.ordinates(t, &comp);
            }
            o
        })
        .collect();
    C0Map::new(basis.mesh.clone(), dim, ords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::builders;

    #[test]
    fn square_dof_count() {
        let b = LagrangeBasis::new(&builders::unit_square());
        assert_eq!(b.dim(), 16);
        let interior = (0..b.dim()).filter(|&k| !b.is_boundary_node(k)).count();
        assert_eq!(interior, b.dim() - b.boundary_count());
    }

    #[test]
    fn nodal_property() {
        let b = LagrangeBasis::new(&builders::pentagon());
        let mut act = Active::default();
        for t in 0..b.num_cells() {
            for (n, m) in MULTI.iter().enumerate() {
                b.eval(t, m.map(|e| e as f64 / 3.0), &mut act);
                for i in 0..act.len() {
                    let expect = if i == n { 1.0 } else { 0.0 };
                    assert!((act.val[i] - expect).abs() < 1e-13);
                }
                assert!((b.node(b.local_dofs(t)[n]) - b.cell_point(t, m.map(|e| e as f64 / 3.0))).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn identity_images_give_identity() {
        let b = LagrangeBasis::new(&builders::pentagon());
        let images: Vec<[f64; 3]> = (0..b.dim()).map(|k| [b.node(k).x, b.node(k).y, 0.0]).collect();
        let g = isoparametric_c0_map(&b, &images, 2).unwrap();
        let p = Vec2::new(0.1, -0.2);
        assert!((g.eval(p).unwrap().xy() - p).norm() < 1e-14);
    }
}

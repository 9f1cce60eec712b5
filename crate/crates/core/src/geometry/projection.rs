//! Projection of a C0 piecewise cubic map into the C1 Powell–Sabin space.
//!
//! Boundary-active coefficients reproduce the boundary trace of G exactly; the
//! remaining ones minimize Σ |F − G|² + h² |∇F − ∇G|² + 0.1 h⁴ |∇²F − ∇²G|² at degree-4
//! quadrature points. G is smooth inside each macro-triangle, so the Hessian term keeps
//! the second-derivative jumps of F across micro-edges small; those jumps would otherwise
//! limit the approximation order once F is evaluated on refined meshes.

use super::{C0Map, GeometryMap, MapJet};
use crate::boundary::{boundary_dof_partition, ps_boundary_counts};
use crate::error::{Error, Result};
use crate::geom::{cross, Vec2};
use crate::linalg::{solve_spd, CsrMatrix};
use crate::mesh::VertexKind;
use crate::psbasis::{PsBasis, RationalBasis};
use crate::quadrature::quad_rule;
use crate::space::{Active, Space};

/// Quadrature degree of the least-squares fit (six points per micro-triangle).
const FIT_DEGREE: usize = 4;
/// Relative weight of the Hessian term; 0.1 keeps ω(F) within 1e-3 of ω(G) on the pentagon.
const HESSIAN_WEIGHT: f64 = 0.1;
/// Degree of the rule on which det J is checked.
const CHECK_DEGREE: usize = 8;

/// Tangential derivative of G along boundary edge `l` at its vertex `v`, per component.
fn tangent_derivative(g: &C0Map, basis: &PsBasis, l: usize, v: usize) -> (Vec2, [f64; 3]) {
    let mesh = basis.mesh();
    let [a, b] = mesh.edge(l);
    let other = if a == v { b } else { a };
    let tau = (mesh.vertex(other) - mesh.vertex(v)).normalize();
    let t = mesh.edge_triangles(l).0;
    let j = g.jet(t, mesh.vertex(v));
    let mut d = [0.0; 3];
    for (c, dc) in d.iter_mut().enumerate() {
        *dc = j.jac[(c, 0)] * tau.x + j.jac[(c, 1)] * tau.y;
    }
    (tau, d)
}

/// Boundary-exact coefficients of G for every boundary vertex and edge function, per component.
fn boundary_coefficients(g: &C0Map, basis: &PsBasis) -> Vec<Option<[f64; 3]>> {
    let mesh = basis.mesh();
    let nv = mesh.num_vertices();
    let mut fixed: Vec<Option<[f64; 3]>> = vec![None; basis.dim()];
    for v in 0..nv {
        let kind = mesh.vertex_kind(v);
        if kind == VertexKind::Interior {
            continue;
        }
        let p = mesh.vertex(v);
        let x = g.jet(mesh.vertex_triangles(v)[0], p).x;
        let edges: Vec<usize> = mesh
            .boundary_edges()
            .filter(|&l| mesh.edge(l).contains(&v))
            .collect();
        let (t0, d0) = tangent_derivative(g, basis, edges[0], v);
        let (t1, d1) = tangent_derivative(g, basis, edges[1], v);
        let q = basis.configs()[v].q;
        for r in 0..3 {
            let dq = q[r] - p;
            let mut c = [0.0; 3];
            for comp in 0..3 {
                c[comp] = x[comp]
                    + if kind == VertexKind::Corner {
                        // affine data whose directional derivatives match both boundary lines
                        let det = cross(t0, t1);
                        let s0 = cross(dq, t1) / det;
                        let s1 = cross(t0, dq) / det;
                        s0 * d0[comp] + s1 * d1[comp]
                    } else {
                        dq.dot(&t0) * d0[comp]
                    };
            }
            fixed[basis.vertex_index(v, r)] = Some(c);
        }
    }
    for l in mesh.boundary_edges() {
        let [a, b] = mesh.edge(l);
        let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
        let e = basis.refinement().edge_split(l);
        let tau = (pb - pa).normalize();
        let j = g.jet(mesh.edge_triangles(l).0, e);
        let (ta, tb) = (-(e - pa).norm(), (pb - e).norm());
        let mut c = [0.0; 3];
        for comp in 0..3 {
            let d1 = j.jac[(comp, 0)] * tau.x + j.jac[(comp, 1)] * tau.y;
            let d2 = tau.dot(&(j.hess[comp] * tau));
            c[comp] = j.x[comp] + d1 * (ta + tb) / 3.0 + d2 * ta * tb / 6.0;
        }
        fixed[basis.edge_index(l, 0)] = Some(c);
    }
    fixed
}

/// C1 map F with F = G on ∂Θ; `g` must be bound to the mesh of `basis`.
pub fn project_to_ps(g: &C0Map, basis: PsBasis) -> Result<GeometryMap> {
    let dim = g.dim();
    let mesh = basis.mesh().clone();
    let skeleton = boundary_dof_partition(&basis, 0, Some(ps_boundary_counts(&mesh).0))?;
    let exact = boundary_coefficients(g, &basis);
    let mut controls = vec![[0.0; 3]; basis.dim()];
    for &k in skeleton.boundary() {
        controls[k] = exact[k].ok_or_else(|| {
            Error::Projection(format!("boundary-active function {k} has no trace formula"))
        })?;
    }

    let pos = skeleton.interior_position();
    let n = skeleton.n;
    let h2 = mesh.h().powi(2);
    let h4 = HESSIAN_WEIGHT * h2 * h2;
    let rule = quad_rule(FIT_DEGREE)?;
    let mut trip = Vec::new();
    let mut rhs = vec![vec![0.0; n]; dim];
    let mut act = Active::default();
    for c in 0..basis.num_cells() {
        let m = basis.cell_group(c);
        let area = basis.cell_area(c);
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let p = basis.cell_point(c, *l);
            let target = g.jet(m, p);
            basis.eval(c, *l, &mut act);
            let fixed = MapJet::from_active(&act, &controls, dim);
            let wq = w * area;
            for a in 0..act.len() {
                let Some(i) = pos[act.idx[a]] else { continue };
                for b in 0..act.len() {
                    if let Some(j) = pos[act.idx[b]] {
                        let v = act.val[a] * act.val[b]
                            + h2 * act.grad[a].dot(&act.grad[b])
                            + h4 * act.hess[a].dot(&act.hess[b]);
                        trip.push((i, j, wq * v));
                    }
                }
                for comp in 0..dim {
                    let dv = target.x[comp] - fixed.x[comp];
                    let dg = Vec2::new(
                        target.jac[(comp, 0)] - fixed.jac[(comp, 0)],
                        target.jac[(comp, 1)] - fixed.jac[(comp, 1)],
                    );
                    let dh = target.hess[comp] - fixed.hess[comp];
                    rhs[comp][i] += wq * (act.val[a] * dv + h2 * act.grad[a].dot(&dg) + h4 * act.hess[a].dot(&dh));
                }
            }
        }
    }
    let sol = solve_spd(&CsrMatrix::from_triplets(n, trip), &rhs)?;
    for (i, &k) in skeleton.interior().iter().enumerate() {
        for comp in 0..dim {
            controls[k][comp] = sol[comp][i];
        }
    }
    let f = GeometryMap::new(RationalBasis::unit(basis), controls, dim)?;
    if dim == 2 {
        let (d, at) = super::min_det(&f, quad_rule(CHECK_DEGREE)?);
        if !(d > 0.0) {
            return Err(Error::Projection(format!(
                "det J = {d:e} at ({}, {}) after projection",
                at.x, at.y
            )));
        }
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{pentagon, winslow_energy, Mapping};
    use crate::mesh::PsRefinement;

    #[test]
    fn pentagon_projection_matches_reported_ranges() {
        let (g, mesh) = pentagon();
        let rule = quad_rule(8).unwrap();
        let eg = winslow_energy(&g, rule);
        assert!((eg - 2.0666).abs() <= 5e-4, "energy of G {eg}");
        let f = project_to_ps(&g, PsBasis::new(&PsRefinement::new(&mesh).unwrap()).unwrap()).unwrap();
        let ef = winslow_energy(&f, rule);
        let (dmin, _) = super::super::min_det(&f, rule);
        let mut act = Active::default();
        let dmax = (0..f.num_cells())
            .flat_map(|c| rule.points.iter().map(move |l| (c, *l)))
            .map(|(c, l)| f.cell_jet(c, l, &mut act).jac.fixed_view::<2, 2>(0, 0).determinant())
            .fold(f64::MIN, f64::max);
        println!("energy G {eg}, F {ef}, det in [{dmin}, {dmax}]");
        assert!(ef <= 2.075 && dmin > 0.0 && dmax < 1.6);
    }

    #[test]
    fn projection_preserves_the_boundary_trace() {
        let (g, mesh) = pentagon();
        let f = project_to_ps(&g, PsBasis::new(&PsRefinement::new(&mesh).unwrap()).unwrap()).unwrap();
        for l in mesh.boundary_edges() {
            let [a, b] = mesh.edge(l);
            for i in 0..100 {
                let s = i as f64 / 99.0;
                let p = mesh.vertex(a) * (1.0 - s) + mesh.vertex(b) * s;
                let d = (f.map_point(p).unwrap() - g.eval(p).unwrap()).norm();
                assert!(d <= 1e-11, "boundary gap {d:e}");
            }
        }
    }
}

//! Randomized invariants of meshes, bases, geometry maps, quadrature and file formats.

use std::collections::BTreeSet;

use proptest::prelude::*;

use ps3::boundary::{boundary_dof_partition, ps_boundary_counts};
use ps3::geom::{barycentric, Mat2, Vec2};
use ps3::geometry::{cylinder_shell, quarter_annulus};
use ps3::io::{self, VtkPolyData};
use ps3::mesh::{builders, dyadic_refine, local_refine, PsRefinement, Triangulation};
use ps3::psbasis::{Jet, PsBasis, RationalBasis};
use ps3::quadrature::quad_rule;
use ps3::space::{Active, Space};
use ps3::study::{order_h, order_ndof};

/// Square refined twice (spacing 1/4) with interior vertices moved by at most `amp`.
fn jittered_square(shifts: &[(f64, f64)], amp: f64) -> Triangulation {
    let m = dyadic_refine(&dyadic_refine(&builders::unit_square()));
    let pts = m
        .vertices()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            if m.is_boundary_vertex(i) {
                *v
            } else {
                let (dx, dy) = shifts[i % shifts.len()];
                *v + Vec2::new(dx, dy) * amp
            }
        })
        .collect();
    Triangulation::new(pts, m.triangles().to_vec()).expect("small jitter keeps the mesh valid")
}

fn shifts() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 9)
}

fn bary() -> impl Strategy<Value = [f64; 3]> {
    (0.0..1.0f64, 0.0..1.0f64).prop_map(|(a, b)| {
        let (a, b) = if a + b > 1.0 { (1.0 - a, 1.0 - b) } else { (a, b) };
        [1.0 - a - b, a, b]
    })
}

fn sum_values(act: &Active) -> f64 {
    act.val.iter().sum()
}

/// Value, gradient and Hessian in the cell polynomial at an arbitrary point (extrapolated).
fn cell_jet(space: &dyn Space, c: usize, p: Vec2, k: usize, act: &mut Active) -> (f64, Vec2, Mat2) {
    let [a, b, d] = space.cell_points(c);
    space.eval(c, barycentric(p, a, b, d), act);
    let n = act.idx.iter().position(|&j| j == k).expect("function active on its cell");
    (act.val[n], act.grad[n], act.hess[n])
}

fn cubic(c: &[f64]) -> impl Fn(Vec2, usize) -> Jet + '_ {
    move |p: Vec2, _| {
        let (x, y) = (p.x, p.y);
        let v = c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y
            + c[6] * x * x * x + c[7] * x * x * y + c[8] * x * y * y + c[9] * y * y * y;
        let gx = c[1] + 2.0 * c[3] * x + c[4] * y + 3.0 * c[6] * x * x + 2.0 * c[7] * x * y + c[8] * y * y;
        let gy = c[2] + c[4] * x + 2.0 * c[5] * y + c[7] * x * x + 2.0 * c[8] * x * y + 3.0 * c[9] * y * y;
        let hxx = 2.0 * c[3] + 6.0 * c[6] * x + 2.0 * c[7] * y;
        let hxy = c[4] + 2.0 * c[7] * x + 2.0 * c[8] * y;
        let hyy = 2.0 * c[5] + 2.0 * c[8] * x + 6.0 * c[9] * y;
        (v, Vec2::new(gx, gy), Mat2::new(hxx, hxy, hxy, hyy))
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn counting_identities(s in shifts()) {
        let m = jittered_square(&s, 0.04);
        let b = PsBasis::new(&PsRefinement::new(&m).unwrap()).unwrap();
        let (nv, ne, nt, nb) = (m.num_vertices(), m.num_edges(), m.num_triangles(), m.num_boundary_vertices());
        prop_assert_eq!(b.dim(), 3 * nv + 2 * ne);
        prop_assert_eq!(nt, 2 * nv - nb - 2);
        let (b0, b1) = ps_boundary_counts(&m);
        prop_assert_eq!(b0, 4 * m.num_corner_vertices() + 3 * m.num_collinear_vertices());
        prop_assert_eq!(b1, 5 * nb);
        prop_assert_eq!(boundary_dof_partition(&b, 0, None).unwrap().b, b0);
        prop_assert_eq!(boundary_dof_partition(&b, 1, None).unwrap().b, b1);
    }

    #[test]
    fn partition_of_unity_and_nonnegativity(s in shifts(), l in bary(), cell in 0usize..192) {
        let m = jittered_square(&s, 0.04);
        let b = PsBasis::new(&PsRefinement::new(&m).unwrap()).unwrap();
        let mut act = Active::default();
        b.eval(cell, l, &mut act);
        prop_assert!((sum_values(&act) - 1.0).abs() <= 1e-12);
        prop_assert!(act.val.iter().all(|&v| v >= -1e-12));
        let g: Vec2 = act.grad.iter().sum();
        prop_assert!(g.norm() <= 1e-10);
    }

    #[test]
    fn rational_partition_of_unity(s in shifts(), w in prop::collection::vec(0.5..2.0f64, 8), l in bary(), cell in 0usize..192) {
        let m = jittered_square(&s, 0.04);
        let b = PsBasis::new(&PsRefinement::new(&m).unwrap()).unwrap();
        let weights = (0..b.dim()).map(|k| w[k % w.len()]).collect();
        let r = RationalBasis::new(b, weights).unwrap();
        let mut act = Active::default();
        r.eval(cell, l, &mut act);
        prop_assert!((sum_values(&act) - 1.0).abs() <= 1e-12);
        prop_assert!(act.val.iter().all(|&v| v >= -1e-12));
    }

    #[test]
    fn derivatives_match_finite_differences(s in shifts(), l in bary(), cell in 0usize..192, pick in 0usize..1000) {
        let m = jittered_square(&s, 0.04);
        let b = PsBasis::new(&PsRefinement::new(&m).unwrap()).unwrap();
        let mut act = Active::default();
        b.eval(cell, l, &mut act);
        let k = act.idx[pick % act.len()];
        let p = b.cell_point(cell, l);
        let (_, g, h) = cell_jet(&b, cell, p, k, &mut act);
        let e = 1e-5;
        let mut fd_g = Vec2::zeros();
        let mut fd_h = Mat2::zeros();
        for a in 0..2 {
            let mut dp = Vec2::zeros();
            dp[a] = e;
            let (vp, gp, _) = cell_jet(&b, cell, p + dp, k, &mut act);
            let (vm, gm, _) = cell_jet(&b, cell, p - dp, k, &mut act);
            fd_g[a] = (vp - vm) / (2.0 * e);
            let col = (gp - gm) / (2.0 * e);
            fd_h[(0, a)] = col.x;
            fd_h[(1, a)] = col.y;
        }
        let gs = g.norm().max(1.0);
        let hs = h.norm().max(1.0);
        prop_assert!((fd_g - g).norm() <= 1e-6 * gs, "{} vs {}", fd_g, g);
        prop_assert!((fd_h - h).norm() <= 1e-4 * hs, "{} vs {}", fd_h, h);
    }

    #[test]
    fn cubics_are_reproduced(s in shifts(), c in prop::collection::vec(-2.0..2.0f64, 10), l in bary(), cell in 0usize..192) {
        let m = jittered_square(&s, 0.04);
        let b = PsBasis::new(&PsRefinement::new(&m).unwrap()).unwrap();
        let f = cubic(&c);
        let coeffs = b.interpolate(&f);
        let mut act = Active::default();
        b.eval(cell, l, &mut act);
        let (v, g, h) = act.combine(&coeffs);
        let (ev, eg, eh) = f(b.cell_point(cell, l), 0);
        prop_assert!((v - ev).abs() <= 1e-10);
        prop_assert!((g - eg).norm() <= 1e-9);
        prop_assert!((h - eh).norm() <= 1e-8);
    }

    #[test]
    fn annulus_boundary_lies_on_circles(u in 0.0..1.0f64, v in 0.0..1.0f64, r1 in 0.2..0.9f64) {
        let g = quarter_annulus(r1, 1.0).unwrap();
        let inner = g.point(Vec2::new(u, 0.0)).unwrap();
        let outer = g.point(Vec2::new(u, 1.0)).unwrap();
        prop_assert!((inner.xy().norm() - r1).abs() <= 1e-12);
        prop_assert!((outer.xy().norm() - 1.0).abs() <= 1e-12);
        let x = g.point(Vec2::new(u, v)).unwrap();
        let rho = x.xy().norm();
        prop_assert!(rho >= r1 - 1e-12 && rho <= 1.0 + 1e-12);
        prop_assert!(x.x >= -1e-12 && x.y >= -1e-12 && x.z == 0.0);
    }

    #[test]
    fn cylinder_points_lie_on_the_cylinder(u in 0.0..1.0f64, v in 0.0..1.0f64, r in 0.5..2.0f64, h in 0.5..3.0f64) {
        let g = cylinder_shell(r, h).unwrap();
        let x = g.point(Vec2::new(u, v)).unwrap();
        prop_assert!((x.xy().norm() - r).abs() <= 1e-12 * r);
        prop_assert!(x.z >= -1e-12 && x.z <= h + 1e-12);
    }

    #[test]
    fn quadrature_integrates_monomials(deg in prop::sample::select(vec![2usize, 4, 5, 6, 8, 10, 12]), a in 0usize..13, b in 0usize..13) {
        prop_assume!(a + b <= deg);
        let rule = quad_rule(deg).unwrap();
        let approx: f64 = rule.points.iter().zip(&rule.weights)
            .map(|(l, w)| w * l[1].powi(a as i32) * l[2].powi(b as i32))
            .sum::<f64>() * 0.5;
        let fact = |n: usize| (1..=n).map(|i| i as f64).product::<f64>();
        let exact = fact(a) * fact(b) / fact(a + b + 2);
        prop_assert!((approx - exact).abs() <= 1e-14 * exact.max(1e-3), "{} vs {}", approx, exact);
    }

    #[test]
    fn local_refinement_stays_conforming(s in shifts(), marks in prop::collection::btree_set(0usize..32, 1..8)) {
        let m = jittered_square(&s, 0.04);
        let r = local_refine(&m, &marks).unwrap();
        // re-validating from raw arrays must succeed: no hanging nodes
        let again = Triangulation::new(r.vertices().to_vec(), r.triangles().to_vec()).unwrap();
        prop_assert!((again.area() - 1.0).abs() <= 1e-12);
        prop_assert!(r.num_triangles() >= m.num_triangles() + 3 * marks.len());
        let all: BTreeSet<usize> = (0..m.num_triangles()).collect();
        prop_assert_eq!(local_refine(&m, &all).unwrap().num_triangles(), 4 * m.num_triangles());
    }

    #[test]
    fn mesh_and_vtk_round_trips(s in shifts()) {
        let m = jittered_square(&s, 0.04);
        let back = io::mesh_from_json(&io::mesh_to_json(&m).unwrap()).unwrap();
        prop_assert_eq!(back.vertices(), m.vertices());
        prop_assert_eq!(back.triangles(), m.triangles());
        let v = io::ps_refinement_vtk(&PsRefinement::new(&m).unwrap());
        let parsed = VtkPolyData::parse(&v.to_vtk()).unwrap();
        prop_assert_eq!(parsed.triangles.len(), 6 * m.num_triangles());
        prop_assert_eq!(&parsed.triangles, &v.triangles);
    }

    #[test]
    fn order_formulas_recover_the_rate(c in 1e-3..10.0f64, p in 1.0..6.0f64, h in 0.05..1.0f64) {
        let e0 = c * h.powf(p);
        let e1 = c * (h / 2.0).powf(p);
        prop_assert!((order_h(e0, e1) - p).abs() <= 1e-10);
        // N ∝ h^-2 for dyadic refinement
        prop_assert!((order_ndof(e0, e1, 100, 400) - p).abs() <= 1e-10);
    }
}

#[test]
fn dyadic_refinement_quadruples() {
    let mut m = builders::pentagon();
    for _ in 0..3 {
        let r = dyadic_refine(&m);
        assert_eq!(r.num_triangles(), 4 * m.num_triangles());
        assert_eq!(r.num_vertices(), m.num_vertices() + m.num_edges());
        assert!((r.h() - 0.5 * m.h()).abs() <= 1e-14);
        m = r;
    }
}

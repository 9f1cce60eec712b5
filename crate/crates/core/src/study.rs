//! Solves of manufactured problems, error norms and convergence studies.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_biharmonic, assemble_poisson, BIHARMONIC_DEGREE, POISSON_DEGREE};
use crate::boundary::{boundary_dof_partition, fit_boundary, ps_boundary_counts, BoundaryData, BoundaryFit};
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::geometry::{self, differentials, project_to_ps, Geometry, GeometryMap};
use crate::lagrange::LagrangeBasis;
use crate::mesh::{builders, dyadic_refine, local_refine, PsRefinement, Triangulation};
use crate::problems::{Domain, Problem};
use crate::psbasis::PsBasis;
use crate::quadrature::quad_rule;
use crate::space::{Active, Space};

pub const ERROR_DEGREE: usize = 10;
/// Lattice points per cell edge minus one for the L∞ sampling (21 points per cell).
const LINF_LATTICE: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Element {
    Ps,
    Lagrange,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Refinement {
    Global,
    Local,
}

/// Quadrature degrees of the solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub poisson_degree: usize,
    pub biharmonic_degree: usize,
    pub error_degree: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            poisson_degree: POISSON_DEGREE,
            biharmonic_degree: BIHARMONIC_DEGREE,
            error_degree: ERROR_DEGREE,
        }
    }
}

/// A solution space paired with the geometry map it is composed with.
pub struct Discretization {
    pub element: Element,
    pub space: Box<dyn Space>,
    pub geometry: Geometry,
}

impl Discretization {
    pub fn mesh(&self) -> &Triangulation {
        self.space.mesh()
    }
}

/// Initial triangulation of the parameter domain.
pub fn base_mesh(domain: Domain) -> Triangulation {
    match domain {
        Domain::Pentagon | Domain::PentagonCurved => builders::pentagon(),
        Domain::Annulus { .. } => builders::annulus_parameter(),
        Domain::Cylinder { .. } => builders::cylinder_parameter(),
    }
}

/// Geometry map and space of `element` on `mesh`.
pub fn discretize(domain: Domain, element: Element, mesh: &Triangulation) -> Result<Discretization> {
    let ps = || -> Result<PsBasis> { PsBasis::new(&PsRefinement::new(mesh)?) };
    let spline = |g: GeometryMap| -> Discretization {
        let space: Box<dyn Space> = match element {
            Element::Ps => Box::new(g.space().clone()),
            Element::Lagrange => Box::new(LagrangeBasis::new(mesh)),
        };
        Discretization {
            element,
            space,
            geometry: Geometry::Spline(g),
        }
    };
    Ok(match (domain, element) {
        (Domain::Pentagon, Element::Ps) => Discretization {
            element,
            space: Box::new(ps()?),
            geometry: Geometry::Identity,
        },
        (Domain::Pentagon, Element::Lagrange) => Discretization {
            element,
            space: Box::new(LagrangeBasis::new(mesh)),
            geometry: Geometry::Identity,
        },
        (Domain::PentagonCurved, _) => {
            let (g, coarse) = geometry::pentagon();
            match element {
                // F is projected once on the base mesh and kept fixed under refinement
                Element::Ps => {
                    let f = project_to_ps(&g, PsBasis::new(&PsRefinement::new(&coarse)?)?)?;
                    Discretization {
                        element,
                        space: Box::new(ps()?),
                        geometry: Geometry::nested(f, mesh)?,
                    }
                }
                Element::Lagrange => Discretization {
                    element,
                    space: Box::new(LagrangeBasis::new(mesh)),
                    geometry: Geometry::C0(g.bind(mesh)?),
                },
            }
        }
        (Domain::Annulus { r1, r2 }, _) => spline(geometry::quarter_annulus_on(mesh, r1, r2)?),
        (Domain::Cylinder { r, h }, _) => spline(geometry::cylinder_shell_on(mesh, r, h)?),
    })
}

/// The solved problem on one mesh.
pub struct Solution {
    pub disc: Discretization,
    pub coeffs: Vec<f64>,
    pub fit: BoundaryFit,
    pub l2: f64,
    pub linf: f64,
}

impl Solution {
    pub fn ndof(&self) -> usize {
        self.fit.n
    }
}

fn boundary_skeleton(disc: &Discretization, mode: usize) -> Result<BoundaryFit> {
    let expected = match disc.element {
        Element::Ps => {
            let (b0, b1) = ps_boundary_counts(disc.mesh());
            if mode == 0 {
                b0
            } else {
                b1
            }
        }
        Element::Lagrange => disc.mesh().num_boundary_vertices() + 2 * disc.mesh().num_boundary_edges(),
    };
    boundary_dof_partition(disc.space.as_ref(), mode, Some(expected))
}

/// Fit, assemble and solve `problem` on `mesh`, then measure the error.
pub fn solve(problem: &Problem, element: Element, mesh: &Triangulation, opts: &SolveOptions) -> Result<Solution> {
    if problem.order == 4 && element == Element::Lagrange {
        return Err(Error::Capability("biharmonic requires C1 basis".into()));
    }
    let disc = discretize(problem.domain, element, mesh)?;
    let space = disc.space.as_ref();
    let u = problem.u;
    let grad = problem.grad;
    let f = problem.f;
    let g1 = move |x: Vector3<f64>, n: Vector3<f64>| grad(x).dot(&n);
    let system = if problem.order == 2 {
        let sk = boundary_skeleton(&disc, 0)?;
        let fit = fit_boundary(space, &disc.geometry, sk, &BoundaryData { g0: &u, g1: None })?;
        assemble_poisson(space, &disc.geometry, &fit, &f, opts.poisson_degree)?
    } else {
        let sk = boundary_skeleton(&disc, 1)?;
        let fit = fit_boundary(space, &disc.geometry, sk, &BoundaryData { g0: &u, g1: Some(&g1) })?;
        assemble_biharmonic(space, &disc.geometry, &fit, &f, opts.biharmonic_degree)?
    };
    let coeffs = system.solve()?;
    let (l2, linf) = error_norms(space, &disc.geometry, &coeffs, &u, opts.error_degree)?;
    Ok(Solution {
        coeffs,
        fit: system.fit,
        disc,
        l2,
        linf,
    })
}

/// L2 error √∫ (s − u∘F)² κ and L∞ error over a 21-point lattice per cell.
pub fn error_norms(
    space: &dyn Space,
    geometry: &Geometry,
    coeffs: &[f64],
    u: &dyn Fn(Vector3<f64>) -> f64,
    degree: usize,
) -> Result<(f64, f64)> {
    let rule = quad_rule(degree)?;
    let dim = geometry.dim();
    let (mut act, mut gact) = (Active::default(), Active::default());
    let mut l2 = 0.0;
    let mut linf = 0.0f64;
    for c in 0..space.num_cells() {
        let g = space.cell_group(c);
        let area = space.cell_area(c);
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            space.eval(c, *l, &mut act);
            let jet = geometry.jet(g, space.cell_point(c, *l), &mut gact);
            let d = differentials(&jet, dim)?;
            let e = act.combine(coeffs).0 - u(jet.x);
            l2 += w * area * e * e * d.kappa;
        }
        for i in 0..=LINF_LATTICE {
            for j in 0..=LINF_LATTICE - i {
                let n = LINF_LATTICE as f64;
                let l = [i as f64 / n, j as f64 / n, (LINF_LATTICE - i - j) as f64 / n];
                space.eval(c, l, &mut act);
                let x = geometry.jet(g, space.cell_point(c, l), &mut gact).x;
                linf = linf.max((act.combine(coeffs).0 - u(x)).abs());
            }
        }
    }
    Ok((l2.sqrt(), linf))
}

/// Parameter point of the spike centre (ρ, θ) = (¾, π/8) under the quarter-annulus map.
fn spike_center(r1: f64, r2: f64) -> Vec2 {
    let target = std::f64::consts::PI / 8.0;
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let p = geometry::arc_point(mid);
        if p.y.atan2(p.x) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Vec2::new(0.5 * (lo + hi), (0.75 - r1) / (r2 - r1))
}

fn point_triangle_distance(p: Vec2, tri: [Vec2; 3]) -> f64 {
    let l = crate::geom::barycentric(p, tri[0], tri[1], tri[2]);
    if l.iter().all(|&x| x >= 0.0) {
        return 0.0;
    }
    (0..3)
        .map(|k| {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let t = ((p - a).dot(&(b - a)) / (b - a).norm_squared()).clamp(0.0, 1.0);
            (p - (a + (b - a) * t)).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Triangles within 2^(1−k)·h0 of the spike centre, refined at level k.
pub fn spike_marks(mesh: &Triangulation, level: usize, h0: f64, center: Vec2) -> BTreeSet<usize> {
    let radius = h0 * 2f64.powi(1 - level as i32);
    (0..mesh.num_triangles())
        .filter(|&t| point_triangle_distance(center, mesh.triangle_points(t)) < radius)
        .collect()
}

/// Meshes of levels 0..levels.
pub fn mesh_sequence(problem: &Problem, refinement: Refinement, levels: usize) -> Result<Vec<Triangulation>> {
    let base = base_mesh(problem.domain);
    let h0 = base.h();
    let center = match (refinement, problem.domain) {
        (Refinement::Global, _) => None,
        (Refinement::Local, Domain::Annulus { r1, r2 }) if problem.name == "annulus-spike" => Some(spike_center(r1, r2)),
        (Refinement::Local, _) => {
            return Err(Error::Validation(format!(
                "local refinement is defined for annulus-spike only, not {}",
                problem.name
            )))
        }
    };
    let mut meshes = vec![base];
    for k in 1..levels {
        let prev = meshes.last().unwrap();
        let next = match center {
            None => dyadic_refine(prev),
            Some(c) => local_refine(prev, &spike_marks(prev, k, h0, c)).map_err(|e| e.at_level(k))?,
        };
        meshes.push(next);
    }
    Ok(meshes)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelResult {
    pub level: usize,
    pub h: f64,
    pub ndof: usize,
    pub l2: f64,
    pub linf: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub problem: String,
    pub element: Element,
    pub refinement: Refinement,
    pub levels: Vec<LevelResult>,
}

/// log2(e_{k−1}/e_k).
pub fn order_h(prev: f64, cur: f64) -> f64 {
    (prev / cur).log2()
}

/// log(e_{k−1}/e_k) / log(√(N_k/N_{k−1})).
pub fn order_ndof(prev: f64, cur: f64, n_prev: usize, n_cur: usize) -> f64 {
    (prev / cur).ln() / (n_cur as f64 / n_prev as f64).sqrt().ln()
}

pub const CSV_HEADER: &str = "level,h,ndof,l2,l2_order,linf,linf_order,ndof_order_l2,ndof_order_linf";

impl StudyResult {
    pub fn l2_order(&self, k: usize) -> Option<f64> {
        (k > 0).then(|| order_h(self.levels[k - 1].l2, self.levels[k].l2))
    }
    pub fn linf_order(&self, k: usize) -> Option<f64> {
        (k > 0).then(|| order_h(self.levels[k - 1].linf, self.levels[k].linf))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        let cell = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        for (k, r) in self.levels.iter().enumerate() {
            let prev = k.checked_sub(1).map(|j| &self.levels[j]);
            let nd = |f: fn(&LevelResult) -> f64| prev.map(|p| order_ndof(f(p), f(r), p.ndof, r.ndof));
            writeln!(
                out,
                "{},{:e},{},{:e},{},{:e},{},{},{}",
                r.level,
                r.h,
                r.ndof,
                r.l2,
                cell(self.l2_order(k)),
                r.linf,
                cell(self.linf_order(k)),
                cell(nd(|r| r.l2)),
                cell(nd(|r| r.linf)),
            )
            .expect("writing to a string");
        }
        out
    }
}

/// Solve on each mesh level in turn.
pub fn convergence_study(
    problem: &Problem,
    element: Element,
    refinement: Refinement,
    levels: usize,
    opts: &SolveOptions,
) -> Result<StudyResult> {
    let meshes = mesh_sequence(problem, refinement, levels)?;
    let mut rows = Vec::with_capacity(levels);
    for (k, mesh) in meshes.iter().enumerate() {
        let sol = solve(problem, element, mesh, opts).map_err(|e| e.at_level(k))?;
        rows.push(LevelResult {
            level: k,
            h: mesh.h(),
            ndof: sol.ndof(),
            l2: sol.l2,
            linf: sol.linf,
        });
    }
    Ok(StudyResult {
        problem: problem.name.to_string(),
        element,
        refinement,
        levels: rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_of_a_sixteenfold_drop_is_four() {
        assert!((order_h(1e-2, 6.25e-4) - 4.0).abs() < 1e-12);
        assert!((order_ndof(1e-2, 6.25e-4, 100, 400) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn csv_leaves_level_zero_orders_empty() {
        let r = StudyResult {
            problem: "p".into(),
            element: Element::Ps,
            refinement: Refinement::Global,
            levels: vec![
                LevelResult { level: 0, h: 1.0, ndof: 10, l2: 1e-2, linf: 2e-2 },
                LevelResult { level: 1, h: 0.5, ndof: 40, l2: 6.25e-4, linf: 1.25e-3 },
            ],
        };
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[1].ends_with(",,,,") || lines[1].split(',').filter(|c| c.is_empty()).count() == 4);
        assert_eq!(lines[2].split(',').nth(4), Some("4.000000"));
    }

    #[test]
    fn spike_center_lies_on_the_mid_arc() {
        let c = spike_center(0.5, 1.0);
        let p = geometry::arc_point(c.x);
        assert!((p.y.atan2(p.x) - std::f64::consts::PI / 8.0).abs() < 1e-12);
        assert_eq!(c.y, 0.5);
    }
}

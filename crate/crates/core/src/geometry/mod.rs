//! Geometry maps from the parameter domain Θ to the physical domain Ω ⊂ ℝ² or ℝ³.

mod c0map;
mod nurbs;
mod projection;
mod winslow;

pub use c0map::{pentagon, pentagon_control_point, C0Map, C0_TOL};
pub use nurbs::{arc_point, cylinder_shell, cylinder_shell_on, quarter_annulus, quarter_annulus_on};
pub use projection::project_to_ps;
pub use winslow::{min_det, winslow_energy, winslow_optimize, WinslowReport};

use nalgebra::{Matrix3x2, Vector3};

use crate::error::{Error, Result};
use crate::geom::{Mat2, Vec2};
use crate::mesh::Triangulation;
use crate::psbasis::RationalBasis;
use crate::quadrature::QuadratureRule;
use crate::space::{Active, Space};

/// κ below this is treated as a singular map.
pub const SINGULAR_TOL: f64 = 1e-14;

/// Value, Jacobian and component Hessians of a map at one point. Unused rows are zero when d = 2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MapJet {
    pub x: Vector3<f64>,
    pub jac: Matrix3x2<f64>,
    pub hess: [Mat2; 3],
}

impl MapJet {
    pub fn identity(p: Vec2) -> Self {
        MapJet {
            x: Vector3::new(p.x, p.y, 0.0),
            jac: Matrix3x2::new(1.0, 0.0, 0.0, 1.0, 0.0, 0.0),
            hess: [Mat2::zeros(); 3],
        }
    }

    /// Σ P_k φ_k over the active functions.
    pub fn from_active(act: &Active, controls: &[[f64; 3]], dim: usize) -> Self {
        let mut j = MapJet {
            x: Vector3::zeros(),
            jac: Matrix3x2::zeros(),
            hess: [Mat2::zeros(); 3],
        };
        for n in 0..act.len() {
            let p = controls[act.idx[n]];
            for c in 0..dim {
                j.x[c] += p[c] * act.val[n];
                j.jac[(c, 0)] += p[c] * act.grad[n].x;
                j.jac[(c, 1)] += p[c] * act.grad[n].y;
                j.hess[c] += act.hess[n] * p[c];
            }
        }
        j
    }

    /// ∂J/∂θ_a as a 3×2 matrix.
    pub fn djac(&self, a: usize) -> Matrix3x2<f64> {
        let mut d = Matrix3x2::zeros();
        for c in 0..3 {
            d[(c, 0)] = self.hess[c][(a, 0)];
            d[(c, 1)] = self.hess[c][(a, 1)];
        }
        d
    }
}

/// First fundamental form K = JᵀJ and area element κ = √det K.
#[derive(Clone, Copy, Debug)]
pub struct Differentials {
    pub jac: Matrix3x2<f64>,
    pub k: Mat2,
    pub kinv: Mat2,
    pub kappa: f64,
    /// det J for planar maps.
    pub det: Option<f64>,
}

pub fn differentials(jet: &MapJet, dim: usize) -> Result<Differentials> {
    let k: Mat2 = jet.jac.transpose() * jet.jac;
    let dk = k.determinant();
    let kappa = dk.max(0.0).sqrt();
    if !(kappa > SINGULAR_TOL) {
        return Err(Error::Singular(format!(
            "area element {kappa:e} at ({}, {}, {})",
            jet.x[0], jet.x[1], jet.x[2]
        )));
    }
    let kinv = Mat2::new(k[(1, 1)], -k[(0, 1)], -k[(1, 0)], k[(0, 0)]) / dk;
    let det = (dim == 2).then(|| jet.jac[(0, 0)] * jet.jac[(1, 1)] - jet.jac[(0, 1)] * jet.jac[(1, 0)]);
    Ok(Differentials {
        jac: jet.jac,
        k,
        kinv,
        kappa,
        det,
    })
}

/// A spline geometry map F = Σ P_k N_k in the rational Powell–Sabin space.
#[derive(Clone, Debug)]
pub struct GeometryMap {
    space: RationalBasis,
    controls: Vec<[f64; 3]>,
    dim: usize,
}

impl GeometryMap {
    pub fn new(space: RationalBasis, controls: Vec<[f64; 3]>, dim: usize) -> Result<Self> {
        if !(dim == 2 || dim == 3) {
            return Err(Error::Validation(format!("geometry dimension {dim} is not 2 or 3")));
        }
        if controls.len() != space.dim() {
            return Err(Error::Validation(format!(
                "{} control points for {} basis functions",
                controls.len(),
                space.dim()
            )));
        }
        Ok(GeometryMap { space, controls, dim })
    }

    /// Identity map of the parameter domain: unit weights, controls interpolating x and y.
    pub fn identity(basis: crate::psbasis::PsBasis) -> Self {
        let cx = basis.interpolate(&|p, _| (p.x, Vec2::new(1.0, 0.0), Mat2::zeros()));
        let cy = basis.interpolate(&|p, _| (p.y, Vec2::new(0.0, 1.0), Mat2::zeros()));
        let controls = cx.iter().zip(&cy).map(|(&x, &y)| [x, y, 0.0]).collect();
        GeometryMap::new(RationalBasis::unit(basis), controls, 2).expect("consistent sizes")
    }

    pub fn space(&self) -> &RationalBasis {
        &self.space
    }
    pub fn controls(&self) -> &[[f64; 3]] {
        &self.controls
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn weights(&self) -> &[f64] {
        self.space.weights()
    }

    pub fn with_controls(&self, controls: Vec<[f64; 3]>) -> Result<Self> {
        GeometryMap::new(self.space.clone(), controls, self.dim)
    }

    pub fn jet_cell(&self, c: usize, l: [f64; 3], act: &mut Active) -> MapJet {
        self.space.eval(c, l, act);
        MapJet::from_active(act, &self.controls, self.dim)
    }

    /// Jet at `p` using the micro-triangle of macro `m` that contains it.
    pub fn jet_in_macro(&self, m: usize, p: Vec2, act: &mut Active) -> MapJet {
        let (c, l) = cell_in_group(&self.space, m, p);
        self.jet_cell(c, l, act)
    }

    pub fn map_point(&self, p: Vec2) -> Result<Vector3<f64>> {
        let (c, l) = self.space.locate(p)?;
        let mut act = Active::default();
        Ok(self.jet_cell(c, l, &mut act).x)
    }
}

/// Cell of group `m` containing `p`, or the nearest one when `p` is just outside.
pub fn cell_in_group(space: &dyn Space, m: usize, p: Vec2) -> (usize, [f64; 3]) {
    let mut best = (usize::MAX, [1.0, 0.0, 0.0], f64::NEG_INFINITY);
    for c in space.group_cells(m) {
        let [a, b, d] = space.cell_points(c);
        let l = crate::geom::barycentric(p, a, b, d);
        let w = l[0].min(l[1]).min(l[2]);
        if w > best.2 {
            best = (c, l, w);
        }
        if w >= 0.0 {
            break;
        }
    }
    (best.0, best.1)
}

/// A geometry map in any of the supported representations.
#[derive(Clone, Debug)]
pub enum Geometry {
    Identity,
    Spline(GeometryMap),
    C0(C0Map),
    /// A spline map on a coarser mesh; `parent[m]` is the coarse macro-triangle holding fine triangle m.
    Nested { map: GeometryMap, parent: Vec<usize> },
}

impl Geometry {
    pub fn dim(&self) -> usize {
        match self {
            Geometry::Identity => 2,
            Geometry::Spline(g) => g.dim(),
            Geometry::C0(g) => g.dim(),
            Geometry::Nested { map, .. } => map.dim(),
        }
    }

    /// Jet at parameter point `p` lying in macro-triangle `m` of the analysis mesh.
    pub fn jet(&self, m: usize, p: Vec2, act: &mut Active) -> MapJet {
        match self {
            Geometry::Identity => MapJet::identity(p),
            Geometry::Spline(g) => g.jet_in_macro(m, p, act),
            Geometry::C0(g) => g.jet(m, p),
            Geometry::Nested { map, parent } => map.jet_in_macro(parent[m], p, act),
        }
    }

    /// Binds a coarse spline map to a refinement of its mesh.
    pub fn nested(map: GeometryMap, fine: &Triangulation) -> Result<Geometry> {
        let coarse = map.space().mesh();
        let parent = (0..fine.num_triangles())
            .map(|m| {
                let [a, b, c] = fine.triangle_points(m);
                coarse.locate_triangle((a + b + c) / 3.0)
            })
            .collect::<Result<_>>()?;
        Ok(Geometry::Nested { map, parent })
    }
}

/// A map evaluated cell by cell, for energy and regularity checks.
pub trait Mapping: Sync {
    fn num_cells(&self) -> usize;
    fn cell_points(&self, c: usize) -> [Vec2; 3];
    fn cell_jet(&self, c: usize, l: [f64; 3], act: &mut Active) -> MapJet;
}

impl Mapping for GeometryMap {
    fn num_cells(&self) -> usize {
        self.space.num_cells()
    }
    fn cell_points(&self, c: usize) -> [Vec2; 3] {
        self.space.cell_points(c)
    }
    fn cell_jet(&self, c: usize, l: [f64; 3], act: &mut Active) -> MapJet {
        self.jet_cell(c, l, act)
    }
}

/// Smallest κ (or det J for d = 2) over the quadrature points of every cell.
pub fn check_regular(map: &dyn Mapping, dim: usize, rule: &QuadratureRule) -> Result<f64> {
    let mut act = Active::default();
    let mut worst = f64::INFINITY;
    for c in 0..map.num_cells() {
        for l in &rule.points {
            let j = map.cell_jet(c, *l, &mut act);
            let d = differentials(&j, dim)?;
            worst = worst.min(d.det.unwrap_or(d.kappa));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{builders, PsRefinement};
    use crate::psbasis::PsBasis;

    #[test]
    fn identity_map_has_unit_metric() {
        let b = PsBasis::new(&PsRefinement::new(&builders::pentagon()).unwrap()).unwrap();
        let g = GeometryMap::identity(b);
        let mut act = Active::default();
        let j = g.jet_cell(11, [0.3, 0.3, 0.4], &mut act);
        let d = differentials(&j, 2).unwrap();
        assert!((d.k - Mat2::identity()).amax() < 1e-13);
        assert!((d.kappa - 1.0).abs() < 1e-13);
    }

    #[test]
    fn scaling_by_two() {
        let mut j = MapJet::identity(Vec2::new(0.1, 0.2));
        j.jac *= 2.0;
        let d = differentials(&j, 2).unwrap();
        assert!((d.kappa - 4.0).abs() < 1e-14);
        assert!((d.k - Mat2::identity() * 4.0).amax() < 1e-14);
    }

    #[test]
    fn singular_map_rejected() {
        let mut j = MapJet::identity(Vec2::zeros());
        j.jac[(1, 1)] = 0.0;
        assert!(matches!(differentials(&j, 2), Err(Error::Singular(_))));
    }
}

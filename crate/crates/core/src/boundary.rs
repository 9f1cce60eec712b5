//! Boundary degrees of freedom and least-squares fitting of Dirichlet data.
//!
//! Mode 0 constrains values on ∂Θ; mode 1 constrains values and normal derivatives.
//! A function is boundary-active when its trace (mode 0) or its trace and gradient
//! trace (mode 1) are not identically zero, which is decided by dense sampling.

use std::collections::BTreeMap;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::geometry::{differentials, Geometry, MapJet};
use crate::linalg::{solve_spd, CsrMatrix};
use crate::mesh::{Triangulation, VertexKind};
use crate::space::{Active, Space};

/// Sample points per boundary macro-edge.
pub const SAMPLES_PER_EDGE: usize = 50;
/// Activity thresholds for values and gradients.
pub const VALUE_TOL: f64 = 1e-12;
pub const GRADIENT_TOL: f64 = 1e-10;

/// Closed-form boundary counts (b0, b1) of the Powell–Sabin space on `mesh`.
///
/// b0 = 4·#corners + 3·#collinear, b1 = 5·#boundary vertices.
pub fn ps_boundary_counts(mesh: &Triangulation) -> (usize, usize) {
    let mut b0 = 0;
    for v in 0..mesh.num_vertices() {
        b0 += match mesh.vertex_kind(v) {
            VertexKind::Corner => 4,
            VertexKind::Collinear => 3,
            VertexKind::Interior => 0,
        };
    }
    (b0, 5 * mesh.num_boundary_vertices())
}

/// Residuals of a boundary fit at the sample points.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FitResiduals {
    pub value_max: f64,
    pub value_rms: f64,
    pub normal_max: f64,
    pub normal_rms: f64,
}

/// Split of the basis into interior and boundary-active functions, and the fitted boundary part.
#[derive(Clone, Debug)]
pub struct BoundaryFit {
    pub mode: usize,
    /// Interior functions first (ascending), then boundary-active ones (ascending).
    pub permutation: Vec<usize>,
    pub n: usize,
    pub b: usize,
    /// Full-length coefficients, nonzero only on boundary-active functions.
    pub coeffs: Vec<f64>,
    pub residuals: FitResiduals,
}

impl BoundaryFit {
    pub fn interior(&self) -> &[usize] {
        &self.permutation[..self.n]
    }
    pub fn boundary(&self) -> &[usize] {
        &self.permutation[self.n..]
    }
    /// Position of each function among the interior unknowns.
    pub fn interior_position(&self) -> Vec<Option<usize>> {
        let mut pos = vec![None; self.permutation.len()];
        for (i, &k) in self.interior().iter().enumerate() {
            pos[k] = Some(i);
        }
        pos
    }
}

/// Sample point s of boundary edge `l`, with the owning triangle and the outward normal.
fn edge_samples(mesh: &Triangulation, l: usize) -> impl Iterator<Item = (Vec2, usize, Vec2)> + '_ {
    let (a, b) = mesh.oriented_boundary_edge(l);
    let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
    let t = mesh.edge_triangles(l).0;
    let nu = mesh.outward_normal(l);
    (0..SAMPLES_PER_EDGE).map(move |i| {
        let s = i as f64 / (SAMPLES_PER_EDGE - 1) as f64;
        (pa + (pb - pa) * s, t, nu)
    })
}

/// Classify functions by evaluation along ∂Θ; `expected` is the closed-form boundary count.
pub fn boundary_dof_partition(space: &dyn Space, mode: usize, expected: Option<usize>) -> Result<BoundaryFit> {
    if mode > 1 {
        return Err(Error::Validation(format!("boundary mode {mode} is not 0 or 1")));
    }
    let mesh = space.mesh();
    let mut active = vec![false; space.dim()];
    let mut act = Active::default();
    for l in mesh.boundary_edges() {
        for (p, t, _) in edge_samples(mesh, l) {
            let (c, bary) = crate::geometry::cell_in_group(space, t, p);
            space.eval(c, bary, &mut act);
            for n in 0..act.len() {
                let hit = act.val[n].abs() > VALUE_TOL || (mode == 1 && act.grad[n].norm() > GRADIENT_TOL);
                if hit {
                    active[act.idx[n]] = true;
                }
            }
        }
    }
    let b = active.iter().filter(|&&a| a).count();
    if let Some(e) = expected {
        if b != e {
            return Err(Error::Configuration(format!(
                "{b} boundary-active functions in mode {mode}, expected {e}; some configuration triangle is not boundary aligned"
            )));
        }
    }
    let mut permutation: Vec<usize> = (0..space.dim()).filter(|&k| !active[k]).collect();
    let n = permutation.len();
    permutation.extend((0..space.dim()).filter(|&k| active[k]));
    Ok(BoundaryFit {
        mode,
        permutation,
        n,
        b,
        coeffs: vec![0.0; space.dim()],
        residuals: FitResiduals::default(),
    })
}

/// γ = 1/‖J K⁻¹ ν‖, so that γ J K⁻¹ ν is the outward unit conormal of the mapped boundary.
pub fn gamma_field(jet: &MapJet, dim: usize, nu: Vec2) -> Result<f64> {
    let d = differentials(jet, dim)?;
    let w = d.jac * (d.kinv * nu);
    Ok(1.0 / w.norm())
}

/// Data on the mapped boundary: g0(x), and for mode 1 the normal derivative g1(x, n)
/// where n is the outward unit conormal at x.
pub struct BoundaryData<'a> {
    pub g0: &'a (dyn Fn(Vector3<f64>) -> f64 + Sync),
    pub g1: Option<&'a (dyn Fn(Vector3<f64>, Vector3<f64>) -> f64 + Sync)>,
}

/// Least-squares fit of the boundary-active coefficients to the data.
pub fn fit_boundary(
    space: &dyn Space,
    geometry: &Geometry,
    mut skeleton: BoundaryFit,
    data: &BoundaryData,
) -> Result<BoundaryFit> {
    let mesh = space.mesh();
    let dim = geometry.dim();
    let mode = skeleton.mode;
    if mode == 1 && data.g1.is_none() {
        return Err(Error::Validation("mode 1 fit needs normal-derivative data".into()));
    }
    let h = mesh.h();
    let col: BTreeMap<usize, usize> = skeleton.boundary().iter().enumerate().map(|(i, &k)| (k, i)).collect();
    let nb = col.len();

    // rows as (sparse entries, right-hand side, kind), kind 0 = value, 1 = normal derivative
    let mut rows: Vec<(Vec<(usize, f64)>, f64, usize)> = Vec::new();
    let mut act = Active::default();
    let mut gact = Active::default();
    for l in mesh.boundary_edges() {
        for (p, t, nu) in edge_samples(mesh, l) {
            let (c, bary) = crate::geometry::cell_in_group(space, t, p);
            space.eval(c, bary, &mut act);
            let jet = geometry.jet(t, p, &mut gact);
            let x = jet.x;
            let value: Vec<(usize, f64)> = (0..act.len())
                .filter_map(|n| col.get(&act.idx[n]).map(|&j| (j, act.val[n])))
                .collect();
            rows.push((value, (data.g0)(x), 0));
            if let (1, Some(g1)) = (mode, data.g1) {
                let d = differentials(&jet, dim)?;
                let gamma = gamma_field(&jet, dim, nu)?;
                let conormal = d.kinv * nu * gamma;
                let normal: Vec<(usize, f64)> = (0..act.len())
                    .filter_map(|n| col.get(&act.idx[n]).map(|&j| (j, act.grad[n].dot(&conormal))))
                    .collect();
                rows.push((normal, g1(x, d.jac * conormal), 1));
            }
        }
    }

    let weight = |kind: usize| if kind == 0 { 1.0 } else { h };
    let mut trip = Vec::new();
    let mut rhs = vec![0.0; nb];
    for (entries, r, kind) in &rows {
        let w2 = weight(*kind).powi(2);
        for &(i, a) in entries {
            rhs[i] += w2 * a * r;
            for &(j, b) in entries {
                trip.push((i, j, w2 * a * b));
            }
        }
    }
    let normal = CsrMatrix::from_triplets(nb, trip);
    // Jacobi scaling keeps the normal equations well scaled across value and slope functions
    let scale: Vec<f64> = (0..nb)
        .map(|i| {
            let d = normal.get(i, i);
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    if let Some(i) = scale.iter().position(|&s| s == 0.0) {
        return Err(Error::Fitting(format!(
            "boundary function {} has no trace at the samples",
            skeleton.boundary()[i]
        )));
    }
    let scaled = CsrMatrix::from_triplets(nb, normal.iter().map(|(i, j, v)| (i, j, v * scale[i] * scale[j])).collect());
    let srhs: Vec<f64> = rhs.iter().zip(&scale).map(|(r, s)| r * s).collect();
    let y = solve_spd(&scaled, &[srhs])
        .map_err(|e| Error::Fitting(format!("rank-deficient boundary least squares: {e}")))?
        .remove(0);

    let mut coeffs = vec![0.0; space.dim()];
    for (&k, &i) in &col {
        coeffs[k] = y[i] * scale[i];
    }
    let mut res = FitResiduals::default();
    let (mut nv, mut nn) = (0usize, 0usize);
    for (entries, r, kind) in &rows {
        let s: f64 = entries.iter().map(|&(i, a)| a * y[i] * scale[i]).sum();
        let e = (s - r).abs();
        if *kind == 0 {
            res.value_max = res.value_max.max(e);
            res.value_rms += e * e;
            nv += 1;
        } else {
            res.normal_max = res.normal_max.max(e);
            res.normal_rms += e * e;
            nn += 1;
        }
    }
    res.value_rms = (res.value_rms / nv.max(1) as f64).sqrt();
    res.normal_rms = (res.normal_rms / nn.max(1) as f64).sqrt();
    skeleton.coeffs = coeffs;
    skeleton.residuals = res;
    Ok(skeleton)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{builders, dyadic_refine, PsRefinement};
    use crate::psbasis::PsBasis;

    fn basis(mesh: &Triangulation) -> PsBasis {
        PsBasis::new(&PsRefinement::new(mesh).unwrap()).unwrap()
    }

    #[test]
    fn square_counts() {
        let mesh = builders::unit_square();
        let b = basis(&mesh);
        let (b0, b1) = ps_boundary_counts(&mesh);
        assert_eq!((b0, b1), (16, 20));
        assert_eq!(boundary_dof_partition(&b, 0, Some(b0)).unwrap().n, 6);
        assert_eq!(boundary_dof_partition(&b, 1, Some(b1)).unwrap().n, 2);
    }

    #[test]
    fn annulus_interior_counts() {
        let mesh = builders::annulus_parameter();
        let b = basis(&mesh);
        assert_eq!(boundary_dof_partition(&b, 0, Some(ps_boundary_counts(&mesh).0)).unwrap().n, 14);
        let fine = dyadic_refine(&mesh);
        let b = basis(&fine);
        assert_eq!(boundary_dof_partition(&b, 0, Some(ps_boundary_counts(&fine).0)).unwrap().n, 65);
    }

    #[test]
    fn gamma_of_identity_and_scaling() {
        let nu = Vec2::new(0.6, -0.8);
        let mut j = MapJet::identity(Vec2::zeros());
        assert!((gamma_field(&j, 2, nu).unwrap() - 1.0).abs() < 1e-15);
        j.jac *= 2.0;
        assert!((gamma_field(&j, 2, nu).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn zero_data_gives_zero_fit() {
        let mesh = builders::pentagon();
        let b = basis(&mesh);
        let sk = boundary_dof_partition(&b, 0, Some(ps_boundary_counts(&mesh).0)).unwrap();
        let fit = fit_boundary(&b, &Geometry::Identity, sk, &BoundaryData { g0: &|_| 0.0, g1: None }).unwrap();
        assert!(fit.coeffs.iter().all(|&c| c == 0.0));
        assert_eq!(fit.residuals.value_max, 0.0);
    }
}

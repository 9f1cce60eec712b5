//! Galerkin assembly of the Laplace–Beltrami and surface biharmonic systems.
//!
//! Poisson:     a(s, N) = ∫ ∇s · K⁻¹∇N κ,             b(N) = ∫ (f∘F) N κ − a(s₀, N)
//! Biharmonic:  a(s, N) = ∫ L(s) L(N) / κ,  L(s) = ∇·(κ K⁻¹ ∇s),  b(N) = ∫ (f∘F) N κ − a(s₁, N)
//!
//! Unknowns are the interior functions of the boundary fit, in permutation order.

use nalgebra::{DMatrix, Vector3};
use rayon::prelude::*;

use crate::boundary::BoundaryFit;
use crate::error::{Error, Result};
use crate::geom::{Mat2, Vec2};
use crate::geometry::{differentials, Differentials, Geometry, MapJet};
use crate::linalg::{solve_spd, CsrMatrix};
use crate::quadrature::quad_rule;
use crate::space::{Active, Space};

pub const POISSON_DEGREE: usize = 8;
pub const BIHARMONIC_DEGREE: usize = 10;

/// Source term evaluated at an ambient point.
pub type Source<'a> = &'a (dyn Fn(Vector3<f64>) -> f64 + Sync);

/// A ∙ c = b for the interior coefficients, together with the boundary part that completes it.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub fit: BoundaryFit,
}

impl LinearSystem {
    /// Full coefficient vector s = s_d + Σ c_k N_k.
    pub fn solve(&self) -> Result<Vec<f64>> {
        let c = solve_spd(&self.matrix, std::slice::from_ref(&self.rhs))?.remove(0);
        Ok(self.expand(&c))
    }

    pub fn expand(&self, interior: &[f64]) -> Vec<f64> {
        let mut s = self.fit.coeffs.clone();
        for (i, &k) in self.fit.interior().iter().enumerate() {
            s[k] += interior[i];
        }
        s
    }
}

fn adj(k: &Mat2) -> Mat2 {
    Mat2::new(k[(1, 1)], -k[(0, 1)], -k[(1, 0)], k[(0, 0)])
}

/// Derivatives of M = κ K⁻¹ = adj(K)/κ along the two parameter directions.
fn flux_tensor_derivatives(jet: &MapJet, d: &Differentials) -> [Mat2; 2] {
    let m = adj(&d.k) / d.kappa;
    [0, 1].map(|a| {
        let dj = jet.djac(a);
        let dk: Mat2 = dj.transpose() * d.jac + d.jac.transpose() * dj;
        let ddet = (adj(&d.k) * dk).trace();
        let dkappa = ddet / (2.0 * d.kappa);
        adj(&dk) / d.kappa - m * (dkappa / d.kappa)
    })
}

/// Precomputed geometry factors for L(s) = (div M)·∇s + tr(M H_s).
#[derive(Clone, Copy, Debug)]
pub struct FluxFactors {
    pub m: Mat2,
    pub div: Vec2,
}

impl FluxFactors {
    pub fn new(jet: &MapJet, d: &Differentials) -> Self {
        let dm = flux_tensor_derivatives(jet, d);
        let div = Vec2::new(dm[0][(0, 0)] + dm[1][(1, 0)], dm[0][(0, 1)] + dm[1][(1, 1)]);
        FluxFactors {
            m: adj(&d.k) / d.kappa,
            div,
        }
    }

    pub fn apply(&self, grad: Vec2, hess: &Mat2) -> f64 {
        self.div.dot(&grad) + (self.m * hess).trace()
    }
}

/// ∇·(κ K⁻¹ ∇s) for a function with parameter gradient `grad` and Hessian `hess`.
pub fn flux_divergence(jet: &MapJet, dim: usize, grad: Vec2, hess: &Mat2) -> Result<f64> {
    let d = differentials(jet, dim)?;
    Ok(FluxFactors::new(jet, &d).apply(grad, hess))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Operator {
    Laplace,
    Bilaplace,
}

/// Local matrix and vector of one macro-triangle, indexed by its group functions.
struct Local {
    functions: Vec<usize>,
    a: DMatrix<f64>,
    b: Vec<f64>,
}

fn assemble(
    op: Operator,
    space: &dyn Space,
    geometry: &Geometry,
    fit: &BoundaryFit,
    f: Source,
    degree: usize,
) -> Result<LinearSystem> {
    let rule = quad_rule(degree)?;
    let dim = geometry.dim();
    let s_bd = &fit.coeffs;
    let locals: Vec<Local> = (0..space.num_groups())
        .into_par_iter()
        .map_init(
            || (Active::default(), Active::default()),
            |(act, gact), g| -> Result<Local> {
                let functions = space.group_functions(g).to_vec();
                let nf = functions.len();
                let mut a = DMatrix::zeros(nf, nf);
                let mut b = vec![0.0; nf];
                let mut op_vals = vec![Vec2::zeros(); nf];
                let mut lvals = vec![0.0; nf];
                for c in space.group_cells(g) {
                    let area = space.cell_area(c);
                    for (l, w) in rule.points.iter().zip(&rule.weights) {
                        let p = space.cell_point(c, *l);
                        space.eval(c, *l, act);
                        let jet = geometry.jet(g, p, gact);
                        let d = differentials(&jet, dim)?;
                        let wq = w * area;
                        let fx = f(jet.x);
                        debug_assert_eq!(act.len(), nf);
                        match op {
                            Operator::Laplace => {
                                let mut gs = Vec2::zeros();
                                for n in 0..nf {
                                    op_vals[n] = d.kinv * act.grad[n] * d.kappa;
                                    gs += act.grad[n] * s_bd[act.idx[n]];
                                }
                                for i in 0..nf {
                                    for j in 0..nf {
                                        a[(i, j)] += wq * act.grad[j].dot(&op_vals[i]);
                                    }
                                    b[i] += wq * (fx * act.val[i] * d.kappa - gs.dot(&op_vals[i]));
                                }
                            }
                            Operator::Bilaplace => {
                                let ff = FluxFactors::new(&jet, &d);
                                let mut ls = 0.0;
                                for n in 0..nf {
                                    lvals[n] = ff.apply(act.grad[n], &act.hess[n]);
                                    ls += lvals[n] * s_bd[act.idx[n]];
                                }
                                for i in 0..nf {
                                    for j in 0..nf {
                                        a[(i, j)] += wq * lvals[i] * lvals[j] / d.kappa;
                                    }
                                    b[i] += wq * (fx * act.val[i] * d.kappa - ls * lvals[i] / d.kappa);
                                }
                            }
                        }
                    }
                }
                Ok(Local { functions, a, b })
            },
        )
        .collect::<Result<Vec<_>>>()?;

    let pos = fit.interior_position();
    let mut trip = Vec::new();
    let mut rhs = vec![0.0; fit.n];
    for loc in &locals {
        for (i, &ki) in loc.functions.iter().enumerate() {
            let Some(pi) = pos[ki] else { continue };
            rhs[pi] += loc.b[i];
            for (j, &kj) in loc.functions.iter().enumerate() {
                if let Some(pj) = pos[kj] {
                    trip.push((pi, pj, loc.a[(i, j)]));
                }
            }
        }
    }
    Ok(LinearSystem {
        matrix: CsrMatrix::from_triplets(fit.n, trip),
        rhs,
        fit: fit.clone(),
    })
}

/// Laplace–Beltrami system −Δ_Ω u = f with the mode-0 fit as Dirichlet lifting.
pub fn assemble_poisson(
    space: &dyn Space,
    geometry: &Geometry,
    fit: &BoundaryFit,
    f: Source,
    degree: usize,
) -> Result<LinearSystem> {
    if fit.mode != 0 {
        return Err(Error::Validation("the Poisson system needs a mode 0 boundary fit".into()));
    }
    assemble(Operator::Laplace, space, geometry, fit, f, degree)
}

/// Surface biharmonic system Δ²_Ω u = f with the mode-1 fit as lifting.
pub fn assemble_biharmonic(
    space: &dyn Space,
    geometry: &Geometry,
    fit: &BoundaryFit,
    f: Source,
    degree: usize,
) -> Result<LinearSystem> {
    if !space.is_c1() {
        return Err(Error::Capability("biharmonic requires C1 basis".into()));
    }
    if fit.mode != 1 {
        return Err(Error::Validation("the biharmonic system needs a mode 1 boundary fit".into()));
    }
    assemble(Operator::Bilaplace, space, geometry, fit, f, degree)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flux_divergence_of_identity_is_laplacian() {
        let jet = MapJet::identity(Vec2::new(0.3, 0.1));
        let h = Mat2::new(1.5, 0.2, 0.2, -0.7);
        let v = flux_divergence(&jet, 2, Vec2::new(3.0, 4.0), &h).unwrap();
        assert!((v - 0.8).abs() < 1e-14);
    }

    #[test]
    fn constant_function_has_zero_flux() {
        let mut jet = MapJet::identity(Vec2::zeros());
        jet.jac[(2, 0)] = 0.4;
        jet.hess[2] = Mat2::new(0.3, 0.1, 0.1, 0.2);
        let v = flux_divergence(&jet, 3, Vec2::zeros(), &Mat2::zeros()).unwrap();
        assert_eq!(v, 0.0);
    }
}

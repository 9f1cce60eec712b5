use super::PsBasis;
use crate::error::{Error, Result};
use crate::geom::{Mat2, Vec2};
use crate::mesh::Triangulation;
use crate::space::{Active, Space};

/// Rational Powell–Sabin basis N_k = w_k B_k / W with W = Σ w_k B_k.
#[derive(Clone, Debug)]
pub struct RationalBasis {
    basis: PsBasis,
    weights: Vec<f64>,
    /// Ordinates of W per micro-triangle.
    denom: Vec<[f64; 10]>,
}

impl RationalBasis {
    pub fn new(basis: PsBasis, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != basis.dim() {
            return Err(Error::Validation(format!(
                "{} weights for {} basis functions",
                weights.len(),
                basis.dim()
            )));
        }
        if let Some(k) = weights.iter().position(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::Validation(format!("weight {k} is not positive")));
        }
        let denom: Vec<[f64; 10]> = (0..basis.num_cells())
            .map(|c| basis.spline_ordinates(&weights, c))
            .collect();
        if let Some(c) = denom.iter().position(|o| o.iter().any(|&x| x <= 0.0)) {
            return Err(Error::Validation(format!("denominator is not positive on micro-triangle {c}")));
        }
        Ok(RationalBasis {
            basis,
            weights,
            denom,
        })
    }

    /// All weights equal to one: N_k = B_k.
    pub fn unit(basis: PsBasis) -> Self {
        let w = vec![1.0; basis.dim()];
        Self::new(basis, w).expect("unit weights are valid")
    }

    pub fn basis(&self) -> &PsBasis {
        &self.basis
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn denominator_ordinates(&self, c: usize) -> &[f64; 10] {
        &self.denom[c]
    }
    pub fn is_polynomial(&self) -> bool {
        self.weights.iter().all(|&w| w == self.weights[0])
    }
}

impl Space for RationalBasis {
    fn dim(&self) -> usize {
        self.basis.dim()
    }
    fn mesh(&self) -> &Triangulation {
        self.basis.mesh()
    }
    fn num_cells(&self) -> usize {
        self.basis.num_cells()
    }
    fn cell_points(&self, c: usize) -> [Vec2; 3] {
        self.basis.cell_points(c)
    }
    fn cell_group(&self, c: usize) -> usize {
        c / 6
    }
    fn group_functions(&self, g: usize) -> &[usize] {
        self.basis.group_functions(g)
    }
    fn group_cells(&self, g: usize) -> Vec<usize> {
        (6 * g..6 * g + 6).collect()
    }
    fn eval(&self, c: usize, l: [f64; 3], out: &mut Active) {
        self.basis.eval(c, l, out);
        let mut w = 0.0;
        let mut gw = Vec2::zeros();
        let mut hw = Mat2::zeros();
        for n in 0..out.len() {
            let wk = self.weights[out.idx[n]];
            w += wk * out.val[n];
            gw += out.grad[n] * wk;
            hw += out.hess[n] * wk;
        }
        for n in 0..out.len() {
            let wk = self.weights[out.idx[n]];
            let v = wk * out.val[n] / w;
            let g = (out.grad[n] * wk - gw * v) / w;
            let h = (out.hess[n] * wk - g * gw.transpose() - gw * g.transpose() - hw * v) / w;
            out.val[n] = v;
            out.grad[n] = g;
            out.hess[n] = (h + h.transpose()) * 0.5;
        }
    }
    fn locate(&self, p: Vec2) -> Result<(usize, [f64; 3])> {
        self.basis.locate(p)
    }
    fn is_c1(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{builders, PsRefinement};

    #[test]
    fn scaled_weights_cancel() {
        let b = PsBasis::new(&PsRefinement::new(&builders::pentagon()).unwrap()).unwrap();
        let w1: Vec<f64> = (0..b.dim()).map(|k| 1.0 + 0.1 * (k % 7) as f64).collect();
        let w2: Vec<f64> = w1.iter().map(|w| 10.0 * w).collect();
        let r1 = RationalBasis::new(b.clone(), w1).unwrap();
        let r2 = RationalBasis::new(b, w2).unwrap();
        let (mut a1, mut a2) = (Active::default(), Active::default());
        r1.eval(7, [0.2, 0.3, 0.5], &mut a1);
        r2.eval(7, [0.2, 0.3, 0.5], &mut a2);
        for n in 0..a1.len() {
            assert!((a1.val[n] - a2.val[n]).abs() < 1e-13);
        }
        assert!((a1.val.iter().sum::<f64>() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn nonpositive_weight_rejected() {
        let b = PsBasis::new(&PsRefinement::new(&builders::unit_square()).unwrap()).unwrap();
        let mut w = vec![1.0; b.dim()];
        w[3] = 0.0;
        assert!(matches!(RationalBasis::new(b, w), Err(Error::Validation(_))));
    }
}

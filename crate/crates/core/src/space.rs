//! The interface shared by every discrete space the solvers accept.

use crate::error::Result;
use crate::geom::{Mat2, Vec2};
use crate::mesh::Triangulation;

/// Values, gradients and Hessians of the functions active at one point.
#[derive(Clone, Debug, Default)]
pub struct Active {
    pub idx: Vec<usize>,
    pub val: Vec<f64>,
    pub grad: Vec<Vec2>,
    pub hess: Vec<Mat2>,
}

impl Active {
    pub fn clear(&mut self) {
        self.idx.clear();
        self.val.clear();
        self.grad.clear();
        self.hess.clear();
    }

    pub fn push(&mut self, k: usize, v: f64, g: Vec2, h: Mat2) {
        self.idx.push(k);
        self.val.push(v);
        self.grad.push(g);
        self.hess.push(h);
    }

    pub fn len(&self) -> usize {
        self.idx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idx.is_empty()
    }

    /// Value, gradient and Hessian of Σ c_k φ_k.
    pub fn combine(&self, coeffs: &[f64]) -> (f64, Vec2, Mat2) {
        let mut v = 0.0;
        let mut g = Vec2::zeros();
        let mut h = Mat2::zeros();
        for n in 0..self.idx.len() {
            let c = coeffs[self.idx[n]];
            v += c * self.val[n];
            g += self.grad[n] * c;
            h += self.hess[n] * c;
        }
        (v, g, h)
    }
}

/// A finite-dimensional function space on a parameter triangulation.
///
/// Integration cells are grouped: every function active on a cell is active on
/// its whole group (macro-triangle), and two functions couple only through a shared group.
pub trait Space: Sync + Send {
    fn dim(&self) -> usize;
    fn mesh(&self) -> &Triangulation;
    fn num_cells(&self) -> usize;
    fn cell_points(&self, c: usize) -> [Vec2; 3];
    fn cell_group(&self, c: usize) -> usize;
    fn group_functions(&self, g: usize) -> &[usize];
    /// Fills `out` with every function of the cell's group at barycentric point `l`.
    fn eval(&self, c: usize, l: [f64; 3], out: &mut Active);
    fn locate(&self, p: Vec2) -> Result<(usize, [f64; 3])>;
    /// Whether the space is globally C1 (required for fourth-order problems).
    fn is_c1(&self) -> bool;

    fn cell_point(&self, c: usize, l: [f64; 3]) -> Vec2 {
        let [a, b, d] = self.cell_points(c);
        a * l[0] + b * l[1] + d * l[2]
    }

    fn cell_area(&self, c: usize) -> f64 {
        let [a, b, d] = self.cell_points(c);
        0.5 * crate::geom::orient2(a, b, d).abs()
    }

    /// Cells of group `g`, in increasing order.
    fn group_cells(&self, g: usize) -> Vec<usize> {
        (0..self.num_cells()).filter(|&c| self.cell_group(c) == g).collect()
    }

    fn num_groups(&self) -> usize {
        self.mesh().num_triangles()
    }

    /// Evaluates Σ c_k φ_k at `p`.
    fn spline_at(&self, coeffs: &[f64], p: Vec2) -> Result<(f64, Vec2, Mat2)> {
        let (c, l) = self.locate(p)?;
        let mut act = Active::default();
        self.eval(c, l, &mut act);
        Ok(act.combine(coeffs))
    }
}

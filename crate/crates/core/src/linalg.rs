//! Compressed sparse storage and the symmetric positive definite solver.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Relative residual every accepted solve must meet when double precision can represent it.
pub const SOLVE_TOL: f64 = 1e-12;
/// Componentwise backward error accepted once refinement has reached the rounding floor.
pub const BACKWARD_TOL: f64 = 1e-14;
const MAX_REFINEMENT_STEPS: usize = 4;

/// Square sparse matrix in compressed row layout. Column indices are sorted per row.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Duplicates are summed in their order of appearance, so the result is reproducible.
    pub fn from_triplets(n: usize, mut trip: Vec<(usize, usize, f64)>) -> Self {
        trip.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(trip.len());
        let mut vals: Vec<f64> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in trip {
            assert!(i < n && j < n, "triplet ({i}, {j}) outside {n}x{n}");
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |p| (self.cols[p], self.vals[p]))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[range.clone()].binary_search(&j) {
            Ok(p) => self.vals[range.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// b − A x with each row accumulated in twice the working precision.
    pub fn residual(&self, b: &[f64], x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                // error-free sum of b_i and every −a_ij x_j, compensated as in Dot2
                let (mut s, mut c) = (b[i], 0.0);
                for (j, v) in self.row(i) {
                    let p = -v * x[j];
                    let pe = (-v).mul_add(x[j], -p);
                    let t = s + p;
                    let z = t - s;
                    c += (s - (t - z)) + (p - z) + pe;
                    s = t;
                }
                s + c
            })
            .collect()
    }

    /// Oettli–Prager componentwise backward error of x as a solution of A x = b.
    pub fn backward_error(&self, b: &[f64], x: &[f64]) -> f64 {
        let r = self.residual(b, x);
        (0..self.n)
            .map(|i| {
                let scale = b[i].abs() + self.row(i).map(|(j, v)| (v * x[j]).abs()).sum::<f64>();
                if scale == 0.0 {
                    if r[i] == 0.0 { 0.0 } else { f64::INFINITY }
                } else {
                    r[i].abs() / scale
                }
            })
            .fold(0.0, f64::max)
    }

    /// max |a_ij − a_ji| relative to max |a_ij|.
    pub fn symmetry_defect(&self) -> f64 {
        let scale = self.vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        self.iter()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
            / scale
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Sparse Cholesky solve of A x = b for each right-hand side, with iterative refinement.
///
/// Fails when factorization breaks down or the relative residual stays above [`SOLVE_TOL`].
/// Ill-conditioned systems (fourth-order problems on fine meshes) can have
/// eps·‖A‖‖x‖ > SOLVE_TOL·‖b‖; such a solve is accepted only if its componentwise
/// backward error max |rᵢ| / (|A||x| + |b|)ᵢ is at most [`BACKWARD_TOL`].
pub fn solve_spd(a: &CsrMatrix, rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = a.dim();
    if n == 0 {
        return Ok(rhs.iter().map(|_| Vec::new()).collect());
    }
    let trip: Vec<Triplet<usize, usize, f64>> =
        a.iter().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trip)
        .map_err(|e| Error::Solver(format!("matrix construction failed: {e:?}")))?;
    let llt = mat
        .sp_cholesky(Side::Lower)
        .map_err(|e| Error::Solver(format!("Cholesky factorization failed: {e:?}")))?;
    let solve = |r: &[f64]| -> Vec<f64> {
        let mut m = Mat::<f64>::zeros(n, 1);
        for i in 0..n {
            m[(i, 0)] = r[i];
        }
        let x = llt.solve(&m);
        (0..n).map(|i| x[(i, 0)]).collect()
    };
    let mut out = Vec::with_capacity(rhs.len());
    for b in rhs {
        if b.len() != n {
            return Err(Error::Validation(format!("right-hand side of length {} for {n} unknowns", b.len())));
        }
        let bn = norm(b);
        if bn == 0.0 {
            out.push(vec![0.0; n]);
            continue;
        }
        let mut x = solve(b);
        let mut rel = f64::INFINITY;
        for _ in 0..=MAX_REFINEMENT_STEPS {
            let r = a.residual(b, &x);
            rel = norm(&r) / bn;
            if rel <= SOLVE_TOL * 1e-2 || !rel.is_finite() {
                break;
            }
            let dx = solve(&r);
            x.iter_mut().zip(&dx).for_each(|(xi, di)| *xi += di);
        }
        if !(rel <= SOLVE_TOL) {
            let omega = a.backward_error(b, &x);
            if !(omega <= BACKWARD_TOL) {
                return Err(Error::Solver(format!(
                    "relative residual {rel:e} exceeds {SOLVE_TOL:e} (backward error {omega:e})"
                )));
            }
        }
        out.push(x);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let a = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (1, 1, 2.0), (0, 0, 3.0), (0, 1, 0.5)]);
        assert_eq!(a.get(0, 0), 4.0);
        assert_eq!(a.get(1, 0), 0.0);
        assert_eq!(a.nnz(), 3);
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let b = vec![1.0, -2.0, 3.5];
        let x = solve_spd(&CsrMatrix::identity(3), &[b.clone()]).unwrap();
        assert_eq!(x[0], b);
    }

    #[test]
    fn indefinite_matrix_fails() {
        let a = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (1, 1, -1.0)]);
        assert!(matches!(solve_spd(&a, &[vec![1.0, 1.0]]), Err(Error::Solver(_))));
    }
}

//! Cubic Bernstein–Bézier patches on triangles.

use crate::error::{Error, Result};
use crate::geom::{orient2, Mat2, Vec2};

/// Multi-indices of the ten cubic ordinates, in storage order.
pub const MULTI: [[usize; 3]; 10] = [
    [3, 0, 0],
    [2, 1, 0],
    [2, 0, 1],
    [1, 2, 0],
    [1, 1, 1],
    [1, 0, 2],
    [0, 3, 0],
    [0, 2, 1],
    [0, 1, 2],
    [0, 0, 3],
];

/// Storage position of multi-index (i, j, k) with i + j + k = 3.
#[inline]
pub const fn index(i: usize, j: usize, _k: usize) -> usize {
    let r = 3 - i;
    r * (r + 1) / 2 + (r - j)
}

/// Barycentric coordinates with respect to a nondegenerate triangle.
pub fn barycentric(tri: &[Vec2; 3], p: Vec2) -> Result<[f64; 3]> {
    let [a, b, c] = *tri;
    let scale = (b - a).norm_squared().max((c - a).norm_squared());
    if orient2(a, b, c).abs() <= 1e-14 * scale {
        return Err(Error::Geometric("degenerate triangle".into()));
    }
    Ok(crate::geom::barycentric(p, a, b, c))
}

/// Cartesian gradients of the three barycentric coordinate functions.
pub fn barycentric_gradients(tri: &[Vec2; 3]) -> [Vec2; 3] {
    let [a, b, c] = *tri;
    let d = orient2(a, b, c);
    let perp = |u: Vec2| Vec2::new(-u.y, u.x) / d;
    [perp(c - b), perp(a - c), perp(b - a)]
}

/// Values of the ten cubic Bernstein polynomials at λ.
pub fn bernstein_values(l: [f64; 3]) -> [f64; 10] {
    let [a, b, c] = l;
    [
        a * a * a,
        3.0 * a * a * b,
        3.0 * a * a * c,
        3.0 * a * b * b,
        6.0 * a * b * c,
        3.0 * a * c * c,
        b * b * b,
        3.0 * b * b * c,
        3.0 * b * c * c,
        c * c * c,
    ]
}

/// Values, Cartesian gradients and Hessians of the ten cubic Bernstein polynomials.
#[derive(Clone, Copy, Debug)]
pub struct BernsteinJet {
    pub val: [f64; 10],
    pub grad: [Vec2; 10],
    pub hess: [Mat2; 10],
}

impl BernsteinJet {
    pub fn new(tri: &[Vec2; 3], l: [f64; 3]) -> Self {
        let g = barycentric_gradients(tri);
        let val = bernstein_values(l);
        let mut grad = [Vec2::zeros(); 10];
        let mut hess = [Mat2::zeros(); 10];
        for (n, m) in MULTI.iter().enumerate() {
            let coef = 6.0 / (fact(m[0]) * fact(m[1]) * fact(m[2]));
            let pw = |a: usize, e: usize| -> f64 { l[a].powi(e as i32) };
            // ∂/∂λ_a and ∂²/∂λ_a∂λ_b of coef·Π λ^m
            let mut d1 = [0.0; 3];
            for a in 0..3 {
                if m[a] > 0 {
                    let mut t = coef * m[a] as f64;
                    for c in 0..3 {
                        t *= pw(c, if c == a { m[c] - 1 } else { m[c] });
                    }
                    d1[a] = t;
                }
            }
            let mut d2 = [[0.0; 3]; 3];
            for a in 0..3 {
                for b in 0..3 {
                    let mut e = *m;
                    let mut t = coef;
                    if e[a] == 0 {
                        continue;
                    }
                    t *= e[a] as f64;
                    e[a] -= 1;
                    if e[b] == 0 {
                        continue;
                    }
                    t *= e[b] as f64;
                    e[b] -= 1;
                    for c in 0..3 {
                        t *= pw(c, e[c]);
                    }
                    d2[a][b] = t;
                }
            }
            for a in 0..3 {
                grad[n] += g[a] * d1[a];
                for b in 0..3 {
                    hess[n] += g[a] * g[b].transpose() * d2[a][b];
                }
            }
        }
        BernsteinJet { val, grad, hess }
    }

    /// Combines the jet with one ordinate table.
    pub fn apply(&self, ord: &[f64; 10]) -> (f64, Vec2, Mat2) {
        let mut v = 0.0;
        let mut g = Vec2::zeros();
        let mut h = Mat2::zeros();
        for n in 0..10 {
            v += ord[n] * self.val[n];
            g += self.grad[n] * ord[n];
            h += self.hess[n] * ord[n];
        }
        (v, g, h)
    }
}

fn fact(n: usize) -> f64 {
    [1.0, 1.0, 2.0, 6.0][n]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BezierPatch3 {
    pub triangle: [Vec2; 3],
    pub ordinates: [f64; 10],
}

impl BezierPatch3 {
    pub fn new(triangle: [Vec2; 3], ordinates: [f64; 10]) -> Result<Self> {
        barycentric(&triangle, triangle[0])?;
        Ok(BezierPatch3 {
            triangle,
            ordinates,
        })
    }

    /// Patch whose ordinates reproduce a cubic given by its blossom `f`.
    pub fn from_blossom(triangle: [Vec2; 3], f: impl Fn([Vec2; 3]) -> f64) -> Self {
        let mut ordinates = [0.0; 10];
        for (n, m) in MULTI.iter().enumerate() {
            let mut args = [Vec2::zeros(); 3];
            let mut p = 0;
            for (a, &e) in m.iter().enumerate() {
                for _ in 0..e {
                    args[p] = triangle[a];
                    p += 1;
                }
            }
            ordinates[n] = f(args);
        }
        BezierPatch3 {
            triangle,
            ordinates,
        }
    }

    /// Value by de Casteljau recursion.
    pub fn eval(&self, l: [f64; 3]) -> f64 {
        // level r holds ordinates of degree r indexed like MULTI restricted to |m| = r
        let mut cur: Vec<f64> = self.ordinates.to_vec();
        for deg in (1..=3usize).rev() {
            let mut next = Vec::with_capacity(deg * (deg + 1) / 2);
            for i in (0..deg).rev() {
                for j in (0..deg - i).rev() {
                    let k = deg - 1 - i - j;
                    let at = |i: usize, j: usize, _k: usize| cur[tri_index(deg, i, j)];
                    next.push(l[0] * at(i + 1, j, k) + l[1] * at(i, j + 1, k) + l[2] * at(i, j, k + 1));
                }
            }
            cur = next;
        }
        cur[0]
    }

    pub fn grad(&self, l: [f64; 3]) -> Vec2 {
        BernsteinJet::new(&self.triangle, l).apply(&self.ordinates).1
    }

    pub fn hess(&self, l: [f64; 3]) -> Mat2 {
        BernsteinJet::new(&self.triangle, l).apply(&self.ordinates).2
    }

    pub fn jet(&self, l: [f64; 3]) -> (f64, Vec2, Mat2) {
        BernsteinJet::new(&self.triangle, l).apply(&self.ordinates)
    }

    pub fn eval_at(&self, p: Vec2) -> f64 {
        self.eval(crate::geom::barycentric(
            p,
            self.triangle[0],
            self.triangle[1],
            self.triangle[2],
        ))
    }

    /// The same patch with its corners permuted: corner `c` of the result is corner `perm[c]` of `self`.
    pub fn permuted(&self, perm: [usize; 3]) -> Self {
        let mut ordinates = [0.0; 10];
        for (n, m) in MULTI.iter().enumerate() {
            let mut src = [0; 3];
            for c in 0..3 {
                src[perm[c]] = m[c];
            }
            ordinates[n] = self.ordinates[index(src[0], src[1], src[2])];
        }
        BezierPatch3 {
            triangle: [
                self.triangle[perm[0]],
                self.triangle[perm[1]],
                self.triangle[perm[2]],
            ],
            ordinates,
        }
    }
}

/// Position of (i, j, ·) among the multi-indices of degree `deg`, ordered like [`MULTI`].
fn tri_index(deg: usize, i: usize, j: usize) -> usize {
    let r = deg - i;
    r * (r + 1) / 2 + (r - j)
}

fn same_point(a: Vec2, b: Vec2) -> bool {
    (a - b).norm() <= 1e-12 * (1.0 + a.norm())
}

/// Reorders two patches so they read (U, V, A) and (U, V, B) over a shared edge [U, V].
fn align(a: &BezierPatch3, b: &BezierPatch3) -> Result<(BezierPatch3, BezierPatch3)> {
    let mut shared = Vec::new();
    for i in 0..3 {
        for j in 0..3 {
            if same_point(a.triangle[i], b.triangle[j]) {
                shared.push((i, j));
            }
        }
    }
    if shared.len() != 2 {
        return Err(Error::Validation("patches do not share an edge".into()));
    }
    let (ai, bi) = shared[0];
    let (aj, bj) = shared[1];
    let pa = [ai, aj, 3 - ai - aj];
    let pb = [bi, bj, 3 - bi - bj];
    let a = a.permuted(pa);
    let b = b.permuted(pb);
    for (i, j) in [(3, 0), (2, 1), (1, 2), (0, 3)] {
        let n = index(i, j, 0);
        if (a.ordinates[n] - b.ordinates[n]).abs() > 1e-12 * (1.0 + a.ordinates[n].abs()) {
            return Err(Error::Validation("patches are not continuous across the edge".into()));
        }
    }
    Ok((a, b))
}

/// Largest violations of the cross-edge C1 and C2 conditions.
pub fn smoothness_residuals(a: &BezierPatch3, b: &BezierPatch3) -> Result<(f64, f64)> {
    let (a, b) = align(a, b)?;
    let beta = crate::geom::barycentric(b.triangle[2], a.triangle[0], a.triangle[1], a.triangle[2]);
    let o = |i, j, k| a.ordinates[index(i, j, k)];
    let mut c1: f64 = 0.0;
    for (i, j) in [(2, 0), (1, 1), (0, 2)] {
        let pred = beta[0] * o(i + 1, j, 0) + beta[1] * o(i, j + 1, 0) + beta[2] * o(i, j, 1);
        c1 = c1.max((b.ordinates[index(i, j, 1)] - pred).abs());
    }
    let mut c2: f64 = 0.0;
    for (i, j) in [(1, 0), (0, 1)] {
        let mut pred = 0.0;
        for (p, q, r) in [(2, 0, 0), (0, 2, 0), (0, 0, 2), (1, 1, 0), (1, 0, 1), (0, 1, 1)] {
            let w = [1.0, 1.0, 2.0][[p, q, r].iter().filter(|&&e| e == 1).count()]
                * beta[0].powi(p as i32)
                * beta[1].powi(q as i32)
                * beta[2].powi(r as i32);
            pred += w * o(i + p, j + q, r);
        }
        c2 = c2.max((b.ordinates[index(i, j, 2)] - pred).abs());
    }
    Ok((c1, c2))
}

pub fn c1_residual(a: &BezierPatch3, b: &BezierPatch3) -> Result<f64> {
    Ok(smoothness_residuals(a, b)?.0)
}

pub fn c2_residual(a: &BezierPatch3, b: &BezierPatch3) -> Result<f64> {
    Ok(smoothness_residuals(a, b)?.1)
}

/// Largest disagreement of value, gradient and Hessian among patches that all contain `p`.
pub fn c2_residual_at(patches: &[BezierPatch3], p: Vec2) -> f64 {
    let jets: Vec<_> = patches
        .iter()
        .map(|q| {
            let [a, b, c] = q.triangle;
            q.jet(crate::geom::barycentric(p, a, b, c))
        })
        .collect();
    let mut r: f64 = 0.0;
    for j in &jets[1..] {
        r = r
            .max((j.0 - jets[0].0).abs())
            .max((j.1 - jets[0].1).amax())
            .max((j.2 - jets[0].2).amax());
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> [Vec2; 3] {
        [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)]
    }

    #[test]
    fn index_matches_table() {
        for (n, m) in MULTI.iter().enumerate() {
            assert_eq!(index(m[0], m[1], m[2]), n);
        }
    }

    #[test]
    fn de_casteljau_matches_bernstein_sum() {
        let p = BezierPatch3::new(tri(), [1.0, -2.0, 0.5, 3.0, 1.5, -1.0, 0.25, 2.0, -0.5, 4.0]).unwrap();
        let l = [0.2, 0.5, 0.3];
        let b = bernstein_values(l);
        let direct: f64 = (0..10).map(|n| b[n] * p.ordinates[n]).sum();
        assert!((p.eval(l) - direct).abs() < 1e-14);
    }

    #[test]
    fn permutation_preserves_values() {
        let p = BezierPatch3::new(tri(), [1.0, -2.0, 0.5, 3.0, 1.5, -1.0, 0.25, 2.0, -0.5, 4.0]).unwrap();
        let q = p.permuted([2, 0, 1]);
        let x = Vec2::new(0.3, 0.2);
        assert!((p.eval_at(x) - q.eval_at(x)).abs() < 1e-14);
    }

    #[test]
    fn degenerate_triangle_rejected() {
        let t = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(2.0, 2.0)];
        assert!(BezierPatch3::new(t, [0.0; 10]).is_err());
    }
}

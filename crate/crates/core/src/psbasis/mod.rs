//! The cubic Powell–Sabin B-spline basis of dimension 3|V| + 2|E| and its rational extension.
//!
//! Each spline in the space is determined by
//! - one affine function Lᵢ per vertex (value and gradient at vᵢ), and
//! - one affine function φₗ per edge along the line through the edge split point and
//!   the adjacent triangle split points.
//!
//! φₗ(v_l^e) is the middle B-spline coefficient of the (C2, one-knot) edge trace and
//! φₗ(v_m^t) the mixed coefficient of the quadratic that carries the second-order
//! behaviour at v_m^t. The ordinates of all six micro-patches follow in closed form.

mod config;
mod rational;

pub use config::{convex_hull, default_configs, ps_points, ConfigTriangle, CONTAINMENT_TOL};
pub use rational::RationalBasis;

use crate::bernstein::{BernsteinJet, BezierPatch3, MULTI};
use crate::error::{Error, Result};
use crate::geom::{Mat2, Vec2};
use crate::mesh::{PsRefinement, Triangulation};
use crate::space::{Active, Space};

/// Number of basis functions supported on one macro-triangle.
pub const LOCAL_DIM: usize = 15;

type MacroTable = [[[f64; 10]; 6]; LOCAL_DIM];

/// An affine function L(x) = value + grad·(x − at).
#[derive(Clone, Copy, Debug, Default)]
struct Affine {
    at: Vec2,
    value: f64,
    grad: Vec2,
}

impl Affine {
    fn eval(&self, x: Vec2) -> f64 {
        self.value + self.grad.dot(&(x - self.at))
    }
}

/// Free data of one macro-triangle in local numbering.
#[derive(Clone, Copy, Debug, Default)]
struct MacroData {
    vertex: [Affine; 3],
    /// φ at the split point of local edge k.
    edge: [f64; 3],
    /// φ at the triangle split point, for local edge k.
    inner: [f64; 3],
}

/// Geometry of one macro-triangle needed by the ordinate formulas.
#[derive(Clone, Copy, Debug)]
struct MacroGeom {
    v: [Vec2; 3],
    e: [Vec2; 3],
    t: Vec2,
    /// |v_k e_k| / |v_k v_{k+1}|.
    mu: [f64; 3],
    /// Barycentric coordinates (w.r.t. the macro) of e_k and t.
    bary_e: [[f64; 3]; 3],
    bary_t: [f64; 3],
}

impl MacroGeom {
    fn new(psr: &PsRefinement, m: usize) -> Self {
        let mesh = psr.mesh();
        let v = mesh.triangle_points(m);
        let edges = mesh.triangle_edges(m);
        let e = edges.map(|l| psr.edge_split(l));
        let t = psr.triangle_split(m);
        let mut mu = [0.0; 3];
        let mut bary_e = [[0.0; 3]; 3];
        for k in 0..3 {
            let (a, b) = (v[k], v[(k + 1) % 3]);
            mu[k] = (e[k] - a).norm() / (b - a).norm();
            bary_e[k][k] = 1.0 - mu[k];
            bary_e[k][(k + 1) % 3] = mu[k];
        }
        let bary_t = crate::geom::barycentric(t, v[0], v[1], v[2]);
        MacroGeom {
            v,
            e,
            t,
            mu,
            bary_e,
            bary_t,
        }
    }

    /// Ordinates of the six micro-patches. Micro `2k + s` has corners (v_{k+s}, e_k, t).
    fn ordinates(&self, d: &MacroData) -> [[f64; 10]; 6] {
        // quadratic at the triangle split point, as symmetric BB coefficients over the macro
        let mut g = [[0.0; 3]; 3];
        for a in 0..3 {
            g[a][a] = d.vertex[a].eval(self.v[a] * (2.0 / 3.0) + self.t / 3.0);
        }
        for k in 0..3 {
            let b = (k + 1) % 3;
            g[k][b] = d.inner[k];
            g[b][k] = d.inner[k];
        }
        let blossom = |x: &[f64; 3], y: &[f64; 3]| -> f64 {
            let mut s = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    s += g[a][b] * x[a] * y[b];
                }
            }
            s
        };
        let unit = |a: usize| {
            let mut u = [0.0; 3];
            u[a] = 1.0;
            u
        };

        let mut out = [[0.0; 10]; 6];
        for k in 0..3 {
            let j = (k + 1) % 3;
            let mu = self.mu[k];
            let d1 = d.vertex[k].eval(self.v[k] * (2.0 / 3.0) + self.e[k] / 3.0);
            let d3 = d.vertex[j].eval(self.v[j] * (2.0 / 3.0) + self.e[k] / 3.0);
            let d2 = d.edge[k];
            let c2 = d1 + mu * (d2 - d1);
            let c4 = d3 + (1.0 - mu) * (d2 - d3);
            let c3 = (1.0 - mu) * c2 + mu * c4;
            for s in 0..2 {
                let a = (k + s) % 3;
                let pts = [unit(a), self.bary_e[k], self.bary_t];
                let ord = &mut out[2 * k + s];
                for (n, mi) in MULTI.iter().enumerate() {
                    ord[n] = if mi[2] >= 1 {
                        let mut args = Vec::with_capacity(2);
                        for (c, &cnt) in mi.iter().enumerate() {
                            let cnt = if c == 2 { cnt - 1 } else { cnt };
                            for _ in 0..cnt {
                                args.push(pts[c]);
                            }
                        }
                        blossom(&args[0], &args[1])
                    } else {
                        match mi[0] {
                            3 => d.vertex[a].value,
                            2 => d.vertex[a].eval(self.v[a] * (2.0 / 3.0) + self.e[k] / 3.0),
                            1 => {
                                if s == 0 {
                                    c2
                                } else {
                                    c4
                                }
                            }
                            _ => c3,
                        }
                    };
                }
            }
        }
        out
    }
}

/// Affine coordinate along the segment [q1, q2]: (1 − τ, τ) at the projection of x.
fn segment_coords(q1: Vec2, q2: Vec2, x: Vec2) -> [f64; 2] {
    let d = q2 - q1;
    let t = (x - q1).dot(&d) / d.norm_squared();
    [1.0 - t, t]
}

/// First and second derivatives of a function, as consumed by [`PsBasis::interpolate`].
pub type Jet = (f64, Vec2, Mat2);

#[derive(Clone, Debug)]
pub struct PsBasis {
    psr: PsRefinement,
    configs: Vec<ConfigTriangle>,
    /// Endpoints of the segment carrying each edge's affine data.
    edge_segments: Vec<[Vec2; 2]>,
    macro_funcs: Vec<[usize; LOCAL_DIM]>,
    tables: Vec<MacroTable>,
}

impl PsBasis {
    pub fn new(psr: &PsRefinement) -> Result<Self> {
        let configs = default_configs(psr)?;
        Self::with_configs(psr, configs)
    }

    pub fn with_configs(psr: &PsRefinement, configs: Vec<ConfigTriangle>) -> Result<Self> {
        let mesh = psr.mesh();
        if configs.len() != mesh.num_vertices() {
            return Err(Error::Validation(format!(
                "{} configuration triangles for {} vertices",
                configs.len(),
                mesh.num_vertices()
            )));
        }
        for (i, c) in configs.iter().enumerate() {
            if c.area() <= 0.0 {
                return Err(Error::Construction(format!(
                    "configuration triangle of vertex {i} is not counterclockwise"
                )));
            }
        }
        let nv = mesh.num_vertices();
        let edge_segments: Vec<[Vec2; 2]> = (0..mesh.num_edges())
            .map(|l| match mesh.edge_triangles(l) {
                (t0, Some(t1)) => [psr.triangle_split(t0), psr.triangle_split(t1)],
                (t0, None) => [psr.edge_split(l), psr.triangle_split(t0)],
            })
            .collect();

        let mut macro_funcs = Vec::with_capacity(mesh.num_triangles());
        let mut tables = Vec::with_capacity(mesh.num_triangles());
        for m in 0..mesh.num_triangles() {
            let geo = MacroGeom::new(psr, m);
            let tri = mesh.triangle(m);
            let edges = mesh.triangle_edges(m);
            let mut funcs = [0usize; LOCAL_DIM];
            let mut table: MacroTable = [[[0.0; 10]; 6]; LOCAL_DIM];
            for a in 0..3 {
                let cfg = &configs[tri[a]];
                let lam = cfg.barycentric(geo.v[a]);
                let grads = cfg.gradients();
                for r in 0..3 {
                    let mut d = MacroData::default();
                    d.vertex[a] = Affine {
                        at: geo.v[a],
                        value: lam[r],
                        grad: grads[r],
                    };
                    funcs[3 * a + r] = 3 * tri[a] + r;
                    table[3 * a + r] = geo.ordinates(&d);
                }
            }
            for k in 0..3 {
                let l = edges[k];
                let [q1, q2] = edge_segments[l];
                let at_e = segment_coords(q1, q2, geo.e[k]);
                let at_t = segment_coords(q1, q2, geo.t);
                for r in 0..2 {
                    let mut d = MacroData::default();
                    d.edge[k] = at_e[r];
                    d.inner[k] = at_t[r];
                    funcs[9 + 2 * k + r] = 3 * nv + 2 * l + r;
                    table[9 + 2 * k + r] = geo.ordinates(&d);
                }
            }
            for (f, tab) in table.iter().enumerate() {
                for ord in tab {
                    if let Some(x) = ord.iter().find(|&&x| x < -1e-12) {
                        return Err(Error::Construction(format!(
                            "basis function {} has negative ordinate {x:e} in macro {m}",
                            funcs[f]
                        )));
                    }
                }
            }
            macro_funcs.push(funcs);
            tables.push(table);
        }
        Ok(PsBasis {
            psr: psr.clone(),
            configs,
            edge_segments,
            macro_funcs,
            tables,
        })
    }

    pub fn refinement(&self) -> &PsRefinement {
        &self.psr
    }
    pub fn configs(&self) -> &[ConfigTriangle] {
        &self.configs
    }
    pub fn vertex_index(&self, i: usize, r: usize) -> usize {
        3 * i + r
    }
    pub fn edge_index(&self, l: usize, r: usize) -> usize {
        3 * self.psr.mesh().num_vertices() + 2 * l + r
    }
    /// Global indices of the 15 functions living on macro `m`.
    pub fn macro_functions(&self, m: usize) -> &[usize; LOCAL_DIM] {
        &self.macro_funcs[m]
    }

    /// Ordinates of local function `f` of macro `m` on its micro-triangle `j` (0..6).
    pub fn ordinates(&self, m: usize, f: usize, j: usize) -> &[f64; 10] {
        &self.tables[m][f][j]
    }

    /// Macro-triangles on which function `k` is supported.
    pub fn support(&self, k: usize) -> Vec<usize> {
        let mesh = self.psr.mesh();
        let nv = mesh.num_vertices();
        if k < 3 * nv {
            mesh.vertex_triangles(k / 3).to_vec()
        } else {
            let (t0, t1) = mesh.edge_triangles((k - 3 * nv) / 2);
            std::iter::once(t0).chain(t1).collect()
        }
    }

    /// Bézier patch of function `k` on micro-triangle `c`, if supported there.
    pub fn patch(&self, k: usize, c: usize) -> Option<BezierPatch3> {
        let m = c / 6;
        let f = self.macro_funcs[m].iter().position(|&g| g == k)?;
        Some(BezierPatch3 {
            triangle: self.psr.micro(c).points,
            ordinates: self.tables[m][f][c % 6],
        })
    }

    /// Ordinates of the spline with coefficient vector `coeffs` on micro-triangle `c`.
    pub fn spline_ordinates(&self, coeffs: &[f64], c: usize) -> [f64; 10] {
        let m = c / 6;
        let mut out = [0.0; 10];
        for (f, &k) in self.macro_funcs[m].iter().enumerate() {
            let ck = coeffs[k];
            if ck != 0.0 {
                for n in 0..10 {
                    out[n] += ck * self.tables[m][f][c % 6][n];
                }
            }
        }
        out
    }

    /// Coefficients of the spline whose degrees of freedom are sampled from `f`.
    ///
    /// Exact on the space (so in particular on P3). `f` returns value, gradient and
    /// Hessian; at vertices only the first two are used, and second derivatives are
    /// taken at split points, where every spline in the space is C2.
    pub fn interpolate(&self, f: &dyn Fn(Vec2, usize) -> Jet) -> Vec<f64> {
        let mesh = self.psr.mesh();
        let nv = mesh.num_vertices();
        let mut c = vec![0.0; self.dim()];
        for i in 0..nv {
            let v = mesh.vertex(i);
            let m = mesh.vertex_triangles(i)[0];
            let (val, grad, _) = f(v, m);
            for r in 0..3 {
                c[3 * i + r] = val + grad.dot(&(self.configs[i].q[r] - v));
            }
        }
        for l in 0..mesh.num_edges() {
            let [a, b] = mesh.edge(l);
            let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
            let e = self.psr.edge_split(l);
            let (t0, t1) = mesh.edge_triangles(l);
            let inner = |m: usize| -> f64 {
                let t = self.psr.triangle_split(m);
                let (val, grad, hess) = f(t, m);
                let (xa, xb) = (pa - t, pb - t);
                val + grad.dot(&(xa + xb)) / 3.0 + xa.dot(&(hess * xb)) / 6.0
            };
            match t1 {
                Some(t1) => {
                    c[3 * nv + 2 * l] = inner(t0);
                    c[3 * nv + 2 * l + 1] = inner(t1);
                }
                None => {
                    let tau = (pb - pa).normalize();
                    let (val, grad, hess) = f(e, t0);
                    let (ta, tb) = (-(e - pa).norm(), (pb - e).norm());
                    let d2 = val
                        + grad.dot(&tau) * (ta + tb) / 3.0
                        + tau.dot(&(hess * tau)) * ta * tb / 6.0;
                    c[3 * nv + 2 * l] = d2;
                    c[3 * nv + 2 * l + 1] = inner(t0);
                }
            }
        }
        c
    }

    /// Segment [q1, q2] along which the data of edge `l` is affine.
    pub fn edge_segment(&self, l: usize) -> [Vec2; 2] {
        self.edge_segments[l]
    }
}

impl Space for PsBasis {
    fn dim(&self) -> usize {
        3 * self.psr.mesh().num_vertices() + 2 * self.psr.mesh().num_edges()
    }
    fn mesh(&self) -> &Triangulation {
        self.psr.mesh()
    }
    fn num_cells(&self) -> usize {
        self.psr.num_micro()
    }
    fn cell_points(&self, c: usize) -> [Vec2; 3] {
        self.psr.micro(c).points
    }
    fn cell_group(&self, c: usize) -> usize {
        c / 6
    }
    fn group_functions(&self, g: usize) -> &[usize] {
        &self.macro_funcs[g]
    }
    fn group_cells(&self, g: usize) -> Vec<usize> {
        (6 * g..6 * g + 6).collect()
    }
    fn eval(&self, c: usize, l: [f64; 3], out: &mut Active) {
        let jet = BernsteinJet::new(&self.psr.micro(c).points, l);
        let m = c / 6;
        out.clear();
        for (f, &k) in self.macro_funcs[m].iter().enumerate() {
            let (v, g, h) = jet.apply(&self.tables[m][f][c % 6]);
            out.push(k, v, g, h);
        }
    }
    fn locate(&self, p: Vec2) -> Result<(usize, [f64; 3])> {
        self.psr.locate(p)
    }
    fn is_c1(&self) -> bool {
        true
    }
}

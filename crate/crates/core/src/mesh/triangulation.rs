use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{cross, orient2, Vec2};

/// Two boundary edges at a vertex are collinear when the sine of their angle is below this.
pub const COLLINEAR_SINE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VertexKind {
    Interior,
    /// Boundary vertex where the two boundary edges are not on one line.
    Corner,
    /// Boundary vertex where the two boundary edges lie on one line.
    Collinear,
}

impl VertexKind {
    pub fn is_boundary(self) -> bool {
        !matches!(self, VertexKind::Interior)
    }
}

/// A triangle pair produced by green bisection, remembered so the pair can be
/// merged back into its parent before the next refinement pass.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GreenPair {
    pub children: [usize; 2],
    pub parent: [usize; 3],
}

/// Conforming triangulation with counterclockwise triangles.
///
/// Local edge `k` of a triangle joins its local vertices `k` and `k + 1 (mod 3)`.
#[derive(Clone, Debug)]
pub struct Triangulation {
    vertices: Vec<Vec2>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    edge_tris: Vec<(usize, Option<usize>)>,
    tri_edges: Vec<[usize; 3]>,
    vertex_tris: Vec<Vec<usize>>,
    vertex_kind: Vec<VertexKind>,
    edge_index: HashMap<(usize, usize), usize>,
    green: Vec<GreenPair>,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Triangulation {
    pub fn new(points: Vec<Vec2>, tri_indices: Vec<[usize; 3]>) -> Result<Self> {
        Self::with_green(points, tri_indices, Vec::new())
    }

    pub(crate) fn with_green(
        points: Vec<Vec2>,
        tri_indices: Vec<[usize; 3]>,
        green: Vec<GreenPair>,
    ) -> Result<Self> {
        let nv = points.len();
        if tri_indices.is_empty() {
            return Err(Error::Validation("no triangles".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(Error::Validation(format!("vertex {i} is not finite")));
            }
        }
        let mut seen: HashMap<(u64, u64), usize> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            if let Some(j) = seen.insert((p.x.to_bits(), p.y.to_bits()), i) {
                return Err(Error::Validation(format!("vertices {j} and {i} coincide")));
            }
        }

        let mut triangles = Vec::with_capacity(tri_indices.len());
        for (t, tri) in tri_indices.iter().enumerate() {
            let [a, b, c] = *tri;
            if a >= nv || b >= nv || c >= nv {
                return Err(Error::Validation(format!("triangle {t} has an out-of-range index")));
            }
            if a == b || b == c || a == c {
                return Err(Error::Geometric(format!("triangle {t} repeats a vertex")));
            }
            let (pa, pb, pc) = (points[a], points[b], points[c]);
            let scale = (pb - pa).norm_squared().max((pc - pa).norm_squared());
            let o = orient2(pa, pb, pc);
            if o.abs() <= 1e-14 * scale {
                return Err(Error::Geometric(format!("triangle {t} is degenerate")));
            }
            triangles.push(if o > 0.0 { [a, b, c] } else { [a, c, b] });
        }

        let mut edges: Vec<[usize; 2]> = Vec::new();
        let mut edge_tris: Vec<(usize, Option<usize>)> = Vec::new();
        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
        // directed use per edge, for orientation consistency
        let mut edge_dir: Vec<(usize, usize)> = Vec::new();
        let mut tri_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut te = [0usize; 3];
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let kk = key(a, b);
                let l = match edge_index.get(&kk) {
                    Some(&l) => {
                        let (first, second) = edge_tris[l];
                        if second.is_some() {
                            return Err(Error::Structural(format!(
                                "edge ({a},{b}) is shared by more than two triangles ({first}, {}, {t})",
                                second.unwrap()
                            )));
                        }
                        if edge_dir[l] == (a, b) {
                            return Err(Error::Structural(format!(
                                "triangles {first} and {t} overlap along edge ({a},{b})"
                            )));
                        }
                        edge_tris[l].1 = Some(t);
                        l
                    }
                    None => {
                        let l = edges.len();
                        edges.push([kk.0, kk.1]);
                        edge_tris.push((t, None));
                        edge_dir.push((a, b));
                        edge_index.insert(kk, l);
                        l
                    }
                };
                te[k] = l;
            }
            tri_edges.push(te);
        }

        let mut vertex_tris = vec![Vec::new(); nv];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                vertex_tris[v].push(t);
            }
        }
        if let Some(v) = vertex_tris.iter().position(|ts| ts.is_empty()) {
            return Err(Error::Structural(format!("vertex {v} belongs to no triangle")));
        }

        // boundary edges, directed as in their triangle (interior on the left)
        let mut bnd_next: Vec<Vec<usize>> = vec![Vec::new(); nv];
        let mut bnd_prev: Vec<Vec<usize>> = vec![Vec::new(); nv];
        let mut boundary_edges = Vec::new();
        for (l, &(_, second)) in edge_tris.iter().enumerate() {
            if second.is_none() {
                let (a, b) = edge_dir[l];
                bnd_next[a].push(b);
                bnd_prev[b].push(a);
                boundary_edges.push(l);
            }
        }

        // T-junctions: a vertex lying inside an edge that only one triangle uses
        for &l in &boundary_edges {
            let [a, b] = edges[l];
            let (pa, pb) = (points[a], points[b]);
            let d = pb - pa;
            let len2 = d.norm_squared();
            let (xmin, xmax) = (pa.x.min(pb.x), pa.x.max(pb.x));
            let (ymin, ymax) = (pa.y.min(pb.y), pa.y.max(pb.y));
            let pad = 1e-12 * len2.sqrt();
            for (v, p) in points.iter().enumerate() {
                if v == a || v == b {
                    continue;
                }
                if p.x < xmin - pad || p.x > xmax + pad || p.y < ymin - pad || p.y > ymax + pad {
                    continue;
                }
                let w = p - pa;
                let s = w.dot(&d) / len2;
                let dist = cross(d, w).abs() / len2.sqrt();
                if s > 1e-12 && s < 1.0 - 1e-12 && dist <= 1e-12 * len2.sqrt() {
                    return Err(Error::Structural(format!(
                        "vertex {v} is a hanging node on edge ({a},{b})"
                    )));
                }
            }
        }

        let mut vertex_kind = vec![VertexKind::Interior; nv];
        for v in 0..nv {
            match (bnd_prev[v].len(), bnd_next[v].len()) {
                (0, 0) => {}
                (1, 1) => {
                    let p = points[bnd_prev[v][0]];
                    let q = points[bnd_next[v][0]];
                    let d1 = (points[v] - p).normalize();
                    let d2 = (q - points[v]).normalize();
                    let sine = cross(d1, d2);
                    vertex_kind[v] = if sine.abs() < COLLINEAR_SINE_TOL && d1.dot(&d2) > 0.0 {
                        VertexKind::Collinear
                    } else {
                        VertexKind::Corner
                    };
                }
                _ => {
                    return Err(Error::Structural(format!(
                        "vertex {v} is a non-manifold boundary vertex"
                    )))
                }
            }
        }

        // folded or overlapping triangles change the area balance
        let tri_area: f64 = triangles
            .iter()
            .map(|t| 0.5 * orient2(points[t[0]], points[t[1]], points[t[2]]))
            .sum();
        let loop_area: f64 = boundary_edges
            .iter()
            .map(|&l| {
                let (a, b) = edge_dir[l];
                0.5 * cross(points[a], points[b])
            })
            .sum();
        if (tri_area - loop_area).abs() > 1e-10 * tri_area.abs().max(1e-300) {
            return Err(Error::Structural(format!(
                "triangles overlap: triangle area {tri_area} differs from enclosed area {loop_area}"
            )));
        }

        Ok(Triangulation {
            vertices: points,
            triangles,
            edges,
            edge_tris,
            tri_edges,
            vertex_tris,
            vertex_kind,
            edge_index,
            green,
        })
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }
    pub fn vertex(&self, i: usize) -> Vec2 {
        self.vertices[i]
    }
    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }
    pub fn triangle(&self, t: usize) -> [usize; 3] {
        self.triangles[t]
    }
    pub fn triangle_points(&self, t: usize) -> [Vec2; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }
    pub fn edge(&self, l: usize) -> [usize; 2] {
        self.edges[l]
    }
    /// Triangles adjacent to edge `l`; the second is `None` on the boundary.
    pub fn edge_triangles(&self, l: usize) -> (usize, Option<usize>) {
        self.edge_tris[l]
    }
    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.tri_edges[t]
    }
    pub fn vertex_triangles(&self, v: usize) -> &[usize] {
        &self.vertex_tris[v]
    }
    pub fn vertex_kind(&self, v: usize) -> VertexKind {
        self.vertex_kind[v]
    }
    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_index.get(&key(a, b)).copied()
    }
    pub fn green_pairs(&self) -> &[GreenPair] {
        &self.green
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }
    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_boundary_edge(&self, l: usize) -> bool {
        self.edge_tris[l].1.is_none()
    }
    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.vertex_kind[v].is_boundary()
    }
    pub fn boundary_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(|&l| self.is_boundary_edge(l))
    }
    pub fn num_boundary_edges(&self) -> usize {
        self.boundary_edges().count()
    }
    pub fn num_boundary_vertices(&self) -> usize {
        self.vertex_kind.iter().filter(|k| k.is_boundary()).count()
    }
    pub fn num_corner_vertices(&self) -> usize {
        self.vertex_kind
            .iter()
            .filter(|&&k| k == VertexKind::Corner)
            .count()
    }
    pub fn num_collinear_vertices(&self) -> usize {
        self.vertex_kind
            .iter()
            .filter(|&&k| k == VertexKind::Collinear)
            .count()
    }

    /// Local index (0..3) of edge `l` within triangle `t`.
    pub fn local_edge(&self, t: usize, l: usize) -> Option<usize> {
        self.tri_edges[t].iter().position(|&e| e == l)
    }

    /// Boundary edge endpoints ordered so the domain lies on the left.
    pub fn oriented_boundary_edge(&self, l: usize) -> (usize, usize) {
        let (t, _) = self.edge_tris[l];
        let k = self.local_edge(t, l).expect("edge belongs to its triangle");
        let tri = self.triangles[t];
        (tri[k], tri[(k + 1) % 3])
    }

    /// Outward unit normal of a boundary edge.
    pub fn outward_normal(&self, l: usize) -> Vec2 {
        let (a, b) = self.oriented_boundary_edge(l);
        let d = (self.vertices[b] - self.vertices[a]).normalize();
        Vec2::new(d.y, -d.x)
    }

    pub fn edge_length(&self, l: usize) -> f64 {
        let [a, b] = self.edges[l];
        (self.vertices[b] - self.vertices[a]).norm()
    }

    /// Mesh size: the longest edge.
    pub fn h(&self) -> f64 {
        (0..self.edges.len())
            .map(|l| self.edge_length(l))
            .fold(0.0, f64::max)
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * orient2(a, b, c)
    }

    /// Triangle containing `p`, or the nearest one within `LOCATE_TOL`.
    pub fn locate_triangle(&self, p: Vec2) -> Result<usize> {
        let mut best = (0, f64::NEG_INFINITY);
        for t in 0..self.num_triangles() {
            let [a, b, c] = self.triangle_points(t);
            let l = crate::geom::barycentric(p, a, b, c);
            let w = l[0].min(l[1]).min(l[2]);
            if w > best.1 {
                best = (t, w);
            }
        }
        if best.1 < -super::LOCATE_TOL {
            return Err(Error::Domain(format!("point ({}, {}) outside the mesh", p.x, p.y)));
        }
        Ok(best.0)
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }
}

use super::triangulation::Triangulation;
use crate::error::{Error, Result};
use crate::geom::{barycentric, from_barycentric, incenter, line_intersection, orient2, Vec2};

/// Barycentric slack accepted by [`PsRefinement::locate`] before reporting a domain error.
pub const LOCATE_TOL: f64 = 1e-10;

/// One of the six micro-triangles conv{v_i, v_l^e, v_m^t} of a macro-triangle.
#[derive(Clone, Copy, Debug)]
pub struct MicroTriangle {
    pub macro_tri: usize,
    /// Local macro-edge index 0..3.
    pub local_edge: usize,
    /// 0 when the vertex is the first endpoint of the local edge, 1 otherwise.
    pub side: usize,
    pub vertex: usize,
    pub edge: usize,
    /// Corners in the order (v_i, v_l^e, v_m^t).
    pub points: [Vec2; 3],
}

impl MicroTriangle {
    /// True when the stored corner order is counterclockwise.
    pub fn is_ccw(&self) -> bool {
        self.side == 0
    }
}

/// The 6-split of every macro-triangle at its incenter and edge split points.
///
/// Micro-triangle `6m + 2k + s` lies in macro `m` against local edge `k` and
/// touches the edge's endpoint `s`.
#[derive(Clone, Debug)]
pub struct PsRefinement {
    mesh: Triangulation,
    tri_split: Vec<Vec2>,
    edge_split: Vec<Vec2>,
    micro: Vec<MicroTriangle>,
}

impl PsRefinement {
    pub fn new(mesh: &Triangulation) -> Result<Self> {
        let tri_split: Vec<Vec2> = (0..mesh.num_triangles())
            .map(|t| {
                let [a, b, c] = mesh.triangle_points(t);
                incenter(a, b, c)
            })
            .collect();

        let mut edge_split = Vec::with_capacity(mesh.num_edges());
        for l in 0..mesh.num_edges() {
            let [a, b] = mesh.edge(l);
            let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
            let p = match mesh.edge_triangles(l) {
                (_, None) => (pa + pb) * 0.5,
                (t0, Some(t1)) => {
                    let (p0, p1) = (tri_split[t0], tri_split[t1]);
                    let (s, u) = line_intersection(pa, pb - pa, p0, p1 - p0).ok_or_else(|| {
                        Error::Geometric(format!("split points of edge {l} are parallel to it"))
                    })?;
                    if !(s > 1e-12 && s < 1.0 - 1e-12 && u > 0.0 && u < 1.0) {
                        return Err(Error::Geometric(format!(
                            "edge {l} split point falls outside the open edge"
                        )));
                    }
                    pa + (pb - pa) * s
                }
            };
            edge_split.push(p);
        }

        let mut micro = Vec::with_capacity(6 * mesh.num_triangles());
        for m in 0..mesh.num_triangles() {
            let tri = mesh.triangle(m);
            let edges = mesh.triangle_edges(m);
            for k in 0..3 {
                for s in 0..2 {
                    let v = tri[(k + s) % 3];
                    let l = edges[k];
                    micro.push(MicroTriangle {
                        macro_tri: m,
                        local_edge: k,
                        side: s,
                        vertex: v,
                        edge: l,
                        points: [mesh.vertex(v), edge_split[l], tri_split[m]],
                    });
                }
            }
        }

        Ok(PsRefinement {
            mesh: mesh.clone(),
            tri_split,
            edge_split,
            micro,
        })
    }

    pub fn mesh(&self) -> &Triangulation {
        &self.mesh
    }
    pub fn triangle_split(&self, m: usize) -> Vec2 {
        self.tri_split[m]
    }
    pub fn edge_split(&self, l: usize) -> Vec2 {
        self.edge_split[l]
    }
    pub fn micro_triangles(&self) -> &[MicroTriangle] {
        &self.micro
    }
    pub fn micro(&self, c: usize) -> &MicroTriangle {
        &self.micro[c]
    }
    pub fn num_micro(&self) -> usize {
        self.micro.len()
    }
    pub fn micro_index(m: usize, local_edge: usize, side: usize) -> usize {
        6 * m + 2 * local_edge + side
    }

    /// Corner ids of micro-triangle `c` in a node numbering shared by all micro-triangles:
    /// vertices first, then edge split points, then triangle split points.
    pub fn micro_nodes(&self, c: usize) -> [usize; 3] {
        let mt = &self.micro[c];
        let nv = self.mesh.num_vertices();
        let ne = self.mesh.num_edges();
        [mt.vertex, nv + mt.edge, nv + ne + mt.macro_tri]
    }

    pub fn num_nodes(&self) -> usize {
        self.mesh.num_vertices() + self.mesh.num_edges() + self.mesh.num_triangles()
    }

    pub fn node_point(&self, n: usize) -> Vec2 {
        let nv = self.mesh.num_vertices();
        let ne = self.mesh.num_edges();
        if n < nv {
            self.mesh.vertex(n)
        } else if n < nv + ne {
            self.edge_split[n - nv]
        } else {
            self.tri_split[n - nv - ne]
        }
    }

    /// Micro-triangles sharing a full edge with `c`, as (neighbor, shared node pair).
    pub fn micro_neighbors(&self, c: usize) -> Vec<(usize, [usize; 2])> {
        let mt = self.micro[c];
        let m = mt.macro_tri;
        let mut out = Vec::with_capacity(3);
        // across [v_m^t, v_l^e]: the sibling on the same local edge
        out.push((Self::micro_index(m, mt.local_edge, 1 - mt.side), [0, 0]));
        // across [v_i, v_m^t]: the micro-triangle of the other local edge at v_i
        let other_k = if mt.side == 0 {
            (mt.local_edge + 2) % 3
        } else {
            (mt.local_edge + 1) % 3
        };
        out.push((Self::micro_index(m, other_k, 1 - mt.side), [0, 0]));
        // across [v_i, v_l^e]: the neighbor macro, if any
        if let (t0, Some(t1)) = self.mesh.edge_triangles(mt.edge) {
            let n = if t0 == m { t1 } else { t0 };
            let k = self.mesh.local_edge(n, mt.edge).expect("shared edge");
            let first = self.mesh.triangle(n)[k];
            let s = usize::from(first != mt.vertex);
            out.push((Self::micro_index(n, k, s), [0, 0]));
        }
        let mine = self.micro_nodes(c);
        for (nb, shared) in out.iter_mut() {
            let theirs = self.micro_nodes(*nb);
            let common: Vec<usize> = mine.iter().copied().filter(|x| theirs.contains(x)).collect();
            *shared = [common[0], common[1]];
        }
        out
    }

    /// Micro-triangle containing `p`, with barycentric coordinates in its corner order.
    ///
    /// Ties on shared edges go to the lowest index.
    pub fn locate(&self, p: Vec2) -> Result<(usize, [f64; 3])> {
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for m in 0..self.mesh.num_triangles() {
            let [a, b, c] = self.mesh.triangle_points(m);
            let lm = barycentric(p, a, b, c);
            if lm.iter().cloned().fold(f64::INFINITY, f64::min) < -LOCATE_TOL {
                continue;
            }
            for j in 0..6 {
                let ci = 6 * m + j;
                let [q0, q1, q2] = self.micro[ci].points;
                let l = barycentric(p, q0, q1, q2);
                let worst = l[0].min(l[1]).min(l[2]);
                if worst >= -1e-13 {
                    return Ok((ci, l));
                }
                if best.map_or(true, |(_, _, w)| worst > w) {
                    best = Some((ci, l, worst));
                }
            }
        }
        match best {
            Some((c, l, w)) if w >= -LOCATE_TOL => {
                let mut l = l.map(|x| x.max(0.0));
                let s: f64 = l.iter().sum();
                l.iter_mut().for_each(|x| *x /= s);
                Ok((c, l))
            }
            _ => Err(Error::Domain(format!("({}, {}) is outside the mesh", p.x, p.y))),
        }
    }

    pub fn point(&self, c: usize, l: [f64; 3]) -> Vec2 {
        let [a, b, d] = self.micro[c].points;
        from_barycentric(l, a, b, d)
    }

    pub fn micro_area(&self, c: usize) -> f64 {
        let [a, b, d] = self.micro[c].points;
        0.5 * orient2(a, b, d).abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::builders;

    #[test]
    fn square_diagonal_split_is_center() {
        let ps = PsRefinement::new(&builders::unit_square()).unwrap();
        let diag = ps.mesh().edge_between(0, 2).unwrap();
        assert!((ps.edge_split(diag) - Vec2::new(0.5, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn neighbors_share_two_nodes() {
        let ps = PsRefinement::new(&builders::pentagon()).unwrap();
        for c in 0..ps.num_micro() {
            let nb = ps.micro_neighbors(c);
            assert!(nb.len() >= 2);
            for (n, _) in nb {
                assert!(ps.micro_neighbors(n).iter().any(|&(b, _)| b == c));
            }
        }
    }
}

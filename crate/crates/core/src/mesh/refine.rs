use std::collections::{BTreeSet, HashMap};

use super::triangulation::{GreenPair, Triangulation};
use crate::error::{Error, Result};
use crate::geom::Vec2;

/// Uniform refinement: every triangle is split into four by its edge midpoints.
pub fn dyadic_refine(tri: &Triangulation) -> Triangulation {
    let nv = tri.num_vertices();
    let mut points = tri.vertices().to_vec();
    for &[a, b] in tri.edges() {
        points.push(midpoint(points[a], points[b]));
    }
    let mut tris = Vec::with_capacity(4 * tri.num_triangles());
    for t in 0..tri.num_triangles() {
        let [v0, v1, v2] = tri.triangle(t);
        let [e0, e1, e2] = tri.triangle_edges(t);
        let (m01, m12, m20) = (nv + e0, nv + e1, nv + e2);
        tris.push([v0, m01, m20]);
        tris.push([m01, v1, m12]);
        tris.push([m20, m12, v2]);
        tris.push([m01, m12, m20]);
    }
    Triangulation::new(points, tris).expect("dyadic refinement of a conforming mesh is conforming")
}

#[inline]
fn midpoint(a: Vec2, b: Vec2) -> Vec2 {
    (a + b) * 0.5
}

fn bits(p: Vec2) -> (u64, u64) {
    (p.x.to_bits(), p.y.to_bits())
}

/// Working state of red-green refinement. Midpoints are found by exact coordinate hash.
struct Work {
    points: Vec<Vec2>,
    by_coord: HashMap<(u64, u64), usize>,
}

impl Work {
    fn existing_mid(&self, a: usize, b: usize) -> Option<usize> {
        self.by_coord
            .get(&bits(midpoint(self.points[a], self.points[b])))
            .copied()
    }

    fn mid(&mut self, a: usize, b: usize) -> usize {
        let p = midpoint(self.points[a], self.points[b]);
        *self.by_coord.entry(bits(p)).or_insert_with(|| {
            self.points.push(p);
            self.points.len() - 1
        })
    }

    fn red(&mut self, [v0, v1, v2]: [usize; 3]) -> [[usize; 3]; 4] {
        let m01 = self.mid(v0, v1);
        let m12 = self.mid(v1, v2);
        let m20 = self.mid(v2, v0);
        [[v0, m01, m20], [m01, v1, m12], [m20, m12, v2], [m01, m12, m20]]
    }
}

/// Red-green refinement of the marked triangles.
///
/// Green pairs recorded on the input are merged back into their parents first;
/// a marked green child marks its parent.
pub fn local_refine(tri: &Triangulation, marked: &BTreeSet<usize>) -> Result<Triangulation> {
    if let Some(&t) = marked.iter().find(|&&t| t >= tri.num_triangles()) {
        return Err(Error::Validation(format!("marked triangle {t} does not exist")));
    }
    if marked.is_empty() {
        return Ok(tri.clone());
    }

    let mut work = Work {
        points: tri.vertices().to_vec(),
        by_coord: tri
            .vertices()
            .iter()
            .enumerate()
            .map(|(i, &p)| (bits(p), i))
            .collect(),
    };

    // (triangle, marked) after undoing the green closure
    let mut green_child = vec![None; tri.num_triangles()];
    for (g, pair) in tri.green_pairs().iter().enumerate() {
        for &c in &pair.children {
            green_child[c] = Some(g);
        }
    }
    let mut current: Vec<([usize; 3], bool)> = Vec::new();
    let mut merged = vec![false; tri.green_pairs().len()];
    for t in 0..tri.num_triangles() {
        match green_child[t] {
            None => current.push((tri.triangle(t), marked.contains(&t))),
            Some(g) => {
                if merged[g] {
                    continue;
                }
                merged[g] = true;
                let pair = &tri.green_pairs()[g];
                let mark = pair.children.iter().any(|c| marked.contains(c));
                current.push((pair.parent, mark));
            }
        }
    }

    let mut tris: Vec<[usize; 3]> = Vec::new();
    let mut pending: Vec<[usize; 3]> = Vec::new();
    for (t, mark) in current {
        if mark {
            pending.extend(work.red(t));
        } else {
            pending.push(t);
        }
    }

    // closure: red-refine anything with two split edges or a doubly split edge
    loop {
        let mut changed = false;
        let mut next = Vec::with_capacity(pending.len());
        for t in pending {
            let mut split = 0;
            let mut deep = false;
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                if let Some(m) = work.existing_mid(a, b) {
                    split += 1;
                    if work.existing_mid(a, m).is_some() || work.existing_mid(m, b).is_some() {
                        deep = true;
                    }
                }
            }
            if split >= 2 || deep {
                next.extend(work.red(t));
                changed = true;
            } else {
                next.push(t);
            }
        }
        pending = next;
        if !changed {
            break;
        }
    }

    let mut green = Vec::new();
    for t in pending {
        let split = (0..3).find_map(|k| {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            work.existing_mid(a, b).map(|m| (k, m))
        });
        match split {
            None => tris.push(t),
            Some((k, m)) => {
                let (a, b, c) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
                let first = tris.len();
                tris.push([a, m, c]);
                tris.push([m, b, c]);
                green.push(GreenPair {
                    children: [first, first + 1],
                    parent: t,
                });
            }
        }
    }

    Triangulation::with_green(work.points, tris, green)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::builders;

    #[test]
    fn square_red_green_count() {
        let sq = builders::unit_square();
        let out = local_refine(&sq, &BTreeSet::from([0])).unwrap();
        assert_eq!(out.num_triangles(), 6);
        assert_eq!(out.green_pairs().len(), 1);
    }

    #[test]
    fn full_marking_matches_dyadic() {
        let sq = builders::unit_square();
        let all: BTreeSet<usize> = (0..sq.num_triangles()).collect();
        let a = local_refine(&sq, &all).unwrap();
        let b = dyadic_refine(&sq);
        assert_eq!(a.num_triangles(), b.num_triangles());
        assert_eq!(a.num_vertices(), b.num_vertices());
        assert!((a.h() - b.h()).abs() == 0.0);
    }

    #[test]
    fn green_pairs_are_remerged() {
        let sq = builders::unit_square();
        let once = local_refine(&sq, &BTreeSet::from([0])).unwrap();
        let pair = once.green_pairs()[0].clone();
        let twice = local_refine(&once, &BTreeSet::from([pair.children[0]])).unwrap();
        // the parent is red-refined once merged, so no triangle is a grandchild of a green split
        assert_eq!(twice.num_triangles(), 8);
        assert!(twice.green_pairs().is_empty());
    }
}

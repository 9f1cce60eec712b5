use crate::error::{Error, Result};
use crate::geom::{barycentric, cross, line_intersection, orient2, Vec2};
use crate::mesh::{PsRefinement, VertexKind};

/// Containment slack for configuration triangles, in barycentric units.
pub const CONTAINMENT_TOL: f64 = 1e-12;
/// Above this aspect ratio an interior configuration falls back to an equilateral triangle.
pub const MAX_ASPECT: f64 = 10.0;

/// Counterclockwise triangle attached to a vertex; its barycentric coordinates
/// are the three vertex degrees of freedom.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConfigTriangle {
    pub vertex: usize,
    pub q: [Vec2; 3],
}

impl ConfigTriangle {
    pub fn barycentric(&self, p: Vec2) -> [f64; 3] {
        barycentric(p, self.q[0], self.q[1], self.q[2])
    }

    /// Constant gradients of the three barycentric coordinates.
    pub fn gradients(&self) -> [Vec2; 3] {
        crate::bernstein::barycentric_gradients(&self.q)
    }

    pub fn area(&self) -> f64 {
        0.5 * orient2(self.q[0], self.q[1], self.q[2])
    }

    /// Longest side squared over the area of the equilateral triangle with that side; 1 when equilateral.
    pub fn aspect(&self) -> f64 {
        let l = (0..3)
            .map(|k| (self.q[(k + 1) % 3] - self.q[k]).norm_squared())
            .fold(0.0, f64::max);
        l * 3f64.sqrt() / (4.0 * self.area())
    }

    /// Smallest barycentric coordinate over the given points.
    pub fn margin(&self, pts: &[Vec2]) -> f64 {
        pts.iter()
            .flat_map(|&p| self.barycentric(p))
            .fold(f64::INFINITY, f64::min)
    }
}

/// The points a configuration triangle of vertex `i` must contain.
pub fn ps_points(psr: &PsRefinement, i: usize) -> Vec<Vec2> {
    let mesh = psr.mesh();
    let v = mesh.vertex(i);
    let mut pts = vec![v];
    for &m in mesh.vertex_triangles(i) {
        pts.push(v * (2.0 / 3.0) + psr.triangle_split(m) / 3.0);
        for &l in &mesh.triangle_edges(m) {
            let [a, b] = mesh.edge(l);
            if a == i || b == i {
                let p = v * (2.0 / 3.0) + psr.edge_split(l) / 3.0;
                if !pts.iter().any(|q| (q - p).norm() == 0.0) {
                    pts.push(p);
                }
            }
        }
    }
    pts
}

/// Counterclockwise convex hull (monotone chain), collinear points dropped.
pub fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut p = points.to_vec();
    p.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let scale = p
        .iter()
        .map(|q| (q - p[0]).norm_squared())
        .fold(0.0, f64::max);
    let mut hull: Vec<Vec2> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Vec2>> = if pass == 0 {
            Box::new(p.iter())
        } else {
            Box::new(p.iter().rev())
        };
        for &q in iter {
            while hull.len() >= start + 2
                && orient2(hull[hull.len() - 2], hull[hull.len() - 1], q) <= 1e-14 * scale
            {
                hull.pop();
            }
            hull.push(q);
        }
        hull.pop();
    }
    hull
}

fn triangle_from_lines(lines: [(Vec2, Vec2); 3]) -> Option<[Vec2; 3]> {
    let mut q = [Vec2::zeros(); 3];
    for k in 0..3 {
        let (p, d) = lines[(k + 1) % 3];
        let (r, e) = lines[(k + 2) % 3];
        let (s, _) = line_intersection(p, d, r, e)?;
        q[k] = p + d * s;
    }
    Some(q)
}

fn ccw(q: [Vec2; 3]) -> Option<[Vec2; 3]> {
    let o = orient2(q[0], q[1], q[2]);
    let scale = (q[1] - q[0]).norm_squared().max((q[2] - q[0]).norm_squared());
    if o.abs() <= 1e-12 * scale {
        None
    } else if o > 0.0 {
        Some(q)
    } else {
        Some([q[0], q[2], q[1]])
    }
}

fn interior_config(i: usize, pts: &[Vec2]) -> ConfigTriangle {
    let hull = convex_hull(pts);
    let h = hull.len();
    let lines: Vec<(Vec2, Vec2)> = (0..h).map(|k| (hull[k], hull[(k + 1) % h] - hull[k])).collect();
    let mut best: Option<ConfigTriangle> = None;
    for a in 0..h {
        for b in a + 1..h {
            for c in b + 1..h {
                let Some(q) = triangle_from_lines([lines[a], lines[b], lines[c]]).and_then(ccw) else {
                    continue;
                };
                let cand = ConfigTriangle { vertex: i, q };
                if cand.margin(pts) < -CONTAINMENT_TOL {
                    continue;
                }
                if best.map_or(true, |b| cand.area() < b.area()) {
                    best = Some(cand);
                }
            }
        }
    }
    match best {
        Some(b) if b.aspect() <= MAX_ASPECT => b,
        _ => equilateral_fallback(i, &hull),
    }
}

/// Equilateral triangle whose incircle is the bounding circle of the hull about its centroid.
fn equilateral_fallback(i: usize, hull: &[Vec2]) -> ConfigTriangle {
    let c = hull.iter().fold(Vec2::zeros(), |s, p| s + p) / hull.len() as f64;
    let r = hull.iter().map(|p| (p - c).norm()).fold(0.0, f64::max) * (1.0 + 1e-9);
    let q = [90.0f64, 210.0, 330.0].map(|deg| {
        let t = deg.to_radians();
        c + Vec2::new(t.cos(), t.sin()) * (2.0 * r)
    });
    ConfigTriangle { vertex: i, q }
}

/// Boundary direction at a vertex, as (incoming unit, outgoing unit) with the domain on the left.
fn boundary_directions(psr: &PsRefinement, i: usize) -> (Vec2, Vec2) {
    let mesh = psr.mesh();
    let v = mesh.vertex(i);
    let mut din = None;
    let mut dout = None;
    for l in mesh.boundary_edges() {
        let (a, b) = mesh.oriented_boundary_edge(l);
        if b == i {
            din = Some((v - mesh.vertex(a)).normalize());
        }
        if a == i {
            dout = Some((mesh.vertex(b) - v).normalize());
        }
    }
    (din.expect("incoming boundary edge"), dout.expect("outgoing boundary edge"))
}

fn collinear_config(i: usize, v: Vec2, d: Vec2, pts: &[Vec2]) -> Result<ConfigTriangle> {
    let n = Vec2::new(-d.y, d.x);
    let hull = convex_hull(pts);
    let h = hull.len();
    let scale = pts.iter().map(|p| (p - v).norm()).fold(0.0, f64::max);
    let on_base = |p: Vec2| n.dot(&(p - v)).abs() <= 1e-12 * scale;
    let lines: Vec<(Vec2, Vec2)> = (0..h)
        .filter(|&k| !(on_base(hull[k]) && on_base(hull[(k + 1) % h])))
        .map(|k| (hull[k], hull[(k + 1) % h] - hull[k]))
        .collect();
    let base = (v, d);
    let arrange = |q: [Vec2; 3]| -> Option<[Vec2; 3]> {
        // two corners on the base line ordered along d, apex last
        let mut on: Vec<Vec2> = q.iter().copied().filter(|&p| on_base(p)).collect();
        let apex: Vec<Vec2> = q.iter().copied().filter(|&p| !on_base(p)).collect();
        if on.len() != 2 || apex.len() != 1 || n.dot(&(apex[0] - v)) <= 0.0 {
            return None;
        }
        on.sort_by(|a, b| d.dot(&(a - v)).total_cmp(&d.dot(&(b - v))));
        Some([on[0], on[1], apex[0]])
    };
    let mut cands = Vec::new();
    for a in 0..lines.len() {
        for b in a + 1..lines.len() {
            if let Some(q) = triangle_from_lines([base, lines[a], lines[b]]).and_then(arrange) {
                cands.push(ConfigTriangle { vertex: i, q });
            }
        }
    }
    // isosceles fallback: |x|/W + y/H <= 1 with W, H twice the extents
    let xmax = pts.iter().map(|p| d.dot(&(p - v)).abs()).fold(0.0, f64::max);
    let ymax = pts.iter().map(|p| n.dot(&(p - v))).fold(0.0, f64::max);
    let fallback = ConfigTriangle {
        vertex: i,
        q: [v - d * (2.0 * xmax), v + d * (2.0 * xmax), v + n * (2.0 * ymax)],
    };
    let best = cands
        .into_iter()
        .filter(|c| c.margin(pts) >= -CONTAINMENT_TOL)
        .min_by(|a, b| a.area().total_cmp(&b.area()));
    Ok(match best {
        Some(b) if b.aspect() <= MAX_ASPECT => b,
        _ => fallback,
    })
}

fn corner_config(i: usize, v: Vec2, din: Vec2, dout: Vec2, pts: &[Vec2]) -> Result<ConfigTriangle> {
    if cross(din, dout) <= 0.0 {
        return Err(Error::Configuration(format!(
            "vertex {i} is a reflex boundary corner; no configuration triangle fits"
        )));
    }
    let (e1, e2) = (dout, -din);
    let coords = |p: Vec2| -> (f64, f64) {
        let w = p - v;
        let den = cross(e1, e2);
        (cross(w, e2) / den, cross(e1, w) / den)
    };
    let make = |a: f64, b: f64| ConfigTriangle {
        vertex: i,
        q: [v, v + e1 * a, v + e2 * b],
    };
    let mut cands = Vec::new();
    let hull = convex_hull(pts);
    let h = hull.len();
    for k in 0..h {
        let (p, dir) = (hull[k], hull[(k + 1) % h] - hull[k]);
        if let (Some((a, _)), Some((b, _))) = (
            line_intersection(v, e1, p, dir),
            line_intersection(v, e2, p, dir),
        ) {
            if a > 0.0 && b > 0.0 {
                cands.push(make(a, b));
            }
        }
    }
    let (amax, bmax) = pts.iter().map(|&p| coords(p)).fold((0.0f64, 0.0f64), |(x, y), (a, b)| {
        (x.max(a), y.max(b))
    });
    let fallback = make(2.0 * amax, 2.0 * bmax);
    let best = cands
        .into_iter()
        .filter(|c| c.margin(pts) >= -CONTAINMENT_TOL)
        .min_by(|a, b| a.area().total_cmp(&b.area()));
    Ok(match best {
        Some(b) if b.aspect() <= MAX_ASPECT => b,
        _ => fallback,
    })
}

/// Configuration triangles for every vertex, aligned with the boundary where required.
///
/// Collinear boundary vertices get their third corner off the boundary line;
/// corners get q₁ = vᵢ with q₂, q₃ on the outgoing and incoming boundary lines.
pub fn default_configs(psr: &PsRefinement) -> Result<Vec<ConfigTriangle>> {
    let mesh = psr.mesh();
    let mut out = Vec::with_capacity(mesh.num_vertices());
    for i in 0..mesh.num_vertices() {
        let pts = ps_points(psr, i);
        let v = mesh.vertex(i);
        let cfg = match mesh.vertex_kind(i) {
            VertexKind::Interior => interior_config(i, &pts),
            VertexKind::Collinear => {
                let (_, dout) = boundary_directions(psr, i);
                collinear_config(i, v, dout, &pts)?
            }
            VertexKind::Corner => {
                let (din, dout) = boundary_directions(psr, i);
                corner_config(i, v, din, dout, &pts)?
            }
        };
        let margin = cfg.margin(&pts);
        if margin < -CONTAINMENT_TOL || cfg.area() <= 0.0 {
            return Err(Error::Configuration(format!(
                "configuration triangle of vertex {i} misses a PS point (margin {margin:e})"
            )));
        }
        out.push(cfg);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{builders, PsRefinement};

    #[test]
    fn hull_of_square_with_center() {
        let pts = [
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.5, 0.5),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(0.5, 0.0),
        ];
        assert_eq!(convex_hull(&pts).len(), 4);
    }

    #[test]
    fn configs_contain_ps_points() {
        let ps = PsRefinement::new(&builders::pentagon()).unwrap();
        let cfgs = default_configs(&ps).unwrap();
        for (i, c) in cfgs.iter().enumerate() {
            assert!(c.margin(&ps_points(&ps, i)) >= -CONTAINMENT_TOL);
        }
    }

    #[test]
    fn corner_config_starts_at_vertex() {
        let ps = PsRefinement::new(&builders::unit_square()).unwrap();
        let cfgs = default_configs(&ps).unwrap();
        for (i, c) in cfgs.iter().enumerate() {
            assert_eq!(c.q[0], ps.mesh().vertex(i));
        }
    }
}

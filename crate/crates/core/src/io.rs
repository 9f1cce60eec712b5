//! File formats: mesh and geometry JSON, legacy ASCII VTK, debug dumps, atomic writes.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::geometry::{Geometry, GeometryMap};
use crate::linalg::CsrMatrix;
use crate::mesh::{PsRefinement, Triangulation};
use crate::psbasis::{PsBasis, RationalBasis};
use crate::space::{Active, Space};

/// Mesh document: zero-based `triangles` index into `vertices`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshFile {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
}

impl MeshFile {
    pub fn from_mesh(mesh: &Triangulation) -> Self {
        MeshFile {
            vertices: mesh.vertices().iter().map(|v| [v.x, v.y]).collect(),
            triangles: mesh.triangles().to_vec(),
        }
    }

    /// Validates topology; T-junctions and overlaps are rejected as nonconforming.
    pub fn to_mesh(&self) -> Result<Triangulation> {
        let pts = self.vertices.iter().map(|v| Vec2::new(v[0], v[1])).collect();
        Triangulation::new(pts, self.triangles.clone())
    }
}

pub fn mesh_to_json(mesh: &Triangulation) -> Result<String> {
    Ok(serde_json::to_string_pretty(&MeshFile::from_mesh(mesh))?)
}

pub fn mesh_from_json(text: &str) -> Result<Triangulation> {
    serde_json::from_str::<MeshFile>(text)?.to_mesh()
}

pub fn read_mesh(path: &Path) -> Result<Triangulation> {
    mesh_from_json(&fs::read_to_string(path)?)
}

/// Writes `bytes` to a sibling temp file and renames it over `path`, so readers never
/// observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::Validation(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| -> Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)?;
        Ok(())
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

/// Triangle surface with optional per-point scalar fields, written as POLYDATA.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VtkPolyData {
    pub title: String,
    pub points: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
    pub point_scalars: Vec<(String, Vec<f64>)>,
}

impl VtkPolyData {
    pub fn to_vtk(&self) -> String {
        let mut s = String::new();
        let title = if self.title.is_empty() { "ps3" } else { self.title.as_str() };
        // the title line must not contain a newline
        let title = title.replace('\n', " ");
        let _ = writeln!(s, "# vtk DataFile Version 2.0\n{title}\nASCII\nDATASET POLYDATA");
        let _ = writeln!(s, "POINTS {} double", self.points.len());
        for p in &self.points {
            let _ = writeln!(s, "{:e} {:e} {:e}", p[0], p[1], p[2]);
        }
        let _ = writeln!(s, "POLYGONS {} {}", self.triangles.len(), 4 * self.triangles.len());
        for t in &self.triangles {
            let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
        }
        if !self.point_scalars.is_empty() {
            let _ = writeln!(s, "POINT_DATA {}", self.points.len());
            for (name, vals) in &self.point_scalars {
                let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
                for v in vals {
                    let _ = writeln!(s, "{v:e}");
                }
            }
        }
        s
    }

    /// Parses the subset written by [`VtkPolyData::to_vtk`].
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::Validation(format!("VTK: {m}"));
        let mut lines = text.lines();
        if !lines.next().is_some_and(|l| l.starts_with("# vtk DataFile Version")) {
            return Err(bad("missing header"));
        }
        let title = lines.next().ok_or_else(|| bad("missing title"))?.to_string();
        let mut tok = lines.flat_map(str::split_whitespace);
        let mut next = || tok.next().ok_or_else(|| bad("unexpected end of file"));
        let num = |t: &str| t.parse::<f64>().map_err(|_| bad(&format!("bad number {t}")));
        let int = |t: &str| t.parse::<usize>().map_err(|_| bad(&format!("bad integer {t}")));
        if next()? != "ASCII" || next()? != "DATASET" || next()? != "POLYDATA" {
            return Err(bad("expected ASCII POLYDATA"));
        }
        let mut out = VtkPolyData {
            title,
            ..Default::default()
        };
        while let Ok(key) = next() {
            match key {
                "POINTS" => {
                    let n = int(next()?)?;
                    next()?;
                    for _ in 0..n {
                        out.points.push([num(next()?)?, num(next()?)?, num(next()?)?]);
                    }
                }
                "POLYGONS" => {
                    let n = int(next()?)?;
                    next()?;
                    for _ in 0..n {
                        if next()? != "3" {
                            return Err(bad("only triangles are supported"));
                        }
                        out.triangles.push([int(next()?)?, int(next()?)?, int(next()?)?]);
                    }
                }
                "POINT_DATA" => {
                    next()?;
                }
                "SCALARS" => {
                    let name = next()?.to_string();
                    next()?;
                    next()?;
                    if next()? != "LOOKUP_TABLE" {
                        return Err(bad("expected LOOKUP_TABLE"));
                    }
                    next()?;
                    let vals = (0..out.points.len())
                        .map(|_| next().and_then(num))
                        .collect::<Result<_>>()?;
                    out.point_scalars.push((name, vals));
                }
                other => return Err(bad(&format!("unexpected keyword {other}"))),
            }
        }
        Ok(out)
    }
}

/// The Powell–Sabin 6-split: points are split nodes, one polygon per micro-triangle.
pub fn ps_refinement_vtk(psr: &PsRefinement) -> VtkPolyData {
    VtkPolyData {
        title: "Powell-Sabin refinement".into(),
        points: (0..psr.num_nodes())
            .map(|n| {
                let p = psr.node_point(n);
                [p.x, p.y, 0.0]
            })
            .collect(),
        triangles: (0..psr.num_micro()).map(|c| psr.micro_nodes(c)).collect(),
        point_scalars: vec![(
            "macro_triangle".into(),
            // nodes are shared, so tag each point with the first micro-triangle that owns it
            {
                let mut tag = vec![-1.0; psr.num_nodes()];
                for c in 0..psr.num_micro() {
                    for n in psr.micro_nodes(c) {
                        if tag[n] < 0.0 {
                            tag[n] = psr.micro(c).macro_tri as f64;
                        }
                    }
                }
                tag
            },
        )],
    }
}

/// Plain triangulation as VTK.
pub fn mesh_vtk(mesh: &Triangulation) -> VtkPolyData {
    VtkPolyData {
        title: "triangulation".into(),
        points: mesh.vertices().iter().map(|v| [v.x, v.y, 0.0]).collect(),
        triangles: mesh.triangles().to_vec(),
        point_scalars: Vec::new(),
    }
}

/// Image of every cell under the geometry, sampled on an `n`-subdivision barycentric lattice.
///
/// Lattice points are duplicated per cell so discontinuous fields stay visible. With
/// `coeffs` a `solution` field is added; with `exact` also `exact` and `error`.
pub fn mapped_lattice_vtk(
    space: &dyn Space,
    geometry: &Geometry,
    n: usize,
    coeffs: Option<&[f64]>,
    exact: Option<&dyn Fn(nalgebra::Vector3<f64>) -> f64>,
) -> Result<VtkPolyData> {
    if n == 0 {
        return Err(Error::Validation("lattice subdivision must be positive".into()));
    }
    let lattice: Vec<(usize, usize)> = (0..=n).flat_map(|i| (0..=n - i).map(move |j| (i, j))).collect();
    let local = |i: usize, j: usize| -> usize {
        // row i starts after rows 0..i, which hold (n+1) + n + ... + (n+2-i) points
        i * (n + 1) - i * (i.saturating_sub(1)) / 2 + j
    };
    let mut out = VtkPolyData {
        title: "mapped lattice".into(),
        ..Default::default()
    };
    let (mut sol, mut ex) = (Vec::new(), Vec::new());
    let (mut act, mut gact) = (Active::default(), Active::default());
    for c in 0..space.num_cells() {
        let base = out.points.len();
        let g = space.cell_group(c);
        for &(i, j) in &lattice {
            let l = [i as f64 / n as f64, j as f64 / n as f64, (n - i - j) as f64 / n as f64];
            let p = space.cell_point(c, l);
            let x = geometry.jet(g, p, &mut gact).x;
            out.points.push([x[0], x[1], x[2]]);
            if let Some(cf) = coeffs {
                space.eval(c, l, &mut act);
                sol.push(act.combine(cf).0);
            }
            if let Some(u) = exact {
                ex.push(u(x));
            }
        }
        for i in 0..n {
            for j in 0..n - i {
                out.triangles.push([base + local(i, j), base + local(i + 1, j), base + local(i, j + 1)]);
                if j + 1 < n - i {
                    out.triangles.push([
                        base + local(i + 1, j),
                        base + local(i + 1, j + 1),
                        base + local(i, j + 1),
                    ]);
                }
            }
        }
    }
    if coeffs.is_some() {
        if exact.is_some() {
            let err = sol.iter().zip(&ex).map(|(s, u)| s - u).collect();
            out.point_scalars.push(("solution".into(), sol));
            out.point_scalars.push(("exact".into(), ex));
            out.point_scalars.push(("error".into(), err));
        } else {
            out.point_scalars.push(("solution".into(), sol));
        }
    }
    Ok(out)
}

/// One basis function: its macro support and the Bézier ordinates on each micro-triangle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionDump {
    pub index: usize,
    pub support: Vec<usize>,
    pub patches: Vec<PatchDump>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatchDump {
    pub micro: usize,
    pub triangle: [[f64; 2]; 3],
    pub ordinates: [f64; 10],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisDump {
    pub num_vertices: usize,
    pub num_edges: usize,
    pub dim: usize,
    pub functions: Vec<FunctionDump>,
}

pub fn basis_dump(basis: &PsBasis) -> BasisDump {
    let functions = (0..basis.dim())
        .map(|k| {
            let support = basis.support(k);
            let patches = support
                .iter()
                .flat_map(|&m| 6 * m..6 * m + 6)
                .filter_map(|c| {
                    basis.patch(k, c).map(|p| PatchDump {
                        micro: c,
                        triangle: p.triangle.map(|v| [v.x, v.y]),
                        ordinates: p.ordinates,
                    })
                })
                .collect();
            FunctionDump {
                index: k,
                support,
                patches,
            }
        })
        .collect();
    BasisDump {
        num_vertices: basis.mesh().num_vertices(),
        num_edges: basis.mesh().num_edges(),
        dim: basis.dim(),
        functions,
    }
}

/// `row col value` per stored entry, zero-based, in row-major order.
pub fn matrix_coordinates(a: &CsrMatrix) -> String {
    let mut s = String::new();
    for (i, j, v) in a.iter() {
        let _ = writeln!(s, "{i} {j} {v:.17e}");
    }
    s
}

/// `row value` per entry.
pub fn vector_coordinates(v: &[f64]) -> String {
    let mut s = String::new();
    for (i, x) in v.iter().enumerate() {
        let _ = writeln!(s, "{i} {x:.17e}");
    }
    s
}

pub fn parse_matrix_coordinates(n: usize, text: &str) -> Result<CsrMatrix> {
    let mut trip = Vec::new();
    for (ln, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split_whitespace().collect();
        let bad = || Error::Validation(format!("matrix line {}: {line:?}", ln + 1));
        if f.len() != 3 {
            return Err(bad());
        }
        let i: usize = f[0].parse().map_err(|_| bad())?;
        let j: usize = f[1].parse().map_err(|_| bad())?;
        let v: f64 = f[2].parse().map_err(|_| bad())?;
        if i >= n || j >= n {
            return Err(bad());
        }
        trip.push((i, j, v));
    }
    Ok(CsrMatrix::from_triplets(n, trip))
}

/// Control points and weights of a spline geometry together with its parameter mesh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryFile {
    pub mesh: MeshFile,
    pub dim: usize,
    pub controls: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl GeometryFile {
    pub fn from_map(map: &GeometryMap) -> Self {
        GeometryFile {
            mesh: MeshFile::from_mesh(map.space().basis().mesh()),
            dim: map.dim(),
            controls: map.controls().iter().map(|c| c[..map.dim()].to_vec()).collect(),
            weights: map.weights().to_vec(),
        }
    }

    /// Rebuilds the map; the basis is recomputed from the mesh with default configurations.
    pub fn to_map(&self) -> Result<GeometryMap> {
        let mesh = self.mesh.to_mesh()?;
        let basis = PsBasis::new(&PsRefinement::new(&mesh)?)?;
        let controls = self
            .controls
            .iter()
            .map(|c| {
                if c.len() != self.dim {
                    return Err(Error::Validation(format!(
                        "control point with {} coordinates in a {}-d geometry",
                        c.len(),
                        self.dim
                    )));
                }
                let mut p = [0.0; 3];
                p[..c.len()].copy_from_slice(c);
                Ok(p)
            })
            .collect::<Result<_>>()?;
        GeometryMap::new(RationalBasis::new(basis, self.weights.clone())?, controls, self.dim)
    }
}

pub fn geometry_to_json(map: &GeometryMap) -> Result<String> {
    Ok(serde_json::to_string_pretty(&GeometryFile::from_map(map))?)
}

pub fn geometry_from_json(text: &str) -> Result<GeometryMap> {
    serde_json::from_str::<GeometryFile>(text)?.to_map()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::builders;

    #[test]
    fn mesh_json_round_trip() {
        let m = builders::pentagon();
        let back = mesh_from_json(&mesh_to_json(&m).unwrap()).unwrap();
        assert_eq!(back.vertices(), m.vertices());
        assert_eq!(back.triangles(), m.triangles());
    }

    #[test]
    fn t_junction_is_nonconforming() {
        let text = r#"{"vertices": [[0,0],[1,0],[2,0],[0,1],[2,1]],
                        "triangles": [[0,1,3],[1,2,4],[0,4,3]]}"#;
        let e = mesh_from_json(text).unwrap_err();
        assert_eq!(e.kind(), "nonconforming", "{e}");
    }

    #[test]
    fn vtk_round_trip() {
        let psr = PsRefinement::new(&builders::pentagon()).unwrap();
        let v = ps_refinement_vtk(&psr);
        assert_eq!(v.triangles.len(), 30);
        let back = VtkPolyData::parse(&v.to_vtk()).unwrap();
        assert_eq!(back.triangles, v.triangles);
        assert_eq!(back.points.len(), v.points.len());
        for (a, b) in back.points.iter().zip(&v.points) {
            assert!((0..3).all(|i| (a[i] - b[i]).abs() <= 1e-15 * a[i].abs().max(1.0)));
        }
    }

    #[test]
    fn lattice_triangle_count() {
        let basis = PsBasis::new(&PsRefinement::new(&builders::unit_square()).unwrap()).unwrap();
        let v = mapped_lattice_vtk(&basis, &Geometry::Identity, 3, None, None).unwrap();
        assert_eq!(v.points.len(), basis.num_cells() * 10);
        assert_eq!(v.triangles.len(), basis.num_cells() * 9);
    }

    #[test]
    fn matrix_dump_round_trip() {
        let a = CsrMatrix::from_triplets(3, vec![(0, 0, 2.0), (0, 2, -1.0 / 3.0), (2, 1, 1e-300)]);
        let back = parse_matrix_coordinates(3, &matrix_coordinates(&a)).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn geometry_json_round_trip() {
        let g = crate::geometry::quarter_annulus(0.5, 1.0).unwrap();
        let back = geometry_from_json(&geometry_to_json(&g).unwrap()).unwrap();
        assert_eq!(back.weights(), g.weights());
        for p in [Vec2::new(0.2, 0.3), Vec2::new(0.7, 0.9)] {
            assert!((back.point(p).unwrap() - g.point(p).unwrap()).norm() < 1e-15);
        }
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}

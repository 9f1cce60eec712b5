//! Command-line front end: mesh operations, geometry construction, single solves and studies.
//!
//! Every failure prints one line `error: <kind>: <message>` to stderr and exits with status 2.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use ps3::error::{Error, Result};
use ps3::geometry::{self, differentials, project_to_ps, winslow_energy, Geometry, GeometryMap, Mapping};
use ps3::io::{self, write_atomic};
use ps3::mesh::{builders, dyadic_refine, PsRefinement, Triangulation};
use ps3::problems::problem;
use ps3::psbasis::PsBasis;
use ps3::quadrature::{quad_rule, QuadratureRule};
use ps3::space::Active;
use ps3::study::{convergence_study, mesh_sequence, solve, Element, Refinement, SolveOptions};

/// Upper bound on refinement levels; level 8 already means 4^8 times the base triangles.
const MAX_LEVELS: usize = 8;
/// Lattice subdivision of each cell in mapped VTK output.
const VTK_LATTICE: usize = 4;
const GEOMETRY_CHECK_DEGREE: usize = 8;

#[derive(Parser, Debug)]
#[command(name = "ps3", version, about = "Powell-Sabin spline meshes, geometries and isogeometric solves")]
struct Cli {
    /// JSON file with default option values; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for assembly; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build or read a triangulation, refine it and export it.
    Mesh(Settings),
    /// Solve one registry problem on one refinement level.
    Solve(Settings),
    /// Convergence study over several levels, written as CSV.
    Study(Settings),
    /// Build a spline geometry map and export it.
    Geometry(Settings),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Builder {
    Square,
    Pentagon,
    Annulus,
    Cylinder,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ElementArg {
    Ps,
    Lagrange,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RefinementArg {
    Global,
    Local,
}

/// Options shared by all commands; the config file uses the same names in snake case.
#[derive(Args, Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Settings {
    /// Named base mesh or geometry.
    #[arg(long, value_enum)]
    builder: Option<Builder>,
    /// Mesh JSON (mesh) or geometry JSON (geometry) to read.
    #[arg(long = "in")]
    #[serde(rename = "in")]
    input: Option<PathBuf>,
    /// Number of dyadic refinements applied to the base mesh.
    #[arg(long)]
    dyadic: Option<usize>,
    /// Export the Powell-Sabin refinement instead of the plain triangulation.
    #[arg(long)]
    ps: bool,
    /// Legacy VTK output path.
    #[arg(long)]
    vtk: Option<PathBuf>,
    /// Main output path: mesh JSON, summary JSON, study CSV or geometry JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Registry problem name.
    #[arg(long)]
    problem: Option<String>,
    #[arg(long, value_enum)]
    element: Option<ElementArg>,
    /// Study: number of levels. Solve: the level to solve on.
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long, value_enum)]
    refinement: Option<RefinementArg>,
    /// Inner and outer annulus radius.
    #[arg(long)]
    r1: Option<f64>,
    #[arg(long)]
    r2: Option<f64>,
    /// Cylinder radius and height.
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    height: Option<f64>,
    #[arg(long)]
    poisson_degree: Option<usize>,
    #[arg(long)]
    biharmonic_degree: Option<usize>,
    #[arg(long)]
    error_degree: Option<usize>,
    /// Only read from the config file.
    #[arg(skip)]
    threads: Option<usize>,
}

impl Settings {
    /// Fills every option not given on the command line from `file`.
    fn over(self, file: Settings) -> Settings {
        macro_rules! pick {
            ($($f:ident),*) => { Settings { ps: self.ps || file.ps, $($f: self.$f.or(file.$f)),* } };
        }
        pick!(
            builder, input, dyadic, vtk, out, problem, element, levels, refinement, r1, r2, radius, height,
            poisson_degree, biharmonic_degree, error_degree, threads
        )
    }

    fn element(&self) -> Element {
        match self.element.unwrap_or(ElementArg::Ps) {
            ElementArg::Ps => Element::Ps,
            ElementArg::Lagrange => Element::Lagrange,
        }
    }

    fn refinement(&self) -> Refinement {
        match self.refinement.unwrap_or(RefinementArg::Global) {
            RefinementArg::Global => Refinement::Global,
            RefinementArg::Local => Refinement::Local,
        }
    }

    fn levels(&self, default: usize) -> Result<usize> {
        let l = self.levels.unwrap_or(default);
        if l > MAX_LEVELS {
            return Err(Error::Configuration(format!("levels = {l} exceeds {MAX_LEVELS}")));
        }
        Ok(l)
    }

    fn dyadic(&self) -> Result<usize> {
        let d = self.dyadic.unwrap_or(0);
        if d > MAX_LEVELS {
            return Err(Error::Configuration(format!("dyadic = {d} exceeds {MAX_LEVELS}")));
        }
        Ok(d)
    }

    fn problem(&self) -> Result<ps3::problems::Problem> {
        problem(self.problem.as_deref().ok_or_else(|| Error::Configuration("--problem is required".into()))?)
    }

    fn solve_options(&self) -> SolveOptions {
        let d = SolveOptions::default();
        SolveOptions {
            poisson_degree: self.poisson_degree.unwrap_or(d.poisson_degree),
            biharmonic_degree: self.biharmonic_degree.unwrap_or(d.biharmonic_degree),
            error_degree: self.error_degree.unwrap_or(d.error_degree),
        }
    }

    fn positive(v: Option<f64>, default: f64, name: &str) -> Result<f64> {
        let x = v.unwrap_or(default);
        if !(x.is_finite() && x > 0.0) {
            return Err(Error::Configuration(format!("{name} must be positive, got {x}")));
        }
        Ok(x)
    }
}

fn read_config(path: &Path) -> Result<Settings> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Configuration(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Configuration(format!("config {}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes())
}

/// Writes to `path`, or prints to stdout when no path was given.
fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn refine(mut mesh: Triangulation, times: usize) -> Triangulation {
    for _ in 0..times {
        mesh = dyadic_refine(&mesh);
    }
    mesh
}

fn base_mesh(b: Builder) -> Triangulation {
    match b {
        Builder::Square => builders::unit_square(),
        Builder::Pentagon => builders::pentagon(),
        Builder::Annulus => builders::annulus_parameter(),
        Builder::Cylinder => builders::cylinder_parameter(),
    }
}

fn cmd_mesh(s: &Settings) -> Result<()> {
    let mesh = match (&s.input, s.builder) {
        (Some(p), None) => io::read_mesh(p)?,
        (None, Some(b)) => base_mesh(b),
        (None, None) => return Err(Error::Configuration("mesh needs --in or --builder".into())),
        (Some(_), Some(_)) => return Err(Error::Configuration("--in and --builder are exclusive".into())),
    };
    let mesh = refine(mesh, s.dyadic()?);
    if let Some(out) = &s.out {
        write_text(out, &io::mesh_to_json(&mesh)?)?;
    }
    let vtk = if s.ps {
        Some(io::ps_refinement_vtk(&PsRefinement::new(&mesh)?))
    } else {
        s.vtk.as_ref().map(|_| io::mesh_vtk(&mesh))
    };
    if let Some(path) = &s.vtk {
        write_text(path, &vtk.expect("built above").to_vtk())?;
    }
    let ps_micro = 6 * mesh.num_triangles();
    println!(
        "{}",
        json!({
            "vertices": mesh.num_vertices(),
            "edges": mesh.num_edges(),
            "triangles": mesh.num_triangles(),
            "micro_triangles": ps_micro,
            "h": mesh.h(),
        })
    );
    Ok(())
}

fn cmd_solve(s: &Settings) -> Result<()> {
    let p = s.problem()?;
    let level = s.levels(0)?;
    let mesh = mesh_sequence(&p, s.refinement(), level + 1)?.pop().expect("at least one level");
    let sol = solve(&p, s.element(), &mesh, &s.solve_options()).map_err(|e| e.at_level(level))?;
    if let Some(path) = &s.vtk {
        let u = p.u;
        let exact = move |x| u(x);
        let mut v = io::mapped_lattice_vtk(
            sol.disc.space.as_ref(),
            &sol.disc.geometry,
            VTK_LATTICE,
            Some(&sol.coeffs),
            Some(&exact),
        )?;
        v.title = format!("{} level {level}", p.name);
        write_text(path, &v.to_vtk())?;
    }
    let summary = json!({
        "problem": p.name,
        "element": sol.disc.element,
        "level": level,
        "h": mesh.h(),
        "ndof": sol.ndof(),
        "l2": sol.l2,
        "linf": sol.linf,
    });
    emit(s.out.as_deref(), &format!("{}\n", serde_json::to_string_pretty(&summary)?))
}

fn cmd_study(s: &Settings) -> Result<()> {
    let p = s.problem()?;
    let levels = s.levels(5)?;
    if levels == 0 {
        return Err(Error::Configuration("a study needs at least one level".into()));
    }
    let r = convergence_study(&p, s.element(), s.refinement(), levels, &s.solve_options())?;
    emit(s.out.as_deref(), &r.to_csv())
}

fn cmd_geometry(s: &Settings) -> Result<()> {
    let dyadic = s.dyadic()?;
    let (map, geometry): (GeometryMap, Geometry) = match (&s.input, s.builder) {
        (Some(p), None) => {
            let m = io::geometry_from_json(&std::fs::read_to_string(p)?)?;
            (m.clone(), Geometry::Spline(m))
        }
        (None, Some(b)) => {
            let mesh = refine(base_mesh(b), dyadic);
            let map = match b {
                Builder::Square => GeometryMap::identity(PsBasis::new(&PsRefinement::new(&mesh)?)?),
                Builder::Annulus => {
                    let r1 = Settings::positive(s.r1, 0.5, "r1")?;
                    let r2 = Settings::positive(s.r2, 1.0, "r2")?;
                    if r1 >= r2 {
                        return Err(Error::Configuration(format!("need r1 < r2, got {r1} and {r2}")));
                    }
                    geometry::quarter_annulus_on(&mesh, r1, r2)?
                }
                Builder::Cylinder => {
                    let r = Settings::positive(s.radius, 1.0, "radius")?;
                    let h = Settings::positive(s.height, 1.0, "height")?;
                    geometry::cylinder_shell_on(&mesh, r, h)?
                }
                Builder::Pentagon => {
                    // the projected map lives on the base mesh and is not refined
                    if dyadic > 0 {
                        return Err(Error::Configuration("the pentagon geometry is fixed on its base mesh".into()));
                    }
                    let (g, coarse) = geometry::pentagon();
                    project_to_ps(&g, PsBasis::new(&PsRefinement::new(&coarse)?)?)?
                }
            };
            (map.clone(), Geometry::Spline(map))
        }
        (None, None) => return Err(Error::Configuration("geometry needs --in or --builder".into())),
        (Some(_), Some(_)) => return Err(Error::Configuration("--in and --builder are exclusive".into())),
    };
    if let Some(out) = &s.out {
        write_text(out, &io::geometry_to_json(&map)?)?;
    }
    if let Some(path) = &s.vtk {
        let mut v = io::mapped_lattice_vtk(map.space(), &geometry, VTK_LATTICE, None, None)?;
        v.title = "geometry map".into();
        write_text(path, &v.to_vtk())?;
    }
    let rule = quad_rule(GEOMETRY_CHECK_DEGREE)?;
    let (lo, hi) = jacobian_range(&map, rule)?;
    let mut summary = json!({
        "dim": map.dim(),
        "functions": map.controls().len(),
        // det J for planar maps, the area element κ for surfaces; regular iff both share a sign
        "jacobian_min": lo,
        "jacobian_max": hi,
    });
    if map.dim() == 2 {
        summary["winslow"] = json!(winslow_energy(&map, rule));
    }
    println!("{summary}");
    Ok(())
}

fn jacobian_range(map: &GeometryMap, rule: &QuadratureRule) -> Result<(f64, f64)> {
    let mut act = Active::default();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for c in 0..map.num_cells() {
        for l in &rule.points {
            let d = differentials(&map.cell_jet(c, *l, &mut act), map.dim())?;
            let j = d.det.unwrap_or(d.kappa);
            lo = lo.min(j);
            hi = hi.max(j);
        }
    }
    Ok((lo, hi))
}

fn run(cli: Cli) -> Result<()> {
    let (cmd, flags) = match cli.command {
        Command::Mesh(s) => ("mesh", s),
        Command::Solve(s) => ("solve", s),
        Command::Study(s) => ("study", s),
        Command::Geometry(s) => ("geometry", s),
    };
    let s = match &cli.config {
        Some(p) => flags.over(read_config(p)?),
        None => flags,
    };
    if let Some(n) = cli.threads.or(s.threads) {
        if n == 0 {
            return Err(Error::Configuration("threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Configuration(format!("thread pool: {e}")))?;
    }
    match cmd {
        "mesh" => cmd_mesh(&s),
        "solve" => cmd_solve(&s),
        "study" => cmd_study(&s),
        _ => cmd_geometry(&s),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {}: {msg}", e.kind());
            ExitCode::from(2)
        }
    }
}

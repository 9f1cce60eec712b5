//! C ABI over the ps3 library.
//!
//! Objects cross the boundary as opaque handles owned by the caller and released with the
//! matching `_free`. Every fallible call returns a [`Ps3Status`]; the message of the most
//! recent failure on the calling thread is available from [`ps3_last_error`].
//! Panics never unwind into C: they are caught and reported as `PS3_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use ps3::error::Error;
use ps3::geom::Vec2;
use ps3::io;
use ps3::mesh::{builders, dyadic_refine, PsRefinement, Triangulation};
use ps3::problems::problem;
use ps3::psbasis::PsBasis;
use ps3::space::{Active, Space};
use ps3::study::{self, convergence_study, mesh_sequence, Element, Refinement, SolveOptions};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ps3Status {
    Ok = 0,
    NullPointer = 1,
    InvalidString = 2,
    Nonconforming = 3,
    Geometric = 4,
    Domain = 5,
    Validation = 6,
    Configuration = 7,
    Capability = 8,
    Numerical = 9,
    Io = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ps3Element {
    Ps = 0,
    Lagrange = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ps3Refinement {
    Global = 0,
    Local = 1,
}

/// Outcome of one solve.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Ps3SolveResult {
    pub ndof: usize,
    pub h: f64,
    pub l2: f64,
    pub linf: f64,
}

/// Opaque triangulation handle.
pub struct Ps3Mesh(Triangulation);

/// Opaque Powell–Sabin basis handle.
pub struct Ps3Basis(PsBasis);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> Ps3Status {
    match e.kind() {
        "nonconforming" => Ps3Status::Nonconforming,
        "geometric" | "singular" => Ps3Status::Geometric,
        "domain" => Ps3Status::Domain,
        "validation" | "json" => Ps3Status::Validation,
        "configuration" => Ps3Status::Configuration,
        "capability" => Ps3Status::Capability,
        "io" => Ps3Status::Io,
        _ => Ps3Status::Numerical,
    }
}

enum Failure {
    Status(Ps3Status, String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

/// Runs `f`, recording the failure message and mapping panics.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> Ps3Status {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => Ps3Status::Ok,
        Ok(Err(Failure::Status(s, msg))) => {
            set_error(msg);
            s
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(format!("{}: {e}", e.kind()));
            status_of(&e)
        }
        Err(_) => {
            set_error("panic: internal error".into());
            Ps3Status::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure::Status(Ps3Status::NullPointer, format!("null pointer: {what}"))
}

/// # Safety
/// `p` must be null or point to a nul-terminated string.
unsafe fn string_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Status(Ps3Status::InvalidString, format!("{what} is not UTF-8")))
}

/// # Safety
/// `p` must be null or valid for a write of `T`.
unsafe fn write_out<T>(p: *mut T, v: T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

/// # Safety
/// `p` must be null or point to a live handle.
unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

fn into_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("interior nul bytes removed").into_raw()
}

/// Message of the last failed call on this thread; empty if none. Valid until the next call.
#[no_mangle]
pub extern "C" fn ps3_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ps3_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a pointer returned by a ps3 function and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ps3_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses mesh JSON `{"vertices": [[x, y]], "triangles": [[i, j, k]]}`.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn ps3_mesh_from_json(json: *const c_char, out: *mut *mut Ps3Mesh) -> Ps3Status {
    guard(|| {
        let text = string_arg(json, "json")?;
        let mesh = io::mesh_from_json(text)?;
        write_out(out, Box::into_raw(Box::new(Ps3Mesh(mesh))), "out")
    })
}

/// Named base mesh: "square", "pentagon", "annulus" or "cylinder".
///
/// # Safety
/// `name` must be a nul-terminated string and `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn ps3_mesh_builder(name: *const c_char, out: *mut *mut Ps3Mesh) -> Ps3Status {
    guard(|| {
        let mesh = match string_arg(name, "name")? {
            "square" => builders::unit_square(),
            "pentagon" => builders::pentagon(),
            "annulus" => builders::annulus_parameter(),
            "cylinder" => builders::cylinder_parameter(),
            other => {
                return Err(Failure::Status(Ps3Status::Validation, format!("unknown builder {other:?}")));
            }
        };
        write_out(out, Box::into_raw(Box::new(Ps3Mesh(mesh))), "out")
    })
}

/// New mesh after one dyadic refinement.
///
/// # Safety
/// `mesh` must be a live handle and `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn ps3_mesh_refine(mesh: *const Ps3Mesh, out: *mut *mut Ps3Mesh) -> Ps3Status {
    guard(|| {
        let m = handle(mesh, "mesh")?;
        write_out(out, Box::into_raw(Box::new(Ps3Mesh(dyadic_refine(&m.0)))), "out")
    })
}

/// Vertex, edge and triangle counts.
///
/// # Safety
/// `mesh` must be a live handle; each output must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn ps3_mesh_counts(
    mesh: *const Ps3Mesh,
    vertices: *mut usize,
    edges: *mut usize,
    triangles: *mut usize,
) -> Ps3Status {
    guard(|| {
        let m = &handle(mesh, "mesh")?.0;
        write_out(vertices, m.num_vertices(), "vertices")?;
        write_out(edges, m.num_edges(), "edges")?;
        write_out(triangles, m.num_triangles(), "triangles")
    })
}

/// Mesh as JSON; release with [`ps3_string_free`].
///
/// # Safety
/// `mesh` must be a live handle and `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn ps3_mesh_to_json(mesh: *const Ps3Mesh, out: *mut *mut c_char) -> Ps3Status {
    guard(|| {
        let m = handle(mesh, "mesh")?;
        write_out(out, into_string(io::mesh_to_json(&m.0)?), "out")
    })
}

/// # Safety
/// `mesh` must be null or a handle from this library that was not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ps3_mesh_free(mesh: *mut Ps3Mesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Powell–Sabin basis of the mesh; the basis keeps its own copy of the mesh.
///
/// # Safety
/// `mesh` must be a live handle and `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn ps3_basis_new(mesh: *const Ps3Mesh, out: *mut *mut Ps3Basis) -> Ps3Status {
    guard(|| {
        let m = handle(mesh, "mesh")?;
        let basis = PsBasis::new(&PsRefinement::new(&m.0)?)?;
        write_out(out, Box::into_raw(Box::new(Ps3Basis(basis))), "out")
    })
}

/// Number of basis functions, 3|V| + 2|E|.
///
/// # Safety
/// `basis` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps3_basis_dim(basis: *const Ps3Basis) -> usize {
    basis.as_ref().map_or(0, |b| b.0.dim())
}

/// Values of all basis functions at (x, y) written to `values[0..len]`; `len` must equal the
/// dimension. Functions inactive at the point get 0.
///
/// # Safety
/// `basis` must be a live handle and `values` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn ps3_basis_eval(basis: *const Ps3Basis, x: f64, y: f64, values: *mut f64, len: usize) -> Ps3Status {
    guard(|| {
        let b = &handle(basis, "basis")?.0;
        if values.is_null() {
            return Err(null("values"));
        }
        if len != b.dim() {
            return Err(Failure::Status(
                Ps3Status::BufferTooSmall,
                format!("values holds {len} entries, the basis has {}", b.dim()),
            ));
        }
        let (c, l) = b.locate(Vec2::new(x, y))?;
        let mut act = Active::default();
        b.eval(c, l, &mut act);
        let out = std::slice::from_raw_parts_mut(values, len);
        out.fill(0.0);
        for (k, v) in act.idx.iter().zip(&act.val) {
            out[*k] = *v;
        }
        Ok(())
    })
}

/// # Safety
/// `basis` must be null or a handle from this library that was not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ps3_basis_free(basis: *mut Ps3Basis) {
    if !basis.is_null() {
        drop(Box::from_raw(basis));
    }
}

fn element(e: Ps3Element) -> Element {
    match e {
        Ps3Element::Ps => Element::Ps,
        Ps3Element::Lagrange => Element::Lagrange,
    }
}

/// Solves registry problem `name` on refinement level `level` (0 is the base mesh).
///
/// # Safety
/// `name` must be a nul-terminated string and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn ps3_solve(
    name: *const c_char,
    el: Ps3Element,
    level: usize,
    out: *mut Ps3SolveResult,
) -> Ps3Status {
    guard(|| {
        let p = problem(string_arg(name, "name")?)?;
        let mesh = mesh_sequence(&p, Refinement::Global, level + 1)?.pop().expect("at least one level");
        let sol = study::solve(&p, element(el), &mesh, &SolveOptions::default())?;
        let r = Ps3SolveResult {
            ndof: sol.ndof(),
            h: mesh.h(),
            l2: sol.l2,
            linf: sol.linf,
        };
        write_out(out, r, "out")
    })
}

/// Convergence study as CSV text; release with [`ps3_string_free`].
///
/// # Safety
/// `name` must be a nul-terminated string and `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn ps3_study_csv(
    name: *const c_char,
    el: Ps3Element,
    refinement: Ps3Refinement,
    levels: usize,
    out: *mut *mut c_char,
) -> Ps3Status {
    guard(|| {
        let p = problem(string_arg(name, "name")?)?;
        let rf = match refinement {
            Ps3Refinement::Global => Refinement::Global,
            Ps3Refinement::Local => Refinement::Local,
        };
        let r = convergence_study(&p, element(el), rf, levels, &SolveOptions::default())?;
        write_out(out, into_string(r.to_csv()), "out")
    })
}

use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use ps3_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(ps3_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn builder_refine_counts() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(ps3_mesh_builder(c"square".as_ptr(), &mut m), Ps3Status::Ok);
        let mut r = ptr::null_mut();
        assert_eq!(ps3_mesh_refine(m, &mut r), Ps3Status::Ok);
        let (mut nv, mut ne, mut nt) = (0, 0, 0);
        assert_eq!(ps3_mesh_counts(r, &mut nv, &mut ne, &mut nt), Ps3Status::Ok);
        assert_eq!(nt, 8);
        // Euler: V − E + T = 1 for a disc
        assert_eq!(nv + nt, ne + 1);
        ps3_mesh_free(m);
        ps3_mesh_free(r);
    }
}

#[test]
fn t_junction_reports_nonconforming() {
    let json = CString::new(
        r#"{"vertices": [[0,0],[1,0],[2,0],[0,1],[2,1]], "triangles": [[0,1,3],[1,2,4],[0,4,3]]}"#,
    )
    .unwrap();
    let mut m = ptr::null_mut();
    let s = unsafe { ps3_mesh_from_json(json.as_ptr(), &mut m) };
    assert_eq!(s, Ps3Status::Nonconforming);
    assert!(m.is_null());
    assert!(last_error().contains("nonconforming"), "{}", last_error());
}

#[test]
fn null_arguments_are_rejected() {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { ps3_mesh_builder(ptr::null(), &mut m) }, Ps3Status::NullPointer);
    assert_eq!(unsafe { ps3_mesh_builder(c"square".as_ptr(), ptr::null_mut()) }, Ps3Status::NullPointer);
    assert_eq!(unsafe { ps3_basis_dim(ptr::null()) }, 0);
    unsafe {
        ps3_mesh_free(ptr::null_mut());
        ps3_basis_free(ptr::null_mut());
        ps3_string_free(ptr::null_mut());
    }
}

#[test]
fn basis_is_a_partition_of_unity() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(ps3_mesh_builder(c"pentagon".as_ptr(), &mut m), Ps3Status::Ok);
        let mut b = ptr::null_mut();
        assert_eq!(ps3_basis_new(m, &mut b), Ps3Status::Ok);
        let n = ps3_basis_dim(b);
        assert_eq!(n, 3 * 6 + 2 * 10);
        let mut v = vec![0.0; n];
        assert_eq!(ps3_basis_eval(b, 0.1, -0.2, v.as_mut_ptr(), n), Ps3Status::Ok);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(ps3_basis_eval(b, 0.1, -0.2, v.as_mut_ptr(), n - 1), Ps3Status::BufferTooSmall);
        assert_eq!(ps3_basis_eval(b, 5.0, 5.0, v.as_mut_ptr(), n), Ps3Status::Domain);
        ps3_basis_free(b);
        ps3_mesh_free(m);
    }
}

#[test]
fn solve_and_study() {
    let mut r = Ps3SolveResult::default();
    let s = unsafe { ps3_solve(c"annulus-poisson".as_ptr(), Ps3Element::Ps, 1, &mut r) };
    assert_eq!(s, Ps3Status::Ok, "{}", last_error());
    assert_eq!(r.ndof, 65);
    assert!(r.l2 > 0.0 && r.l2 < 1e-3);

    let s = unsafe { ps3_solve(c"annulus-biharmonic".as_ptr(), Ps3Element::Lagrange, 0, &mut r) };
    assert_eq!(s, Ps3Status::Capability);

    let s = unsafe { ps3_solve(c"no-such-problem".as_ptr(), Ps3Element::Ps, 0, &mut r) };
    assert_eq!(s, Ps3Status::Validation);

    let mut csv = ptr::null_mut();
    let s = unsafe { ps3_study_csv(c"annulus-poisson".as_ptr(), Ps3Element::Ps, Ps3Refinement::Global, 2, &mut csv) };
    assert_eq!(s, Ps3Status::Ok);
    let text = unsafe { CStr::from_ptr(csv) }.to_str().unwrap().to_owned();
    unsafe { ps3_string_free(csv) };
    let ndof: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(ndof, ["14", "65"]);
}

#[test]
fn mesh_json_survives_the_boundary() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(ps3_mesh_builder(c"annulus".as_ptr(), &mut m), Ps3Status::Ok);
        let mut s = ptr::null_mut();
        assert_eq!(ps3_mesh_to_json(m, &mut s), Ps3Status::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(ps3_mesh_from_json(s, &mut back), Ps3Status::Ok);
        let (mut a, mut b) = ([0; 3], [0; 3]);
        ps3_mesh_counts(m, &mut a[0], &mut a[1], &mut a[2]);
        ps3_mesh_counts(back, &mut b[0], &mut b[1], &mut b[2]);
        assert_eq!(a, b);
        ps3_string_free(s);
        ps3_mesh_free(m);
        ps3_mesh_free(back);
    }
}

/// The generated header compiles as C and links against the static library.
#[test]
fn header_compiles_and_links() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include/ps3.h");
    assert!(header.exists(), "build script did not write {}", header.display());
    let tmp = tempdir();
    let src = tmp.join("probe.c");
    std::fs::write(
        &src,
        r#"#include "ps3.h"
#include <stdio.h>
#include <string.h>
int main(void) {
    Ps3Mesh *m = NULL;
    if (ps3_mesh_builder("pentagon", &m) != PS3_STATUS_OK) return 1;
    size_t nv, ne, nt;
    ps3_mesh_counts(m, &nv, &ne, &nt);
    Ps3Status s = ps3_mesh_builder("hexagon", NULL);
    ps3_mesh_free(m);
    printf("%zu %zu %zu %d %s\n", nv, ne, nt, (int)s, ps3_version());
    return nt == 5 ? 0 : 1;
}
"#,
    )
    .unwrap();
    let obj = tmp.join("probe.o");
    let st = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-c"])
        .arg("-I")
        .arg(dir.join("include"))
        .arg(&src)
        .arg("-o")
        .arg(&obj)
        .status()
        .unwrap();
    assert!(st.success(), "header does not compile as C99");
    // link only when the static library of this profile is present
    let lib_dir = target_dir();
    if !lib_dir.join("libps3_ffi.a").exists() {
        eprintln!("static library not built in {}; skipping link", lib_dir.display());
        return;
    }
    let exe = tmp.join("probe");
    let st = Command::new(&cc)
        .arg(&obj)
        .arg(lib_dir.join("libps3_ffi.a"))
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(st.success(), "link failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("6 10 5 6 "), "{text}");
}

fn which_cc() -> Result<String, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if Command::new(cc).arg("--version").output().is_ok_and(|o| o.status.success()) {
            return Ok(cc.to_string());
        }
    }
    Err(())
}

/// Directory of the test executable's profile, where cargo places libps3_ffi.a.
fn target_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf()
}

fn tempdir() -> PathBuf {
    let d = std::env::temp_dir().join(format!("ps3-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

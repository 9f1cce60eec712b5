//! Patch tests: exact cubics must be reproduced by every solver up to round-off.

use nalgebra::Vector3;

use ps3::mesh::{builders, dyadic_refine};
use ps3::problems::{problem, Domain, Problem};
use ps3::study::{convergence_study, solve, Element, Refinement, SolveOptions};

fn u(x: Vector3<f64>) -> f64 {
    x[0].powi(3) - 2.0 * x[0] * x[1] * x[1] + x[1] + 0.5
}
fn grad(x: Vector3<f64>) -> Vector3<f64> {
    Vector3::new(3.0 * x[0] * x[0] - 2.0 * x[1] * x[1], 1.0 - 4.0 * x[0] * x[1], 0.0)
}
/// −Δu
fn minus_laplace(x: Vector3<f64>) -> f64 {
    -2.0 * x[0]
}
/// Δ²u of a cubic
fn zero(_: Vector3<f64>) -> f64 {
    0.0
}

fn cubic(order: usize) -> Problem {
    Problem {
        name: "cubic-patch",
        domain: Domain::Pentagon,
        order,
        u,
        grad,
        f: if order == 2 { minus_laplace } else { zero },
    }
}

#[test]
fn poisson_patch_test() {
    let mesh = dyadic_refine(&builders::pentagon());
    for el in [Element::Ps, Element::Lagrange] {
        let s = solve(&cubic(2), el, &mesh, &SolveOptions::default()).unwrap();
        assert!(s.linf <= 1e-8, "{el:?}: L∞ = {:e}", s.linf);
        assert!(s.fit.residuals.value_max <= 1e-10);
    }
}

#[test]
fn biharmonic_patch_test() {
    let mesh = dyadic_refine(&builders::pentagon());
    let s = solve(&cubic(4), Element::Ps, &mesh, &SolveOptions::default()).unwrap();
    assert!(s.linf <= 1e-8, "L∞ = {:e}", s.linf);
}

#[test]
fn lagrange_rejects_fourth_order() {
    let r = solve(&cubic(4), Element::Lagrange, &builders::pentagon(), &SolveOptions::default());
    assert!(matches!(r, Err(e) if e.kind() == "capability"));
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let p = problem("annulus-biharmonic").unwrap();
    let run = |n: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .unwrap()
            .install(|| convergence_study(&p, Element::Ps, Refinement::Global, 3, &SolveOptions::default()).unwrap())
            .to_csv()
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(3));
}

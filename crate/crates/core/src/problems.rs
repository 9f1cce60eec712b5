//! Manufactured problems with closed-form sources.
//!
//! Planar solutions are functions of (x, y). Cylinder solutions use the chart
//! (θ, z) on the unit cylinder, where Δ_Ω = ∂θθ + ∂zz.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Domain and geometry a problem is posed on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Domain {
    /// Pentagon fan with the identity map.
    Pentagon,
    /// Pentagon with the curved C0 map G, projected to C1 for Powell–Sabin elements.
    PentagonCurved,
    /// Quarter annulus r1 ≤ ρ ≤ r2.
    Annulus { r1: f64, r2: f64 },
    /// Quarter cylinder shell of radius r and height h.
    Cylinder { r: f64, h: f64 },
}

#[derive(Clone, Copy, Debug)]
pub struct Problem {
    pub name: &'static str,
    pub domain: Domain,
    /// 2 for −Δ_Ω u = f, 4 for Δ²_Ω u = f.
    pub order: usize,
    pub u: fn(Vector3<f64>) -> f64,
    /// Surface gradient ∇_Ω u as an ambient vector.
    pub grad: fn(Vector3<f64>) -> Vector3<f64>,
    pub f: fn(Vector3<f64>) -> f64,
}

const TWO_PI: f64 = 2.0 * PI;

fn sincos_u(x: Vector3<f64>) -> f64 {
    (TWO_PI * x[0]).sin() * (TWO_PI * x[1]).cos()
}
fn sincos_grad(x: Vector3<f64>) -> Vector3<f64> {
    let (sx, cx) = (TWO_PI * x[0]).sin_cos();
    let (sy, cy) = (TWO_PI * x[1]).sin_cos();
    Vector3::new(TWO_PI * cx * cy, -TWO_PI * sx * sy, 0.0)
}
fn sincos_f(x: Vector3<f64>) -> f64 {
    8.0 * PI * PI * sincos_u(x)
}

fn exp_u(x: Vector3<f64>) -> f64 {
    (x[0] * x[0] + 1.0 / 3.0) * (2.0 * x[1]).exp()
}
fn exp_grad(x: Vector3<f64>) -> Vector3<f64> {
    let e = (2.0 * x[1]).exp();
    Vector3::new(2.0 * x[0] * e, 2.0 * exp_u(x), 0.0)
}
fn exp_laplace_f(x: Vector3<f64>) -> f64 {
    -(2.0 * x[1]).exp() * (4.0 * x[0] * x[0] + 10.0 / 3.0)
}
fn exp_bilaplace_f(x: Vector3<f64>) -> f64 {
    (2.0 * x[1]).exp() * (16.0 * x[0] * x[0] + 64.0 / 3.0)
}

/// Spike exponent q = 1000((ρ − ¾)² + (y − ρ sin(π/8))²) with its gradient and Laplacian.
fn spike_q(x: Vector3<f64>) -> (f64, [f64; 2], f64) {
    let s8 = (PI / 8.0).sin();
    let rho = x[0].hypot(x[1]);
    let dr = [x[0] / rho, x[1] / rho];
    let a = rho - 0.75;
    let b = x[1] - s8 * rho;
    let db = [-s8 * dr[0], 1.0 - s8 * dr[1]];
    let q = 1000.0 * (a * a + b * b);
    let gq = [0, 1].map(|i| 2000.0 * (a * dr[i] + b * db[i]));
    // |∇ρ|² = 1, Δρ = 1/ρ, ΔB = −s8/ρ
    let lq = 2000.0 * (1.0 + a / rho + db[0] * db[0] + db[1] * db[1] - b * s8 / rho);
    (q, gq, lq)
}
fn spike_u(x: Vector3<f64>) -> f64 {
    (-spike_q(x).0).exp()
}
fn spike_grad(x: Vector3<f64>) -> Vector3<f64> {
    let (q, g, _) = spike_q(x);
    let u = (-q).exp();
    Vector3::new(-u * g[0], -u * g[1], 0.0)
}
fn spike_f(x: Vector3<f64>) -> f64 {
    let (q, g, l) = spike_q(x);
    (-q).exp() * (l - g[0] * g[0] - g[1] * g[1])
}

/// Chart coordinates (θ, z) and the unit azimuthal direction of a point on the unit cylinder.
fn chart(x: Vector3<f64>) -> (f64, f64, Vector3<f64>) {
    let theta = x[1].atan2(x[0]);
    (theta, x[2], Vector3::new(-theta.sin(), theta.cos(), 0.0))
}

const CYL_C: f64 = 6.0 + 4.0 * SQRT_2;
const CYL_K: f64 = 0.75 * PI;

fn cyl_poisson_u(x: Vector3<f64>) -> f64 {
    let (t, z, _) = chart(x);
    CYL_C * (1.0 - t.cos()) * (1.0 - t.sin()) * (CYL_K * z).sin()
}
fn cyl_poisson_grad(x: Vector3<f64>) -> Vector3<f64> {
    let (t, z, e) = chart(x);
    let (s, c) = t.sin_cos();
    let a = (1.0 - c) * (1.0 - s);
    let da = s * (1.0 - s) - c * (1.0 - c);
    e * (CYL_C * da * (CYL_K * z).sin()) + Vector3::new(0.0, 0.0, CYL_C * a * CYL_K * (CYL_K * z).cos())
}
fn cyl_poisson_f(x: Vector3<f64>) -> f64 {
    let (t, z, _) = chart(x);
    let (s, c) = t.sin_cos();
    let a = (1.0 - c) * (1.0 - s);
    let d2a = s + c - 2.0 * (2.0 * t).sin();
    -CYL_C * (CYL_K * z).sin() * (d2a - CYL_K * CYL_K * a)
}

fn cyl_bih_u(x: Vector3<f64>) -> f64 {
    let (t, z, _) = chart(x);
    ((2.0 * t).sin() * (PI * z).sin()).powi(2)
}
fn cyl_bih_grad(x: Vector3<f64>) -> Vector3<f64> {
    let (t, z, e) = chart(x);
    let (s2, sz) = ((2.0 * t).sin(), (PI * z).sin());
    let ut = 2.0 * (4.0 * t).sin() * sz * sz;
    let uz = PI * s2 * s2 * (TWO_PI * z).sin();
    e * ut + Vector3::new(0.0, 0.0, uz)
}
fn cyl_bih_f(x: Vector3<f64>) -> f64 {
    let (t, z, _) = chart(x);
    let (c4, c2) = ((4.0 * t).cos(), (TWO_PI * z).cos());
    let m = 16.0 + 4.0 * PI * PI;
    0.25 * (-256.0 * c4 - 16.0 * PI.powi(4) * c2 + m * m * c4 * c2)
}

const ANNULUS: Domain = Domain::Annulus { r1: 0.5, r2: 1.0 };

/// The registered problems, keyed by name.
pub fn problem_registry() -> Vec<Problem> {
    vec![
        Problem {
            name: "pentagon-poisson",
            domain: Domain::Pentagon,
            order: 2,
            u: sincos_u,
            grad: sincos_grad,
            f: sincos_f,
        },
        Problem {
            name: "pentagon-curved-poisson",
            domain: Domain::PentagonCurved,
            order: 2,
            u: sincos_u,
            grad: sincos_grad,
            f: sincos_f,
        },
        Problem {
            name: "annulus-poisson",
            domain: ANNULUS,
            order: 2,
            u: exp_u,
            grad: exp_grad,
            f: exp_laplace_f,
        },
        Problem {
            name: "annulus-spike",
            domain: ANNULUS,
            order: 2,
            u: spike_u,
            grad: spike_grad,
            f: spike_f,
        },
        Problem {
            name: "cylinder-poisson",
            domain: Domain::Cylinder { r: 1.0, h: 2.0 },
            order: 2,
            u: cyl_poisson_u,
            grad: cyl_poisson_grad,
            f: cyl_poisson_f,
        },
        Problem {
            name: "annulus-biharmonic",
            domain: ANNULUS,
            order: 4,
            u: exp_u,
            grad: exp_grad,
            f: exp_bilaplace_f,
        },
        Problem {
            name: "cylinder-biharmonic",
            domain: Domain::Cylinder { r: 1.0, h: 1.0 },
            order: 4,
            u: cyl_bih_u,
            grad: cyl_bih_grad,
            f: cyl_bih_f,
        },
    ]
}

pub fn problem(name: &str) -> Result<Problem> {
    problem_registry().into_iter().find(|p| p.name == name).ok_or_else(|| {
        let names: Vec<&str> = problem_registry().iter().map(|p| p.name).collect();
        Error::Validation(format!("unknown problem {name:?}; known: {}", names.join(", ")))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Planar point or cylinder point from chart-like samples (a, b) ∈ [0,1]².
    fn sample(domain: Domain, a: f64, b: f64) -> (Vector3<f64>, f64, f64) {
        match domain {
            Domain::Cylinder { h, .. } => {
                let t = 0.05 + a * (0.5 * PI - 0.1);
                (Vector3::new(t.cos(), t.sin(), b * h), t, b * h)
            }
            Domain::Annulus { .. } => {
                let t = 0.05 + a * (0.5 * PI - 0.1);
                let r = 0.55 + 0.4 * b;
                (Vector3::new(r * t.cos(), r * t.sin(), 0.0), 0.0, 0.0)
            }
            _ => (Vector3::new(a - 0.5, b - 0.5, 0.0), 0.0, 0.0),
        }
    }

    /// Five-point Laplacian in the chart (θ, z) or in (x, y).
    fn fd_laplace(p: &Problem, g: &dyn Fn(Vector3<f64>) -> f64, x: Vector3<f64>, t: f64, z: f64, h: f64) -> f64 {
        match p.domain {
            Domain::Cylinder { .. } => {
                let at = |t: f64, z: f64| g(Vector3::new(t.cos(), t.sin(), z));
                (at(t + h, z) + at(t - h, z) + at(t, z + h) + at(t, z - h) - 4.0 * at(t, z)) / (h * h)
            }
            _ => {
                let at = |dx: f64, dy: f64| g(x + Vector3::new(dx, dy, 0.0));
                (at(h, 0.0) + at(-h, 0.0) + at(0.0, h) + at(0.0, -h) - 4.0 * at(0.0, 0.0)) / (h * h)
            }
        }
    }

    #[test]
    fn sources_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for p in problem_registry() {
            for _ in 0..100 {
                let (x, t, z) = sample(p.domain, rng.gen(), rng.gen());
                let h = if p.name == "annulus-spike" { 1e-4 } else { 1e-3 };
                let fd = if p.order == 2 {
                    -fd_laplace(&p, &p.u, x, t, z, h)
                } else {
                    let nested = |h2: f64| {
                        let inner = |y: Vector3<f64>| {
                            let (ty, zy) = match p.domain {
                                Domain::Cylinder { .. } => (y[1].atan2(y[0]), y[2]),
                                _ => (0.0, 0.0),
                            };
                            fd_laplace(&p, &p.u, y, ty, zy, h2)
                        };
                        fd_laplace(&p, &inner, x, t, z, h2)
                    };
                    // Richardson extrapolation removes the O(h²) term
                    (4.0 * nested(4e-3) - nested(8e-3)) / 3.0
                };
                let exact = (p.f)(x);
                let scale = exact.abs().max(1.0);
                                assert!((fd - exact).abs() <= 1e-4 * scale, "{}: fd {fd} vs f {exact} at {x:?}", p.name);
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for p in problem_registry() {
            for _ in 0..100 {
                let (x, t, z) = sample(p.domain, rng.gen(), rng.gen());
                let g = (p.grad)(x);
                let h = 1e-6;
                let fd = match p.domain {
                    Domain::Cylinder { .. } => {
                        let at = |t: f64, z: f64| (p.u)(Vector3::new(t.cos(), t.sin(), z));
                        let ut = (at(t + h, z) - at(t - h, z)) / (2.0 * h);
                        let uz = (at(t, z + h) - at(t, z - h)) / (2.0 * h);
                        Vector3::new(-t.sin() * ut, t.cos() * ut, uz)
                    }
                    _ => {
                        let ux = ((p.u)(x + Vector3::new(h, 0.0, 0.0)) - (p.u)(x - Vector3::new(h, 0.0, 0.0))) / (2.0 * h);
                        let uy = ((p.u)(x + Vector3::new(0.0, h, 0.0)) - (p.u)(x - Vector3::new(0.0, h, 0.0))) / (2.0 * h);
                        Vector3::new(ux, uy, 0.0)
                    }
                };
                assert!((fd - g).norm() <= 1e-5 * g.norm().max(1.0), "{}", p.name);
            }
        }
    }

    #[test]
    fn spike_peaks_at_its_center() {
        let t = PI / 8.0;
        let x = Vector3::new(0.75 * t.cos(), 0.75 * t.sin(), 0.0);
        assert!((spike_u(x) - 1.0).abs() < 1e-15);
    }
}

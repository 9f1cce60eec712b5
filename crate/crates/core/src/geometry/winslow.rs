//! The normalized Winslow functional and its minimization over interior control points.

use std::collections::VecDeque;

use rayon::prelude::*;

use super::{GeometryMap, Mapping};
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::quadrature::QuadratureRule;
use crate::space::{Active, Space};

/// Feasible steps keep det J above this fraction of the initial minimum.
pub const FEASIBILITY_FRACTION: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 500;
pub const RELATIVE_DECREASE_TOL: f64 = 1e-8;
const HISTORY: usize = 10;
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

/// (1/|Θ|) ∫ (‖∇F₁‖² + ‖∇F₂‖²) / |det J| over the cells of a planar map.
pub fn winslow_energy(map: &dyn Mapping, rule: &QuadratureRule) -> f64 {
    let per_cell: Vec<(f64, f64)> = (0..map.num_cells())
        .into_par_iter()
        .map_init(Active::default, |act, c| {
            let [a, b, d] = map.cell_points(c);
            let area = 0.5 * crate::geom::orient2(a, b, d).abs();
            let mut e = 0.0;
            for (l, w) in rule.points.iter().zip(&rule.weights) {
                let j = map.cell_jet(c, *l, act).jac;
                let det = j[(0, 0)] * j[(1, 1)] - j[(0, 1)] * j[(1, 0)];
                let tr = j[(0, 0)].powi(2) + j[(0, 1)].powi(2) + j[(1, 0)].powi(2) + j[(1, 1)].powi(2);
                e += w * tr / det.abs();
            }
            (area * e, area)
        })
        .collect();
    let (e, a) = per_cell.iter().fold((0.0, 0.0), |(e, a), (ec, ac)| (e + ec, a + ac));
    e / a
}

/// Smallest det J over the quadrature points and where it occurs.
pub fn min_det(map: &dyn Mapping, rule: &QuadratureRule) -> (f64, Vec2) {
    let mut act = Active::default();
    let mut best = (f64::INFINITY, Vec2::zeros());
    for c in 0..map.num_cells() {
        let [a, b, d] = map.cell_points(c);
        for l in &rule.points {
            let j = map.cell_jet(c, *l, &mut act).jac;
            let det = j[(0, 0)] * j[(1, 1)] - j[(0, 1)] * j[(1, 0)];
            if det < best.0 {
                best = (det, a * l[0] + b * l[1] + d * l[2]);
            }
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub struct WinslowReport {
    pub initial_energy: f64,
    pub final_energy: f64,
    pub iterations: usize,
    pub initial_min_det: f64,
    pub final_min_det: f64,
}

/// Basis values at every quadrature point, with the weight scaled by cell area / |Θ|.
struct Samples {
    points: Vec<(f64, Active)>,
}

impl Samples {
    fn new(map: &GeometryMap, rule: &QuadratureRule) -> Self {
        let space = map.space();
        let total: f64 = (0..space.num_cells()).map(|c| space.cell_area(c)).sum();
        let mut points = Vec::with_capacity(space.num_cells() * rule.len());
        for c in 0..space.num_cells() {
            let area = space.cell_area(c);
            for (l, w) in rule.points.iter().zip(&rule.weights) {
                let mut act = Active::default();
                space.eval(c, *l, &mut act);
                points.push((w * area / total, act));
            }
        }
        Samples { points }
    }

    /// Energy, its gradient with respect to all control coordinates, and min det J.
    fn evaluate(&self, controls: &[[f64; 3]], with_grad: bool) -> (f64, Vec<[f64; 2]>, f64) {
        let mut energy = 0.0;
        let mut grad = vec![[0.0; 2]; if with_grad { controls.len() } else { 0 }];
        let mut dmin = f64::INFINITY;
        for (w, act) in &self.points {
            let mut j = [[0.0; 2]; 2];
            for n in 0..act.len() {
                let p = controls[act.idx[n]];
                for comp in 0..2 {
                    j[comp][0] += p[comp] * act.grad[n].x;
                    j[comp][1] += p[comp] * act.grad[n].y;
                }
            }
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            dmin = dmin.min(det);
            let tr = j[0][0].powi(2) + j[0][1].powi(2) + j[1][0].powi(2) + j[1][1].powi(2);
            let f = tr / det;
            energy += w * f;
            if with_grad {
                let cof = [[j[1][1], -j[1][0]], [-j[0][1], j[0][0]]];
                let mut g = [[0.0; 2]; 2];
                for a in 0..2 {
                    for b in 0..2 {
                        g[a][b] = w * (2.0 * j[a][b] - f * cof[a][b]) / det;
                    }
                }
                for n in 0..act.len() {
                    let gn = act.grad[n];
                    let k = act.idx[n];
                    for comp in 0..2 {
                        grad[k][comp] += g[comp][0] * gn.x + g[comp][1] * gn.y;
                    }
                }
            }
        }
        (energy, grad, dmin)
    }
}

/// Minimize the Winslow energy over the controls not flagged `fixed`, keeping det J > 0.
///
/// Limited-memory BFGS with Armijo backtracking; trial steps that push det J below
/// [`FEASIBILITY_FRACTION`] times the initial minimum are rejected like failed Armijo steps.
pub fn winslow_optimize(
    f0: &GeometryMap,
    fixed: &[bool],
    rule: &QuadratureRule,
) -> Result<(GeometryMap, WinslowReport)> {
    if f0.dim() != 2 {
        return Err(Error::Optimization("the Winslow functional needs a planar map".into()));
    }
    if fixed.len() != f0.controls().len() {
        return Err(Error::Validation(format!(
            "{} fixed flags for {} controls",
            fixed.len(),
            f0.controls().len()
        )));
    }
    let samples = Samples::new(f0, rule);
    let vars: Vec<usize> = (0..fixed.len()).filter(|&k| !fixed[k]).collect();
    let mut controls = f0.controls().to_vec();
    let (e0, g0, d0) = samples.evaluate(&controls, true);
    if !(d0 > 0.0) {
        return Err(Error::Optimization(format!(
            "initial map is not orientation preserving (min det J = {d0:e}); start from a feasible map"
        )));
    }
    let floor = FEASIBILITY_FRACTION * d0;
    let pack = |g: &[[f64; 2]]| -> Vec<f64> { vars.iter().flat_map(|&k| [g[k][0], g[k][1]]).collect() };
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };

    let mut energy = e0;
    let mut grad = pack(&g0);
    let mut dmin = d0;
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS && !vars.is_empty() {
        // two-loop recursion for the search direction
        let mut q = grad.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        if let Some((s, y, _)) = history.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|qi| *qi *= gamma);
        } else {
            let gn = dot(&grad, &grad).sqrt();
            q.iter_mut().for_each(|qi| *qi /= gn.max(1.0));
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut dir: Vec<f64> = q.iter().map(|x| -x).collect();
        let mut slope = dot(&grad, &dir);
        if !(slope < 0.0) {
            history.clear();
            dir = grad.iter().map(|x| -x).collect();
            slope = -dot(&grad, &grad);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let mut trial = controls.clone();
            for (i, &k) in vars.iter().enumerate() {
                trial[k][0] += step * dir[2 * i];
                trial[k][1] += step * dir[2 * i + 1];
            }
            let (e, _, d) = samples.evaluate(&trial, false);
            if d > floor && e.is_finite() && e <= energy + ARMIJO * step * slope {
                accepted = Some((trial, e));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, e)) = accepted else { break };
        let (_, g_new, d) = samples.evaluate(&trial, true);
        let g_new = pack(&g_new);
        let s: Vec<f64> = dir.iter().map(|x| step * x).collect();
        let y: Vec<f64> = g_new.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-16 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            history.push_back((s, y, 1.0 / sy));
            if history.len() > HISTORY {
                history.pop_front();
            }
        }
        let decrease = (energy - e) / energy.abs();
        controls = trial;
        energy = e;
        grad = g_new;
        dmin = d;
        iterations += 1;
        if decrease < RELATIVE_DECREASE_TOL {
            break;
        }
    }
    let report = WinslowReport {
        initial_energy: e0,
        final_energy: energy,
        iterations,
        initial_min_det: d0,
        final_min_det: dmin,
    };
    Ok((f0.with_controls(controls)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{builders, PsRefinement};
    use crate::psbasis::PsBasis;
    use crate::quadrature::quad_rule;

    fn identity() -> GeometryMap {
        GeometryMap::identity(PsBasis::new(&PsRefinement::new(&builders::pentagon()).unwrap()).unwrap())
    }

    #[test]
    fn identity_energy_is_two() {
        let e = winslow_energy(&identity(), quad_rule(8).unwrap());
        assert!((e - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_energy_is_two() {
        let g = identity();
        let (s, c) = 0.7f64.sin_cos();
        let rot = g
            .controls()
            .iter()
            .map(|p| [c * p[0] - s * p[1], s * p[0] + c * p[1], 0.0])
            .collect();
        let e = winslow_energy(&g.with_controls(rot).unwrap(), quad_rule(8).unwrap());
        assert!((e - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let g = identity();
        let rule = quad_rule(8).unwrap();
        let samples = Samples::new(&g, rule);
        let mut controls = g.controls().to_vec();
        for (k, p) in controls.iter_mut().enumerate() {
            p[0] += 0.01 * ((k as f64) * 0.37).sin();
            p[1] += 0.01 * ((k as f64) * 0.71).cos();
        }
        let (_, grad, _) = samples.evaluate(&controls, true);
        let h = 1e-6;
        for k in [0, 7, 20] {
            for comp in 0..2 {
                let mut a = controls.clone();
                let mut b = controls.clone();
                a[k][comp] += h;
                b[k][comp] -= h;
                let fd = (samples.evaluate(&a, false).0 - samples.evaluate(&b, false).0) / (2.0 * h);
                assert!((fd - grad[k][comp]).abs() < 1e-6 * (1.0 + fd.abs()));
            }
        }
    }

    #[test]
    fn infeasible_start_rejected() {
        let g = identity();
        let flipped = g.controls().iter().map(|p| [p[0], -p[1], 0.0]).collect();
        let g = g.with_controls(flipped).unwrap();
        let fixed = vec![false; g.controls().len()];
        assert!(matches!(
            winslow_optimize(&g, &fixed, quad_rule(8).unwrap()),
            Err(Error::Optimization(_))
        ));
    }
}

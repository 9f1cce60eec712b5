//! Quadrature on triangles in barycentric coordinates. Weights sum to one.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Points are barycentric triples; ∫_T f ≈ |T| Σ w_i f(p_i).
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    /// Highest total degree integrated exactly.
    pub degree: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

/// Largest degree with a rule.
pub const MAX_DEGREE: usize = 12;

impl QuadratureRule {
    fn from_table(degree: usize, rows: &[[f64; 4]]) -> Self {
        let total: f64 = rows.iter().map(|r| r[3]).sum();
        QuadratureRule {
            degree,
            points: rows
                .iter()
                .map(|r| {
                    let s = r[0] + r[1] + r[2];
                    [r[0] / s, r[1] / s, r[2] / s]
                })
                .collect(),
            weights: rows.iter().map(|r| r[3] / total).collect(),
        }
    }

    /// Collapsed tensor Gauss–Legendre rule with n points per direction, exact to degree 2n − 2.
    fn collapsed(degree: usize, n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for i in 0..n {
            let s = 0.5 * (x[i] + 1.0);
            for j in 0..n {
                let t = 0.5 * (x[j] + 1.0);
                // (s, t) on the square maps to (s, (1 − s) t) on the reference triangle
                let l1 = s;
                let l2 = (1.0 - s) * t;
                points.push([1.0 - l1 - l2, l1, l2]);
                // Jacobian (1 − s), square measure ¼, reference area ½
                weights.push(0.25 * w[i] * w[j] * (1.0 - s) * 2.0);
            }
        }
        QuadratureRule {
            degree,
            points,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Gauss–Legendre nodes and weights on [−1, 1] by Newton iteration on P_n, n ≥ 2.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// The cheapest rule exact for polynomials of total degree `degree`.
pub fn quad_rule(degree: usize) -> Result<&'static QuadratureRule> {
    static RULES: OnceLock<Vec<QuadratureRule>> = OnceLock::new();
    if degree > MAX_DEGREE {
        return Err(Error::Validation(format!(
            "no quadrature rule of degree {degree}; the maximum is {MAX_DEGREE}"
        )));
    }
    let rules = RULES.get_or_init(|| {
        vec![
            QuadratureRule::from_table(2, &RULE2),
            QuadratureRule::from_table(4, &RULE4),
            QuadratureRule::from_table(5, &RULE5),
            QuadratureRule::from_table(6, &RULE6),
            QuadratureRule::from_table(8, &RULE8),
            QuadratureRule::collapsed(10, 6),
            QuadratureRule::collapsed(12, 7),
        ]
    });
    Ok(rules.iter().find(|r| r.degree >= degree).expect("degree bounded"))
}

const RULE2: [[f64; 4]; 3] = [
    [0.16666666666666685, 0.16666666666666685, 0.6666666666666663, 0.33333333333333337],
    [0.16666666666666685, 0.6666666666666663, 0.16666666666666685, 0.33333333333333337],
    [0.6666666666666663, 0.16666666666666685, 0.16666666666666685, 0.33333333333333337],
];

const RULE4: [[f64; 4]; 6] = [
    [0.44594849091596483, 0.44594849091596483, 0.10810301816807033, 0.2233815896780116],
    [0.44594849091596483, 0.10810301816807033, 0.44594849091596483, 0.2233815896780116],
    [0.10810301816807033, 0.44594849091596483, 0.44594849091596483, 0.2233815896780116],
    [0.09157621350977042, 0.09157621350977042, 0.8168475729804592, 0.10995174365532168],
    [0.09157621350977042, 0.8168475729804592, 0.09157621350977042, 0.10995174365532168],
    [0.8168475729804592, 0.09157621350977042, 0.09157621350977042, 0.10995174365532168],
];

const RULE5: [[f64; 4]; 7] = [
    [0.3333333333333333, 0.3333333333333333, 0.3333333333333333, 0.22499999999999654],
    [0.4701420641051144, 0.4701420641051144, 0.059715871789771224, 0.13239415278850733],
    [0.4701420641051144, 0.059715871789771224, 0.4701420641051144, 0.13239415278850733],
    [0.059715871789771224, 0.4701420641051144, 0.4701420641051144, 0.13239415278850733],
    [0.10128650732345633, 0.10128650732345633, 0.7974269853530873, 0.12593918054482717],
    [0.10128650732345633, 0.7974269853530873, 0.10128650732345633, 0.12593918054482717],
    [0.7974269853530873, 0.10128650732345633, 0.10128650732345633, 0.12593918054482717],
];

const RULE6: [[f64; 4]; 12] = [
    [0.4801379641122202, 0.4801379641122202, 0.03972407177555959, 0.08073108959302393],
    [0.4801379641122202, 0.03972407177555959, 0.4801379641122202, 0.08073108959302393],
    [0.03972407177555959, 0.4801379641122202, 0.4801379641122202, 0.08073108959302393],
    [0.21942998254978271, 0.21942998254978271, 0.5611400349004345, 0.17133312415299037],
    [0.21942998254978271, 0.5611400349004345, 0.21942998254978271, 0.17133312415299037],
    [0.5611400349004345, 0.21942998254978271, 0.21942998254978271, 0.17133312415299037],
    [0.14161901592396453, 0.8390092597147936, 0.019371724361241904, 0.04063455979365954],
    [0.019371724361241904, 0.14161901592396453, 0.8390092597147936, 0.04063455979365954],
    [0.8390092597147936, 0.019371724361241904, 0.14161901592396453, 0.04063455979365954],
    [0.14161901592396453, 0.019371724361241904, 0.8390092597147936, 0.04063455979365954],
    [0.019371724361241904, 0.8390092597147936, 0.14161901592396453, 0.04063455979365954],
    [0.8390092597147936, 0.14161901592396453, 0.019371724361241904, 0.04063455979365954],
];

const RULE8: [[f64; 4]; 16] = [
    [0.3333333333333333, 0.3333333333333333, 0.3333333333333333, 0.14431560767776783],
    [0.4592925882927119, 0.4592925882927119, 0.08141482341457618, 0.09509163426729586],
    [0.4592925882927119, 0.08141482341457618, 0.4592925882927119, 0.09509163426729586],
    [0.08141482341457618, 0.4592925882927119, 0.4592925882927119, 0.09509163426729586],
    [0.05054722831703219, 0.05054722831703219, 0.8989055433659356, 0.03245849762320051],
    [0.05054722831703219, 0.8989055433659356, 0.05054722831703219, 0.03245849762320051],
    [0.8989055433659356, 0.05054722831703219, 0.05054722831703219, 0.03245849762320051],
    [0.1705693077517468, 0.1705693077517468, 0.6588613844965063, 0.1032173705347271],
    [0.1705693077517468, 0.6588613844965063, 0.1705693077517468, 0.1032173705347271],
    [0.6588613844965063, 0.1705693077517468, 0.1705693077517468, 0.1032173705347271],
    [0.2631128296346824, 0.008394777409932996, 0.7284923929553846, 0.02723031417442697],
    [0.7284923929553846, 0.008394777409932996, 0.2631128296346824, 0.02723031417442697],
    [0.008394777409932996, 0.7284923929553846, 0.2631128296346824, 0.02723031417442697],
    [0.7284923929553846, 0.2631128296346824, 0.008394777409932996, 0.02723031417442697],
    [0.008394777409932996, 0.2631128296346824, 0.7284923929553846, 0.02723031417442697],
    [0.2631128296346824, 0.7284923929553846, 0.008394777409932996, 0.02723031417442697],
];

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    /// Exact ∫ λ1^a λ2^b over a triangle of unit area: 2 a! b! / (a + b + 2)!.
    fn moment(a: usize, b: usize) -> f64 {
        2.0 * factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    #[test]
    fn rules_are_exact() {
        for d in 0..=MAX_DEGREE {
            let r = quad_rule(d).unwrap();
            assert!(r.degree >= d);
            assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for a in 0..=d {
                for b in 0..=d - a {
                    let q: f64 = r
                        .points
                        .iter()
                        .zip(&r.weights)
                        .map(|(p, w)| w * p[1].powi(a as i32) * p[2].powi(b as i32))
                        .sum();
                    assert!((q - moment(a, b)).abs() < 1e-13, "degree {d}: moment ({a},{b})");
                }
            }
        }
    }

    #[test]
    fn points_lie_inside() {
        for d in [2, 4, 5, 6, 8, 10, 12] {
            for p in &quad_rule(d).unwrap().points {
                assert!(p.iter().all(|&x| x > 0.0));
            }
        }
    }

    #[test]
    fn too_high_degree_rejected() {
        assert!(quad_rule(13).is_err());
    }
}

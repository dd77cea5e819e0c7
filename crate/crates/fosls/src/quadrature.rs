//! Gauss quadrature on the reference interval and reference triangle.
//!
//! Interval rules are Gauss-Legendre on [0, 1]. Triangle rules are conical
//! product rules on the reference simplex {x, y >= 0, x + y <= 1}: a
//! Gauss-Legendre rule in the collapsed coordinate and a Gauss-Jacobi(1, 0)
//! rule absorbing the Duffy Jacobian. All weights are positive and a rule
//! requested for degree d integrates every polynomial of total degree <= d
//! exactly.

use crate::{FoslsError, Result};
use nalgebra::DMatrix;

/// Quadrature rule with points in reference coordinates.
///
/// For interval rules `points[i] = [t, 0]` with t in [0, 1]; for triangle
/// rules `points[i]` is a point of the reference simplex.
#[derive(Debug, Clone)]
pub struct QuadRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    /// Guaranteed polynomial exactness degree.
    pub degree: usize,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub const MAX_DEGREE: usize = 40;

/// Evaluate the Jacobi polynomial P_n^(a,b) and its derivative at x in [-1, 1].
pub fn jacobi(n: usize, a: f64, b: f64, x: f64) -> (f64, f64) {
    // derivative via d/dx P_n^(a,b) = (n+a+b+1)/2 * P_{n-1}^(a+1,b+1)
    let value = jacobi_value(n, a, b, x);
    let deriv = if n == 0 {
        0.0
    } else {
        0.5 * (n as f64 + a + b + 1.0) * jacobi_value(n - 1, a + 1.0, b + 1.0, x)
    };
    (value, deriv)
}

fn jacobi_value(n: usize, a: f64, b: f64, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut pm1 = 1.0;
    let mut p = (a + 1.0) + (a + b + 2.0) * (x - 1.0) / 2.0;
    for k in 2..=n {
        let k = k as f64;
        let c = 2.0 * k + a + b;
        let a1 = 2.0 * k * (k + a + b) * (c - 2.0);
        let a2 = (c - 1.0) * (a * a - b * b);
        let a3 = (c - 2.0) * (c - 1.0) * c;
        let a4 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * c;
        let next = ((a2 + a3 * x) * p - a4 * pm1) / a1;
        pm1 = p;
        p = next;
    }
    p
}

/// Legendre polynomial P_n and derivative at x in [-1, 1].
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    jacobi(n, 0.0, 0.0, x)
}

/// Gauss nodes/weights on [-1, 1] for the weight (1-x)^a (1+x)^b, by the
/// Golub-Welsch eigenvalue method on the Jacobi recurrence matrix.
fn gauss_jacobi(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    // total mass of the weight: 2^(a+b+1) * B(a+1, b+1)
    let mu0 = 2f64.powf(a + b + 1.0) * beta(a + 1.0, b + 1.0);
    if n == 1 {
        return (vec![(b - a) / (a + b + 2.0)], vec![mu0]);
    }
    let mut m = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let diag = if k == 0 {
            (b - a) / (a + b + 2.0)
        } else {
            let s = 2.0 * kf + a + b;
            (b * b - a * a) / (s * (s + 2.0))
        };
        m[(k, k)] = diag;
    }
    for k in 1..n {
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        let num = 4.0 * kf * (kf + a) * (kf + b) * (kf + a + b);
        let den = s * s * (s + 1.0) * (s - 1.0);
        let off = (num / den).sqrt();
        m[(k, k - 1)] = off;
        m[(k - 1, k)] = off;
    }
    let eig = m.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    pairs.into_iter().unzip()
}

fn beta(p: f64, q: f64) -> f64 {
    // only needed for small non-negative integer-ish arguments
    gamma_int(p) * gamma_int(q) / gamma_int(p + q)
}

fn gamma_int(x: f64) -> f64 {
    // Gamma at positive integers (the weights used here are polynomial)
    let n = x.round() as usize;
    assert!((x - n as f64).abs() < 1e-12 && n >= 1, "integer Gamma only");
    (1..n).map(|k| k as f64).product()
}

fn points_for_degree(d: usize) -> usize {
    d / 2 + 1
}

/// Gauss-Legendre rule on [0, 1] with exactness degree >= d.
pub fn edge_rule(d: usize) -> Result<QuadRule> {
    if d == 0 || d > MAX_DEGREE {
        return Err(FoslsError::UnsupportedQuadDegree(d));
    }
    let n = points_for_degree(d);
    let (x, w) = gauss_jacobi(n, 0.0, 0.0);
    let points = x.iter().map(|&xi| [(xi + 1.0) / 2.0, 0.0]).collect();
    let weights = w.iter().map(|&wi| wi / 2.0).collect();
    Ok(QuadRule {
        points,
        weights,
        degree: 2 * n - 1,
    })
}

/// Conical Gauss rule on the reference triangle with exactness degree >= d.
pub fn triangle_rule(d: usize) -> Result<QuadRule> {
    if d == 0 || d > MAX_DEGREE {
        return Err(FoslsError::UnsupportedQuadDegree(d));
    }
    let n = points_for_degree(d);
    let (xa, wa) = gauss_jacobi(n, 0.0, 0.0); // direction along the base
    let (xb, wb) = gauss_jacobi(n, 1.0, 0.0); // collapsed direction, weight (1-x)
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for j in 0..n {
        let b = (xb[j] + 1.0) / 2.0;
        for i in 0..n {
            let a = (xa[i] + 1.0) / 2.0;
            points.push([a * (1.0 - b), b]);
            // interval maps contribute 1/2 each, the Duffy Jacobian (1-b)
            // contributes another 1/2 through the Jacobi weight scaling
            weights.push(wa[i] * wb[j] / 8.0);
        }
    }
    Ok(QuadRule {
        points,
        weights,
        degree: 2 * n - 1,
    })
}

/// Exact moment of x^a y^b over the reference triangle: a! b! / (a+b+2)!.
pub fn triangle_monomial_moment(a: usize, b: usize) -> f64 {
    // b!/( (a+1)...(a+b) ) = a! b! / (a+b)!, computed as a stable product
    let mut val = 1.0;
    for k in 1..=b {
        val *= k as f64 / (a + k) as f64;
    }
    val / ((a + b + 1) as f64 * (a + b + 2) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn integrate(rule: &QuadRule, f: impl Fn(f64, f64) -> f64) -> f64 {
        rule.points
            .iter()
            .zip(&rule.weights)
            .map(|(p, w)| w * f(p[0], p[1]))
            .sum()
    }

    #[test]
    fn moment_formula_matches_hand_values() {
        assert!((triangle_monomial_moment(0, 0) - 0.5).abs() < 1e-15);
        assert!((triangle_monomial_moment(1, 0) - 1.0 / 6.0).abs() < 1e-15);
        assert!((triangle_monomial_moment(1, 1) - 1.0 / 24.0).abs() < 1e-16);
        assert!((triangle_monomial_moment(2, 0) - 1.0 / 12.0).abs() < 1e-16);
    }

    #[test]
    fn degree_one_rule_is_midpoint_type() {
        let rule = triangle_rule(1).unwrap();
        assert_eq!(rule.len(), 1);
        let val = integrate(&rule, |x, y| x + y);
        assert!((val - 1.0 / 3.0).abs() < 1e-15);
        assert!((rule.points[0][0] - 1.0 / 3.0).abs() < 1e-14);
        assert!((rule.points[0][1] - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn edge_rule_degree_five_is_three_point_gauss() {
        let rule = edge_rule(5).unwrap();
        assert_eq!(rule.len(), 3);
        let wsum: f64 = rule.weights.iter().sum();
        assert!((wsum - 1.0).abs() < 1e-14);
        // exact for t^5
        let val = integrate(&rule, |t, _| t.powi(5));
        assert!((val - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn triangle_degree_twenty_high_moment() {
        let rule = triangle_rule(20).unwrap();
        let val = integrate(&rule, |x, y| x.powi(8) * y.powi(8));
        let exact = triangle_monomial_moment(8, 8);
        assert!(
            (val - exact).abs() < 1e-13 * exact.max(1.0),
            "got {val:e}, want {exact:e}"
        );
    }

    #[test]
    fn all_moments_exact_up_to_degree() {
        for d in [1, 2, 3, 5, 8, 13, 20, 31, 40] {
            let rule = triangle_rule(d).unwrap();
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            let wsum: f64 = rule.weights.iter().sum();
            assert!((wsum - 0.5).abs() < 1e-13, "degree {d}: weight sum {wsum}");
            for a in 0..=d {
                for b in 0..=(d - a) {
                    let val = integrate(&rule, |x, y| x.powi(a as i32) * y.powi(b as i32));
                    let exact = triangle_monomial_moment(a, b);
                    assert!(
                        (val - exact).abs() < 1e-13,
                        "degree {d}, moment ({a},{b}): {val:e} vs {exact:e}"
                    );
                }
            }
        }
    }

    #[test]
    fn interval_moments_exact_up_to_degree() {
        for d in [1, 4, 9, 17, 40] {
            let rule = edge_rule(d).unwrap();
            for k in 0..=d {
                let val = integrate(&rule, |t, _| t.powi(k as i32));
                let exact = 1.0 / (k as f64 + 1.0);
                assert!(
                    (val - exact).abs() < 1e-13,
                    "degree {d}, t^{k}: {val} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn rejects_out_of_range_degrees() {
        assert!(triangle_rule(0).is_err());
        assert!(triangle_rule(41).is_err());
        assert!(edge_rule(41).is_err());
    }

    #[test]
    fn legendre_recurrence_matches_closed_forms() {
        for &x in &[-0.9, -0.3, 0.0, 0.4, 1.0] {
            let (p2, d2) = legendre(2, x);
            assert!((p2 - (1.5 * x * x - 0.5)).abs() < 1e-14);
            assert!((d2 - 3.0 * x).abs() < 1e-14);
            let (p3, d3) = legendre(3, x);
            assert!((p3 - (2.5 * x.powi(3) - 1.5 * x)).abs() < 1e-14);
            assert!((d3 - (7.5 * x * x - 1.5)).abs() < 1e-13);
        }
    }

    proptest! {
        #[test]
        fn random_monomials_integrate_exactly(a in 0usize..10, b in 0usize..10) {
            let d = (a + b).max(1);
            let rule = triangle_rule(d).unwrap();
            let val = integrate(&rule, |x, y| x.powi(a as i32) * y.powi(b as i32));
            let exact = triangle_monomial_moment(a, b);
            prop_assert!((val - exact).abs() < 1e-13);
        }
    }
}

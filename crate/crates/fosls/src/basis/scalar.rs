//! Hierarchic H¹-conforming scalar basis on the reference triangle.
//!
//! Function groups, in local order:
//!   * vertex functions: the barycentric coordinates λ0, λ1, λ2;
//!   * edge functions, per local edge (a, b) and mode k = 0..p-2:
//!     λ_a λ_b J_k^(2,2)(λ_b - λ_a);
//!   * interior functions: λ0 λ1 λ2 J_i^(2,2)(λ1 - λ0) J_j^(2,2)(2 λ2 - 1)
//!     for i + j <= p - 3.
//!
//! Edge kernels are symmetric Jacobi polynomials, so reversing the edge
//! direction flips the sign of odd modes only; global conformity is handled
//! by a per-mode orientation sign in the DOF map.

use crate::mesh::{ReferenceTriangle, EDGE_VERTS};
use crate::quadrature::jacobi;
use crate::Vec2;

#[derive(Debug, Clone)]
pub struct ScalarBasis {
    pub degree: usize,
}

impl ScalarBasis {
    pub fn new(degree: usize) -> Self {
        assert!(degree >= 1, "scalar degree must be >= 1");
        ScalarBasis { degree }
    }

    /// Total number of shape functions: (p+1)(p+2)/2.
    pub fn len(&self) -> usize {
        (self.degree + 1) * (self.degree + 2) / 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Edge modes per edge.
    pub fn edge_modes(&self) -> usize {
        self.degree - 1
    }

    /// Interior (bubble) functions.
    pub fn interior_modes(&self) -> usize {
        if self.degree < 3 {
            0
        } else {
            (self.degree - 1) * (self.degree - 2) / 2
        }
    }

    /// Values and reference gradients of all shape functions at one point.
    pub fn eval(&self, p: Vec2) -> (Vec<f64>, Vec<Vec2>) {
        let lam = ReferenceTriangle::barycentric(p);
        let dlam = ReferenceTriangle::barycentric_gradients();
        let n = self.len();
        let mut values = Vec::with_capacity(n);
        let mut grads = Vec::with_capacity(n);

        for i in 0..3 {
            values.push(lam[i]);
            grads.push(dlam[i]);
        }

        for edge in 0..3 {
            let a = EDGE_VERTS[edge][0];
            let b = EDGE_VERTS[edge][1];
            let s = lam[b] - lam[a];
            let ds = dlam[b] - dlam[a];
            for k in 0..self.edge_modes() {
                let (jk, djk) = jacobi(k, 2.0, 2.0, s);
                values.push(lam[a] * lam[b] * jk);
                grads.push(
                    (dlam[a] * lam[b] + dlam[b] * lam[a]) * jk + ds * (lam[a] * lam[b] * djk),
                );
            }
        }

        if self.degree >= 3 {
            let bub = lam[0] * lam[1] * lam[2];
            let dbub =
                dlam[0] * (lam[1] * lam[2]) + dlam[1] * (lam[0] * lam[2]) + dlam[2] * (lam[0] * lam[1]);
            let s1 = lam[1] - lam[0];
            let ds1 = dlam[1] - dlam[0];
            let s2 = 2.0 * lam[2] - 1.0;
            let ds2 = dlam[2] * 2.0;
            for total in 0..=(self.degree - 3) {
                for i in 0..=total {
                    let j = total - i;
                    let (ji, dji) = jacobi(i, 2.0, 2.0, s1);
                    let (jj, djj) = jacobi(j, 2.0, 2.0, s2);
                    values.push(bub * ji * jj);
                    grads.push(
                        dbub * (ji * jj)
                            + ds1 * (bub * dji * jj)
                            + ds2 * (bub * ji * djj),
                    );
                }
            }
        }

        debug_assert_eq!(values.len(), n);
        (values, grads)
    }

    /// Tabulated values/gradients at a list of points, indexed [fn][point].
    pub fn tabulate(&self, points: &[[f64; 2]]) -> (Vec<Vec<f64>>, Vec<Vec<Vec2>>) {
        let n = self.len();
        let mut values = vec![Vec::with_capacity(points.len()); n];
        let mut grads = vec![Vec::with_capacity(points.len()); n];
        for p in points {
            let (v, g) = self.eval(Vec2::new(p[0], p[1]));
            for i in 0..n {
                values[i].push(v[i]);
                grads[i].push(g[i]);
            }
        }
        (values, grads)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::triangle_rule;
    use nalgebra::DMatrix;

    #[test]
    fn linear_basis_is_barycentric() {
        let basis = ScalarBasis::new(1);
        assert_eq!(basis.len(), 3);
        let (v, _) = basis.eval(Vec2::new(1.0 / 3.0, 1.0 / 3.0));
        for val in v {
            assert!((val - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn vertex_functions_form_partition_of_unity() {
        for p in 1..=6 {
            let basis = ScalarBasis::new(p);
            let (v, _) = basis.eval(Vec2::new(0.23, 0.41));
            let sum: f64 = v[..3].iter().sum();
            assert!((sum - 1.0).abs() < 1e-14, "degree {p}");
        }
    }

    #[test]
    fn cubic_basis_spans_p3() {
        // Vandermonde of the 10 functions against 10 generic points must be
        // nonsingular, i.e. the basis spans exactly P_3
        let basis = ScalarBasis::new(3);
        assert_eq!(basis.len(), 10);
        // principal lattice of degree 3, pulled slightly inward
        let mut pts = Vec::new();
        for i in 0..=3 {
            for j in 0..=(3 - i) {
                let p = Vec2::new(i as f64 / 3.0, j as f64 / 3.0);
                pts.push(p * 0.94 + Vec2::new(0.01, 0.01));
            }
        }
        let mut m = DMatrix::<f64>::zeros(10, 10);
        for (c, p) in pts.iter().enumerate() {
            let (v, _) = basis.eval(*p);
            for r in 0..10 {
                m[(r, c)] = v[r];
            }
        }
        let svd = m.svd(false, false);
        let smin = svd.singular_values.iter().cloned().fold(f64::MAX, f64::min);
        assert!(smin > 1e-8, "Vandermonde nearly singular: {smin:e}");
    }

    #[test]
    fn gradients_match_finite_differences() {
        let basis = ScalarBasis::new(4);
        let p = Vec2::new(0.31, 0.37);
        let h = 1e-6;
        let (_, grads) = basis.eval(p);
        for dim in 0..2 {
            let mut dp = Vec2::zeros();
            dp[dim] = h;
            let (vp, _) = basis.eval(p + dp);
            let (vm, _) = basis.eval(p - dp);
            for i in 0..basis.len() {
                let fd = (vp[i] - vm[i]) / (2.0 * h);
                assert!((fd - grads[i][dim]).abs() < 1e-8, "fn {i} dim {dim}");
            }
        }
    }

    #[test]
    fn mass_condition_grows_algebraically() {
        // engineering regression bound for the p-version solver
        let mut conds = Vec::new();
        for p in 1..=10 {
            let basis = ScalarBasis::new(p);
            let rule = triangle_rule(2 * p + 2).unwrap();
            let n = basis.len();
            let (vals, _) = basis.tabulate(&rule.points);
            let mut m = DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] = rule
                        .weights
                        .iter()
                        .enumerate()
                        .map(|(q, w)| w * vals[i][q] * vals[j][q])
                        .sum();
                }
            }
            let svd = m.svd(false, false);
            let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
            let smin = svd.singular_values.iter().cloned().fold(f64::MAX, f64::min);
            conds.push(smax / smin);
        }
        assert!(conds[9] < 1e9, "cond at p=10: {:e}", conds[9]);
        // algebraic growth: log-log slope against p stays modest
        let slope = ((conds[9] / conds[2]).ln()) / ((10f64 / 3.0).ln());
        assert!(slope < 12.0, "condition growth exponent {slope}");
    }
}

//! Radial exact solution of the step-load disk problem.
//!
//! The problem -Δu + γu = 1_{[0,1/2]}(r) on the unit disk with ∂_n u = 0
//! on the boundary is radially symmetric: -u'' - u'/r + γu = f(r) with
//! u'(0) = 0 and u'(1) = 0. With s = √γ the solution is
//!
//!   u(r) = 1/γ + c₁ I₀(s r)            for r ≤ 1/2,
//!   u(r) = c₂ I₀(s r) + c₃ K₀(s r)     for r > 1/2,
//!
//! with the three constants fixed by continuity of u and u' at r = 1/2 and
//! by u'(1) = 0. The second derivative of u jumps by the load jump across
//! r = 1/2, so u has exactly two and a half weak derivatives.

use super::bessel::{bessel_i0, bessel_i1, bessel_k0, bessel_k1};
use super::ExactSolution;
use crate::Vec2;
use nalgebra::{Matrix3, Vector3};
use std::sync::Arc;

pub const JUMP_RADIUS: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct RadialSolution {
    pub gamma: f64,
    /// Coefficient of I₀ inside the loaded disk.
    pub c_inner: f64,
    /// Coefficients of I₀ and K₀ in the annulus.
    pub c_outer_i: f64,
    pub c_outer_k: f64,
}

/// Solve for the three constants of the radial solution.
pub fn radial_exact(gamma: f64) -> RadialSolution {
    assert!(gamma > 0.0);
    let s = gamma.sqrt();
    let a = JUMP_RADIUS;
    // unknowns (c1, c2, c3):
    //   1/γ + c1 I0(sa) = c2 I0(sa) + c3 K0(sa)
    //   c1 s I1(sa)     = c2 s I1(sa) - c3 s K1(sa)
    //   0               = c2 s I1(s)  - c3 s K1(s)
    let m = Matrix3::new(
        bessel_i0(s * a),
        -bessel_i0(s * a),
        -bessel_k0(s * a),
        bessel_i1(s * a),
        -bessel_i1(s * a),
        bessel_k1(s * a),
        0.0,
        bessel_i1(s),
        -bessel_k1(s),
    );
    let rhs = Vector3::new(-1.0 / gamma, 0.0, 0.0);
    let c = m.lu().solve(&rhs).expect("radial constants solvable");
    RadialSolution {
        gamma,
        c_inner: c[0],
        c_outer_i: c[1],
        c_outer_k: c[2],
    }
}

impl RadialSolution {
    pub fn u(&self, r: f64) -> f64 {
        let s = self.gamma.sqrt();
        if r <= JUMP_RADIUS {
            1.0 / self.gamma + self.c_inner * bessel_i0(s * r)
        } else {
            self.c_outer_i * bessel_i0(s * r) + self.c_outer_k * bessel_k0(s * r)
        }
    }

    pub fn du(&self, r: f64) -> f64 {
        let s = self.gamma.sqrt();
        if r <= JUMP_RADIUS {
            self.c_inner * s * bessel_i1(s * r)
        } else {
            self.c_outer_i * s * bessel_i1(s * r) - self.c_outer_k * s * bessel_k1(s * r)
        }
    }

    /// Second radial derivative, one-sided at the interface
    /// (`inner_side` selects the branch at r = 1/2).
    pub fn d2u(&self, r: f64, inner_side: bool) -> f64 {
        let s = self.gamma.sqrt();
        let z = s * r;
        // I1'(z) = I0(z) - I1(z)/z,  K1'(z) = -K0(z) - K1(z)/z
        if r <= JUMP_RADIUS && (r < JUMP_RADIUS || inner_side) {
            self.c_inner * s * s * (bessel_i0(z) - bessel_i1(z) / z)
        } else {
            self.c_outer_i * s * s * (bessel_i0(z) - bessel_i1(z) / z)
                - self.c_outer_k * s * s * (-bessel_k0(z) - bessel_k1(z) / z)
        }
    }

    pub fn load(&self, r: f64) -> f64 {
        if r <= JUMP_RADIUS {
            1.0
        } else {
            0.0
        }
    }

    /// Wrap the radial form as a 2D exact solution with Robin datum
    /// g = α u(1) (constant, since ∂_n u = 0 on the boundary).
    pub fn as_exact_solution(&self, alpha: f64) -> ExactSolution {
        let gamma = self.gamma;
        let me = self.clone();
        let u: Arc<dyn Fn(Vec2) -> f64 + Send + Sync> = {
            let me = me.clone();
            Arc::new(move |p: Vec2| me.u(p.norm()))
        };
        let grad_u: Arc<dyn Fn(Vec2) -> Vec2 + Send + Sync> = {
            let me = me.clone();
            Arc::new(move |p: Vec2| {
                let r = p.norm();
                if r < 1e-12 {
                    // u'(r)/r -> u''(0) = c1 γ / 2
                    return p * (me.c_inner * me.gamma / 2.0);
                }
                p * (me.du(r) / r)
            })
        };
        // -Δu = f - γu exactly, by the equation itself
        let laplace_u: Arc<dyn Fn(Vec2) -> f64 + Send + Sync> = {
            let me = me.clone();
            Arc::new(move |p: Vec2| {
                let r = p.norm();
                gamma * me.u(r) - me.load(r)
            })
        };
        let mut exact = ExactSolution::from_scalar_parts(u, grad_u, laplace_u, gamma, alpha);
        exact.problem.jump_radius = Some(JUMP_RADIUS);
        exact
    }
}

/// Independent validation oracle: fourth-order finite differences for the
/// radial two-point problem on n+1 equispaced nodes in [0, 1].
///
/// Five-point stencils in the interior, even reflection at both ends
/// (u'(0) = u'(1) = 0), the r = 0 equation replaced by its regular limit
/// -2u''(0) + γ u(0) = f(0), and the midpoint convention f(1/2) = 1/2 at
/// the interface node.
pub fn fd_radial_solve(gamma: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 8 && n % 2 == 0, "need an even interval count");
    let h = 1.0 / n as f64;
    let nn = n + 1;
    let mut band = BandedMatrix::new(nn, 2, 2);
    let mut rhs = vec![0.0; nn];
    let f = |r: f64| -> f64 {
        if (r - JUMP_RADIUS).abs() < 0.25 * h {
            0.5
        } else if r < JUMP_RADIUS {
            1.0
        } else {
            0.0
        }
    };
    let h2 = 12.0 * h * h;
    let h1 = 12.0 * h;
    // ghost reflection: u_{-k} = u_k and u_{n+k} = u_{n-k}
    let fold = |i: i64| -> usize {
        let n = n as i64;
        let j = if i < 0 { -i } else if i > n { 2 * n - i } else { i };
        j as usize
    };
    for i in 0..nn {
        let r = i as f64 * h;
        rhs[i] = f(r);
        if i == 0 {
            // -2 u''(0) + γ u(0) = f(0)
            let c2 = [-1.0, 16.0, -30.0, 16.0, -1.0];
            for (k, &c) in c2.iter().enumerate() {
                let j = fold(i as i64 + k as i64 - 2);
                band.add(i, j, -2.0 * c / h2);
            }
            band.add(i, i, gamma);
        } else {
            let c2 = [-1.0, 16.0, -30.0, 16.0, -1.0];
            let c1 = [1.0, -8.0, 0.0, 8.0, -1.0];
            for k in 0..5 {
                let j = fold(i as i64 + k as i64 - 2);
                band.add(i, j, -c2[k] / h2 - c1[k] / (h1 * r));
            }
            band.add(i, i, gamma);
        }
    }
    let u = band.solve(&rhs);
    let r: Vec<f64> = (0..nn).map(|i| i as f64 * h).collect();
    (r, u)
}

/// Banded matrix with partial-pivoting LU, LAPACK-style band storage.
struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    /// rows 0..(2kl+ku) store the band: entry (i, j) lives at
    /// ab[kl + ku + i - j][j]
    ab: Vec<Vec<f64>>,
}

impl BandedMatrix {
    fn new(n: usize, kl: usize, ku: usize) -> Self {
        BandedMatrix {
            n,
            kl,
            ku,
            ab: vec![vec![0.0; n]; 2 * kl + ku + 1],
        }
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        let row = self.kl + self.ku + i - j;
        self.ab[row][j] += v;
    }

    /// Logical entry (i, j); valid while |i - j| stays within the widened
    /// band kl + ku used for pivot fill-in.
    fn at(&mut self, i: usize, j: usize) -> &mut f64 {
        let row = self.kl + self.ku + i - j;
        &mut self.ab[row][j]
    }

    fn solve(mut self, b: &[f64]) -> Vec<f64> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let kv = kl + ku;
        let mut x = b.to_vec();
        for col in 0..n {
            // partial pivot within the column band
            let rows = (kl + 1).min(n - col);
            let mut pmax = 0;
            let mut vmax = self.at(col, col).abs();
            for r in 1..rows {
                let v = self.at(col + r, col).abs();
                if v > vmax {
                    vmax = v;
                    pmax = r;
                }
            }
            assert!(vmax > 0.0, "banded matrix is singular at column {col}");
            if pmax != 0 {
                for j in col..(col + kv + 1).min(n) {
                    let a = *self.at(col, j);
                    let b2 = *self.at(col + pmax, j);
                    *self.at(col, j) = b2;
                    *self.at(col + pmax, j) = a;
                }
                x.swap(col, col + pmax);
            }
            let piv = *self.at(col, col);
            for r in 1..rows {
                let m = *self.at(col + r, col) / piv;
                for j in (col + 1)..(col + kv + 1).min(n) {
                    let upper = *self.at(col, j);
                    *self.at(col + r, j) -= m * upper;
                }
                x[col + r] -= m * x[col];
            }
        }
        for col in (0..n).rev() {
            let mut s = x[col];
            for j in (col + 1)..(col + kv + 1).min(n) {
                s -= *self.at(col, j) * x[j];
            }
            x[col] = s / *self.at(col, col);
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_satisfy_matching_conditions() {
        let sol = radial_exact(2.0);
        let a = JUMP_RADIUS;
        let s = 2f64.sqrt();
        let inner_u = 0.5 + sol.c_inner * bessel_i0(s * a);
        let outer_u = sol.c_outer_i * bessel_i0(s * a) + sol.c_outer_k * bessel_k0(s * a);
        assert!((inner_u - outer_u).abs() < 1e-12);
        let inner_du = sol.c_inner * s * bessel_i1(s * a);
        let outer_du = sol.c_outer_i * s * bessel_i1(s * a) - sol.c_outer_k * s * bessel_k1(s * a);
        assert!((inner_du - outer_du).abs() < 1e-12);
        assert!(sol.du(1.0).abs() < 1e-12, "u'(1) = {}", sol.du(1.0));
        assert!(sol.du(1e-14).abs() < 1e-12, "u'(0) must vanish");
    }

    #[test]
    fn ode_residual_away_from_interface() {
        let sol = radial_exact(2.0);
        for k in 0..200 {
            let r = 0.002 + 0.996 * k as f64 / 199.0;
            if (r - JUMP_RADIUS).abs() < 5e-3 {
                continue;
            }
            let resid =
                -sol.d2u(r, r < JUMP_RADIUS) - sol.du(r) / r + sol.gamma * sol.u(r) - sol.load(r);
            assert!(resid.abs() < 1e-9, "r = {r}: residual {resid}");
        }
    }

    #[test]
    fn second_derivative_jump_equals_load_jump() {
        let sol = radial_exact(2.0);
        let jump = sol.d2u(JUMP_RADIUS, false) - sol.d2u(JUMP_RADIUS, true);
        assert!((jump - 1.0).abs() < 1e-8, "u'' jump = {jump}");
    }

    #[test]
    fn finite_difference_oracle_agrees() {
        let sol = radial_exact(2.0);
        let (r, u) = fd_radial_solve(2.0, 100_000);
        for target in [0.0, 0.25, 0.75, 1.0] {
            let i = (target / (r[1] - r[0])).round() as usize;
            assert!(
                (u[i] - sol.u(r[i])).abs() < 1e-7,
                "r = {}: fd {} vs exact {}",
                r[i],
                u[i],
                sol.u(r[i])
            );
        }
    }

    #[test]
    fn exact_solution_wrapper_is_consistent() {
        let sol = radial_exact(2.0);
        let exact = sol.as_exact_solution(1.0);
        // g is the constant u(1) for α = 1
        let gval = (exact.problem.g)(Vec2::new(1.0, 0.0), Vec2::new(1.0, 0.0));
        assert!((gval - sol.u(1.0)).abs() < 1e-14);
        // gradient matches the radial derivative
        let p = Vec2::new(0.3, 0.21);
        let g = (exact.grad_u)(p);
        let want = p * (sol.du(p.norm()) / p.norm());
        assert!((g - want).norm() < 1e-13);
        // f reproduces the step
        assert_eq!((exact.problem.f)(Vec2::new(0.1, 0.1)), 1.0);
        assert_eq!((exact.problem.f)(Vec2::new(0.9, 0.0)), 0.0);
    }
}

//! Exact solutions for verification: manufactured smooth cases and the
//! radial solution of the step-load disk problem, with an independent
//! 1D finite-difference solver backing the closed Bessel form.

pub mod bessel;
mod radial;

pub use radial::{fd_radial_solve, radial_exact, RadialSolution};

use crate::assembly::RobinProblem;
use crate::{FoslsError, Result, Vec2};
use std::sync::Arc;

type ScalarFn = Arc<dyn Fn(Vec2) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(Vec2) -> Vec2 + Send + Sync>;

/// An exact solution pair (u, φ = -∇u) with all data of the first-order
/// system derived from it: f = ∇·φ + γu and g on Γ via ∂_n u + αu.
#[derive(Clone)]
pub struct ExactSolution {
    pub u: ScalarFn,
    pub grad_u: VectorFn,
    /// φ = -∇u
    pub phi: VectorFn,
    /// ∇·φ = -Δu
    pub div_phi: ScalarFn,
    pub problem: RobinProblem,
}

impl ExactSolution {
    pub(crate) fn from_scalar_parts(
        u: ScalarFn,
        grad_u: VectorFn,
        laplace_u: ScalarFn,
        gamma: f64,
        alpha: f64,
    ) -> ExactSolution {
        let phi: VectorFn = {
            let grad_u = grad_u.clone();
            Arc::new(move |p| -grad_u(p))
        };
        let div_phi: ScalarFn = {
            let laplace_u = laplace_u.clone();
            Arc::new(move |p| -laplace_u(p))
        };
        let f: ScalarFn = {
            let laplace_u = laplace_u.clone();
            let u = u.clone();
            Arc::new(move |p| -laplace_u(p) + gamma * u(p))
        };
        let g: Arc<dyn Fn(Vec2, Vec2) -> f64 + Send + Sync> = {
            let grad_u = grad_u.clone();
            let u = u.clone();
            Arc::new(move |p, n| grad_u(p).dot(&n) + alpha * u(p))
        };
        let problem = RobinProblem::new(gamma, alpha, f, g);
        ExactSolution {
            u,
            grad_u,
            phi,
            div_phi,
            problem,
        }
    }
}

/// Case identifiers accepted by [`manufactured`].
pub const CASES: [&str; 5] = [
    "const_one",
    "linear_x",
    "square_cos_cosh",
    "disk_smooth",
    "radial_step",
];

/// Build an exact solution with data (f, g) derived analytically.
///
/// Smooth cases: `const_one` (u ≡ 1), `linear_x` (u = x),
/// `square_cos_cosh` (u = cos(πx) cosh(y), for the unit square),
/// `disk_smooth` (u = eˣ(1 - x² - y²) + 1, for the unit disk).
/// `radial_step` is the step-load disk problem with zero Neumann trace.
pub fn manufactured(case: &str, gamma: f64, alpha: f64) -> Result<ExactSolution> {
    match case {
        "const_one" => Ok(ExactSolution::from_scalar_parts(
            Arc::new(|_| 1.0),
            Arc::new(|_| Vec2::zeros()),
            Arc::new(|_| 0.0),
            gamma,
            alpha,
        )),
        "linear_x" => Ok(ExactSolution::from_scalar_parts(
            Arc::new(|p| p.x),
            Arc::new(|_| Vec2::new(1.0, 0.0)),
            Arc::new(|_| 0.0),
            gamma,
            alpha,
        )),
        "square_cos_cosh" => {
            let pi = std::f64::consts::PI;
            Ok(ExactSolution::from_scalar_parts(
                Arc::new(move |p| (pi * p.x).cos() * p.y.cosh()),
                Arc::new(move |p| {
                    Vec2::new(
                        -pi * (pi * p.x).sin() * p.y.cosh(),
                        (pi * p.x).cos() * p.y.sinh(),
                    )
                }),
                // Δu = (1 - π²) u
                Arc::new(move |p| (1.0 - pi * pi) * (pi * p.x).cos() * p.y.cosh()),
                gamma,
                alpha,
            ))
        }
        "disk_smooth" => Ok(ExactSolution::from_scalar_parts(
            Arc::new(|p| p.x.exp() * (1.0 - p.norm_squared()) + 1.0),
            Arc::new(|p| {
                let e = p.x.exp();
                Vec2::new(e * (1.0 - p.norm_squared() - 2.0 * p.x), -2.0 * p.y * e)
            }),
            Arc::new(|p| {
                let e = p.x.exp();
                e * (1.0 - p.norm_squared() - 4.0 * p.x - 2.0) - 2.0 * e
            }),
            gamma,
            alpha,
        )),
        "radial_step" => {
            let radial = radial_exact(gamma);
            Ok(radial.as_exact_solution(alpha))
        }
        other => Err(FoslsError::UnknownCase(other.to_string())),
    }
}

/// Polynomial pair that lies exactly in the discrete product space for
/// p_s = p_v = p >= 2 on affine meshes; used by reproduction tests.
pub fn polynomial_case(gamma: f64, alpha: f64) -> ExactSolution {
    ExactSolution::from_scalar_parts(
        Arc::new(|p| p.x * p.x - 3.0 * p.x * p.y + p.y * p.y + p.x),
        Arc::new(|p| Vec2::new(2.0 * p.x - 3.0 * p.y + 1.0, -3.0 * p.x + 2.0 * p.y)),
        Arc::new(|_| 4.0),
        gamma,
        alpha,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn trivial_cases_give_expected_data() {
        let sol = manufactured("const_one", 2.0, 1.0).unwrap();
        assert_eq!((sol.problem.f)(Vec2::new(0.3, 0.4)), 2.0);
        assert_eq!((sol.problem.g)(Vec2::new(1.0, 0.0), Vec2::new(1.0, 0.0)), 1.0);
        assert_eq!((sol.phi)(Vec2::new(0.5, 0.5)), Vec2::zeros());

        let sol = manufactured("linear_x", 2.0, 1.0).unwrap();
        let p = Vec2::new(0.3, 0.7);
        assert!(((sol.problem.f)(p) - 2.0 * 0.3).abs() < 1e-15);
        let n = Vec2::new(1.0, 0.0);
        assert!(((sol.problem.g)(p, n) - (1.0 + 0.3)).abs() < 1e-15);
        assert_eq!((sol.phi)(p), Vec2::new(-1.0, 0.0));
    }

    #[test]
    fn unknown_case_is_an_error() {
        assert!(manufactured("nope", 1.0, 1.0).is_err());
    }

    #[test]
    fn cos_cosh_derivatives_match_finite_differences() {
        let sol = manufactured("square_cos_cosh", 2.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = 1e-6;
        for _ in 0..20 {
            let p = Vec2::new(rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95));
            let g = (sol.grad_u)(p);
            let fdx = ((sol.u)(p + Vec2::new(h, 0.0)) - (sol.u)(p - Vec2::new(h, 0.0))) / (2.0 * h);
            let fdy = ((sol.u)(p + Vec2::new(0.0, h)) - (sol.u)(p - Vec2::new(0.0, h))) / (2.0 * h);
            assert!((g.x - fdx).abs() < 1e-6 && (g.y - fdy).abs() < 1e-6);
            let lap = ((sol.u)(p + Vec2::new(h, 0.0))
                + (sol.u)(p - Vec2::new(h, 0.0))
                + (sol.u)(p + Vec2::new(0.0, h))
                + (sol.u)(p - Vec2::new(0.0, h))
                - 4.0 * (sol.u)(p))
                / (h * h);
            assert!((lap + (sol.div_phi)(p)).abs() < 2e-3, "Δu mismatch");
        }
    }

    #[test]
    fn disk_smooth_derivatives_match_finite_differences() {
        let sol = manufactured("disk_smooth", 2.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = 1e-6;
        for _ in 0..20 {
            let r = rng.gen_range(0.0..0.9);
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            let p = Vec2::new(r * th.cos(), r * th.sin());
            let g = (sol.grad_u)(p);
            let fdx = ((sol.u)(p + Vec2::new(h, 0.0)) - (sol.u)(p - Vec2::new(h, 0.0))) / (2.0 * h);
            let fdy = ((sol.u)(p + Vec2::new(0.0, h)) - (sol.u)(p - Vec2::new(0.0, h))) / (2.0 * h);
            assert!((g.x - fdx).abs() < 1e-6 && (g.y - fdy).abs() < 1e-6);
            let lap = ((sol.u)(p + Vec2::new(h, 0.0))
                + (sol.u)(p - Vec2::new(h, 0.0))
                + (sol.u)(p + Vec2::new(0.0, h))
                + (sol.u)(p - Vec2::new(0.0, h))
                - 4.0 * (sol.u)(p))
                / (h * h);
            assert!((lap + (sol.div_phi)(p)).abs() < 2e-3, "Δu mismatch");
        }
    }

    #[test]
    fn first_order_system_residuals_vanish_pointwise() {
        // ∇·φ + γu = f, ∇u + φ = 0, φ·n - αu = -g
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for case in ["square_cos_cosh", "disk_smooth"] {
            let sol = manufactured(case, 2.0, 1.0).unwrap();
            for _ in 0..30 {
                let p = Vec2::new(rng.gen_range(0.05..0.7), rng.gen_range(0.05..0.7));
                let r1 = (sol.div_phi)(p) + 2.0 * (sol.u)(p) - (sol.problem.f)(p);
                let r2 = ((sol.grad_u)(p) + (sol.phi)(p)).norm();
                assert!(r1.abs() < 1e-10 && r2 < 1e-10, "{case}: {r1} {r2}");
                let n = Vec2::new(0.6, 0.8);
                let r3 = (sol.phi)(p).dot(&n) - 1.0 * (sol.u)(p) + (sol.problem.g)(p, n);
                assert!(r3.abs() < 1e-10, "{case}: boundary residual {r3}");
            }
        }
    }
}

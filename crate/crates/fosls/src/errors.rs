//! Error norms of a discrete FOSLS pair against an exact solution.
//!
//! Tracked quantities: ‖e^u‖_{L²(Ω)}, ‖∇e^u‖_{L²(Ω)}, ‖e^φ‖_{L²(Ω)},
//! ‖∇·e^φ‖_{L²(Ω)}, ‖e^φ·n‖_{L²(Γ)}, and the residual norm induced by the
//! least-squares form (whose square is the sum of the three residual
//! terms). Quadrature runs two degrees above the assembly configuration,
//! with the same elevation on elements crossing a load discontinuity.

use crate::assembly::{straddles_radius, QuadConfig, ScalarSpace, VectorSpace};
use crate::mesh::{edge_geometry, Mesh, ReferenceTriangle};
use crate::oracle::ExactSolution;
use crate::quadrature::{edge_rule, triangle_rule};
use crate::assembly::FoslsSolution;
use crate::{Result, Vec2};

#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub err_u_l2: f64,
    pub err_grad_u: f64,
    pub err_phi_l2: f64,
    pub err_div_phi: f64,
    pub err_phi_n: f64,
    /// Residual norm of the pair in the least-squares form.
    pub err_b: f64,
    /// Squares of the three residual terms composing err_b².
    pub b_parts: [f64; 3],
    pub ndof: usize,
    pub h: f64,
    pub p_s: usize,
    pub p_v: usize,
}

/// Compute all tracked error norms by quadrature.
pub fn compute_errors(
    mesh: &Mesh,
    vspace: &VectorSpace,
    sspace: &ScalarSpace,
    sol: &FoslsSolution,
    exact: &ExactSolution,
    quad: &QuadConfig,
) -> Result<ErrorReport> {
    let equad = quad.raised(2);
    let gamma = exact.problem.gamma;
    let alpha = exact.problem.alpha;
    let jump = exact.problem.jump_radius;
    let nv = vspace.basis.len();
    let ns = sspace.basis.len();

    let mut u_l2 = 0.0;
    let mut grad_l2 = 0.0;
    let mut phi_l2 = 0.0;
    let mut div_l2 = 0.0;
    let mut b_vol_div = 0.0; // (div e_phi + γ e_u)²
    let mut b_vol_grad = 0.0; // |∇e_u + e_phi|²

    for (t, map) in mesh.maps.iter().enumerate() {
        let straddles = jump.map(|r| straddles_radius(map, r)).unwrap_or(false);
        let d = equad.element_degree(map, straddles);
        let rule = triangle_rule(d)?;
        let (s_vals, s_grads) = sspace.basis.tabulate(&rule.points);
        let (v_vals, v_divs) = vspace.basis.tabulate(&rule.points);
        let smap = &sspace.dofmap.elems[t];
        let vmap = &vspace.dofmap.elems[t];
        for (q, w) in rule.weights.iter().enumerate() {
            let p = Vec2::new(rule.points[q][0], rule.points[q][1]);
            let jac = map.jacobian(p);
            let det = jac.determinant();
            let jinv_t = jac.try_inverse().expect("invertible map").transpose();
            let x = map.position(p);
            let dv = w * det;

            let mut uh = 0.0;
            let mut guh = Vec2::zeros();
            for i in 0..ns {
                let c = smap[i].1 * sol.u[smap[i].0];
                uh += c * s_vals[i][q];
                guh += jinv_t * s_grads[i][q] * c;
            }
            let mut ph = Vec2::zeros();
            let mut dh = 0.0;
            for i in 0..nv {
                let c = vmap[i].1 * sol.phi[vmap[i].0];
                ph += jac * v_vals[i][q] * (c / det);
                dh += v_divs[i][q] * c / det;
            }

            let eu = (exact.u)(x) - uh;
            let egu = (exact.grad_u)(x) - guh;
            let ephi = (exact.phi)(x) - ph;
            let ediv = (exact.div_phi)(x) - dh;

            u_l2 += dv * eu * eu;
            grad_l2 += dv * egu.norm_squared();
            phi_l2 += dv * ephi.norm_squared();
            div_l2 += dv * ediv * ediv;
            b_vol_div += dv * (ediv + gamma * eu).powi(2);
            b_vol_grad += dv * (egu + ephi).norm_squared();
        }
    }

    let mut phi_n = 0.0;
    let mut b_bdry = 0.0; // (e_phi·n - α e_u)²
    let erule = edge_rule(equad.boundary_degree)?;
    for (t, map) in mesh.maps.iter().enumerate() {
        for (l, _) in mesh.boundary_edges_of(t) {
            let smap = &sspace.dofmap.elems[t];
            let vmap = &vspace.dofmap.elems[t];
            for (q, w) in erule.weights.iter().enumerate() {
                let tq = erule.points[q][0];
                let rp = ReferenceTriangle::edge_point(l, tq);
                let jac = map.jacobian(rp);
                let det = jac.determinant();
                let (x, normal, speed) = edge_geometry(map, l, tq);
                let ds = w * speed;
                let (sv, _) = sspace.basis.eval(rp);
                let (bv, _) = vspace.basis.eval(rp);
                let mut uh = 0.0;
                for i in 0..ns {
                    uh += smap[i].1 * sol.u[smap[i].0] * sv[i];
                }
                let mut phn = 0.0;
                for i in 0..nv {
                    phn += (jac * bv[i] / det).dot(&normal) * vmap[i].1 * sol.phi[vmap[i].0];
                }
                let eu = (exact.u)(x) - uh;
                let ephn = (exact.phi)(x).dot(&normal) - phn;
                phi_n += ds * ephn * ephn;
                b_bdry += ds * (ephn - alpha * eu).powi(2);
            }
        }
    }

    Ok(ErrorReport {
        err_u_l2: u_l2.sqrt(),
        err_grad_u: grad_l2.sqrt(),
        err_phi_l2: phi_l2.sqrt(),
        err_div_phi: div_l2.sqrt(),
        err_phi_n: phi_n.sqrt(),
        err_b: (b_vol_div + b_vol_grad + b_bdry).sqrt(),
        b_parts: [b_vol_div, b_vol_grad, b_bdry],
        ndof: vspace.n_dofs() + sspace.n_dofs(),
        h: mesh.h,
        p_s: sspace.basis.degree,
        p_v: vspace.basis.degree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble_fosls;
    use crate::basis::VectorFamily;
    use crate::mesh::make_square_mesh;
    use crate::oracle::{manufactured, polynomial_case};
    use crate::projector::{best_approx_scalar, best_approx_vector, AnalyticFlux, ApproxNorm};
    use crate::solve::{solve_spd, SolveOptions};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Coefficients of a polynomial exact pair inside the discrete space,
    /// via L² projection of both components.
    fn embed_exact(
        mesh: &crate::mesh::Mesh,
        vspace: &VectorSpace,
        sspace: &ScalarSpace,
        exact: &ExactSolution,
        quad: &QuadConfig,
    ) -> FoslsSolution {
        let opts = SolveOptions::default();
        let u = best_approx_scalar(mesh, sspace, &|x| (exact.u)(x), quad, &opts).unwrap();
        let phi_field = AnalyticFlux {
            value: exact.phi.clone(),
            div: exact.div_phi.clone(),
        };
        let phi =
            best_approx_vector(mesh, vspace, &phi_field, ApproxNorm::L2, quad, &opts).unwrap();
        FoslsSolution { phi, u }
    }

    #[test]
    fn fosls_reproduces_discrete_exact_pairs() {
        // quadratic pair lies in the space for p = 2: all norms vanish
        let mesh = make_square_mesh(2).unwrap();
        let vspace = VectorSpace::new(&mesh, VectorFamily::RaviartThomas, 2);
        let sspace = ScalarSpace::new(&mesh, 2);
        let exact = polynomial_case(2.0, 1.0);
        let quad = QuadConfig::for_degrees(2, 2);
        let (a, rhs) = assemble_fosls(&mesh, &vspace, &sspace, &exact.problem, &quad).unwrap();
        let x = solve_spd(&a, &rhs, &SolveOptions::default()).unwrap();
        let sol = FoslsSolution::from_block_vector(vspace.n_dofs(), &x);
        let report = compute_errors(&mesh, &vspace, &sspace, &sol, &exact, &quad).unwrap();
        assert!(report.err_u_l2 < 1e-10, "u error {}", report.err_u_l2);
        assert!(report.err_grad_u < 1e-10);
        assert!(report.err_phi_l2 < 1e-10);
        assert!(report.err_div_phi < 1e-10);
        assert!(report.err_phi_n < 1e-10);
        assert!(report.err_b < 1e-9);
    }

    #[test]
    fn constant_solution_interpolated_exactly() {
        let mesh = make_square_mesh(2).unwrap();
        let vspace = VectorSpace::new(&mesh, VectorFamily::RaviartThomas, 1);
        let sspace = ScalarSpace::new(&mesh, 1);
        let exact = manufactured("const_one", 2.0, 1.0).unwrap();
        let mut sol = FoslsSolution::zeros(&vspace, &sspace);
        for i in 0..mesh.n_vertices() {
            sol.u[i] = 1.0;
        }
        let quad = QuadConfig::for_degrees(1, 1);
        let report = compute_errors(&mesh, &vspace, &sspace, &sol, &exact, &quad).unwrap();
        assert!(report.err_u_l2 < 1e-14);
        assert!(report.err_phi_n < 1e-14);
    }

    #[test]
    fn b_norm_matches_matrix_quadratic_form_for_discrete_errors() {
        // with exact = a discrete member and solution = member + δ, the
        // residual norm of the error equals √(δᵀAδ)
        let mesh = make_square_mesh(2).unwrap();
        let vspace = VectorSpace::new(&mesh, VectorFamily::RaviartThomas, 2);
        let sspace = ScalarSpace::new(&mesh, 2);
        let exact = polynomial_case(2.0, 1.0);
        let quad = QuadConfig::for_degrees(2, 2);
        let (a, _) = assemble_fosls(&mesh, &vspace, &sspace, &exact.problem, &quad).unwrap();
        let embedded = embed_exact(&mesh, &vspace, &sspace, &exact, &quad);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let delta: Vec<f64> = (0..a.n).map(|_| rng.gen_range(-0.1..0.1)).collect();
        let mut perturbed = embedded.block_vector();
        for (p, d) in perturbed.iter_mut().zip(&delta) {
            *p += d;
        }
        let sol = FoslsSolution::from_block_vector(vspace.n_dofs(), &perturbed);
        let report = compute_errors(&mesh, &vspace, &sspace, &sol, &exact, &quad).unwrap();
        let via_matrix = a.quadratic_form(&delta).sqrt();
        assert!(
            (report.err_b - via_matrix).abs() < 1e-10 * via_matrix,
            "{} vs {}",
            report.err_b,
            via_matrix
        );
        // err_b² dominates each of its three parts
        let total = report.err_b * report.err_b;
        for part in report.b_parts {
            assert!(part <= total * (1.0 + 1e-12));
        }
    }

    #[test]
    fn errors_shrink_under_refinement() {
        let exact = manufactured("square_cos_cosh", 2.0, 1.0).unwrap();
        let quad = QuadConfig::for_degrees(1, 1);
        let mut prev: Option<ErrorReport> = None;
        for n in [2, 4, 8] {
            let mesh = make_square_mesh(n).unwrap();
            let vspace = VectorSpace::new(&mesh, VectorFamily::RaviartThomas, 1);
            let sspace = ScalarSpace::new(&mesh, 1);
            let (a, rhs) = assemble_fosls(&mesh, &vspace, &sspace, &exact.problem, &quad).unwrap();
            let x = solve_spd(&a, &rhs, &SolveOptions::default()).unwrap();
            let sol = FoslsSolution::from_block_vector(vspace.n_dofs(), &x);
            let report = compute_errors(&mesh, &vspace, &sspace, &sol, &exact, &quad).unwrap();
            if let Some(p) = &prev {
                // 5% slack for pre-asymptotic wiggle
                assert!(report.err_u_l2 <= 1.05 * p.err_u_l2);
                assert!(report.err_grad_u <= 1.05 * p.err_grad_u);
                assert!(report.err_phi_l2 <= 1.05 * p.err_phi_l2);
                assert!(report.err_phi_n <= 1.05 * p.err_phi_n);
                assert!(report.err_b <= 1.05 * p.err_b);
            }
            prev = Some(report);
        }
    }
}

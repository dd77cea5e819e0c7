//! Constrained flux projection and best-approximation solves.
//!
//! The projection minimizes the combined norm
//! (‖φ - φ_h‖²_{L²(Ω)} + ‖(φ - φ_h)·n‖²_{L²(Γ)})^{1/2} over the H(div)
//! space subject to the divergence-matching constraint
//! (∇·(φ - φ_h), ∇·χ_h)_Ω = 0 for all discrete χ_h. The multiplier lives
//! in the elementwise divergence image of the vector space (discontinuous
//! polynomials of degree p_v - 1 pulled back through 1/det J), which is
//! materialized with an L²-orthonormal basis per element so the saddle
//! solve is well posed.

use crate::assembly::{
    assemble_gram, FoslsSolution, GramKind, QuadConfig, ScalarSpace, VectorSpace,
};
use crate::mesh::{edge_geometry, Mesh, ReferenceTriangle};
use crate::quadrature::{edge_rule, triangle_rule};
use crate::solve::{solve_saddle, solve_spd, ConstraintMat, SolveOptions};
use crate::{Result, Vec2};
use nalgebra::DMatrix;
use std::sync::Arc;

/// A vector field whose moments can be computed by quadrature. The field
/// is queried per element at a reference point, with the matching physical
/// point supplied.
pub trait FluxField: Sync {
    fn eval(&self, element: usize, ref_p: Vec2, x: Vec2) -> (Vec2, f64);
}

/// Field given by closed-form value and divergence callables.
pub struct AnalyticFlux {
    pub value: Arc<dyn Fn(Vec2) -> Vec2 + Send + Sync>,
    pub div: Arc<dyn Fn(Vec2) -> f64 + Send + Sync>,
}

impl FluxField for AnalyticFlux {
    fn eval(&self, _element: usize, _ref_p: Vec2, x: Vec2) -> (Vec2, f64) {
        ((self.value)(x), (self.div)(x))
    }
}

/// Field spanned by coefficients of a discrete H(div) space.
pub struct DiscreteFlux<'a> {
    pub mesh: &'a Mesh,
    pub vspace: &'a VectorSpace,
    pub coeffs: &'a [f64],
}

impl FluxField for DiscreteFlux<'_> {
    fn eval(&self, element: usize, ref_p: Vec2, _x: Vec2) -> (Vec2, f64) {
        let map = &self.mesh.maps[element];
        let jac = map.jacobian(ref_p);
        let det = jac.determinant();
        let (vv, vd) = self.vspace.basis.eval(ref_p);
        let mut phi = Vec2::zeros();
        let mut div = 0.0;
        for (loc, &(g, sign)) in self.vspace.dofmap.elems[element].iter().enumerate() {
            let c = sign * self.coeffs[g];
            phi += jac * vv[loc] * (c / det);
            div += vd[loc] * c / det;
        }
        (phi, div)
    }
}

/// View of the φ-part of a FOSLS solution as a flux field.
pub struct SolutionFlux<'a> {
    pub mesh: &'a Mesh,
    pub vspace: &'a VectorSpace,
    pub solution: &'a FoslsSolution,
}

impl FluxField for SolutionFlux<'_> {
    fn eval(&self, element: usize, ref_p: Vec2, x: Vec2) -> (Vec2, f64) {
        DiscreteFlux {
            mesh: self.mesh,
            vspace: self.vspace,
            coeffs: &self.solution.phi,
        }
        .eval(element, ref_p, x)
    }
}

/// Elementwise orthonormal basis of the divergence image of the vector
/// space: span{ x̂^a ŷ^b / det J : a + b <= p_v - 1 } on each element.
pub struct DivRangeSpace {
    pub n_per_elem: usize,
    /// Per element: rows express orthonormal functions over the monomials.
    pub coeffs: Vec<DMatrix<f64>>,
    monomial_degree: usize,
}

impl DivRangeSpace {
    pub fn n_total(&self) -> usize {
        self.coeffs.len() * self.n_per_elem
    }

    fn monomials(&self) -> Vec<(i32, i32)> {
        monomial_exponents(self.monomial_degree)
    }
}

fn monomial_exponents(max_degree: usize) -> Vec<(i32, i32)> {
    let mut out = Vec::new();
    for total in 0..=max_degree as i32 {
        for a in 0..=total {
            out.push((total - a, a));
        }
    }
    out
}

/// Build the multiplier space for the divergence constraint.
pub fn div_range_space(mesh: &Mesh, vspace: &VectorSpace, quad: &QuadConfig) -> DivRangeSpace {
    let deg = vspace.basis.degree - 1;
    let monos = monomial_exponents(deg);
    let m = monos.len();
    let mut coeffs = Vec::with_capacity(mesh.n_triangles());
    for map in &mesh.maps {
        let d = quad.element_degree(map, false);
        let rule = triangle_rule(d).expect("valid degree");
        // local Gram of q̂_a / det J in L²(K): ∫ q̂_a q̂_b / det J dx̂
        let mut gram = DMatrix::<f64>::zeros(m, m);
        for (q, w) in rule.weights.iter().enumerate() {
            let p = Vec2::new(rule.points[q][0], rule.points[q][1]);
            let det = map.det_jacobian(p);
            for (i, &(ai, bi)) in monos.iter().enumerate() {
                for (j, &(aj, bj)) in monos.iter().enumerate() {
                    gram[(i, j)] += w * p.x.powi(ai + aj) * p.y.powi(bi + bj) / det;
                }
            }
        }
        let chol = gram.cholesky().expect("local div Gram is SPD");
        let linv = chol
            .l()
            .try_inverse()
            .expect("triangular factor invertible");
        coeffs.push(linv);
    }
    DivRangeSpace {
        n_per_elem: m,
        coeffs,
        monomial_degree: deg,
    }
}

/// Constraint matrix rows (∇·μ_j, η_i)_Ω over the multiplier basis.
pub fn div_constraint_matrix(
    mesh: &Mesh,
    vspace: &VectorSpace,
    drs: &DivRangeSpace,
    quad: &QuadConfig,
) -> ConstraintMat {
    let monos = drs.monomials();
    let m = drs.n_per_elem;
    let mut mat = ConstraintMat::new(drs.n_total(), vspace.n_dofs());
    for (t, map) in mesh.maps.iter().enumerate() {
        let d = quad.element_degree(map, false);
        let rule = triangle_rule(d).expect("valid degree");
        let (_, v_divs) = vspace.basis.tabulate(&rule.points);
        let nb = vspace.basis.len();
        // moments ∫ (div̂φ̂_k / det J)(q̂_a / det J) det J dx̂
        let mut raw = DMatrix::<f64>::zeros(m, nb);
        for (q, w) in rule.weights.iter().enumerate() {
            let p = Vec2::new(rule.points[q][0], rule.points[q][1]);
            let det = map.det_jacobian(p);
            for (a, &(ax, ay)) in monos.iter().enumerate() {
                let qa = p.x.powi(ax) * p.y.powi(ay);
                for k in 0..nb {
                    raw[(a, k)] += w * v_divs[k][q] * qa / det;
                }
            }
        }
        let local = &drs.coeffs[t] * raw;
        for i in 0..m {
            for (loc, &(g, sign)) in vspace.dofmap.elems[t].iter().enumerate() {
                let v = local[(i, loc)] * sign;
                if v != 0.0 {
                    mat.push(t * m + i, g, v);
                }
            }
        }
    }
    mat
}

/// Moments (φ, μ_j)_Ω of a field against the global vector basis.
pub fn flux_moments_l2(
    mesh: &Mesh,
    vspace: &VectorSpace,
    field: &dyn FluxField,
    quad: &QuadConfig,
    jump_radius: Option<f64>,
) -> Vec<f64> {
    let mut out = vec![0.0; vspace.n_dofs()];
    for (t, map) in mesh.maps.iter().enumerate() {
        let straddles = jump_radius
            .map(|r| crate::assembly::straddles_radius(map, r))
            .unwrap_or(false);
        let d = quad.element_degree(map, straddles);
        let rule = triangle_rule(d).expect("valid degree");
        let (v_vals, _) = vspace.basis.tabulate(&rule.points);
        for (q, w) in rule.weights.iter().enumerate() {
            let p = Vec2::new(rule.points[q][0], rule.points[q][1]);
            let jac = map.jacobian(p);
            let det = jac.determinant();
            let x = map.position(p);
            let (fval, _) = field.eval(t, p, x);
            for (loc, &(g, sign)) in vspace.dofmap.elems[t].iter().enumerate() {
                let mu = jac * v_vals[loc][q] / det;
                out[g] += w * det * sign * fval.dot(&mu);
            }
        }
    }
    out
}

/// Boundary moments ⟨φ·n, μ_j·n⟩_Γ against the global vector basis.
pub fn flux_moments_trace(
    mesh: &Mesh,
    vspace: &VectorSpace,
    field: &dyn FluxField,
    quad: &QuadConfig,
) -> Vec<f64> {
    let mut out = vec![0.0; vspace.n_dofs()];
    let erule = edge_rule(quad.boundary_degree).expect("valid degree");
    for (t, map) in mesh.maps.iter().enumerate() {
        for (l, _) in mesh.boundary_edges_of(t) {
            for (q, w) in erule.weights.iter().enumerate() {
                let tq = erule.points[q][0];
                let rp = ReferenceTriangle::edge_point(l, tq);
                let jac = map.jacobian(rp);
                let det = jac.determinant();
                let (x, normal, speed) = edge_geometry(map, l, tq);
                let (fval, _) = field.eval(t, rp, x);
                let fn_trace = fval.dot(&normal);
                let (bv, _) = vspace.basis.eval(rp);
                for (loc, &(g, sign)) in vspace.dofmap.elems[t].iter().enumerate() {
                    let mu_n = (jac * bv[loc] / det).dot(&normal);
                    out[g] += w * speed * sign * fn_trace * mu_n;
                }
            }
        }
    }
    out
}

/// Moments (∇·φ, η_i)_Ω against the multiplier basis.
pub fn flux_moments_div_range(
    mesh: &Mesh,
    drs: &DivRangeSpace,
    field: &dyn FluxField,
    quad: &QuadConfig,
    jump_radius: Option<f64>,
) -> Vec<f64> {
    let monos = drs.monomials();
    let m = drs.n_per_elem;
    let mut out = vec![0.0; drs.n_total()];
    for (t, map) in mesh.maps.iter().enumerate() {
        let straddles = jump_radius
            .map(|r| crate::assembly::straddles_radius(map, r))
            .unwrap_or(false);
        let d = quad.element_degree(map, straddles);
        let rule = triangle_rule(d).expect("valid degree");
        let mut raw = vec![0.0; m];
        for (q, w) in rule.weights.iter().enumerate() {
            let p = Vec2::new(rule.points[q][0], rule.points[q][1]);
            let x = map.position(p);
            let (_, fdiv) = field.eval(t, p, x);
            for (a, &(ax, ay)) in monos.iter().enumerate() {
                // (div φ, q̂_a / det J) with volume element det J: cancels
                raw[a] += w * fdiv * p.x.powi(ax) * p.y.powi(ay);
            }
        }
        for i in 0..m {
            let mut v = 0.0;
            for a in 0..m {
                v += drs.coeffs[t][(i, a)] * raw[a];
            }
            out[t * m + i] = v;
        }
    }
    out
}

/// Norms minimized by [`best_approx_vector`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApproxNorm {
    /// ‖·‖_{L²(Ω)}
    L2,
    /// combined volume + boundary-trace norm
    L2PlusTrace,
    /// divergence-error minimization (realized by the constrained
    /// projection, which attains the divergence infimum exactly)
    Div,
}

/// Result of the constrained projection.
pub struct ConstrainedProjection {
    pub coeffs: Vec<f64>,
    pub multiplier: Vec<f64>,
    /// Max residual of the divergence-matching equations.
    pub constraint_residual: f64,
}

/// Combined-norm-orthogonal projection subject to divergence matching.
pub fn project_div_constrained(
    mesh: &Mesh,
    vspace: &VectorSpace,
    field: &dyn FluxField,
    quad: &QuadConfig,
    opts: &SolveOptions,
    jump_radius: Option<f64>,
) -> Result<ConstrainedProjection> {
    let sspace = ScalarSpace::new(mesh, 1);
    let m = assemble_gram(mesh, vspace, &sspace, GramKind::L2PlusTrace, quad)?;
    let drs = div_range_space(mesh, vspace, quad);
    let bmat = div_constraint_matrix(mesh, vspace, &drs, quad);
    let mut rhs_primal = flux_moments_l2(mesh, vspace, field, quad, jump_radius);
    let trace = flux_moments_trace(mesh, vspace, field, quad);
    for (a, b) in rhs_primal.iter_mut().zip(&trace) {
        *a += b;
    }
    let rhs_con = flux_moments_div_range(mesh, &drs, field, quad, jump_radius);
    let (coeffs, multiplier) = solve_saddle(&m, &bmat, &rhs_primal, &rhs_con, opts)?;
    let constraint_residual = bmat
        .apply(&coeffs)
        .iter()
        .zip(&rhs_con)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(ConstrainedProjection {
        coeffs,
        multiplier,
        constraint_residual,
    })
}

/// Best approximation of a flux field in the chosen norm.
pub fn best_approx_vector(
    mesh: &Mesh,
    vspace: &VectorSpace,
    field: &dyn FluxField,
    norm: ApproxNorm,
    quad: &QuadConfig,
    opts: &SolveOptions,
) -> Result<Vec<f64>> {
    let sspace = ScalarSpace::new(mesh, 1);
    match norm {
        ApproxNorm::L2 => {
            let m = assemble_gram(mesh, vspace, &sspace, GramKind::VectorMass, quad)?;
            let rhs = flux_moments_l2(mesh, vspace, field, quad, None);
            solve_spd(&m, &rhs, opts)
        }
        ApproxNorm::L2PlusTrace => {
            let m = assemble_gram(mesh, vspace, &sspace, GramKind::L2PlusTrace, quad)?;
            let mut rhs = flux_moments_l2(mesh, vspace, field, quad, None);
            let trace = flux_moments_trace(mesh, vspace, field, quad);
            for (a, b) in rhs.iter_mut().zip(&trace) {
                *a += b;
            }
            solve_spd(&m, &rhs, opts)
        }
        ApproxNorm::Div => {
            Ok(project_div_constrained(mesh, vspace, field, quad, opts, None)?.coeffs)
        }
    }
}

/// L² projection onto the scalar space.
pub fn best_approx_scalar(
    mesh: &Mesh,
    sspace: &ScalarSpace,
    f: &(dyn Fn(Vec2) -> f64 + Sync),
    quad: &QuadConfig,
    opts: &SolveOptions,
) -> Result<Vec<f64>> {
    let vspace = VectorSpace::new(mesh, crate::basis::VectorFamily::RaviartThomas, 1);
    let m = assemble_gram(mesh, &vspace, sspace, GramKind::ScalarMass, quad)?;
    let mut rhs = vec![0.0; sspace.n_dofs()];
    for (t, map) in mesh.maps.iter().enumerate() {
        let d = quad.element_degree(map, false);
        let rule = triangle_rule(d).expect("valid degree");
        let (s_vals, _) = sspace.basis.tabulate(&rule.points);
        for (q, w) in rule.weights.iter().enumerate() {
            let p = Vec2::new(rule.points[q][0], rule.points[q][1]);
            let det = map.det_jacobian(p);
            let x = map.position(p);
            let fv = f(x);
            for (loc, &(g, sign)) in sspace.dofmap.elems[t].iter().enumerate() {
                rhs[g] += w * det * sign * fv * s_vals[loc][q];
            }
        }
    }
    solve_spd(&m, &rhs, opts)
}

/// Squared volume and boundary parts of the combined-norm error of
/// `field` against the discrete coefficients.
pub fn error_l2_trace_parts(
    mesh: &Mesh,
    vspace: &VectorSpace,
    coeffs: &[f64],
    field: &dyn FluxField,
    quad: &QuadConfig,
    jump_radius: Option<f64>,
) -> (f64, f64) {
    let mut vol = 0.0;
    for (t, map) in mesh.maps.iter().enumerate() {
        let straddles = jump_radius
            .map(|r| crate::assembly::straddles_radius(map, r))
            .unwrap_or(false);
        let d = quad.element_degree(map, straddles);
        let rule = triangle_rule(d).expect("valid degree");
        let (v_vals, _) = vspace.basis.tabulate(&rule.points);
        for (q, w) in rule.weights.iter().enumerate() {
            let p = Vec2::new(rule.points[q][0], rule.points[q][1]);
            let jac = map.jacobian(p);
            let det = jac.determinant();
            let x = map.position(p);
            let (fval, _) = field.eval(t, p, x);
            let mut phi_h = Vec2::zeros();
            for (loc, &(g, sign)) in vspace.dofmap.elems[t].iter().enumerate() {
                phi_h += jac * v_vals[loc][q] * (sign * coeffs[g] / det);
            }
            vol += w * det * (fval - phi_h).norm_squared();
        }
    }
    let mut bdry = 0.0;
    let erule = edge_rule(quad.boundary_degree).expect("valid degree");
    for (t, map) in mesh.maps.iter().enumerate() {
        for (l, _) in mesh.boundary_edges_of(t) {
            for (q, w) in erule.weights.iter().enumerate() {
                let tq = erule.points[q][0];
                let rp = ReferenceTriangle::edge_point(l, tq);
                let jac = map.jacobian(rp);
                let det = jac.determinant();
                let (x, normal, speed) = edge_geometry(map, l, tq);
                let (fval, _) = field.eval(t, rp, x);
                let (bv, _) = vspace.basis.eval(rp);
                let mut phin = 0.0;
                for (loc, &(g, sign)) in vspace.dofmap.elems[t].iter().enumerate() {
                    phin += (jac * bv[loc] / det).dot(&normal) * sign * coeffs[g];
                }
                bdry += w * speed * (fval.dot(&normal) - phin).powi(2);
            }
        }
    }
    (vol, bdry)
}

/// ‖∇·(field - discrete)‖²_{L²(Ω)}.
pub fn error_div_squared(
    mesh: &Mesh,
    vspace: &VectorSpace,
    coeffs: &[f64],
    field: &dyn FluxField,
    quad: &QuadConfig,
    jump_radius: Option<f64>,
) -> f64 {
    let mut total = 0.0;
    for (t, map) in mesh.maps.iter().enumerate() {
        let straddles = jump_radius
            .map(|r| crate::assembly::straddles_radius(map, r))
            .unwrap_or(false);
        let d = quad.element_degree(map, straddles);
        let rule = triangle_rule(d).expect("valid degree");
        let (_, v_divs) = vspace.basis.tabulate(&rule.points);
        for (q, w) in rule.weights.iter().enumerate() {
            let p = Vec2::new(rule.points[q][0], rule.points[q][1]);
            let det = map.det_jacobian(p);
            let x = map.position(p);
            let (_, fdiv) = field.eval(t, p, x);
            let mut div_h = 0.0;
            for (loc, &(g, sign)) in vspace.dofmap.elems[t].iter().enumerate() {
                div_h += v_divs[loc][q] * sign * coeffs[g] / det;
            }
            total += w * det * (fdiv - div_h).powi(2);
        }
    }
    total
}

/// Combined norm of a field error against a discrete candidate.
pub fn norm_l2_trace(
    mesh: &Mesh,
    vspace: &VectorSpace,
    coeffs: &[f64],
    field: &dyn FluxField,
    quad: &QuadConfig,
) -> f64 {
    let (vol, bdry) = error_l2_trace_parts(mesh, vspace, coeffs, field, quad, None);
    (vol + bdry).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::VectorFamily;
    use crate::mesh::{make_disk_mesh, make_reference_triangle_mesh, make_square_mesh};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn zero_flux() -> AnalyticFlux {
        AnalyticFlux {
            value: Arc::new(|_| Vec2::zeros()),
            div: Arc::new(|_| 0.0),
        }
    }

    #[test]
    fn l2_trace_inner_product_is_positive_on_random_fields() {
        let mesh = make_disk_mesh(0).unwrap();
        let vspace = VectorSpace::new(&mesh, VectorFamily::RaviartThomas, 2);
        let sspace = ScalarSpace::new(&mesh, 1);
        let quad = QuadConfig::for_degrees(1, 2);
        let gram = assemble_gram(&mesh, &vspace, &sspace, GramKind::L2PlusTrace, &quad).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let x: Vec<f64> = (0..vspace.n_dofs())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            assert!(gram.quadratic_form(&x) > 0.0);
        }
    }

    #[test]
    fn projection_reproduces_discrete_fields() {
        let mesh = make_square_mesh(2).unwrap();
        let vspace = VectorSpace::new(&mesh, VectorFamily::RaviartThomas, 2);
        let quad = QuadConfig::for_degrees(2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let coeffs: Vec<f64> = (0..vspace.n_dofs())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let field = DiscreteFlux {
            mesh: &mesh,
            vspace: &vspace,
            coeffs: &coeffs,
        };
        let proj =
            project_div_constrained(&mesh, &vspace, &field, &quad, &SolveOptions::default(), None)
                .unwrap();
        for (a, b) in proj.coeffs.iter().zip(&coeffs) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn projection_is_idempotent() {
        let mesh = make_disk_mesh(0).unwrap();
        let vspace = VectorSpace::new(&mesh, VectorFamily::RaviartThomas, 2);
        let quad = QuadConfig::for_degrees(2, 2);
        let field = AnalyticFlux {
            value: Arc::new(|p: Vec2| Vec2::new(p.y.sin(), p.x.cos())),
            div: Arc::new(|_| 0.0),
        };
        let once =
            project_div_constrained(&mesh, &vspace, &field, &quad, &SolveOptions::default(), None)
                .unwrap();
        let refield = DiscreteFlux {
            mesh: &mesh,
            vspace: &vspace,
            coeffs: &once.coeffs,
        };
        let twice = project_div_constrained(
            &mesh,
            &vspace,
            &refield,
            &quad,
            &SolveOptions::default(),
            None,
        )
        .unwrap();
        for (a, b) in once.coeffs.iter().zip(&twice.coeffs) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn divergence_orthogonality_residual_is_tiny() {
        let mesh = make_square_mesh(2).unwrap();
        let vspace = VectorSpace::new(&mesh, VectorFamily::RaviartThomas, 2);
        let quad = QuadConfig::for_degrees(2, 2);
        let field = AnalyticFlux {
            value: Arc::new(|p: Vec2| Vec2::new(p.y.sin(), p.x.cos())),
            div: Arc::new(|_| 0.0),
        };
        let proj =
            project_div_constrained(&mesh, &vspace, &field, &quad, &SolveOptions::default(), None)
                .unwrap();
        assert!(
            proj.constraint_residual < 1e-11,
            "residual {}",
            proj.constraint_residual
        );
    }

    #[test]
    fn div_error_of_projection_is_minimal() {
        let mesh = make_disk_mesh(0).unwrap();
        let vspace = VectorSpace::new(&mesh, VectorFamily::RaviartThomas, 2);
        let quad = QuadConfig::for_degrees(2, 2);
        // ∇·(xy + sin y, 0.1 eˣ) = y
        let field = AnalyticFlux {
            value: Arc::new(|p: Vec2| Vec2::new(p.x * p.y + p.y.sin(), 0.1 * p.x.exp())),
            div: Arc::new(|p: Vec2| p.y),
        };
        let proj =
            project_div_constrained(&mesh, &vspace, &field, &quad, &SolveOptions::default(), None)
                .unwrap();
        let proj_err = error_div_squared(&mesh, &vspace, &proj.coeffs, &field, &quad, None);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let cand: Vec<f64> = proj
                .coeffs
                .iter()
                .map(|c| c + rng.gen_range(-0.3..0.3))
                .collect();
            let cand_err = error_div_squared(&mesh, &vspace, &cand, &field, &quad, None);
            assert!(proj_err <= cand_err + 1e-13, "{proj_err} vs {cand_err}");
        }
    }

    #[test]
    fn best_approx_reproduces_members() {
        let mesh = make_square_mesh(2).unwrap();
        let vspace = VectorSpace::new(&mesh, VectorFamily::BrezziDouglasMarini, 2);
        let quad = QuadConfig::for_degrees(2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let coeffs: Vec<f64> = (0..vspace.n_dofs())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let field = DiscreteFlux {
            mesh: &mesh,
            vspace: &vspace,
            coeffs: &coeffs,
        };
        for norm in [ApproxNorm::L2, ApproxNorm::L2PlusTrace, ApproxNorm::Div] {
            let approx =
                best_approx_vector(&mesh, &vspace, &field, norm, &quad, &SolveOptions::default())
                    .unwrap();
            for (a, b) in approx.iter().zip(&coeffs) {
                assert!((a - b).abs() < 1e-10, "{norm:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn scalar_l2_projection_matches_dense_oracle_on_reference_triangle() {
        // project u = x² onto P1 over the reference triangle and compare
        // with the hand-assembled 3x3 system in exact moments
        let mesh = make_reference_triangle_mesh().unwrap();
        let sspace = ScalarSpace::new(&mesh, 1);
        let quad = QuadConfig::for_degrees(1, 1);
        let coeffs = best_approx_scalar(
            &mesh,
            &sspace,
            &|x: Vec2| x.x * x.x,
            &quad,
            &SolveOptions::default(),
        )
        .unwrap();
        // Gram of (λ0, λ1, λ2): diag 1/12, off-diag 1/24; moments of x²:
        // (∫λ0 x², ∫λ1 x², ∫λ2 x²) = (1/60, 1/20, 1/60)
        let gram = nalgebra::Matrix3::new(
            1.0 / 12.0,
            1.0 / 24.0,
            1.0 / 24.0,
            1.0 / 24.0,
            1.0 / 12.0,
            1.0 / 24.0,
            1.0 / 24.0,
            1.0 / 24.0,
            1.0 / 12.0,
        );
        let rhs = nalgebra::Vector3::new(1.0 / 60.0, 1.0 / 20.0, 1.0 / 60.0);
        let oracle = gram.lu().solve(&rhs).unwrap();
        for i in 0..3 {
            assert!(
                (coeffs[i] - oracle[i]).abs() < 1e-11,
                "vertex {i}: {} vs {}",
                coeffs[i],
                oracle[i]
            );
        }
    }

    #[test]
    fn combined_norm_examples() {
        // zero field: zero norm; constant field (1,0) on the disk: volume
        // part π and trace part ∫ cos²θ dθ = π
        let mesh = make_disk_mesh(1).unwrap();
        let vspace = VectorSpace::new(&mesh, VectorFamily::RaviartThomas, 1);
        let quad = QuadConfig::for_degrees(1, 1).raised(8);
        let zero_coeffs = vec![0.0; vspace.n_dofs()];
        assert_eq!(
            norm_l2_trace(&mesh, &vspace, &zero_coeffs, &zero_flux(), &quad),
            0.0
        );
        let constant = AnalyticFlux {
            value: Arc::new(|_| Vec2::new(1.0, 0.0)),
            div: Arc::new(|_| 0.0),
        };
        let (vol, bdry) =
            error_l2_trace_parts(&mesh, &vspace, &zero_coeffs, &constant, &quad, None);
        let pi = std::f64::consts::PI;
        assert!((vol - pi).abs() < 1e-10, "volume part {vol}");
        assert!((bdry - pi).abs() < 1e-10, "trace part {bdry}");
        let norm = norm_l2_trace(&mesh, &vspace, &zero_coeffs, &constant, &quad);
        assert!((norm - (2.0 * pi).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn trace_term_vanishes_for_interior_supported_fields() {
        let mesh = make_square_mesh(4).unwrap();
        let vspace = VectorSpace::new(&mesh, VectorFamily::RaviartThomas, 1);
        let quad = QuadConfig::for_degrees(1, 1);
        let interior_edge = mesh
            .edges
            .iter()
            .enumerate()
            .find(|(_, e)| {
                !e.boundary
                    && e.tris
                        .iter()
                        .all(|&t| mesh.boundary_edges_of(t).is_empty())
            })
            .map(|(i, _)| i)
            .unwrap();
        let mut coeffs = vec![0.0; vspace.n_dofs()];
        coeffs[interior_edge] = 1.0;
        let (_, bdry) = error_l2_trace_parts(&mesh, &vspace, &coeffs, &zero_flux(), &quad, None);
        assert!(bdry.abs() < 1e-15, "boundary part {bdry}");
    }

    #[test]
    fn combined_norm_minimizer_beats_l2_minimizer_in_combined_norm() {
        let mesh = make_disk_mesh(0).unwrap();
        let vspace = VectorSpace::new(&mesh, VectorFamily::RaviartThomas, 1);
        let quad = QuadConfig::for_degrees(1, 1);
        let field = AnalyticFlux {
            value: Arc::new(|p: Vec2| Vec2::new((2.0 * p.y).sin(), p.x * p.x)),
            div: Arc::new(|_| 0.0),
        };
        let opts = SolveOptions::default();
        let tri_best =
            best_approx_vector(&mesh, &vspace, &field, ApproxNorm::L2PlusTrace, &quad, &opts)
                .unwrap();
        let l2_best =
            best_approx_vector(&mesh, &vspace, &field, ApproxNorm::L2, &quad, &opts).unwrap();
        let tri_err = norm_l2_trace(&mesh, &vspace, &tri_best, &field, &quad);
        let l2_err_in_tri = norm_l2_trace(&mesh, &vspace, &l2_best, &field, &quad);
        assert!(tri_err <= l2_err_in_tri + 1e-13);
    }
}

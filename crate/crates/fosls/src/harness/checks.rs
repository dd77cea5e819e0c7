//! Invariant suites behind the `check` command and the acceptance tests:
//! norm equivalence of the least-squares form, the constrained-projection
//! properties, and structural checks (symmetry, Galerkin optimality,
//! divergence theorem, quadrature stability, radial oracle agreement).

use super::{mesh_for_level, DomainKind, StudyConfig};
use crate::assembly::{
    assemble_fosls, assemble_gram, FoslsSolution, GramKind, QuadConfig, RobinProblem,
    ScalarSpace, VectorSpace,
};
use crate::basis::{piola_push, VectorFamily};
use crate::errors::compute_errors;
use crate::mesh::{edge_geometry, make_disk_mesh, make_square_mesh, ReferenceTriangle};
use crate::oracle::{fd_radial_solve, manufactured, radial_exact};
use crate::projector::{
    best_approx_vector, error_div_squared, norm_l2_trace, project_div_constrained, AnalyticFlux,
    ApproxNorm, DiscreteFlux,
};
use crate::quadrature::{edge_rule, triangle_rule};
use crate::solve::{solve_spd, SolveOptions};
use crate::{Result, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, passed: bool, detail: String) -> CheckResult {
        CheckResult {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

fn generalized_rayleigh_extremes(
    a: &crate::solve::SparseSym,
    m: &crate::solve::SparseSym,
) -> (f64, f64) {
    // dense route: L⁻¹ A L⁻ᵀ with M = L Lᵀ, then a symmetric eigensolve
    let md = m.to_dense();
    let ad = a.to_dense();
    let chol = md.cholesky().expect("Gram matrix SPD");
    let l = chol.l();
    let linv = l.try_inverse().expect("triangular inverse");
    let sym = &linv * ad * linv.transpose();
    let sym = (&sym + sym.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let lo = eig.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
    let hi = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
    (lo, hi)
}

/// Two-sided comparability of the least-squares form with the product
/// norm: the extreme generalized Rayleigh quotients stay positive and vary
/// by less than 15% over three refinements at p = 1.
pub fn check_norm_equivalence(gamma: f64, alpha: f64) -> Result<Vec<CheckResult>> {
    let mut lows = Vec::new();
    let mut highs = Vec::new();
    let problem = RobinProblem::new(
        gamma,
        alpha,
        Arc::new(|_| 0.0),
        Arc::new(|_, _| 0.0),
    );
    for n in [2usize, 4, 8] {
        let mesh = make_square_mesh(n)?;
        let vspace = VectorSpace::new(&mesh, VectorFamily::RaviartThomas, 1);
        let sspace = ScalarSpace::new(&mesh, 1);
        let quad = QuadConfig::for_degrees(1, 1);
        let (a, _) = assemble_fosls(&mesh, &vspace, &sspace, &problem, &quad)?;
        let m = assemble_gram(&mesh, &vspace, &sspace, GramKind::ProductNorm, &quad)?;
        let (lo, hi) = generalized_rayleigh_extremes(&a, &m);
        lows.push(lo);
        highs.push(hi);
    }
    let lo_min = lows.iter().cloned().fold(f64::MAX, f64::min);
    let lo_var = (lows.iter().cloned().fold(f64::MIN, f64::max) - lo_min) / lo_min;
    let hi_min = highs.iter().cloned().fold(f64::MAX, f64::min);
    let hi_var = (highs.iter().cloned().fold(f64::MIN, f64::max) - hi_min) / hi_min;
    Ok(vec![
        CheckResult::new(
            "norm_equivalence.smallest_quotient_positive",
            lo_min > 0.0,
            format!("min quotient {lo_min:.4e}"),
        ),
        CheckResult::new(
            "norm_equivalence.lower_constant_stable",
            lo_var < 0.15,
            format!("variation {:.2}% over {lows:?}", 100.0 * lo_var),
        ),
        CheckResult::new(
            "norm_equivalence.upper_constant_stable",
            hi_var < 0.15,
            format!("variation {:.2}% over {highs:?}", 100.0 * hi_var),
        ),
    ])
}

/// Constrained-projection suite: idempotence, divergence orthogonality,
/// divergence optimality against random candidates, and the boundedness
/// ratio of the combined-norm estimate across four refinement levels.
pub fn check_projector_suite(seed: u64) -> Result<Vec<CheckResult>> {
    let mut results = Vec::new();
    let opts = SolveOptions::default();
    let quad = QuadConfig::for_degrees(2, 2);

    // smooth solenoidal field on the disk
    let field = AnalyticFlux {
        value: Arc::new(|p: Vec2| Vec2::new(p.y.sin(), p.x.cos())),
        div: Arc::new(|_| 0.0),
    };
    let mesh = make_disk_mesh(1)?;
    let vspace = VectorSpace::new(&mesh, VectorFamily::RaviartThomas, 2);
    let proj = project_div_constrained(&mesh, &vspace, &field, &quad, &opts, None)?;
    let refield = DiscreteFlux {
        mesh: &mesh,
        vspace: &vspace,
        coeffs: &proj.coeffs,
    };
    let twice = project_div_constrained(&mesh, &vspace, &refield, &quad, &opts, None)?;
    let idem = proj
        .coeffs
        .iter()
        .zip(&twice.coeffs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    results.push(CheckResult::new(
        "projector.idempotent",
        idem < 1e-12,
        format!("max coefficient drift {idem:.2e}"),
    ));
    results.push(CheckResult::new(
        "projector.divergence_orthogonality",
        proj.constraint_residual < 1e-11,
        format!("constraint residual {:.2e}", proj.constraint_residual),
    ));

    // divergence error never exceeds any discrete candidate's
    let field2 = AnalyticFlux {
        value: Arc::new(|p: Vec2| Vec2::new(p.x * p.y + p.y.sin(), 0.1 * p.x.exp())),
        div: Arc::new(|p: Vec2| p.y),
    };
    let proj2 = project_div_constrained(&mesh, &vspace, &field2, &quad, &opts, None)?;
    let proj_div = error_div_squared(&mesh, &vspace, &proj2.coeffs, &field2, &quad, None);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_margin = f64::MAX;
    for _ in 0..10 {
        let cand: Vec<f64> = proj2
            .coeffs
            .iter()
            .map(|c| c + rng.gen_range(-0.5..0.5))
            .collect();
        let cand_div = error_div_squared(&mesh, &vspace, &cand, &field2, &quad, None);
        worst_margin = worst_margin.min(cand_div - proj_div);
    }
    results.push(CheckResult::new(
        "projector.divergence_optimality",
        worst_margin >= -1e-13,
        format!("worst candidate margin {worst_margin:.2e}"),
    ));

    // boundedness of the combined-norm estimate: the projection error is
    // controlled by the best approximation plus h times its div error
    let smooth = manufactured("square_cos_cosh", 2.0, 1.0)?;
    let phi_field = AnalyticFlux {
        value: smooth.phi.clone(),
        div: smooth.div_phi.clone(),
    };
    let mut worst_ratio: f64 = 0.0;
    for level in 0..4 {
        let mesh = mesh_for_level(DomainKind::Square, level)?;
        let vspace = VectorSpace::new(&mesh, VectorFamily::RaviartThomas, 2);
        let proj = project_div_constrained(&mesh, &vspace, &phi_field, &quad, &opts, None)?;
        let proj_err = norm_l2_trace(&mesh, &vspace, &proj.coeffs, &phi_field, &quad);
        let best =
            best_approx_vector(&mesh, &vspace, &phi_field, ApproxNorm::L2PlusTrace, &quad, &opts)?;
        let best_err = norm_l2_trace(&mesh, &vspace, &best, &phi_field, &quad);
        let best_div = error_div_squared(&mesh, &vspace, &best, &phi_field, &quad, None).sqrt();
        let ratio = proj_err / (best_err + mesh.h * best_div);
        worst_ratio = worst_ratio.max(ratio);
    }
    results.push(CheckResult::new(
        "projector.boundedness_ratio",
        worst_ratio <= 10.0,
        format!("worst ratio {worst_ratio:.3} over 4 levels"),
    ));

    Ok(results)
}

/// Structural suite: exact symmetry, Galerkin optimality of the solution
/// in the residual norm, divergence theorem on curved elements, radial
/// oracle agreement, and quadrature-degree stability.
pub fn check_structural(seed: u64) -> Result<Vec<CheckResult>> {
    let mut results = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // symmetry of the assembled form on a curved mesh
    let mesh = make_disk_mesh(0)?;
    let vspace = VectorSpace::new(&mesh, VectorFamily::RaviartThomas, 2);
    let sspace = ScalarSpace::new(&mesh, 2);
    let exact = manufactured("radial_step", 2.0, 1.0)?;
    let quad = QuadConfig::for_degrees(2, 2);
    let (a, rhs) = assemble_fosls(&mesh, &vspace, &sspace, &exact.problem, &quad)?;
    let asym = a.relative_asymmetry();
    results.push(CheckResult::new(
        "structural.matrix_symmetry",
        asym < 1e-14,
        format!("relative asymmetry {asym:.2e}"),
    ));

    // Galerkin optimality: the solve minimizes the residual norm over the
    // discrete space; 20 random perturbations must not beat it
    let x = solve_spd(&a, &rhs, &SolveOptions::default())?;
    let sol = FoslsSolution::from_block_vector(vspace.n_dofs(), &x);
    let base = compute_errors(&mesh, &vspace, &sspace, &sol, &exact, &quad)?;
    let scale = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let mut worst_margin = f64::MAX;
    for k in 0..20 {
        let amp = if k % 2 == 0 { 1e-2 } else { 0.3 };
        let perturbed: Vec<f64> = x
            .iter()
            .map(|v| v + scale * amp * rng.gen_range(-1.0..1.0))
            .collect();
        let cand = FoslsSolution::from_block_vector(vspace.n_dofs(), &perturbed);
        let report = compute_errors(&mesh, &vspace, &sspace, &cand, &exact, &quad)?;
        worst_margin = worst_margin.min(report.err_b - base.err_b);
    }
    results.push(CheckResult::new(
        "structural.galerkin_optimality",
        worst_margin >= -1e-12 * base.err_b.max(1.0),
        format!("worst residual-norm margin {worst_margin:.2e}"),
    ));

    // divergence theorem on every curved element for a random discrete field
    let coeffs: Vec<f64> = (0..vspace.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let tri_rule = triangle_rule(18)?;
    let e_rule = edge_rule(18)?;
    let mut worst_gap: f64 = 0.0;
    let (_, v_divs) = vspace.basis.tabulate(&tri_rule.points);
    for (t, map) in mesh.maps.iter().enumerate() {
        if map.is_affine() {
            continue;
        }
        let mut volume = 0.0;
        for (q, w) in tri_rule.weights.iter().enumerate() {
            let p = Vec2::new(tri_rule.points[q][0], tri_rule.points[q][1]);
            let det = map.det_jacobian(p);
            let mut dh = 0.0;
            for (loc, &(g, sign)) in vspace.dofmap.elems[t].iter().enumerate() {
                dh += v_divs[loc][q] * sign * coeffs[g] / det;
            }
            volume += w * det * dh;
        }
        let mut flux = 0.0;
        for l in 0..3 {
            for (q, w) in e_rule.weights.iter().enumerate() {
                let tq = e_rule.points[q][0];
                let rp = ReferenceTriangle::edge_point(l, tq);
                let jac = map.jacobian(rp);
                let det = jac.determinant();
                let (bv, _) = vspace.basis.eval(rp);
                let (_, normal, speed) = edge_geometry(map, l, tq);
                let mut phin = 0.0;
                for (loc, &(g, sign)) in vspace.dofmap.elems[t].iter().enumerate() {
                    let (pv, _) = piola_push(&jac, det, bv[loc], 0.0)?;
                    phin += pv.dot(&normal) * sign * coeffs[g];
                }
                flux += w * speed * phin;
            }
        }
        worst_gap = worst_gap.max((volume - flux).abs());
    }
    results.push(CheckResult::new(
        "structural.divergence_theorem_curved",
        worst_gap < 1e-10,
        format!("worst element gap {worst_gap:.2e}"),
    ));

    // radial closed form against the finite-difference oracle
    let radial = radial_exact(2.0);
    let (r, u) = fd_radial_solve(2.0, 100_000);
    let mut worst_fd: f64 = 0.0;
    for target in [0.0, 0.25, 0.75, 1.0] {
        let i = (target / (r[1] - r[0])).round() as usize;
        worst_fd = worst_fd.max((u[i] - radial.u(r[i])).abs());
    }
    results.push(CheckResult::new(
        "structural.radial_oracle_agreement",
        worst_fd < 1e-7,
        format!("max deviation {worst_fd:.2e} at four radii"),
    ));

    // quadrature stability for smooth data: raising all degrees by two
    // moves no assembled entry by more than 1e-10 of the matrix scale
    let smooth = manufactured("disk_smooth", 2.0, 1.0)?;
    let mesh1 = make_disk_mesh(1)?;
    let vs1 = VectorSpace::new(&mesh1, VectorFamily::RaviartThomas, 2);
    let ss1 = ScalarSpace::new(&mesh1, 2);
    let (a1, _) = assemble_fosls(&mesh1, &vs1, &ss1, &smooth.problem, &quad)?;
    let (a2, _) = assemble_fosls(&mesh1, &vs1, &ss1, &smooth.problem, &quad.raised(2))?;
    let amax = a1.values.iter().cloned().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut dmax: f64 = 0.0;
    {
        use std::collections::BTreeMap;
        let mut map1 = BTreeMap::new();
        for col in 0..a1.n {
            for p in a1.col_ptr[col]..a1.col_ptr[col + 1] {
                map1.insert((a1.row_idx[p], col), a1.values[p]);
            }
        }
        for col in 0..a2.n {
            for p in a2.col_ptr[col]..a2.col_ptr[col + 1] {
                let v1 = map1.get(&(a2.row_idx[p], col)).copied().unwrap_or(0.0);
                dmax = dmax.max((a2.values[p] - v1).abs());
            }
        }
    }
    results.push(CheckResult::new(
        "structural.quadrature_stability",
        dmax / amax < 1e-10,
        format!("max entry change {:.2e} relative", dmax / amax),
    ));

    Ok(results)
}

/// Byte-identical CSV across two single-threaded runs of the same study.
pub fn check_determinism(config: &StudyConfig) -> Result<CheckResult> {
    let t1 = super::run_h_study(config)?;
    let t2 = super::run_h_study(config)?;
    let c1 = super::output::csv_string(&t1);
    let c2 = super::output::csv_string(&t2);
    Ok(CheckResult::new(
        "determinism.identical_csv",
        c1 == c2,
        format!("{} bytes compared", c1.len()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_equivalence_suite_passes() {
        for r in check_norm_equivalence(2.0, 1.0).unwrap() {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }
}

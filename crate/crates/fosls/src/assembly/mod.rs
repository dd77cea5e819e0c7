//! Assembly of the FOSLS system and auxiliary Gram matrices.
//!
//! The bilinear form on pairs (φ, u) ∈ RT/BDM × S_p is
//!
//!   b((φ,u),(ψ,v)) = (∇·φ + γu, ∇·ψ + γv)_Ω + (∇u + φ, ∇v + ψ)_Ω
//!                  + ⟨φ·n − αu, ψ·n − αv⟩_Γ,
//!
//! with load F((ψ,v)) = (f, ∇·ψ + γv)_Ω + ⟨−g, ψ·n − αv⟩_Γ. The global
//! block ordering is all vector DOFs first, then all scalar DOFs. Element
//! contributions are computed independently (optionally in parallel) and
//! scattered serially in element order, so assembled values do not depend
//! on the thread count.

mod dofmap;

pub use dofmap::{DofMap, ScalarSpace, VectorSpace};

use crate::basis::piola_push;
use crate::mesh::{edge_geometry, ElementMap, Mesh, ReferenceTriangle};
use crate::quadrature::{edge_rule, triangle_rule, QuadRule, MAX_DEGREE};
use crate::solve::SparseSym;
use crate::{Mat2, Result, Vec2};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::sync::Arc;

/// The Robin model problem: -Δu + γu = f in Ω, ∂_n u + αu = g on Γ.
#[derive(Clone)]
pub struct RobinProblem {
    pub gamma: f64,
    pub alpha: f64,
    /// Volume load f(x).
    pub f: Arc<dyn Fn(Vec2) -> f64 + Send + Sync>,
    /// Boundary datum g(x, n) with n the unit outward normal.
    pub g: Arc<dyn Fn(Vec2, Vec2) -> f64 + Send + Sync>,
    /// Radius of a circular discontinuity of f, if any; elements straddling
    /// it are integrated with an elevated-degree rule.
    pub jump_radius: Option<f64>,
}

impl RobinProblem {
    pub fn new(
        gamma: f64,
        alpha: f64,
        f: Arc<dyn Fn(Vec2) -> f64 + Send + Sync>,
        g: Arc<dyn Fn(Vec2, Vec2) -> f64 + Send + Sync>,
    ) -> RobinProblem {
        assert!(gamma > 0.0 && alpha > 0.0, "need gamma > 0 and alpha > 0");
        RobinProblem {
            gamma,
            alpha,
            f,
            g,
            jump_radius: None,
        }
    }
}

/// Quadrature degrees used during assembly and error evaluation.
#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    /// Base volume degree on affine elements.
    pub volume_degree: usize,
    /// Added to the volume degree on curved elements.
    pub curved_boost: usize,
    /// Degree for boundary-edge integrals.
    pub boundary_degree: usize,
    /// Minimum degree on elements straddling a load discontinuity.
    pub jump_degree: usize,
}

impl QuadConfig {
    pub fn for_degrees(p_s: usize, p_v: usize) -> QuadConfig {
        QuadConfig {
            volume_degree: (2 * p_s.max(p_v) + 2).min(MAX_DEGREE),
            curved_boost: 4,
            boundary_degree: (2 * p_v + 4).min(MAX_DEGREE),
            jump_degree: 40,
        }
    }

    /// Same configuration with all degrees raised by `d` (capped).
    pub fn raised(&self, d: usize) -> QuadConfig {
        QuadConfig {
            volume_degree: (self.volume_degree + d).min(MAX_DEGREE),
            curved_boost: self.curved_boost,
            boundary_degree: (self.boundary_degree + d).min(MAX_DEGREE),
            jump_degree: (self.jump_degree + d).min(MAX_DEGREE),
        }
    }

    pub fn element_degree(&self, map: &ElementMap, straddles: bool) -> usize {
        let mut d = self.volume_degree;
        if !map.is_affine() {
            d += self.curved_boost;
        }
        if straddles {
            d = d.max(self.jump_degree);
        }
        d.min(MAX_DEGREE)
    }
}

/// Load moments (f, ∇·ψ + γv) on an element crossing a circular load
/// discontinuity, by adaptive subdivision of the reference triangle:
/// subcells away from the interface are integrated with the base rule,
/// crossing subcells are split until `max_depth`. The smooth matrix
/// integrands never need this; only the right-hand side sees f.
#[allow(clippy::too_many_arguments)]
fn adaptive_load_moments(
    map: &ElementMap,
    f: &(dyn Fn(Vec2) -> f64 + Send + Sync),
    gamma: f64,
    r0: f64,
    vbasis: &crate::basis::VectorBasis,
    sbasis: &crate::basis::ScalarBasis,
    rule: &QuadRule,
    max_depth: usize,
    rhs: &mut [f64],
) {
    // interface leaf pieces are tiny, so a fixed low-degree rule suffices
    // there; high-degree integrand components are crushed by the cell size
    let low_rule = triangle_rule(6).expect("valid degree");
    let corners = ReferenceTriangle::vertices();
    subcell_moments(
        map, f, gamma, r0, vbasis, sbasis, rule, &low_rule, max_depth, corners, rhs,
    );
}

#[allow(clippy::too_many_arguments)]
fn subcell_moments(
    map: &ElementMap,
    f: &(dyn Fn(Vec2) -> f64 + Send + Sync),
    gamma: f64,
    r0: f64,
    vbasis: &crate::basis::VectorBasis,
    sbasis: &crate::basis::ScalarBasis,
    rule: &QuadRule,
    low_rule: &QuadRule,
    depth: usize,
    sub: [Vec2; 3],
    rhs: &mut [f64],
) {
    // conservative interface test on the subcell image
    let probes = [
        sub[0],
        sub[1],
        sub[2],
        (sub[0] + sub[1]) * 0.5,
        (sub[1] + sub[2]) * 0.5,
        (sub[2] + sub[0]) * 0.5,
        (sub[0] + sub[1] + sub[2]) / 3.0,
    ];
    let imgs: Vec<Vec2> = probes.iter().map(|&p| map.position(p)).collect();
    let mut lo = f64::MAX;
    let mut hi: f64 = 0.0;
    for x in &imgs {
        lo = lo.min(x.norm());
        hi = hi.max(x.norm());
    }
    let diam = (imgs[0] - imgs[1])
        .norm()
        .max((imgs[1] - imgs[2]).norm())
        .max((imgs[2] - imgs[0]).norm());
    let margin = 0.3 * diam;
    let crossing = lo - margin < r0 && r0 < hi + margin;
    if crossing && depth > 0 {
        let m01 = (sub[0] + sub[1]) * 0.5;
        let m12 = (sub[1] + sub[2]) * 0.5;
        let m20 = (sub[2] + sub[0]) * 0.5;
        for child in [
            [sub[0], m01, m20],
            [sub[1], m12, m01],
            [sub[2], m20, m12],
            [m01, m12, m20],
        ] {
            subcell_moments(
                map, f, gamma, r0, vbasis, sbasis, rule, low_rule, depth - 1, child, rhs,
            );
        }
        return;
    }
    if !crossing {
        apply_rule_on_subcell(map, f, gamma, vbasis, sbasis, rule, sub, rhs);
        return;
    }
    // crossing leaf: split along the interface, located on the two crossed
    // edges by bisection; the residual error is the sliver between the
    // interface and its chord inside this tiny cell
    let side = |p: Vec2| map.position(p).norm() - r0;
    let signs = [side(sub[0]), side(sub[1]), side(sub[2])];
    let lone = (0..3).find(|&i| {
        (signs[i] >= 0.0) != (signs[(i + 1) % 3] >= 0.0)
            && (signs[i] >= 0.0) != (signs[(i + 2) % 3] >= 0.0)
    });
    let Some(lone) = lone else {
        // corners all on one side although the margin test fired: the
        // interface at most clips a corner region; the plain rule is fine
        apply_rule_on_subcell(map, f, gamma, vbasis, sbasis, rule, sub, rhs);
        return;
    };
    let a = sub[lone];
    let b = sub[(lone + 1) % 3];
    let c = sub[(lone + 2) % 3];
    let cut = |from: Vec2, to: Vec2| -> Vec2 {
        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        let slo = side(from);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let s = side(from + (to - from) * mid);
            if (s >= 0.0) == (slo >= 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        from + (to - from) * (0.5 * (lo + hi))
    };
    let p = cut(a, b);
    let q = cut(a, c);
    for piece in [[a, p, q], [p, b, c], [p, c, q]] {
        apply_rule_on_subcell(map, f, gamma, vbasis, sbasis, low_rule, piece, rhs);
    }
}

/// Quadrature of the load moments over one affine subcell of the
/// reference triangle.
fn apply_rule_on_subcell(
    map: &ElementMap,
    f: &(dyn Fn(Vec2) -> f64 + Send + Sync),
    gamma: f64,
    vbasis: &crate::basis::VectorBasis,
    sbasis: &crate::basis::ScalarBasis,
    rule: &QuadRule,
    sub: [Vec2; 3],
    rhs: &mut [f64],
) {
    let e1 = sub[1] - sub[0];
    let e2 = sub[2] - sub[0];
    // constant Jacobian of the affine subcell map (twice its area)
    let ratio = e1.x * e2.y - e1.y * e2.x;
    let nv = vbasis.len();
    let ns = sbasis.len();
    for (q, w) in rule.weights.iter().enumerate() {
        let p = sub[0] + e1 * rule.points[q][0] + e2 * rule.points[q][1];
        let fq = f(map.position(p));
        if fq == 0.0 {
            continue;
        }
        let det = map.det_jacobian(p);
        let dv = w * ratio;
        let (_, vd) = vbasis.eval(p);
        let (sv, _) = sbasis.eval(p);
        // (f, ∇·ψ): the Piola 1/det J cancels against the volume element
        for i in 0..nv {
            rhs[i] += fq * vd[i] * dv;
        }
        for i in 0..ns {
            rhs[nv + i] += fq * gamma * sv[i] * dv * det;
        }
    }
}

/// True if the image of the element straddles the circle of radius r0.
pub fn straddles_radius(map: &ElementMap, r0: f64) -> bool {
    let mut lo = f64::MAX;
    let mut hi: f64 = 0.0;
    let mut check = |p: Vec2| {
        let r = map.position(p).norm();
        lo = lo.min(r);
        hi = hi.max(r);
    };
    for v in ReferenceTriangle::vertices() {
        check(v);
    }
    let rule = triangle_rule(10).expect("valid degree");
    for p in &rule.points {
        check(Vec2::new(p[0], p[1]));
    }
    lo < r0 && r0 < hi
}

/// Reference tabulations shared by all elements using one rule degree.
struct Tabulation {
    rule: QuadRule,
    s_vals: Vec<Vec<f64>>,
    s_grads: Vec<Vec<Vec2>>,
    v_vals: Vec<Vec<Vec2>>,
    v_divs: Vec<Vec<f64>>,
}

fn build_tabulations(
    degrees: &[usize],
    sspace: &ScalarSpace,
    vspace: &VectorSpace,
) -> Result<BTreeMap<usize, Tabulation>> {
    let mut out = BTreeMap::new();
    for &d in degrees {
        if out.contains_key(&d) {
            continue;
        }
        let rule = triangle_rule(d)?;
        let (s_vals, s_grads) = sspace.basis.tabulate(&rule.points);
        let (v_vals, v_divs) = vspace.basis.tabulate(&rule.points);
        out.insert(
            d,
            Tabulation {
                rule,
                s_vals,
                s_grads,
                v_vals,
                v_divs,
            },
        );
    }
    Ok(out)
}

/// Geometry at the volume quadrature points of one element.
struct ElementGeometry {
    x: Vec<Vec2>,
    jac: Vec<Mat2>,
    det: Vec<f64>,
    jinv_t: Vec<Mat2>,
}

fn element_geometry(map: &ElementMap, rule: &QuadRule) -> ElementGeometry {
    let np = rule.len();
    let mut geo = ElementGeometry {
        x: Vec::with_capacity(np),
        jac: Vec::with_capacity(np),
        det: Vec::with_capacity(np),
        jinv_t: Vec::with_capacity(np),
    };
    for p in &rule.points {
        let p = Vec2::new(p[0], p[1]);
        let j = map.jacobian(p);
        geo.x.push(map.position(p));
        geo.det.push(j.determinant());
        geo.jinv_t
            .push(j.try_inverse().expect("invertible map").transpose());
        geo.jac.push(j);
    }
    geo
}

/// Assemble the FOSLS Galerkin matrix and load vector.
pub fn assemble_fosls(
    mesh: &Mesh,
    vspace: &VectorSpace,
    sspace: &ScalarSpace,
    problem: &RobinProblem,
    quad: &QuadConfig,
) -> Result<(SparseSym, Vec<f64>)> {
    let nv = vspace.basis.len();
    let ns = sspace.basis.len();
    let n_phi = vspace.n_dofs();
    let n_total = n_phi + sspace.n_dofs();
    let gamma = problem.gamma;
    let alpha = problem.alpha;

    let straddle: Vec<bool> = mesh
        .maps
        .iter()
        .map(|m| {
            problem
                .jump_radius
                .map(|r0| straddles_radius(m, r0))
                .unwrap_or(false)
        })
        .collect();
    let degrees: Vec<usize> = (0..mesh.n_triangles())
        .map(|t| quad.element_degree(&mesh.maps[t], straddle[t]))
        .collect();
    let tabs = build_tabulations(&degrees, sspace, vspace)?;
    let erule = edge_rule(quad.boundary_degree)?;

    let locals: Vec<(Vec<f64>, Vec<f64>)> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|t| {
            let map = &mesh.maps[t];
            let tab = &tabs[&degrees[t]];
            let geo = element_geometry(map, &tab.rule);
            let nt = nv + ns;
            let mut a = vec![0.0; nt * nt];
            let mut rhs = vec![0.0; nt];
            let crossing = straddle[t];

            for (q, w) in tab.rule.weights.iter().enumerate() {
                let dv = w * geo.det[q];
                let jac = &geo.jac[q];
                let det = geo.det[q];
                let jinv_t = &geo.jinv_t[q];
                let phis: Vec<Vec2> = (0..nv).map(|i| jac * tab.v_vals[i][q] / det).collect();
                let divs: Vec<f64> = (0..nv).map(|i| tab.v_divs[i][q] / det).collect();
                let grads: Vec<Vec2> = (0..ns).map(|i| jinv_t * tab.s_grads[i][q]).collect();
                let uvals: Vec<f64> = (0..ns).map(|i| tab.s_vals[i][q]).collect();
                let fq = if crossing { 0.0 } else { (problem.f)(geo.x[q]) };

                for i in 0..nv {
                    for j in i..nv {
                        let val = (divs[i] * divs[j] + phis[i].dot(&phis[j])) * dv;
                        a[i * nt + j] += val;
                        if i != j {
                            a[j * nt + i] += val;
                        }
                    }
                    for j in 0..ns {
                        let val = (gamma * divs[i] * uvals[j] + phis[i].dot(&grads[j])) * dv;
                        a[i * nt + (nv + j)] += val;
                        a[(nv + j) * nt + i] += val;
                    }
                    rhs[i] += fq * divs[i] * dv;
                }
                for i in 0..ns {
                    for j in i..ns {
                        let val =
                            (gamma * gamma * uvals[i] * uvals[j] + grads[i].dot(&grads[j])) * dv;
                        a[(nv + i) * nt + (nv + j)] += val;
                        if i != j {
                            a[(nv + j) * nt + (nv + i)] += val;
                        }
                    }
                    rhs[nv + i] += fq * gamma * uvals[i] * dv;
                }
            }

            // load moments across the discontinuity: adaptive subdivision
            if crossing {
                let base_rule =
                    triangle_rule(quad.element_degree(map, false)).expect("valid degree");
                adaptive_load_moments(
                    map,
                    problem.f.as_ref(),
                    gamma,
                    problem.jump_radius.expect("crossing implies a jump radius"),
                    &vspace.basis,
                    &sspace.basis,
                    &base_rule,
                    9,
                    &mut rhs,
                );
            }

            // Robin boundary terms with the exact edge parameterization
            for (l, _) in mesh.boundary_edges_of(t) {
                for (q, w) in erule.weights.iter().enumerate() {
                    let tq = erule.points[q][0];
                    let rp = ReferenceTriangle::edge_point(l, tq);
                    let jac = map.jacobian(rp);
                    let det = jac.determinant();
                    let (x, normal, speed) = edge_geometry(map, l, tq);
                    let ds = w * speed;
                    let (bv, _) = vspace.basis.eval(rp);
                    let (sv, _) = sspace.basis.eval(rp);
                    let nt = nv + ns;
                    let mut tr = vec![0.0; nt];
                    for i in 0..nv {
                        tr[i] = (jac * bv[i] / det).dot(&normal);
                    }
                    for i in 0..ns {
                        tr[nv + i] = -alpha * sv[i];
                    }
                    let gq = (problem.g)(x, normal);
                    for i in 0..nt {
                        for j in 0..nt {
                            a[i * nt + j] += tr[i] * tr[j] * ds;
                        }
                        rhs[i] += -gq * tr[i] * ds;
                    }
                }
            }

            // exact symmetry of the local block
            for i in 0..nt {
                for j in (i + 1)..nt {
                    let s = 0.5 * (a[i * nt + j] + a[j * nt + i]);
                    a[i * nt + j] = s;
                    a[j * nt + i] = s;
                }
            }
            (a, rhs)
        })
        .collect();

    // serial scatter in element order
    let mut triplets = Vec::new();
    let mut rhs = vec![0.0; n_total];
    for (t, (a, r)) in locals.iter().enumerate() {
        let nt = nv + ns;
        let vmap = &vspace.dofmap.elems[t];
        let smap = &sspace.dofmap.elems[t];
        let global = |i: usize| -> (usize, f64) {
            if i < nv {
                vmap[i]
            } else {
                let (g, s) = smap[i - nv];
                (n_phi + g, s)
            }
        };
        for i in 0..nt {
            let (gi, si) = global(i);
            rhs[gi] += si * r[i];
            for j in 0..nt {
                let (gj, sj) = global(j);
                let val = si * sj * a[i * nt + j];
                if val != 0.0 {
                    triplets.push((gi, gj, val));
                }
            }
        }
    }
    Ok((SparseSym::from_triplets(n_total, &triplets), rhs))
}

/// Inner products materialized as Gram matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GramKind {
    /// ‖u‖²_{H¹} + ‖φ‖²_{H(div)} + ‖φ·n‖²_{L²(Γ)} on the product space.
    ProductNorm,
    /// (φ, ψ)_Ω + ⟨φ·n, ψ·n⟩_Γ on the vector space.
    L2PlusTrace,
    /// (∇·φ, ∇·ψ)_Ω on the vector space.
    DivDiv,
    /// ⟨φ·n, ψ·n⟩_Γ on the vector space.
    BoundaryTrace,
    /// (φ, ψ)_Ω on the vector space.
    VectorMass,
    /// (u, v)_Ω on the scalar space.
    ScalarMass,
}

/// Assemble a Gram matrix. Vector-space kinds give an n_φ × n_φ matrix,
/// `ScalarMass` an n_u × n_u matrix, and `ProductNorm` uses the full
/// (φ, u) block ordering.
pub fn assemble_gram(
    mesh: &Mesh,
    vspace: &VectorSpace,
    sspace: &ScalarSpace,
    kind: GramKind,
    quad: &QuadConfig,
) -> Result<SparseSym> {
    let nv = vspace.basis.len();
    let ns = sspace.basis.len();
    let n_phi = vspace.n_dofs();
    let n_total = match kind {
        GramKind::ProductNorm => n_phi + sspace.n_dofs(),
        GramKind::ScalarMass => sspace.n_dofs(),
        _ => n_phi,
    };
    let degrees: Vec<usize> = mesh
        .maps
        .iter()
        .map(|m| quad.element_degree(m, false))
        .collect();
    let tabs = build_tabulations(&degrees, sspace, vspace)?;
    let erule = edge_rule(quad.boundary_degree)?;

    let locals: Vec<Vec<f64>> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|t| {
            let map = &mesh.maps[t];
            let tab = &tabs[&degrees[t]];
            let geo = element_geometry(map, &tab.rule);
            let nt = match kind {
                GramKind::ProductNorm => nv + ns,
                GramKind::ScalarMass => ns,
                _ => nv,
            };
            let mut a = vec![0.0; nt * nt];
            for (q, w) in tab.rule.weights.iter().enumerate() {
                let dv = w * geo.det[q];
                let jac = &geo.jac[q];
                let det = geo.det[q];
                match kind {
                    GramKind::ScalarMass => {
                        for i in 0..ns {
                            for j in 0..ns {
                                a[i * nt + j] += tab.s_vals[i][q] * tab.s_vals[j][q] * dv;
                            }
                        }
                    }
                    GramKind::ProductNorm => {
                        let jinv_t = &geo.jinv_t[q];
                        for i in 0..nv {
                            let phi_i = jac * tab.v_vals[i][q] / det;
                            let div_i = tab.v_divs[i][q] / det;
                            for j in 0..nv {
                                let phi_j = jac * tab.v_vals[j][q] / det;
                                let div_j = tab.v_divs[j][q] / det;
                                a[i * nt + j] += (phi_i.dot(&phi_j) + div_i * div_j) * dv;
                            }
                        }
                        for i in 0..ns {
                            let gi = jinv_t * tab.s_grads[i][q];
                            for j in 0..ns {
                                let gj = jinv_t * tab.s_grads[j][q];
                                a[(nv + i) * nt + (nv + j)] +=
                                    (tab.s_vals[i][q] * tab.s_vals[j][q] + gi.dot(&gj)) * dv;
                            }
                        }
                    }
                    GramKind::L2PlusTrace | GramKind::VectorMass => {
                        for i in 0..nv {
                            let phi_i = jac * tab.v_vals[i][q] / det;
                            for j in 0..nv {
                                let phi_j = jac * tab.v_vals[j][q] / det;
                                a[i * nt + j] += phi_i.dot(&phi_j) * dv;
                            }
                        }
                    }
                    GramKind::DivDiv => {
                        for i in 0..nv {
                            for j in 0..nv {
                                a[i * nt + j] +=
                                    (tab.v_divs[i][q] / det) * (tab.v_divs[j][q] / det) * dv;
                            }
                        }
                    }
                    GramKind::BoundaryTrace => {}
                }
            }
            let with_trace = matches!(
                kind,
                GramKind::ProductNorm | GramKind::L2PlusTrace | GramKind::BoundaryTrace
            );
            if with_trace {
                for (l, _) in mesh.boundary_edges_of(t) {
                    for (q, w) in erule.weights.iter().enumerate() {
                        let tq = erule.points[q][0];
                        let rp = ReferenceTriangle::edge_point(l, tq);
                        let jac = map.jacobian(rp);
                        let det = jac.determinant();
                        let (_, normal, speed) = edge_geometry(map, l, tq);
                        let ds = w * speed;
                        let (bv, _) = vspace.basis.eval(rp);
                        for i in 0..nv {
                            let ti = (jac * bv[i] / det).dot(&normal);
                            for j in 0..nv {
                                let tj = (jac * bv[j] / det).dot(&normal);
                                a[i * nt + j] += ti * tj * ds;
                            }
                        }
                    }
                }
            }
            a
        })
        .collect();

    let mut triplets = Vec::new();
    for (t, a) in locals.iter().enumerate() {
        match kind {
            GramKind::ScalarMass => {
                let smap = &sspace.dofmap.elems[t];
                for i in 0..ns {
                    for j in 0..ns {
                        let v = smap[i].1 * smap[j].1 * a[i * ns + j];
                        if v != 0.0 {
                            triplets.push((smap[i].0, smap[j].0, v));
                        }
                    }
                }
            }
            GramKind::ProductNorm => {
                let nt = nv + ns;
                let vmap = &vspace.dofmap.elems[t];
                let smap = &sspace.dofmap.elems[t];
                let global = |i: usize| -> (usize, f64) {
                    if i < nv {
                        vmap[i]
                    } else {
                        let (g, s) = smap[i - nv];
                        (n_phi + g, s)
                    }
                };
                for i in 0..nt {
                    let (gi, si) = global(i);
                    for j in 0..nt {
                        let (gj, sj) = global(j);
                        let v = si * sj * a[i * nt + j];
                        if v != 0.0 {
                            triplets.push((gi, gj, v));
                        }
                    }
                }
            }
            _ => {
                let vmap = &vspace.dofmap.elems[t];
                for i in 0..nv {
                    for j in 0..nv {
                        let v = vmap[i].1 * vmap[j].1 * a[i * nv + j];
                        if v != 0.0 {
                            triplets.push((vmap[i].0, vmap[j].0, v));
                        }
                    }
                }
            }
        }
    }
    Ok(SparseSym::from_triplets(n_total, &triplets))
}

/// Coefficients of a discrete FOSLS pair, in the (φ, u) block split.
#[derive(Debug, Clone)]
pub struct FoslsSolution {
    pub phi: Vec<f64>,
    pub u: Vec<f64>,
}

impl FoslsSolution {
    pub fn from_block_vector(n_phi: usize, x: &[f64]) -> FoslsSolution {
        FoslsSolution {
            phi: x[..n_phi].to_vec(),
            u: x[n_phi..].to_vec(),
        }
    }

    pub fn zeros(vspace: &VectorSpace, sspace: &ScalarSpace) -> FoslsSolution {
        FoslsSolution {
            phi: vec![0.0; vspace.n_dofs()],
            u: vec![0.0; sspace.n_dofs()],
        }
    }

    pub fn block_vector(&self) -> Vec<f64> {
        let mut out = self.phi.clone();
        out.extend_from_slice(&self.u);
        out
    }
}

/// Point values of a discrete pair at a reference point of one element:
/// (u, ∇u, φ, ∇·φ) in physical coordinates.
pub fn evaluate_solution(
    mesh: &Mesh,
    vspace: &VectorSpace,
    sspace: &ScalarSpace,
    sol: &FoslsSolution,
    element: usize,
    ref_point: Vec2,
) -> (f64, Vec2, Vec2, f64) {
    let map = &mesh.maps[element];
    let jac = map.jacobian(ref_point);
    let det = jac.determinant();
    let jinv_t = jac.try_inverse().expect("invertible map").transpose();

    let (sv, sg) = sspace.basis.eval(ref_point);
    let mut u = 0.0;
    let mut grad_u = Vec2::zeros();
    for (loc, &(g, sign)) in sspace.dofmap.elems[element].iter().enumerate() {
        let c = sign * sol.u[g];
        u += c * sv[loc];
        grad_u += jinv_t * sg[loc] * c;
    }

    let (vv, vd) = vspace.basis.eval(ref_point);
    let mut phi = Vec2::zeros();
    let mut div_phi = 0.0;
    for (loc, &(g, sign)) in vspace.dofmap.elems[element].iter().enumerate() {
        let c = sign * sol.phi[g];
        let (pv, pd) = piola_push(&jac, det, vv[loc], vd[loc]).expect("positive Jacobian");
        phi += pv * c;
        div_phi += pd * c;
    }
    (u, grad_u, phi, div_phi)
}

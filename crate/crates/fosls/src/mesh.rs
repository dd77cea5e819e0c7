//! Triangulations of the unit square and the unit disk.
//!
//! Element maps have the structure `F_K = R_K ∘ A_K`: an affine map from the
//! reference triangle followed by an optional transfinite blend that bends
//! one edge onto the unit circle. Interior elements are affine. All
//! triangles are stored counter-clockwise, and edges carry a canonical
//! orientation (ascending global vertex id) that fixes the sign convention
//! for H(div) degrees of freedom.
//!
//! Reference triangle: vertices v0=(0,0), v1=(1,0), v2=(0,1); local edge i
//! is opposite vertex i and is parameterized from v_{i+1} to v_{i+2}
//! (indices mod 3), which traverses the boundary counter-clockwise.

use crate::quadrature::triangle_rule;
use crate::{FoslsError, Mat2, Result, Vec2};
use std::collections::BTreeMap;
use std::io::Write;

/// Local edge endpoints: edge i runs from EDGE_VERTS[i][0] to EDGE_VERTS[i][1].
pub const EDGE_VERTS: [[usize; 2]; 3] = [[1, 2], [2, 0], [0, 1]];

/// The fixed reference simplex.
pub struct ReferenceTriangle;

impl ReferenceTriangle {
    pub const AREA: f64 = 0.5;

    pub fn vertices() -> [Vec2; 3] {
        [
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
        ]
    }

    /// Point on local edge `l` at parameter t in [0, 1].
    pub fn edge_point(l: usize, t: f64) -> Vec2 {
        let v = Self::vertices();
        let a = v[EDGE_VERTS[l][0]];
        let b = v[EDGE_VERTS[l][1]];
        a + (b - a) * t
    }

    /// Constant tangent of local edge `l` (not normalized).
    pub fn edge_tangent(l: usize) -> Vec2 {
        let v = Self::vertices();
        v[EDGE_VERTS[l][1]] - v[EDGE_VERTS[l][0]]
    }

    /// Length of local edge `l`.
    pub fn edge_length(l: usize) -> f64 {
        Self::edge_tangent(l).norm()
    }

    /// Unit outward normal of local edge `l`.
    pub fn edge_normal(l: usize) -> Vec2 {
        let t = Self::edge_tangent(l);
        Vec2::new(t.y, -t.x).normalize()
    }

    /// Barycentric coordinates (λ0, λ1, λ2) of a reference point.
    pub fn barycentric(p: Vec2) -> [f64; 3] {
        [1.0 - p.x - p.y, p.x, p.y]
    }

    /// Constant reference gradients of the barycentric coordinates.
    pub fn barycentric_gradients() -> [Vec2; 3] {
        [
            Vec2::new(-1.0, -1.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
        ]
    }
}

/// Transfinite blend bending one local edge onto the unit circle.
#[derive(Debug, Clone)]
pub struct Blend {
    /// Local edge index that lies on the boundary.
    pub edge: usize,
    /// Arc angles of the edge endpoints, in local edge direction; the arc
    /// is the short one (|theta1 - theta0| < pi).
    pub theta0: f64,
    pub theta1: f64,
}

impl Blend {
    /// The arc-minus-chord displacement factors as D(t) = t(1-t) E(t) with
    /// E analytic. Returns (E, E', E'') evaluated by the power series
    ///
    ///   E(t) = -sum_{k>=2} (dθ)^k/k! · σ_{k-2}(t) · (cos(θ0+kπ/2), sin(θ0+kπ/2)),
    ///
    /// σ_m(t) = 1 + t + ... + t^m, which is stable for all t in [0, 1].
    fn edge_profile(&self, t: f64) -> (Vec2, Vec2, Vec2) {
        let dth = self.theta1 - self.theta0;
        let mut e = Vec2::zeros();
        let mut e1 = Vec2::zeros();
        let mut e2 = Vec2::zeros();
        // running sums of sigma_m, sigma_m', sigma_m'' with m = k - 2
        let (mut sig, mut sig1, mut sig2) = (0.0f64, 0.0f64, 0.0f64);
        let mut coef = dth; // becomes dth^k / k!
        for k in 2..=34usize {
            coef *= dth / k as f64;
            let m = (k - 2) as i32;
            sig += if m == 0 { 1.0 } else { t.powi(m) };
            if m >= 1 {
                sig1 += m as f64 * t.powi(m - 1);
            }
            if m >= 2 {
                sig2 += (m * (m - 1)) as f64 * t.powi(m - 2);
            }
            let phase = self.theta0 + k as f64 * std::f64::consts::FRAC_PI_2;
            let dir = Vec2::new(phase.cos(), phase.sin());
            e -= dir * (coef * sig);
            e1 -= dir * (coef * sig1);
            e2 -= dir * (coef * sig2);
            if coef.abs() * sig.max(1.0) < 1e-19 {
                break;
            }
        }
        (e, e1, e2)
    }
}

/// Element map from the reference triangle: affine part plus optional blend.
#[derive(Debug, Clone)]
pub struct ElementMap {
    /// Linear part of the affine map (columns are edge vectors from vertex 0).
    pub linear: Mat2,
    /// Affine offset (the image of reference vertex 0).
    pub offset: Vec2,
    pub blend: Option<Blend>,
    /// Element diameter.
    pub h: f64,
}

impl ElementMap {
    pub fn affine(p0: Vec2, p1: Vec2, p2: Vec2) -> Self {
        let linear = Mat2::from_columns(&[p1 - p0, p2 - p0]);
        let h = (p1 - p0).norm().max((p2 - p0).norm()).max((p2 - p1).norm());
        ElementMap {
            linear,
            offset: p0,
            blend: None,
            h,
        }
    }

    pub fn is_affine(&self) -> bool {
        self.blend.is_none()
    }

    /// Blend shape data at a reference point.
    ///
    /// The blend adds `A(λ) E(g(λ))` to the affine map, where `A = λ_a λ_b`
    /// vanishes on the two straight edges, `g = λ_b + λ_opp / 2` restricts
    /// to the edge parameter on the curved edge, and `E` is the analytic
    /// edge profile. Returns (A, g, ∇A, ∇g, ∇λ_a, ∇λ_b).
    fn blend_coords(blend: &Blend, p: Vec2) -> (f64, f64, Vec2, Vec2, Vec2, Vec2) {
        let lam = ReferenceTriangle::barycentric(p);
        let grads = ReferenceTriangle::barycentric_gradients();
        let a = EDGE_VERTS[blend.edge][0];
        let b = EDGE_VERTS[blend.edge][1];
        let opp = blend.edge;
        let amp = lam[a] * lam[b];
        let g = lam[b] + 0.5 * lam[opp];
        let grad_amp = grads[a] * lam[b] + grads[b] * lam[a];
        let grad_g = grads[b] + grads[opp] * 0.5;
        (amp, g, grad_amp, grad_g, grads[a], grads[b])
    }

    /// Physical point F(p).
    pub fn position(&self, p: Vec2) -> Vec2 {
        let mut x = self.offset + self.linear * p;
        if let Some(blend) = &self.blend {
            let (amp, g, _, _, _, _) = Self::blend_coords(blend, p);
            let (e, _, _) = blend.edge_profile(g);
            x += e * amp;
        }
        x
    }

    /// Jacobian dF/dp at a reference point.
    pub fn jacobian(&self, p: Vec2) -> Mat2 {
        let mut j = self.linear;
        if let Some(blend) = &self.blend {
            let (amp, g, grad_amp, grad_g, _, _) = Self::blend_coords(blend, p);
            let (e, e1, _) = blend.edge_profile(g);
            j += e * grad_amp.transpose() + e1 * (grad_g * amp).transpose();
        }
        j
    }

    /// Second derivatives (∂J/∂x̂, ∂J/∂ŷ) at a reference point.
    pub fn jacobian_derivative(&self, p: Vec2) -> [Mat2; 2] {
        match &self.blend {
            None => [Mat2::zeros(), Mat2::zeros()],
            Some(blend) => {
                let (amp, g, grad_amp, grad_g, ga, gb) = Self::blend_coords(blend, p);
                let (_, e1, e2) = blend.edge_profile(g);
                // Hess(A E_c) = HessA E_c' ... per component c:
                //   HessA·E_c + (∇A⊗∇g + ∇g⊗∇A) E_c' + A E_c'' ∇g⊗∇g
                let (e, _, _) = blend.edge_profile(g);
                let hess_amp = ga * gb.transpose() + gb * ga.transpose();
                let mut out = [Mat2::zeros(), Mat2::zeros()];
                for i in 0..2 {
                    for c in 0..2 {
                        for jj in 0..2 {
                            out[i][(c, jj)] = hess_amp[(i, jj)] * e[c]
                                + (grad_amp[i] * grad_g[jj] + grad_g[i] * grad_amp[jj]) * e1[c]
                                + amp * e2[c] * grad_g[i] * grad_g[jj];
                        }
                    }
                }
                out
            }
        }
    }

    pub fn det_jacobian(&self, p: Vec2) -> f64 {
        self.jacobian(p).determinant()
    }
}

/// Full map evaluation: physical point, Jacobian, and its determinant.
pub fn map_eval(map: &ElementMap, p: Vec2) -> (Vec2, Mat2, f64) {
    let x = map.position(p);
    let j = map.jacobian(p);
    (x, j, j.determinant())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    UnitSquare,
    UnitDisk,
}

/// Mesh edge with canonical (ascending vertex id) orientation.
#[derive(Debug, Clone)]
pub struct Edge {
    /// Endpoint vertex ids, v[0] < v[1].
    pub v: [usize; 2],
    /// Adjacent triangles (one for boundary edges).
    pub tris: Vec<usize>,
    pub boundary: bool,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub domain: Domain,
    pub vertices: Vec<Vec2>,
    /// Vertex index triples, counter-clockwise.
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<Edge>,
    /// Per triangle: (edge id, flipped) for local edges 0, 1, 2. `flipped`
    /// means the local direction opposes the canonical edge direction.
    pub tri_edges: Vec<[(usize, bool); 3]>,
    pub maps: Vec<ElementMap>,
    /// Maximum element diameter.
    pub h: f64,
}

impl Mesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(|&e| self.edges[e].boundary)
    }

    /// Local boundary edges of a triangle: (local edge index, edge id).
    pub fn boundary_edges_of(&self, tri: usize) -> Vec<(usize, usize)> {
        (0..3)
            .filter_map(|l| {
                let (e, _) = self.tri_edges[tri][l];
                self.edges[e].boundary.then_some((l, e))
            })
            .collect()
    }

    /// Area computed by quadrature of the element maps.
    pub fn area_by_quadrature(&self, degree: usize) -> f64 {
        let rule = triangle_rule(degree).expect("valid degree");
        self.maps
            .iter()
            .map(|m| {
                rule.points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(p, w)| w * m.det_jacobian(Vec2::new(p[0], p[1])))
                    .sum::<f64>()
            })
            .sum()
    }

    /// Shape-regularity constant: max over elements of
    /// max(h_K ||A'^{-1}||, ||A'|| / h_K) using the affine parts.
    pub fn shape_regularity(&self) -> f64 {
        self.maps
            .iter()
            .map(|m| {
                let svd = m.linear.svd(false, false);
                let smax = svd.singular_values[0].max(svd.singular_values[1]);
                let smin = svd.singular_values[0].min(svd.singular_values[1]);
                (m.h / smin).max(smax / m.h)
            })
            .fold(0.0, f64::max)
    }

    fn build(
        domain: Domain,
        vertices: Vec<Vec2>,
        triangles: Vec<[usize; 3]>,
    ) -> Result<Mesh> {
        // canonical edge table, deterministic order by (min, max) vertex ids
        let mut edge_ids: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut tri_edges = vec![[(0usize, false); 3]; triangles.len()];
        for (ti, tri) in triangles.iter().enumerate() {
            for l in 0..3 {
                let a = tri[EDGE_VERTS[l][0]];
                let b = tri[EDGE_VERTS[l][1]];
                let key = (a.min(b), a.max(b));
                let id = *edge_ids.entry(key).or_insert_with(|| {
                    edges.push(Edge {
                        v: [key.0, key.1],
                        tris: Vec::new(),
                        boundary: false,
                    });
                    edges.len() - 1
                });
                edges[id].tris.push(ti);
                tri_edges[ti][l] = (id, a > b);
            }
        }
        for e in &mut edges {
            e.boundary = e.tris.len() == 1;
            if e.tris.len() > 2 {
                return Err(FoslsError::InvalidConfig(format!(
                    "edge {:?} shared by {} triangles",
                    e.v,
                    e.tris.len()
                )));
            }
        }

        // element maps: affine from vertex positions, blends added for
        // boundary edges of the disk
        let mut maps = Vec::with_capacity(triangles.len());
        for (ti, tri) in triangles.iter().enumerate() {
            let [p0, p1, p2] = [vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]];
            let mut map = ElementMap::affine(p0, p1, p2);
            if map.linear.determinant() <= 0.0 {
                return Err(FoslsError::InvalidConfig(format!(
                    "triangle {ti} is not counter-clockwise"
                )));
            }
            if domain == Domain::UnitDisk {
                let bdry: Vec<usize> = (0..3)
                    .filter(|&l| edges[tri_edges[ti][l].0].boundary)
                    .collect();
                if bdry.len() > 1 {
                    return Err(FoslsError::InvalidConfig(format!(
                        "triangle {ti} has {} boundary edges",
                        bdry.len()
                    )));
                }
                if let Some(&l) = bdry.first() {
                    let pa = vertices[tri[EDGE_VERTS[l][0]]];
                    let pb = vertices[tri[EDGE_VERTS[l][1]]];
                    let theta0 = pa.y.atan2(pa.x);
                    let mut theta1 = pb.y.atan2(pb.x);
                    // choose the short arc
                    if theta1 - theta0 > std::f64::consts::PI {
                        theta1 -= 2.0 * std::f64::consts::PI;
                    } else if theta0 - theta1 > std::f64::consts::PI {
                        theta1 += 2.0 * std::f64::consts::PI;
                    }
                    map.blend = Some(Blend {
                        edge: l,
                        theta0,
                        theta1,
                    });
                    // account for the arc bulge in the diameter
                    let mid = map.position(ReferenceTriangle::edge_point(l, 0.5));
                    for q in [p0, p1, p2] {
                        map.h = map.h.max((mid - q).norm());
                    }
                }
            }
            maps.push(map);
        }

        // curved maps must have positive Jacobians at quadrature points
        let probe = triangle_rule(20).expect("valid degree");
        for (ti, map) in maps.iter().enumerate() {
            if map.is_affine() {
                continue;
            }
            for p in &probe.points {
                let p = Vec2::new(p[0], p[1]);
                let det = map.det_jacobian(p);
                if det <= 0.0 {
                    return Err(FoslsError::DegenerateMap {
                        element: ti,
                        x: p.x,
                        y: p.y,
                        det,
                    });
                }
            }
        }

        let h = maps.iter().map(|m| m.h).fold(0.0, f64::max);
        Ok(Mesh {
            domain,
            vertices,
            triangles,
            edges,
            tri_edges,
            maps,
            h,
        })
    }
}

/// Single-element mesh consisting of exactly the reference triangle.
pub fn make_reference_triangle_mesh() -> Result<Mesh> {
    Mesh::build(
        Domain::UnitSquare,
        ReferenceTriangle::vertices().to_vec(),
        vec![[0, 1, 2]],
    )
}

/// Structured triangulation of the unit square with n subdivisions per side.
pub fn make_square_mesh(n: usize) -> Result<Mesh> {
    assert!(n >= 1, "need at least one subdivision");
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(Vec2::new(i as f64 / n as f64, j as f64 / n as f64));
        }
    }
    let vid = |i: usize, j: usize| j * (n + 1) + i;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            triangles.push([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)]);
            triangles.push([vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)]);
        }
    }
    Mesh::build(Domain::UnitSquare, vertices, triangles)
}

/// Coarse-mesh inner ring radius for the disk. The circle r = 1/2 must
/// cross element interiors rather than mesh lines at every refinement
/// level; with the ratio 0.5 / 0.625 = 4/5 the interface sits at dyadic
/// fractional positions {0.8, 0.6, 0.2, 0.4} inside the fan elements, at
/// least a fifth of an element away from radial mesh lines on all levels.
const DISK_INNER_RADIUS: f64 = 0.625;

/// Triangulation of the unit disk at the given uniform refinement level.
///
/// Level 0 is a 24-element two-ring mesh with h ≈ 0.6; every boundary edge
/// is mapped exactly onto its circular arc.
pub fn make_disk_mesh(level: usize) -> Result<Mesh> {
    let mut mesh = disk_level_zero()?;
    for _ in 0..level {
        mesh = refine_uniform(&mesh)?;
    }
    Ok(mesh)
}

fn disk_level_zero() -> Result<Mesh> {
    let mut vertices = vec![Vec2::new(0.0, 0.0)];
    for k in 0..6 {
        let th = 2.0 * std::f64::consts::PI * k as f64 / 6.0;
        vertices.push(Vec2::new(th.cos(), th.sin()) * DISK_INNER_RADIUS);
    }
    for k in 0..12 {
        let th = 2.0 * std::f64::consts::PI * k as f64 / 12.0;
        vertices.push(Vec2::new(th.cos(), th.sin()));
    }
    let inner = |k: usize| 1 + k % 6;
    let outer = |k: usize| 7 + k % 12;
    let mut triangles = Vec::with_capacity(24);
    for k in 0..6 {
        triangles.push([0, inner(k), inner(k + 1)]);
        triangles.push([inner(k), outer(2 * k), outer(2 * k + 1)]);
        triangles.push([inner(k), outer(2 * k + 1), inner(k + 1)]);
        triangles.push([inner(k + 1), outer(2 * k + 1), outer(2 * k + 2)]);
    }
    Mesh::build(Domain::UnitDisk, vertices, triangles)
}

/// Uniform refinement: each triangle is split into 4 children through the
/// edge midpoints. New boundary vertices of the disk are snapped onto the
/// circle (arc midpoints), so the boundary stays exact at every level.
pub fn refine_uniform(mesh: &Mesh) -> Result<Mesh> {
    let mut vertices = mesh.vertices.clone();
    let mut midpoint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for e in &mesh.edges {
        let pa = mesh.vertices[e.v[0]];
        let pb = mesh.vertices[e.v[1]];
        let pm = if e.boundary && mesh.domain == Domain::UnitDisk {
            let tha = pa.y.atan2(pa.x);
            let mut thb = pb.y.atan2(pb.x);
            if thb - tha > std::f64::consts::PI {
                thb -= 2.0 * std::f64::consts::PI;
            } else if tha - thb > std::f64::consts::PI {
                thb += 2.0 * std::f64::consts::PI;
            }
            let thm = 0.5 * (tha + thb);
            Vec2::new(thm.cos(), thm.sin())
        } else {
            (pa + pb) * 0.5
        };
        midpoint.insert((e.v[0], e.v[1]), vertices.len());
        vertices.push(pm);
    }
    let mid = |a: usize, b: usize| midpoint[&(a.min(b), a.max(b))];
    let mut triangles = Vec::with_capacity(4 * mesh.n_triangles());
    for tri in &mesh.triangles {
        let [v0, v1, v2] = *tri;
        let (m01, m12, m20) = (mid(v0, v1), mid(v1, v2), mid(v2, v0));
        triangles.push([v0, m01, m20]);
        triangles.push([v1, m12, m01]);
        triangles.push([v2, m20, m12]);
        triangles.push([m01, m12, m20]);
    }
    Mesh::build(mesh.domain, vertices, triangles)
}

/// Plain-text mesh dump: header `nv nt ne`, vertex coordinates, triangle
/// vertex triples, then edge records `v0 v1 boundary`.
pub fn dump_mesh<W: Write>(mesh: &Mesh, out: &mut W) -> std::io::Result<()> {
    writeln!(
        out,
        "{} {} {}",
        mesh.n_vertices(),
        mesh.n_triangles(),
        mesh.n_edges()
    )?;
    for v in &mesh.vertices {
        writeln!(out, "{:.17e} {:.17e}", v.x, v.y)?;
    }
    for t in &mesh.triangles {
        writeln!(out, "{} {} {}", t[0], t[1], t[2])?;
    }
    for e in &mesh.edges {
        writeln!(out, "{} {} {}", e.v[0], e.v[1], u8::from(e.boundary))?;
    }
    Ok(())
}

/// Physical data of one local edge at parameter t: position, unit outward
/// normal, and speed |dx/dt| (the arc-length factor for dt-integrals).
pub fn edge_geometry(map: &ElementMap, local_edge: usize, t: f64) -> (Vec2, Vec2, f64) {
    let p = ReferenceTriangle::edge_point(local_edge, t);
    let j = map.jacobian(p);
    let tangent = j * ReferenceTriangle::edge_tangent(local_edge);
    let speed = tangent.norm();
    let normal = Vec2::new(tangent.y, -tangent.x) / speed;
    (map.position(p), normal, speed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn square_n1_has_two_triangles_of_total_area_one() {
        let mesh = make_square_mesh(1).unwrap();
        assert_eq!(mesh.n_triangles(), 2);
        let area: f64 = mesh
            .maps
            .iter()
            .map(|m| m.linear.determinant().abs() / 2.0)
            .sum();
        assert!((area - 1.0).abs() < 1e-15);
    }

    #[test]
    fn square_n4_counts_and_mesh_size() {
        let mesh = make_square_mesh(4).unwrap();
        assert_eq!(mesh.n_triangles(), 32);
        assert!((mesh.h - 2f64.sqrt() / 4.0).abs() < 1e-14);
    }

    #[test]
    fn square_n2_determinants_partition_area() {
        let mesh = make_square_mesh(2).unwrap();
        let area: f64 = mesh
            .maps
            .iter()
            .map(|m| m.linear.determinant().abs() / 2.0)
            .sum();
        assert!((area - 1.0).abs() < 1e-14);
    }

    #[test]
    fn disk_level_zero_mesh_size() {
        let mesh = make_disk_mesh(0).unwrap();
        assert_eq!(mesh.n_triangles(), 24);
        assert!(mesh.h > 0.5 && mesh.h < 0.7, "h = {}", mesh.h);
    }

    #[test]
    fn disk_area_is_pi_at_all_levels() {
        for level in 0..3 {
            let mesh = make_disk_mesh(level).unwrap();
            let area = mesh.area_by_quadrature(12);
            assert!(
                (area - std::f64::consts::PI).abs() < 1e-10,
                "level {level}: area {area}"
            );
        }
    }

    #[test]
    fn disk_interior_edges_avoid_half_radius_circle() {
        for level in 0..3 {
            let mesh = make_disk_mesh(level).unwrap();
            for e in &mesh.edges {
                if e.boundary {
                    continue;
                }
                let m = (mesh.vertices[e.v[0]] + mesh.vertices[e.v[1]]) * 0.5;
                assert!(
                    (m.norm() - 0.5).abs() > 1e-3,
                    "level {level}: edge midpoint at r = {}",
                    m.norm()
                );
            }
        }
    }

    #[test]
    fn refine_square_quadruples_triangles() {
        let mesh = make_square_mesh(1).unwrap();
        let fine = refine_uniform(&mesh).unwrap();
        assert_eq!(fine.n_triangles(), 8);
        assert!(fine.h <= 0.51 * mesh.h);
    }

    #[test]
    fn disk_refined_twice_matches_level_two() {
        let a = refine_uniform(&refine_uniform(&make_disk_mesh(0).unwrap()).unwrap()).unwrap();
        let b = make_disk_mesh(2).unwrap();
        assert_eq!(a.n_vertices(), b.n_vertices());
        // same vertex sets up to reordering
        let mut pa: Vec<(f64, f64)> = a.vertices.iter().map(|v| (v.x, v.y)).collect();
        let mut pb: Vec<(f64, f64)> = b.vertices.iter().map(|v| (v.x, v.y)).collect();
        let key = |p: &(f64, f64)| (p.0 * 1e6, p.1 * 1e6);
        pa.sort_by(|p, q| key(p).partial_cmp(&key(q)).unwrap());
        pb.sort_by(|p, q| key(p).partial_cmp(&key(q)).unwrap());
        for (p, q) in pa.iter().zip(&pb) {
            assert!((p.0 - q.0).abs() < 1e-12 && (p.1 - q.1).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_edges_lie_on_unit_circle() {
        let mesh = make_disk_mesh(1).unwrap();
        for e in mesh.boundary_edges().collect::<Vec<_>>() {
            let tri = mesh.edges[e].tris[0];
            let l = (0..3).find(|&l| mesh.tri_edges[tri][l].0 == e).unwrap();
            for k in 0..=10 {
                let t = k as f64 / 10.0;
                let (x, _, _) = edge_geometry(&mesh.maps[tri], l, t);
                assert!((x.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn affine_map_eval_hand_values() {
        let map = ElementMap {
            linear: Mat2::new(2.0, 0.0, 0.0, 2.0),
            offset: Vec2::new(1.0, 0.0),
            blend: None,
            h: 2.0 * 2f64.sqrt(),
        };
        let (x, _, det) = map_eval(&map, Vec2::new(0.0, 0.0));
        assert!((x - Vec2::new(1.0, 0.0)).norm() < 1e-15);
        assert!((det - 4.0).abs() < 1e-15);

        let ident = ElementMap::affine(
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
        );
        let (_, j, _) = map_eval(&ident, Vec2::new(0.3, 0.2));
        assert!((j - Mat2::identity()).norm() < 1e-15);
    }

    #[test]
    fn curved_jacobian_matches_finite_differences() {
        let mesh = make_disk_mesh(0).unwrap();
        let map = mesh
            .maps
            .iter()
            .find(|m| !m.is_affine())
            .expect("disk has curved elements");
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let step = 1e-6;
        for _ in 0..10 {
            // interior point away from the blend's opposite vertex
            let a: f64 = rng.gen_range(0.1..0.8);
            let b: f64 = rng.gen_range(0.1..(0.9 - a));
            let p = Vec2::new(a, b);
            let j = map.jacobian(p);
            for dim in 0..2 {
                let mut dp = Vec2::zeros();
                dp[dim] = step;
                let fd = (map.position(p + dp) - map.position(p - dp)) / (2.0 * step);
                for c in 0..2 {
                    assert!(
                        (fd[c] - j[(c, dim)]).abs() < 1e-6,
                        "component ({c},{dim}): fd {} vs {}",
                        fd[c],
                        j[(c, dim)]
                    );
                }
            }
        }
    }

    #[test]
    fn shared_edges_parameterize_compatibly() {
        for mesh in [make_square_mesh(2).unwrap(), make_disk_mesh(1).unwrap()] {
            for (ei, e) in mesh.edges.iter().enumerate() {
                if e.boundary {
                    continue;
                }
                let (t0, t1) = (e.tris[0], e.tris[1]);
                let l0 = (0..3).find(|&l| mesh.tri_edges[t0][l].0 == ei).unwrap();
                let l1 = (0..3).find(|&l| mesh.tri_edges[t1][l].0 == ei).unwrap();
                let f0 = mesh.tri_edges[t0][l0].1;
                let f1 = mesh.tri_edges[t1][l1].1;
                assert_ne!(f0, f1, "adjacent triangles traverse edge oppositely");
                for k in 0..5 {
                    let s = (k as f64 + 0.5) / 5.0;
                    // map the canonical parameter into each local direction
                    let ta = if f0 { 1.0 - s } else { s };
                    let tb = if f1 { 1.0 - s } else { s };
                    let xa = mesh.maps[t0].position(ReferenceTriangle::edge_point(l0, ta));
                    let xb = mesh.maps[t1].position(ReferenceTriangle::edge_point(l1, tb));
                    assert!((xa - xb).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn shape_regularity_bounded_and_stable() {
        let m0 = make_square_mesh(2).unwrap();
        let k0 = m0.shape_regularity();
        let m1 = refine_uniform(&m0).unwrap();
        assert!(m1.shape_regularity() <= k0 + 1e-12);
        for level in 0..3 {
            let kappa = make_disk_mesh(level).unwrap().shape_regularity();
            assert!(kappa <= 10.0, "level {level}: kappa = {kappa}");
        }
    }

    #[test]
    fn dump_format_round_trips_counts() {
        let mesh = make_square_mesh(1).unwrap();
        let mut buf = Vec::new();
        dump_mesh(&mesh, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        let header: Vec<usize> = lines
            .next()
            .unwrap()
            .split_whitespace()
            .map(|s| s.parse().unwrap())
            .collect();
        assert_eq!(header, vec![4, 2, 5]);
        assert_eq!(text.lines().count(), 1 + 4 + 2 + 5);
    }
}

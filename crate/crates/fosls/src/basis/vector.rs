//! H(div)-conforming vector bases on the reference triangle.
//!
//! Local spaces:
//!   * Raviart-Thomas of degree parameter p:  P_{p-1}² + x·P̃_{p-1}
//!     (dimension p(p+2), p normal-trace modes per edge);
//!   * Brezzi-Douglas-Marini of degree p:     P_p²
//!     (dimension (p+1)(p+2), p+1 normal-trace modes per edge).
//!
//! The basis is constructed from monomial generators in two groups. The
//! edge function for (edge l, mode j) is the minimum-L²-norm member of the
//! space whose normal trace is q_j(t)/|ê_l| on edge l and zero on the other
//! edges, where q_j is the orthonormal shifted Legendre polynomial on
//! [0, 1]. With that scaling the Piola image has physical normal trace
//! q_j(t) / |edge speed|, which is identical from both sides of a shared
//! edge and makes inter-element matching a pure sign convention. Interior
//! functions span the kernel of the trace map, orthonormalized in L².

use crate::mesh::ReferenceTriangle;
use crate::quadrature::{edge_rule, legendre};
use crate::{Mat2, Vec2};
use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VectorFamily {
    RaviartThomas,
    BrezziDouglasMarini,
}

impl VectorFamily {
    pub fn short_name(&self) -> &'static str {
        match self {
            VectorFamily::RaviartThomas => "rt",
            VectorFamily::BrezziDouglasMarini => "bdm",
        }
    }
}

/// Monomial generators of the local spaces.
#[derive(Debug, Clone, Copy)]
enum Monomial {
    /// (x^a y^b, 0)
    X { a: i32, b: i32 },
    /// (0, x^a y^b)
    Y { a: i32, b: i32 },
    /// x · x^a y^b = (x^{a+1} y^b, x^a y^{b+1}), with a + b homogeneous
    Radial { a: i32, b: i32 },
}

fn pow(x: f64, e: i32) -> f64 {
    if e < 0 {
        0.0
    } else {
        x.powi(e)
    }
}

impl Monomial {
    fn value(&self, p: Vec2) -> Vec2 {
        match *self {
            Monomial::X { a, b } => Vec2::new(pow(p.x, a) * pow(p.y, b), 0.0),
            Monomial::Y { a, b } => Vec2::new(0.0, pow(p.x, a) * pow(p.y, b)),
            Monomial::Radial { a, b } => Vec2::new(
                pow(p.x, a + 1) * pow(p.y, b),
                pow(p.x, a) * pow(p.y, b + 1),
            ),
        }
    }

    fn div(&self, p: Vec2) -> f64 {
        match *self {
            Monomial::X { a, b } => a as f64 * pow(p.x, a - 1) * pow(p.y, b),
            Monomial::Y { a, b } => b as f64 * pow(p.x, a) * pow(p.y, b - 1),
            Monomial::Radial { a, b } => (a + b + 2) as f64 * pow(p.x, a) * pow(p.y, b),
        }
    }

    /// Reference Jacobian dφ̂/d(x̂, ŷ).
    fn jacobian(&self, p: Vec2) -> Mat2 {
        let grad = |a: i32, b: i32| {
            Vec2::new(
                a as f64 * pow(p.x, a - 1) * pow(p.y, b),
                b as f64 * pow(p.x, a) * pow(p.y, b - 1),
            )
        };
        match *self {
            Monomial::X { a, b } => {
                let g = grad(a, b);
                Mat2::new(g.x, g.y, 0.0, 0.0)
            }
            Monomial::Y { a, b } => {
                let g = grad(a, b);
                Mat2::new(0.0, 0.0, g.x, g.y)
            }
            Monomial::Radial { a, b } => {
                let g0 = grad(a + 1, b);
                let g1 = grad(a, b + 1);
                Mat2::new(g0.x, g0.y, g1.x, g1.y)
            }
        }
    }

    /// Exponent pairs of the two components (for exact moments).
    fn exponents(&self, component: usize) -> Option<(i32, i32)> {
        match (*self, component) {
            (Monomial::X { a, b }, 0) => Some((a, b)),
            (Monomial::X { .. }, _) => None,
            (Monomial::Y { .. }, 0) => None,
            (Monomial::Y { a, b }, 1) => Some((a, b)),
            (Monomial::Radial { a, b }, 0) => Some((a + 1, b)),
            (Monomial::Radial { a, b }, 1) => Some((a, b + 1)),
            _ => None,
        }
    }
}

/// Orthonormal Legendre polynomial on L²(0, 1): q_j(t) = sqrt(2j+1) P_j(2t-1).
pub fn edge_mode(j: usize, t: f64) -> f64 {
    let (p, _) = legendre(j, 2.0 * t - 1.0);
    ((2 * j + 1) as f64).sqrt() * p
}

#[derive(Debug, Clone)]
pub struct VectorBasis {
    pub family: VectorFamily,
    /// Degree parameter p_v >= 1.
    pub degree: usize,
    monomials: Vec<Monomial>,
    /// Shape-function coefficients over the monomial generators, one row
    /// per shape function: edge functions first (edge-major, mode-minor),
    /// then L²-orthonormal interior functions.
    coeffs: DMatrix<f64>,
}

impl VectorBasis {
    pub fn new(family: VectorFamily, degree: usize) -> Self {
        assert!(degree >= 1, "vector degree must be >= 1");
        let monomials = Self::generators(family, degree);
        let n = monomials.len();
        let n_em = Self::edge_modes_for(family, degree);

        // exact L² mass of the generators
        let mut mass = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut m = 0.0;
                for c in 0..2 {
                    if let (Some((ai, bi)), Some((aj, bj))) =
                        (monomials[i].exponents(c), monomials[j].exponents(c))
                    {
                        m += crate::quadrature::triangle_monomial_moment(
                            (ai + aj) as usize,
                            (bi + bj) as usize,
                        );
                    }
                }
                mass[(i, j)] = m;
            }
        }

        // normal-trace moments: row (l, j), column = generator
        let nrows = 3 * n_em;
        let rule = edge_rule(2 * degree + 4).expect("valid degree");
        let mut trace = DMatrix::<f64>::zeros(nrows, n);
        for l in 0..3 {
            let normal = ReferenceTriangle::edge_normal(l);
            for (q, w) in rule.points.iter().zip(&rule.weights) {
                let t = q[0];
                let point = ReferenceTriangle::edge_point(l, t);
                for (col, mono) in monomials.iter().enumerate() {
                    let fluxdens = mono.value(point).dot(&normal);
                    for j in 0..n_em {
                        trace[(l * n_em + j, col)] += w * fluxdens * edge_mode(j, t);
                    }
                }
            }
        }

        // edge functions: minimum-L²-norm subject to prescribed traces
        let kkt_n = n + nrows;
        let mut kkt = DMatrix::<f64>::zeros(kkt_n, kkt_n);
        kkt.view_mut((0, 0), (n, n)).copy_from(&mass);
        kkt.view_mut((0, n), (n, nrows)).copy_from(&trace.transpose());
        kkt.view_mut((n, 0), (nrows, n)).copy_from(&trace);
        let lu = kkt.lu();
        let mut coeffs = DMatrix::<f64>::zeros(n, n);
        for l in 0..3 {
            let scale = 1.0 / ReferenceTriangle::edge_length(l);
            for j in 0..n_em {
                let mut rhs = nalgebra::DVector::<f64>::zeros(kkt_n);
                rhs[n + l * n_em + j] = scale;
                let sol = lu.solve(&rhs).expect("trace constraints solvable");
                for col in 0..n {
                    coeffs[(l * n_em + j, col)] = sol[col];
                }
            }
        }

        // interior functions: kernel of the trace map, orthonormal in L²;
        // greedy pivoted Gram-Schmidt on the kernel projector columns
        let n_int = n - nrows;
        if n_int > 0 {
            let tt = &trace * trace.transpose();
            let tt_inv = tt.clone().try_inverse().expect("trace map has full row rank");
            let projector = DMatrix::<f64>::identity(n, n) - trace.transpose() * tt_inv * &trace;
            let mut kept: Vec<nalgebra::DVector<f64>> = Vec::with_capacity(n_int);
            let mut cols: Vec<nalgebra::DVector<f64>> =
                (0..n).map(|c| projector.column(c).into_owned()).collect();
            for _ in 0..n_int {
                // orthogonalize all candidates against kept, pick the largest
                for v in cols.iter_mut() {
                    for u in &kept {
                        let proj = u.dot(&(&mass * &*v));
                        *v -= u * proj;
                    }
                }
                let (best, norm2) = cols
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (i, v.dot(&(&mass * v))))
                    .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                    .unwrap();
                assert!(norm2 > 1e-18, "interior space deficient");
                let v = cols[best].clone() / norm2.sqrt();
                kept.push(v);
            }
            for (i, v) in kept.iter().enumerate() {
                for col in 0..n {
                    coeffs[(nrows + i, col)] = v[col];
                }
            }
        }

        VectorBasis {
            family,
            degree,
            monomials,
            coeffs,
        }
    }

    fn generators(family: VectorFamily, degree: usize) -> Vec<Monomial> {
        let mut monomials = Vec::new();
        let full = match family {
            VectorFamily::RaviartThomas => degree - 1,
            VectorFamily::BrezziDouglasMarini => degree,
        } as i32;
        for total in 0..=full {
            for a in 0..=total {
                monomials.push(Monomial::X {
                    a: total - a,
                    b: a,
                });
            }
        }
        for total in 0..=full {
            for a in 0..=total {
                monomials.push(Monomial::Y {
                    a: total - a,
                    b: a,
                });
            }
        }
        if family == VectorFamily::RaviartThomas {
            for a in 0..=full {
                monomials.push(Monomial::Radial { a: full - a, b: a });
            }
        }
        monomials
    }

    fn edge_modes_for(family: VectorFamily, degree: usize) -> usize {
        match family {
            VectorFamily::RaviartThomas => degree,
            VectorFamily::BrezziDouglasMarini => degree + 1,
        }
    }

    /// Number of shape functions.
    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Normal-trace modes per edge.
    pub fn edge_modes(&self) -> usize {
        Self::edge_modes_for(self.family, self.degree)
    }

    /// Interior shape functions.
    pub fn interior_modes(&self) -> usize {
        self.len() - 3 * self.edge_modes()
    }

    /// Reference values and divergences of all shape functions at one point.
    pub fn eval(&self, p: Vec2) -> (Vec<Vec2>, Vec<f64>) {
        let nm = self.monomials.len();
        let mono_vals: Vec<Vec2> = self.monomials.iter().map(|m| m.value(p)).collect();
        let mono_divs: Vec<f64> = self.monomials.iter().map(|m| m.div(p)).collect();
        let n = self.len();
        let mut values = Vec::with_capacity(n);
        let mut divs = Vec::with_capacity(n);
        for i in 0..n {
            let mut v = Vec2::zeros();
            let mut d = 0.0;
            for m in 0..nm {
                let c = self.coeffs[(i, m)];
                v += mono_vals[m] * c;
                d += mono_divs[m] * c;
            }
            values.push(v);
            divs.push(d);
        }
        (values, divs)
    }

    /// Reference Jacobians dφ̂/dx̂ of all shape functions at one point.
    pub fn eval_jacobians(&self, p: Vec2) -> Vec<Mat2> {
        let mono_jacs: Vec<Mat2> = self.monomials.iter().map(|m| m.jacobian(p)).collect();
        (0..self.len())
            .map(|i| {
                let mut jac = Mat2::zeros();
                for (m, mj) in mono_jacs.iter().enumerate() {
                    jac += mj * self.coeffs[(i, m)];
                }
                jac
            })
            .collect()
    }

    /// Tabulated reference values/divergences, indexed [fn][point].
    pub fn tabulate(&self, points: &[[f64; 2]]) -> (Vec<Vec<Vec2>>, Vec<Vec<f64>>) {
        let n = self.len();
        let mut values = vec![Vec::with_capacity(points.len()); n];
        let mut divs = vec![Vec::with_capacity(points.len()); n];
        for p in points {
            let (v, d) = self.eval(Vec2::new(p[0], p[1]));
            for i in 0..n {
                values[i].push(v[i]);
                divs[i].push(d[i]);
            }
        }
        (values, divs)
    }

    /// Reference normal trace φ̂_i · n̂_l at edge parameter t.
    pub fn edge_trace(&self, i: usize, l: usize, t: f64) -> f64 {
        let p = ReferenceTriangle::edge_point(l, t);
        let (v, _) = self.eval(p);
        v[i].dot(&ReferenceTriangle::edge_normal(l))
    }
}

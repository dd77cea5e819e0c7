//! Global degree-of-freedom maps for H¹ and H(div) conforming spaces.
//!
//! Scalar numbering: vertices, then (p_s - 1) modes per edge, then element
//! interiors. Vector numbering: edge-trace modes per edge, then element
//! interiors. Conformity across a shared edge reduces to a sign per mode
//! because the edge kernels are parity-symmetric:
//!   * scalar edge mode k picks up (-1)^k when the local edge direction
//!     opposes the canonical (ascending vertex id) direction;
//!   * vector edge mode j picks up (-1)^(j+1): the parity of the Legendre
//!     trace mode combined with the flip of the outward normal.

use crate::basis::{ScalarBasis, VectorBasis, VectorFamily};
use crate::mesh::Mesh;

#[derive(Debug, Clone)]
pub struct DofMap {
    pub n_dofs: usize,
    /// Per element: (global index, orientation sign) for each local function.
    pub elems: Vec<Vec<(usize, f64)>>,
}

impl DofMap {
    pub fn scalar(mesh: &Mesh, basis: &ScalarBasis) -> DofMap {
        let p = basis.degree;
        let em = basis.edge_modes();
        let im = basis.interior_modes();
        let nv = mesh.n_vertices();
        let ne = mesh.n_edges();
        let n_dofs = nv + ne * em + mesh.n_triangles() * im;
        let mut elems = Vec::with_capacity(mesh.n_triangles());
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let mut local = Vec::with_capacity(basis.len());
            for &v in tri {
                local.push((v, 1.0));
            }
            for l in 0..3 {
                let (e, flipped) = mesh.tri_edges[t][l];
                for k in 0..em {
                    let sign = if flipped && k % 2 == 1 { -1.0 } else { 1.0 };
                    local.push((nv + e * em + k, sign));
                }
            }
            for i in 0..im {
                local.push((nv + ne * em + t * im + i, 1.0));
            }
            debug_assert_eq!(local.len(), basis.len());
            elems.push(local);
        }
        let _ = p;
        DofMap { n_dofs, elems }
    }

    pub fn vector(mesh: &Mesh, basis: &VectorBasis) -> DofMap {
        let em = basis.edge_modes();
        let im = basis.interior_modes();
        let ne = mesh.n_edges();
        let n_dofs = ne * em + mesh.n_triangles() * im;
        let mut elems = Vec::with_capacity(mesh.n_triangles());
        for t in 0..mesh.n_triangles() {
            let mut local = Vec::with_capacity(basis.len());
            for l in 0..3 {
                let (e, flipped) = mesh.tri_edges[t][l];
                for j in 0..em {
                    let sign = if flipped && j % 2 == 0 { -1.0 } else { 1.0 };
                    local.push((e * em + j, sign));
                }
            }
            for i in 0..im {
                local.push((ne * em + t * im + i, 1.0));
            }
            debug_assert_eq!(local.len(), basis.len());
            elems.push(local);
        }
        DofMap { n_dofs, elems }
    }
}

/// H¹-conforming scalar space S_p on a mesh.
#[derive(Debug, Clone)]
pub struct ScalarSpace {
    pub basis: ScalarBasis,
    pub dofmap: DofMap,
}

impl ScalarSpace {
    pub fn new(mesh: &Mesh, degree: usize) -> ScalarSpace {
        let basis = ScalarBasis::new(degree);
        let dofmap = DofMap::scalar(mesh, &basis);
        ScalarSpace { basis, dofmap }
    }

    pub fn n_dofs(&self) -> usize {
        self.dofmap.n_dofs
    }
}

/// H(div)-conforming vector space (RT or BDM) on a mesh.
#[derive(Debug, Clone)]
pub struct VectorSpace {
    pub basis: VectorBasis,
    pub dofmap: DofMap,
}

impl VectorSpace {
    pub fn new(mesh: &Mesh, family: VectorFamily, degree: usize) -> VectorSpace {
        let basis = VectorBasis::new(family, degree);
        let dofmap = DofMap::vector(mesh, &basis);
        VectorSpace { basis, dofmap }
    }

    pub fn n_dofs(&self) -> usize {
        self.dofmap.n_dofs
    }
}

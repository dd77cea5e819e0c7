//! First-order system least-squares (FOSLS) finite elements in 2D.
//!
//! The second-order model problem `-Δu + γu = f` with Robin boundary data
//! `∂_n u + αu = g` is rewritten as a first-order system in the pair
//! `(φ, u)` with `φ = -∇u`, and the L² residual of all three equations
//! (volume, gradient, boundary) is minimized over `RT/BDM × S_p` product
//! spaces. The crate provides meshes of the unit square and unit disk
//! (curved boundary elements), high-order scalar and H(div) bases, sparse
//! SPD assembly and solvers, exact solutions for verification, and a
//! convergence-study harness with CSV/SVG output.

pub mod assembly;
pub mod basis;
pub mod errors;
pub mod harness;
pub mod mesh;
pub mod oracle;
pub mod projector;
pub mod quadrature;
pub mod solve;

mod error;

pub use error::{FoslsError, Result};

/// 2D point or vector.
pub type Vec2 = nalgebra::Vector2<f64>;
/// 2x2 matrix (element-map Jacobians, affine parts).
pub type Mat2 = nalgebra::Matrix2<f64>;

//! Reference-element bases: H¹ scalar functions and H(div) vector
//! functions (Raviart-Thomas / Brezzi-Douglas-Marini), plus the Piola
//! transform that carries vector functions onto physical elements.

mod scalar;
mod vector;

pub use scalar::ScalarBasis;
pub use vector::{VectorBasis, VectorFamily};

use crate::{FoslsError, Mat2, Result, Vec2};

/// Piola push-forward of one reference vector value and divergence:
/// φ = J φ̂ / det J and ∇·φ = ∇̂·φ̂ / det J.
pub fn piola_push(j: &Mat2, det: f64, ref_value: Vec2, ref_div: f64) -> Result<(Vec2, f64)> {
    if det <= 0.0 {
        return Err(FoslsError::DegenerateMap {
            element: usize::MAX,
            x: f64::NAN,
            y: f64::NAN,
            det,
        });
    }
    Ok((j * ref_value / det, ref_div / det))
}

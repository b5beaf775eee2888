use num_complex::Complex64;

use super::algebra::PseudoHilbertAlgebra;
use super::space::FockVector;
use crate::linalg::{self, CMat};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// `S_Ω(ξ₁⊗…⊗ξₙ) = Sξₙ⊗…⊗Sξ₁`.
pub fn s_omega<S: Scalar>(alg: &PseudoHilbertAlgebra<S>, v: &FockVector<S>) -> FockVector<S> {
    v.map_legs_antilinear_reversed(alg.involution())
}

/// `Δ_Ω = ⊕ Δ^{⊗n}`.
pub fn delta_omega<S: Scalar>(delta: &Matrix<S>, v: &FockVector<S>) -> FockVector<S> {
    v.map_legs(delta)
}

/// `J_Ω(ξ₁⊗…⊗ξₙ) = Jξₙ⊗…⊗Jξ₁`, with `J` the conjugate-linear matrix from
/// [`PseudoHilbertAlgebra::modular_conjugation`].
pub fn j_omega(j: &CMat, v: &FockVector<Complex64>) -> FockVector<Complex64> {
    v.map_legs_antilinear_reversed(&linalg::from_cmat(j))
}

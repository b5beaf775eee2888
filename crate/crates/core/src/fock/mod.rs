//! Full Fock space over a finite-dimensional pseudo left Hilbert algebra.
//!
//! Vectors are sparse maps from index words to coefficients, operators are
//! formal sums of products of creation, annihilation and preservation
//! operators. Vacuum moments are computed by acting on Ω, so no matrix is
//! formed unless one is explicitly realized.

mod algebra;
mod fields;
mod modular;
mod space;

pub use algebra::{gns_algebra, gns_algebra_orthonormal, trivial_algebra, OrthonormalGns, PseudoHilbertAlgebra};
pub use fields::{
    a_minus, a_plus, a_zero, field_cumulant, field_x, field_y, field_y_of_element, haagerup_bound, right_field,
    tensor_norm, wick, wick_embedding, wick_multiply, wick_polynomial, wick_recursive, WickTerm,
};
pub use modular::{delta_omega, j_omega, s_omega};
pub(crate) use fields::wick_from_parts;
pub use space::{basis_words, Elementary, FockOperator, FockSpace, FockVector, Overflow, Term, MAX_COEFFICIENTS};

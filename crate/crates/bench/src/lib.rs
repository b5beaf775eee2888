//! Fixtures shared by the benchmarks.

use freepoisson_core::fock::{field_y_of_element, gns_algebra, FockOperator, FockSpace, Overflow};
use freepoisson_core::ncps::{BlockMatrix, NcProbSpace};
use freepoisson_core::transforms::LevyTriple;
use freepoisson_core::variation::VariationExperiment;
use freepoisson_core::{Rational, Scalar};

/// Commutative space on three points with weights 1/5, 3/10, 1/2.
pub fn small_space() -> NcProbSpace<Rational> {
    NcProbSpace::diagonal(&[Rational::from_ratio(1, 5), Rational::from_ratio(3, 10), Rational::from_ratio(1, 2)])
        .expect("positive weights")
}

/// Fields `Y(x₀), Y(x₁)` over [`small_space`] on a Fock space of the given
/// truncation.
pub fn poisson_fields(truncation: usize) -> (FockSpace<Rational>, Vec<FockOperator<Rational>>) {
    let space = small_space();
    let alg = gns_algebra(&space).expect("gns");
    let fock = FockSpace::over(&alg, truncation, Overflow::Strict).expect("fock space");
    let elements = [[1, -2, 3], [2, 0, -1]].map(|v| BlockMatrix::diagonal(&v.map(Rational::from_i64)));
    let fields = elements.iter().map(|x| field_y_of_element(&space, &alg, &fock, x).expect("field")).collect();
    (fock, fields)
}

/// Quadratic variation of a unit-rate jump process at one.
pub fn variation_experiment(n_list: Vec<usize>) -> VariationExperiment {
    let triple = LevyTriple::new(0.0, 0.0, vec![(1.0, 1.0)]).expect("triple");
    VariationExperiment::new(triple, 1.0, 2, n_list).expect("experiment")
}

use super::algebra::{gns_coords, PseudoHilbertAlgebra};
use super::space::{Elementary, FockOperator, FockSpace, Term};
use crate::error::{Error, Result};
use crate::linalg;
use crate::ncps::{BlockMatrix, NcProbSpace};
use crate::scalar::Scalar;

/// `a⁺(ξ) = ℓ(ξ)`.
pub fn a_plus<S: Scalar>(fock: &FockSpace<S>, xi: &[S]) -> FockOperator<S> {
    fock.create(xi)
}

/// `a⁻(ξ) = ℓ*(Sξ)`, linear in `ξ`.
pub fn a_minus<S: Scalar>(alg: &PseudoHilbertAlgebra<S>, fock: &FockSpace<S>, xi: &[S]) -> FockOperator<S> {
    fock.annihilate(&alg.apply_s(xi))
}

/// `a⁰(ξ) = Λ(π_l(ξ))`.
pub fn a_zero<S: Scalar>(alg: &PseudoHilbertAlgebra<S>, fock: &FockSpace<S>, xi: &[S]) -> FockOperator<S> {
    fock.preserve(&alg.left_matrix(xi))
}

fn elementary_plus<S: Scalar>(xi: &[S]) -> Elementary<S> {
    Elementary::Create(xi.to_vec())
}

fn elementary_minus<S: Scalar>(alg: &PseudoHilbertAlgebra<S>, fock: &FockSpace<S>, xi: &[S]) -> Elementary<S> {
    Elementary::Annihilate(fock.functional(&alg.apply_s(xi)))
}

fn elementary_zero<S: Scalar>(alg: &PseudoHilbertAlgebra<S>, xi: &[S]) -> Elementary<S> {
    Elementary::Preserve(alg.left_matrix(xi))
}

/// The free Poisson field `X(ξ) = a⁺(ξ) + a⁻(ξ) + a⁰(ξ)`.
pub fn field_x<S: Scalar>(alg: &PseudoHilbertAlgebra<S>, fock: &FockSpace<S>, xi: &[S]) -> FockOperator<S> {
    a_plus(fock, xi).plus(&a_minus(alg, fock, xi)).plus(&a_zero(alg, fock, xi))
}

/// `Y = X(ξ) + φ`, with `phi` the weight of the underlying element.
pub fn field_y<S: Scalar>(alg: &PseudoHilbertAlgebra<S>, fock: &FockSpace<S>, xi: &[S], phi: S) -> FockOperator<S> {
    field_x(alg, fock, xi).plus(&FockOperator::scalar(phi))
}

/// `Y(x) = X(η(x)) + φ(x)` for an element of `space`, with `alg` its
/// [`super::gns_algebra`].
pub fn field_y_of_element<S: Scalar>(
    space: &NcProbSpace<S>,
    alg: &PseudoHilbertAlgebra<S>,
    fock: &FockSpace<S>,
    x: &BlockMatrix<S>,
) -> Result<FockOperator<S>> {
    space.check_element(x)?;
    Ok(field_y(alg, fock, &gns_coords(x), space.weight(x)))
}

/// Free cumulant of fields: `R_k(X(ξ₁),…,X(ξ_k)) = ⟨Sξ₁, ξ₂⋯ξ_k⟩` for
/// `k >= 2`, and `0` for `k = 1`.
pub fn field_cumulant<S: Scalar>(alg: &PseudoHilbertAlgebra<S>, xis: &[Vec<S>]) -> S {
    if xis.len() < 2 {
        return S::zero();
    }
    let mut tail = xis[xis.len() - 1].clone();
    for xi in xis[1..xis.len() - 1].iter().rev() {
        tail = alg.product(xi, &tail);
    }
    alg.inner(&alg.apply_s(&xis[0]), &tail)
}

fn check_length<S: Scalar>(fock: &FockSpace<S>, n: usize) -> Result<()> {
    if n > fock.truncation() {
        return Err(Error::TruncationTooSmall(format!("Wick word of length {n} at truncation {}", fock.truncation())));
    }
    Ok(())
}

/// Wick product `Ψ(ξ₁⊗…⊗ξₙ)` from the closed formula
///
/// `Σ_{s=1}^{n+1} a⁺(ξ₁)…a⁺(ξ_{s-1}) a⁻(ξ_s)…a⁻(ξₙ)
///  + Σ_{s=1}^{n} a⁺(ξ₁)…a⁺(ξ_{s-1}) a⁰(ξ_s) a⁻(ξ_{s+1})…a⁻(ξₙ)`.
pub fn wick<S: Scalar>(alg: &PseudoHilbertAlgebra<S>, fock: &FockSpace<S>, legs: &[Vec<S>]) -> Result<FockOperator<S>> {
    let n = legs.len();
    check_length(fock, n)?;
    if n == 0 {
        return Ok(FockOperator::identity());
    }
    let plus: Vec<Elementary<S>> = legs.iter().map(|x| elementary_plus(x)).collect();
    let minus: Vec<Elementary<S>> = legs.iter().map(|x| elementary_minus(alg, fock, x)).collect();
    let zero: Vec<Elementary<S>> = legs.iter().map(|x| elementary_zero(alg, x)).collect();
    Ok(wick_from_parts(&plus, &minus, &zero))
}

/// The closed Wick formula with arbitrary creation, annihilation and
/// preservation factors substituted for `a⁺(ξᵢ)`, `a⁻(ξᵢ)`, `a⁰(ξᵢ)`.
pub(crate) fn wick_from_parts<S: Scalar>(
    plus: &[Elementary<S>],
    minus: &[Elementary<S>],
    zero: &[Elementary<S>],
) -> FockOperator<S> {
    let n = plus.len();
    if n == 0 {
        return FockOperator::identity();
    }
    let mut terms = Vec::with_capacity(2 * n + 1);
    for s in 0..=n {
        let mut factors: Vec<Elementary<S>> = plus[..s].to_vec();
        factors.extend(minus[s..].iter().cloned());
        terms.push(Term { coeff: S::one(), factors });
    }
    for s in 0..n {
        let mut factors: Vec<Elementary<S>> = plus[..s].to_vec();
        factors.push(zero[s].clone());
        factors.extend(minus[s + 1..].iter().cloned());
        terms.push(Term { coeff: S::one(), factors });
    }
    FockOperator { terms }
}

/// Wick product from the recursion
/// `Ψ(ξ₁⊗…) = X(ξ₁)Ψ(ξ₂⊗…) − ⟨Sξ₁,ξ₂⟩Ψ(ξ₃⊗…) − Ψ(ξ₁ξ₂⊗ξ₃⊗…)`.
pub fn wick_recursive<S: Scalar>(
    alg: &PseudoHilbertAlgebra<S>,
    fock: &FockSpace<S>,
    legs: &[Vec<S>],
) -> Result<FockOperator<S>> {
    check_length(fock, legs.len())?;
    Ok(wick_rec(alg, fock, legs))
}

fn wick_rec<S: Scalar>(alg: &PseudoHilbertAlgebra<S>, fock: &FockSpace<S>, legs: &[Vec<S>]) -> FockOperator<S> {
    match legs.len() {
        0 => FockOperator::identity(),
        1 => field_x(alg, fock, &legs[0]),
        _ => {
            let head = field_x(alg, fock, &legs[0]).compose(&wick_rec(alg, fock, &legs[1..]));
            let pair = alg.inner(&alg.apply_s(&legs[0]), &legs[1]);
            let contracted = wick_rec(alg, fock, &legs[2..]).scale(&pair);
            let mut merged = vec![alg.product(&legs[0], &legs[1])];
            merged.extend(legs[2..].iter().cloned());
            head.minus(&contracted).minus(&wick_rec(alg, fock, &merged))
        }
    }
}

/// A coefficient times the Wick product of an elementary tensor.
pub type WickTerm<S> = (S, Vec<Vec<S>>);

/// `Σ c Ψ(w)`.
pub fn wick_polynomial<S: Scalar>(
    alg: &PseudoHilbertAlgebra<S>,
    fock: &FockSpace<S>,
    terms: &[WickTerm<S>],
) -> Result<FockOperator<S>> {
    let mut out = FockOperator::zero();
    for (c, legs) in terms {
        out = out.plus(&wick(alg, fock, legs)?.scale(c));
    }
    Ok(out)
}

/// Expansion of `Ψ(left)Ψ(right)` as a sum of Wick products.
///
/// With `left = ξₙ⊗…⊗ξ₁` (so the innermost leg `ξ₁` is the last entry) and
/// `right = η₁⊗…⊗η_m`, the product is
/// `Σ_{k=0}^{n∧m} ∏_{i≤k}⟨Sξᵢ,ηᵢ⟩ Ψ(ξₙ…ξ_{k+1}⊗η_{k+1}…η_m)
///  + Σ_{k=0}^{n∧m−1} ∏_{i≤k}⟨Sξᵢ,ηᵢ⟩ Ψ(ξₙ…ξ_{k+2}⊗ξ_{k+1}η_{k+1}⊗η_{k+2}…η_m)`.
pub fn wick_multiply<S: Scalar>(alg: &PseudoHilbertAlgebra<S>, left: &[Vec<S>], right: &[Vec<S>]) -> Vec<WickTerm<S>> {
    let (n, m) = (left.len(), right.len());
    let xi = |i: usize| &left[n - i];
    let mut out = Vec::new();
    let mut coeff = S::one();
    for k in 0..=n.min(m) {
        if k > 0 {
            coeff *= alg.inner(&alg.apply_s(xi(k)), &right[k - 1]);
        }
        let mut legs: Vec<Vec<S>> = left[..n - k].to_vec();
        legs.extend(right[k..].iter().cloned());
        out.push((coeff.clone(), legs));
        if k < n.min(m) {
            let mut legs: Vec<Vec<S>> = left[..n - k - 1].to_vec();
            legs.push(alg.product(xi(k + 1), &right[k]));
            legs.extend(right[k + 1..].iter().cloned());
            out.push((coeff.clone(), legs));
        }
    }
    out
}

/// `I_n(x) = Σ c Ψ(x₁ξ⊗…⊗xₙξ)` with `ξ` the unit vector of `alg`; `x` is
/// given as terms `(c, [η(x₁),…,η(xₙ)])` in algebra coordinates.
pub fn wick_embedding<S: Scalar>(
    alg: &PseudoHilbertAlgebra<S>,
    fock: &FockSpace<S>,
    x: &[WickTerm<S>],
) -> Result<FockOperator<S>> {
    let unit = alg.unit().ok_or_else(|| Error::Domain("algebra has no unit vector (infinite weight)".into()))?;
    let n = x.first().map_or(0, |t| t.1.len());
    if x.iter().any(|t| t.1.len() != n) {
        return Err(Error::ShapeMismatch("tensor terms of different lengths".into()));
    }
    if n > 4 {
        return Err(Error::SizeLimit(format!("tensor length {n} exceeds 4")));
    }
    let terms: Vec<WickTerm<S>> = x
        .iter()
        .map(|(c, legs)| (c.clone(), legs.iter().map(|l| alg.product(l, unit)).collect()))
        .collect();
    wick_polynomial(alg, fock, &terms)
}

/// Minimal tensor norm of `Σ c x₁⊗…⊗xₙ`, the operator norm of the Kronecker
/// product of the dense matrices.
pub fn tensor_norm<S: Scalar>(x: &[(S, Vec<BlockMatrix<S>>)]) -> f64 {
    let mut total: Option<linalg::CMat> = None;
    for (c, legs) in x {
        let mut k = linalg::CMat::from_element(1, 1, c.to_complex());
        for l in legs {
            k = k.kronecker(&linalg::to_cmat(&l.to_full()));
        }
        total = Some(match total {
            Some(t) => t + k,
            None => k,
        });
    }
    total.map_or(0.0, |t| linalg::op_norm(&t))
}

/// `(n+1) φ(1)^{n/2} + n φ(1)^{(n-1)/2}`.
pub fn haagerup_bound(n: usize, total_weight: f64) -> f64 {
    let n_f = n as f64;
    (n_f + 1.0) * total_weight.powf(n_f / 2.0) + n_f * total_weight.powf((n_f - 1.0) / 2.0)
}

/// Right field `X_r(η) = a⁺_r(η) + a⁻_r(η) + a⁰_r(η)`: right creation,
/// annihilation of the last leg against `Sη`, and right multiplication of
/// the last leg by `η`. Only tracial (unimodular) algebras are supported.
pub fn right_field<S: Scalar>(
    alg: &PseudoHilbertAlgebra<S>,
    fock: &FockSpace<S>,
    eta: &[S],
) -> Result<FockOperator<S>> {
    if !alg.is_unimodular(1e-10) {
        return Err(Error::Unsupported("right fields need a tracial (unimodular) algebra".into()));
    }
    Ok(fock
        .right_create(eta)
        .plus(&fock.right_annihilate(&alg.apply_s(eta)))
        .plus(&fock.right_preserve(&alg.right_matrix(eta))))
}

#[cfg(test)]
mod tests {
    use super::super::{gns_algebra, trivial_algebra, FockVector, Overflow};
    use super::*;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn semicircular_field_on_trivial_algebra() {
        let alg = trivial_algebra(q(1, 1)).unwrap();
        let fock = FockSpace::over(&alg, 6, Overflow::Strict).unwrap();
        let x = field_x(&alg, &fock, &[q(1, 1)]);
        // Catalan numbers at even orders, zero at odd orders
        let expect = [0, 1, 0, 2, 0, 5];
        for (k, e) in expect.iter().enumerate() {
            assert_eq!(fock.vacuum_moment(&vec![x.clone(); k + 1]).unwrap(), q(*e, 1));
        }
        let v = fock.apply(&x, &FockVector::vacuum()).unwrap();
        assert_eq!(v, FockVector::tensor(&[vec![q(1, 1)]]));
    }

    #[test]
    fn projection_field_is_free_poisson() {
        let space = NcProbSpace::diagonal(&[q(1, 1), q(1, 1)]).unwrap();
        let alg = gns_algebra(&space).unwrap();
        let fock = FockSpace::over(&alg, 4, Overflow::Strict).unwrap();
        let p = BlockMatrix::diagonal(&[q(1, 1), q(0, 1)]);
        let y = field_y_of_element(&space, &alg, &fock, &p).unwrap();
        let expect = [1, 2, 5, 14];
        for (k, e) in expect.iter().enumerate() {
            assert_eq!(fock.vacuum_moment(&vec![y.clone(); k + 1]).unwrap(), q(*e, 1));
        }
        let zero = field_y_of_element(&space, &alg, &fock, &BlockMatrix::zeros(&[1, 1])).unwrap();
        assert_eq!(fock.vacuum_moment(&[zero.clone(), zero]).unwrap(), q(0, 1));
    }

    #[test]
    fn wick_small_cases() {
        let space = NcProbSpace::diagonal(&[q(1, 2), q(3, 1)]).unwrap();
        let alg = gns_algebra(&space).unwrap();
        let fock = FockSpace::over(&alg, 4, Overflow::Strict).unwrap();
        let a = vec![q(1, 1), q(-2, 1)];
        let b = vec![q(3, 5), q(1, 1)];
        assert_eq!(wick(&alg, &fock, &[]).unwrap(), FockOperator::identity());
        let one = wick(&alg, &fock, std::slice::from_ref(&a)).unwrap();
        let basis = fock.realize(&one).unwrap();
        assert_eq!(basis, fock.realize(&field_x(&alg, &fock, &a)).unwrap());
        let psi = wick(&alg, &fock, &[a.clone(), b.clone()]).unwrap();
        let out = fock.apply(&psi, &FockVector::vacuum()).unwrap();
        assert_eq!(out, FockVector::tensor(&[a.clone(), b.clone()]));
        let long = vec![a.clone(); 5];
        assert!(matches!(wick(&alg, &fock, &long), Err(Error::TruncationTooSmall(_))));
    }

    #[test]
    fn wick_multiply_degree_one() {
        let space = NcProbSpace::diagonal(&[q(1, 2), q(3, 1)]).unwrap();
        let alg = gns_algebra(&space).unwrap();
        let a = vec![q(1, 1), q(-2, 1)];
        let b = vec![q(3, 5), q(1, 1)];
        let terms = wick_multiply(&alg, std::slice::from_ref(&a), std::slice::from_ref(&b));
        assert_eq!(terms.len(), 3);
        assert_eq!(terms[0], (q(1, 1), vec![a.clone(), b.clone()]));
        assert_eq!(terms[1], (q(1, 1), vec![alg.product(&a, &b)]));
        assert_eq!(terms[2], (alg.inner(&alg.apply_s(&a), &b), vec![]));
        let only = wick_multiply(&alg, &[], std::slice::from_ref(&b));
        assert_eq!(only, vec![(q(1, 1), vec![b])]);
    }

    #[test]
    fn bound_formula() {
        assert_eq!(haagerup_bound(1, 4.0), 2.0 * 2.0 + 1.0);
        assert_eq!(haagerup_bound(2, 1.0), 5.0);
    }
}

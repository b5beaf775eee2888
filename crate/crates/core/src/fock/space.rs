use std::collections::BTreeMap;

use num_complex::Complex64;

use super::algebra::PseudoHilbertAlgebra;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Upper bound on `Σ_{k≤L} dim^k` for realized (dense) operators.
pub const MAX_COEFFICIENTS: usize = 2_000_000;

/// What happens when a creation operator acts on the top degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Overflow {
    /// Raise [`Error::Overflow`]; keeps vacuum moments exact.
    Strict,
    /// Drop the component above the truncation.
    Projective,
}

/// Sparse vector of the truncated full Fock space: coefficients indexed by
/// words `(i₁,…,i_k)` meaning `e_{i₁}⊗…⊗e_{i_k}`; the empty word is Ω.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector<S> {
    terms: BTreeMap<Vec<u16>, S>,
}

impl<S: Scalar> Default for FockVector<S> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<S: Scalar> FockVector<S> {
    pub fn zero() -> Self {
        FockVector { terms: BTreeMap::new() }
    }

    pub fn vacuum() -> Self {
        Self::basis(&[])
    }

    pub fn basis(word: &[u16]) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(word.to_vec(), S::one());
        FockVector { terms }
    }

    /// The elementary tensor `ξ₁⊗…⊗ξₙ` (Ω for an empty list).
    pub fn tensor(legs: &[Vec<S>]) -> Self {
        let mut terms: BTreeMap<Vec<u16>, S> = BTreeMap::new();
        terms.insert(Vec::new(), S::one());
        for leg in legs {
            let mut next = BTreeMap::new();
            for (w, c) in &terms {
                for (i, x) in leg.iter().enumerate() {
                    if x.is_zero() {
                        continue;
                    }
                    let mut v = w.clone();
                    v.push(i as u16);
                    next.insert(v, c.clone() * x.clone());
                }
            }
            terms = next;
        }
        FockVector { terms }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<u16>, &S)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, word: &[u16]) -> S {
        self.terms.get(word).cloned().unwrap_or_else(S::zero)
    }

    /// Coefficient of Ω.
    pub fn vacuum_coefficient(&self) -> S {
        self.get(&[])
    }

    pub fn max_degree(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    pub fn add_term(&mut self, word: Vec<u16>, c: S) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(word) {
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
        }
    }

    pub fn add_scaled(&mut self, c: &S, other: &Self) {
        for (w, x) in &other.terms {
            self.add_term(w.clone(), c.clone() * x.clone());
        }
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_scaled(&S::one(), other);
        out
    }

    pub fn minus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_scaled(&-S::one(), other);
        out
    }

    pub fn scale(&self, c: &S) -> Self {
        let mut out = Self::zero();
        out.add_scaled(c, self);
        out
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(S::magnitude).fold(0.0, f64::max)
    }

    /// Coefficientwise comparison: exact equality for rationals.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.minus(other).terms.values().all(|c| c.is_negligible(tol))
    }

    /// Applies the linear map `c` to every leg: `F(c)`.
    pub fn map_legs(&self, c: &Matrix<S>) -> Self {
        let cols: Vec<Vec<(u16, S)>> = (0..c.cols())
            .map(|j| (0..c.rows()).filter(|&i| !c[(i, j)].is_zero()).map(|i| (i as u16, c[(i, j)].clone())).collect())
            .collect();
        let mut out = Self::zero();
        for (w, x) in &self.terms {
            let mut partial: Vec<(Vec<u16>, S)> = vec![(Vec::with_capacity(w.len()), x.clone())];
            for &leg in w {
                let mut next = Vec::with_capacity(partial.len() * cols[leg as usize].len());
                for (p, v) in &partial {
                    for (i, a) in &cols[leg as usize] {
                        let mut q = p.clone();
                        q.push(*i);
                        next.push((q, v.clone() * a.clone()));
                    }
                }
                partial = next;
            }
            for (p, v) in partial {
                self_add(&mut out, p, v);
            }
        }
        out
    }

    /// `ξ₁⊗…⊗ξₙ ↦ (Aξₙ)⊗…⊗(Aξ₁)` for a conjugate-linear `A` stored as the
    /// matrix of its values on basis vectors.
    pub fn map_legs_antilinear_reversed(&self, a: &Matrix<S>) -> Self {
        let mut flipped = Self::zero();
        for (w, x) in &self.terms {
            let mut r = w.clone();
            r.reverse();
            flipped.add_term(r, x.conj());
        }
        flipped.map_legs(a)
    }

    /// Dense coordinates in the order of [`basis_words`].
    pub fn to_dense(&self, dim: usize, truncation: usize) -> Vec<S> {
        let mut out = vec![S::zero(); total_dim(dim, truncation)];
        for (w, x) in &self.terms {
            if w.len() <= truncation {
                out[word_index(dim, w)] = x.clone();
            }
        }
        out
    }

    pub fn from_dense(dim: usize, truncation: usize, v: &[S]) -> Self {
        let mut out = Self::zero();
        for (k, w) in basis_words(dim, truncation).into_iter().enumerate() {
            out.add_term(w, v[k].clone());
        }
        out
    }

    /// Components of degree `<= degree`.
    pub fn truncated(&self, degree: usize) -> Self {
        FockVector { terms: self.terms.iter().filter(|(w, _)| w.len() <= degree).map(|(w, c)| (w.clone(), c.clone())).collect() }
    }
}

fn self_add<S: Scalar>(v: &mut FockVector<S>, w: Vec<u16>, c: S) {
    v.add_term(w, c)
}

fn total_dim(dim: usize, truncation: usize) -> usize {
    (0..=truncation).map(|k| dim.pow(k as u32)).sum()
}

fn word_index(dim: usize, w: &[u16]) -> usize {
    let offset = total_dim(dim, w.len()) - dim.pow(w.len() as u32);
    offset + w.iter().fold(0usize, |acc, &i| acc * dim + i as usize)
}

/// Basis words of degree `0..=truncation`, degree-major then lexicographic.
pub fn basis_words(dim: usize, truncation: usize) -> Vec<Vec<u16>> {
    let mut out = vec![Vec::new()];
    let mut layer: Vec<Vec<u16>> = vec![Vec::new()];
    for _ in 0..truncation {
        let mut next = Vec::with_capacity(layer.len() * dim);
        for w in &layer {
            for i in 0..dim {
                let mut v = w.clone();
                v.push(i as u16);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// Elementary operators. Left operators act on the first tensor leg, right
/// operators on the last one.
#[derive(Debug, Clone, PartialEq)]
pub enum Elementary<S> {
    /// `ℓ(ξ)`: `η₁⊗… ↦ ξ⊗η₁⊗…`.
    Create(Vec<S>),
    /// `ℓ*(ζ)` stored through the functional `f = ζ^H G`:
    /// `η₁⊗η₂⊗… ↦ f(η₁) η₂⊗…`.
    Annihilate(Vec<S>),
    /// `Λ(T)`: `T` on the first leg, zero on Ω.
    Preserve(Matrix<S>),
    /// `…⊗ηₙ ↦ …⊗ηₙ⊗ξ`.
    RightCreate(Vec<S>),
    /// Contracts the last leg with the functional.
    RightAnnihilate(Vec<S>),
    /// `T` on the last leg, zero on Ω.
    RightPreserve(Matrix<S>),
}

impl<S: Scalar> Elementary<S> {
    fn raises(&self) -> bool {
        matches!(self, Elementary::Create(_) | Elementary::RightCreate(_))
    }
}

/// `coeff · f₁ f₂ ⋯ f_k`; the product acts on a vector from the right.
#[derive(Debug, Clone, PartialEq)]
pub struct Term<S> {
    pub coeff: S,
    pub factors: Vec<Elementary<S>>,
}

/// Formal sum of products of elementary operators.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator<S> {
    pub terms: Vec<Term<S>>,
}

impl<S: Scalar> FockOperator<S> {
    pub fn zero() -> Self {
        FockOperator { terms: Vec::new() }
    }

    pub fn scalar(c: S) -> Self {
        FockOperator { terms: vec![Term { coeff: c, factors: Vec::new() }] }
    }

    pub fn identity() -> Self {
        Self::scalar(S::one())
    }

    pub fn elementary(e: Elementary<S>) -> Self {
        FockOperator { terms: vec![Term { coeff: S::one(), factors: vec![e] }] }
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        FockOperator { terms }
    }

    pub fn minus(&self, other: &Self) -> Self {
        self.plus(&other.scale(&-S::one()))
    }

    pub fn scale(&self, c: &S) -> Self {
        FockOperator {
            terms: self
                .terms
                .iter()
                .map(|t| Term { coeff: t.coeff.clone() * c.clone(), factors: t.factors.clone() })
                .collect(),
        }
    }

    /// Operator product `self · other`.
    pub fn compose(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let mut factors = a.factors.clone();
                factors.extend(b.factors.iter().cloned());
                terms.push(Term { coeff: a.coeff.clone() * b.coeff.clone(), factors });
            }
        }
        FockOperator { terms }
    }

    /// Product of a list of operators, leftmost first.
    pub fn product(ops: &[FockOperator<S>]) -> Self {
        ops.iter().fold(Self::identity(), |acc, op| acc.compose(op))
    }

    /// Largest number of creation factors in a term: the most the operator
    /// can raise the degree by.
    pub fn raise(&self) -> usize {
        self.terms.iter().map(|t| t.factors.iter().filter(|f| f.raises()).count()).max().unwrap_or(0)
    }
}

/// Truncated full Fock space over `(ℂ^d, G)`.
#[derive(Debug, Clone)]
pub struct FockSpace<S> {
    gram: Matrix<S>,
    gram_inv: Matrix<S>,
    diagonal: bool,
    truncation: usize,
    overflow: Overflow,
}

impl<S: Scalar> FockSpace<S> {
    pub fn new(gram: Matrix<S>, truncation: usize, overflow: Overflow) -> Result<Self> {
        let gram_inv = gram.inverse()?;
        let d = gram.rows();
        let diagonal = (0..d).all(|i| (0..d).all(|j| i == j || gram[(i, j)].is_zero()));
        Ok(FockSpace { gram, gram_inv, diagonal, truncation, overflow })
    }

    pub fn over(alg: &PseudoHilbertAlgebra<S>, truncation: usize, overflow: Overflow) -> Result<Self> {
        Self::new(alg.gram().clone(), truncation, overflow)
    }

    pub fn dim(&self) -> usize {
        self.gram.rows()
    }

    pub fn gram(&self) -> &Matrix<S> {
        &self.gram
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn overflow(&self) -> Overflow {
        self.overflow
    }

    pub fn with_truncation(&self, truncation: usize, overflow: Overflow) -> Self {
        FockSpace { truncation, overflow, ..self.clone() }
    }

    /// `f = ζ^H G`, the functional of `⟨ζ, ·⟩`.
    pub fn functional(&self, zeta: &[S]) -> Vec<S> {
        let c: Vec<S> = zeta.iter().map(S::conj).collect();
        self.gram.vec_mul(&c)
    }

    pub fn create(&self, xi: &[S]) -> FockOperator<S> {
        FockOperator::elementary(Elementary::Create(xi.to_vec()))
    }

    /// `ℓ*(ζ)`.
    pub fn annihilate(&self, zeta: &[S]) -> FockOperator<S> {
        FockOperator::elementary(Elementary::Annihilate(self.functional(zeta)))
    }

    pub fn preserve(&self, t: &Matrix<S>) -> FockOperator<S> {
        FockOperator::elementary(Elementary::Preserve(t.clone()))
    }

    pub fn right_create(&self, xi: &[S]) -> FockOperator<S> {
        FockOperator::elementary(Elementary::RightCreate(xi.to_vec()))
    }

    pub fn right_annihilate(&self, zeta: &[S]) -> FockOperator<S> {
        FockOperator::elementary(Elementary::RightAnnihilate(self.functional(zeta)))
    }

    pub fn right_preserve(&self, t: &Matrix<S>) -> FockOperator<S> {
        FockOperator::elementary(Elementary::RightPreserve(t.clone()))
    }

    /// `⟨a, b⟩` with the Gram matrix on every leg.
    pub fn inner(&self, a: &FockVector<S>, b: &FockVector<S>) -> S {
        let mut acc = S::zero();
        if self.diagonal {
            for (w, x) in &a.terms {
                if let Some(y) = b.terms.get(w) {
                    let mut g = x.conj() * y.clone();
                    for &i in w {
                        g *= self.gram[(i as usize, i as usize)].clone();
                    }
                    acc += g;
                }
            }
            return acc;
        }
        for (w, x) in &a.terms {
            for (v, y) in &b.terms {
                if v.len() != w.len() {
                    continue;
                }
                let mut g = x.conj() * y.clone();
                for (&i, &j) in w.iter().zip(v) {
                    g *= self.gram[(i as usize, j as usize)].clone();
                    if g.is_zero() {
                        break;
                    }
                }
                acc += g;
            }
        }
        acc
    }

    pub fn norm_sq(&self, v: &FockVector<S>) -> S {
        self.inner(v, v)
    }

    fn apply_elementary(&self, e: &Elementary<S>, v: &FockVector<S>) -> Result<FockVector<S>> {
        let mut out = FockVector::zero();
        let top = self.truncation;
        for (w, c) in &v.terms {
            match e {
                Elementary::Create(xi) | Elementary::RightCreate(xi) => {
                    if w.len() >= top {
                        if self.overflow == Overflow::Strict && xi.iter().any(|x| !x.is_zero()) {
                            return Err(Error::Overflow(format!("creation on degree {} at truncation {top}", w.len())));
                        }
                        continue;
                    }
                    let left = matches!(e, Elementary::Create(_));
                    for (i, x) in xi.iter().enumerate() {
                        if x.is_zero() {
                            continue;
                        }
                        let mut nw = Vec::with_capacity(w.len() + 1);
                        if left {
                            nw.push(i as u16);
                            nw.extend_from_slice(w);
                        } else {
                            nw.extend_from_slice(w);
                            nw.push(i as u16);
                        }
                        out.add_term(nw, x.clone() * c.clone());
                    }
                }
                Elementary::Annihilate(f) => {
                    if let Some((&first, rest)) = w.split_first() {
                        out.add_term(rest.to_vec(), f[first as usize].clone() * c.clone());
                    }
                }
                Elementary::RightAnnihilate(f) => {
                    if let Some((&last, rest)) = w.split_last() {
                        out.add_term(rest.to_vec(), f[last as usize].clone() * c.clone());
                    }
                }
                Elementary::Preserve(t) => {
                    if let Some((&first, rest)) = w.split_first() {
                        for r in 0..t.rows() {
                            let a = &t[(r, first as usize)];
                            if a.is_zero() {
                                continue;
                            }
                            let mut nw = Vec::with_capacity(w.len());
                            nw.push(r as u16);
                            nw.extend_from_slice(rest);
                            out.add_term(nw, a.clone() * c.clone());
                        }
                    }
                }
                Elementary::RightPreserve(t) => {
                    if let Some((&last, rest)) = w.split_last() {
                        for r in 0..t.rows() {
                            let a = &t[(r, last as usize)];
                            if a.is_zero() {
                                continue;
                            }
                            let mut nw = rest.to_vec();
                            nw.push(r as u16);
                            out.add_term(nw, a.clone() * c.clone());
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, op: &FockOperator<S>, v: &FockVector<S>) -> Result<FockVector<S>> {
        let mut out = FockVector::zero();
        for term in &op.terms {
            let mut w = v.clone();
            for f in term.factors.iter().rev() {
                w = self.apply_elementary(f, &w)?;
                if w.is_empty() {
                    break;
                }
            }
            out.add_scaled(&term.coeff, &w);
        }
        Ok(out)
    }

    /// `op₁ ⋯ op_k v`, applying `op_k` first.
    pub fn apply_word(&self, ops: &[FockOperator<S>], v: &FockVector<S>) -> Result<FockVector<S>> {
        let mut w = v.clone();
        for op in ops.iter().rev() {
            w = self.apply(op, &w)?;
        }
        Ok(w)
    }

    /// `⟨Ω, op₁⋯op_k Ω⟩`. The truncation must cover the total degree the
    /// word can reach, which makes the value independent of truncation.
    pub fn vacuum_moment(&self, ops: &[FockOperator<S>]) -> Result<S> {
        let reach: usize = ops.iter().map(FockOperator::raise).sum();
        if reach > self.truncation {
            return Err(Error::TruncationTooSmall(format!(
                "word can reach degree {reach}, truncation is {}",
                self.truncation
            )));
        }
        Ok(self.apply_word(ops, &FockVector::vacuum())?.vacuum_coefficient())
    }

    /// Adjoint with respect to the Fock inner product.
    pub fn adjoint(&self, op: &FockOperator<S>) -> FockOperator<S> {
        let conj_vec = |f: &[S]| -> Vec<S> { self.gram_inv.mul_vec(&f.iter().map(S::conj).collect::<Vec<_>>()) };
        let conj_mat = |t: &Matrix<S>| self.gram_inv.mul(&t.adjoint()).mul(&self.gram);
        let terms = op
            .terms
            .iter()
            .map(|t| Term {
                coeff: t.coeff.conj(),
                factors: t
                    .factors
                    .iter()
                    .rev()
                    .map(|f| match f {
                        Elementary::Create(xi) => Elementary::Annihilate(self.functional(xi)),
                        Elementary::Annihilate(g) => Elementary::Create(conj_vec(g)),
                        Elementary::Preserve(m) => Elementary::Preserve(conj_mat(m)),
                        Elementary::RightCreate(xi) => Elementary::RightAnnihilate(self.functional(xi)),
                        Elementary::RightAnnihilate(g) => Elementary::RightCreate(conj_vec(g)),
                        Elementary::RightPreserve(m) => Elementary::RightPreserve(conj_mat(m)),
                    })
                    .collect(),
            })
            .collect();
        FockOperator { terms }
    }

    fn check_realizable(&self) -> Result<usize> {
        let d = self.dim();
        let mut total: usize = 0;
        let mut p: usize = 1;
        for _ in 0..=self.truncation {
            total = total.saturating_add(p);
            p = p.saturating_mul(d);
        }
        if total > MAX_COEFFICIENTS {
            return Err(Error::SizeLimit(format!("{total} basis vectors exceed {MAX_COEFFICIENTS}")));
        }
        Ok(total)
    }

    /// Dense matrix of the compression to degrees `<= truncation`, in the
    /// (non-orthonormal) tensor basis ordered by [`basis_words`].
    pub fn realize(&self, op: &FockOperator<S>) -> Result<Matrix<S>> {
        let n = self.check_realizable()?;
        let proj = self.with_truncation(self.truncation, Overflow::Projective);
        let words = basis_words(self.dim(), self.truncation);
        let mut m = Matrix::zeros(n, n);
        for (j, w) in words.iter().enumerate() {
            let col = proj.apply(op, &FockVector::basis(w))?;
            for (v, c) in col.iter() {
                m[(word_index(self.dim(), v), j)] = c.clone();
            }
        }
        Ok(m)
    }

    /// Realized matrix in an orthonormal basis, so that operator norms and
    /// adjoints are the usual matrix ones. The operator is rewritten in the
    /// coordinates `ξ' = G^{1/2} ξ` and realized over the identity Gram matrix.
    pub fn realize_orthonormal(&self, op: &FockOperator<S>) -> Result<CMat> {
        let g = linalg::to_cmat(&self.gram);
        let root = linalg::from_cmat(&linalg::psd_sqrt(&g, 0.0));
        let root_inv = linalg::from_cmat(&linalg::psd_inv_sqrt(&g, 0.0));
        let vec_c = |v: &[S]| -> Vec<Complex64> { v.iter().map(S::to_complex).collect() };
        let mat_c = |m: &Matrix<S>| m.map_into(S::to_complex);
        let terms = op
            .terms
            .iter()
            .map(|t| Term {
                coeff: t.coeff.to_complex(),
                factors: t
                    .factors
                    .iter()
                    .map(|f| match f {
                        Elementary::Create(xi) => Elementary::Create(root.mul_vec(&vec_c(xi))),
                        Elementary::RightCreate(xi) => Elementary::RightCreate(root.mul_vec(&vec_c(xi))),
                        Elementary::Annihilate(f) => Elementary::Annihilate(root_inv.vec_mul(&vec_c(f))),
                        Elementary::RightAnnihilate(f) => Elementary::RightAnnihilate(root_inv.vec_mul(&vec_c(f))),
                        Elementary::Preserve(m) => Elementary::Preserve(root.mul(&mat_c(m)).mul(&root_inv)),
                        Elementary::RightPreserve(m) => Elementary::RightPreserve(root.mul(&mat_c(m)).mul(&root_inv)),
                    })
                    .collect(),
            })
            .collect();
        let flat = FockSpace::new(Matrix::identity(self.dim()), self.truncation, Overflow::Projective)?;
        Ok(linalg::to_cmat(&flat.realize(&FockOperator { terms })?))
    }

    /// Operator norm of the realized compression.
    pub fn operator_norm(&self, op: &FockOperator<S>) -> Result<f64> {
        Ok(linalg::op_norm(&self.realize_orthonormal(op)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn space() -> FockSpace<Rational> {
        let g = Matrix::from_rows(vec![vec![q(2, 1), q(1, 2)], vec![q(1, 2), q(1, 1)]]).unwrap();
        FockSpace::new(g, 3, Overflow::Strict).unwrap()
    }

    #[test]
    fn annihilation_pairs_with_creation() {
        let f = space();
        let xi = vec![q(1, 1), q(-2, 3)];
        let eta = vec![q(3, 1), q(1, 5)];
        let m = f.vacuum_moment(&[f.annihilate(&xi), f.create(&eta)]).unwrap();
        assert_eq!(m, crate::matrix::inner(f.gram(), &xi, &eta));
        assert_eq!(f.vacuum_moment(&[]).unwrap(), q(1, 1));
    }

    #[test]
    fn strict_overflow_and_truncation_guard() {
        let f = space();
        let xi = vec![q(1, 1), q(0, 1)];
        let c = f.create(&xi);
        let top = FockVector::tensor(&[xi.clone(), xi.clone(), xi.clone()]);
        assert!(matches!(f.apply(&c, &top), Err(Error::Overflow(_))));
        let many = vec![c.clone(); 4];
        assert!(matches!(f.vacuum_moment(&many), Err(Error::TruncationTooSmall(_))));
        let proj = f.with_truncation(3, Overflow::Projective);
        assert!(proj.apply(&c, &top).unwrap().is_empty());
    }

    #[test]
    fn structural_adjoint_matches_inner_product() {
        let f = space();
        let t = Matrix::from_rows(vec![vec![q(1, 2), q(3, 1)], vec![q(-1, 1), q(2, 7)]]).unwrap();
        let op = f
            .create(&[q(1, 1), q(2, 1)])
            .compose(&f.preserve(&t))
            .plus(&f.annihilate(&[q(1, 3), q(-1, 1)]))
            .plus(&f.right_create(&[q(0, 1), q(5, 1)]).compose(&f.right_preserve(&t)));
        let adj = f.adjoint(&op);
        let a = FockVector::tensor(&[vec![q(1, 1), q(1, 2)]]).plus(&FockVector::vacuum());
        let b = FockVector::tensor(&[vec![q(2, 1), q(-1, 1)], vec![q(1, 1), q(1, 1)]]);
        let proj = f.with_truncation(4, Overflow::Strict);
        let lhs = proj.inner(&a, &proj.apply(&op, &b).unwrap());
        let rhs = proj.inner(&proj.apply(&adj, &a).unwrap(), &b);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn dense_roundtrip() {
        let v = FockVector::tensor(&[vec![q(1, 1), q(2, 1)], vec![q(3, 1), q(0, 1)]]).plus(&FockVector::vacuum());
        let d = v.to_dense(2, 2);
        assert_eq!(d.len(), 7);
        assert_eq!(FockVector::from_dense(2, 2, &d), v);
    }
}

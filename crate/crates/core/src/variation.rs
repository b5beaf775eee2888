//! k-th variation of a bounded free Lévy process on a binned time axis.
//!
//! The process lives in the free Poisson algebra over functions on
//! `atoms(ρ) × bins`, with one extra zero-multiplication generator per bin
//! for the Gaussian part. The L² distance between `Σ_i X(f_i)^k` and the
//! k-th variation is evaluated exactly, once on the Fock space and once
//! from free cumulants of the fields.

use std::collections::HashMap;
use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{field_x, FockOperator, FockSpace, FockVector, Overflow, PseudoHilbertAlgebra};
use crate::matrix::Matrix;
use crate::ncps::{moments_from_cumulants, CumulantSource};
use crate::scalar::{Rational, Scalar};
use crate::transforms::LevyTriple;
use crate::Complex64;

/// Largest algebra dimension `atoms × bins (+ bins)` accepted.
pub const MAX_ALGEBRA_DIM: usize = 64;
pub const MAX_ATOMS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationExperiment {
    pub triple: LevyTriple,
    pub t: f64,
    pub k: usize,
    #[serde(alias = "N_list")]
    pub n_list: Vec<usize>,
}

impl VariationExperiment {
    pub fn new(triple: LevyTriple, t: f64, k: usize, n_list: Vec<usize>) -> Result<Self> {
        let exp = VariationExperiment { triple, t, k, n_list };
        exp.validate()?;
        Ok(exp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t.is_finite() && self.t > 0.0) {
            return Err(Error::Domain(format!("time must be positive, got {}", self.t)));
        }
        if self.k < 2 {
            return Err(Error::Domain(format!("variation order must be at least 2, got {}", self.k)));
        }
        if self.triple.rho().len() > MAX_ATOMS {
            return Err(Error::SizeLimit(format!("at most {MAX_ATOMS} Lévy atoms, got {}", self.triple.rho().len())));
        }
        if self.n_list.contains(&0) {
            return Err(Error::Domain("bin counts must be positive".into()));
        }
        Ok(())
    }

    /// `L = 2k + 2`.
    pub fn truncation(&self) -> usize {
        2 * self.k + 2
    }
}

/// Function algebra on `atoms × bins` plus the Gaussian generators.
///
/// Basis: `e_{j,i}` (atom `j`, bin `i`) at index `j·N + i`, then the
/// Gaussian generator of bin `i` at `atoms·N + i`.
#[derive(Debug, Clone)]
pub struct LevyAlgebra<S> {
    pub algebra: PseudoHilbertAlgebra<S>,
    atoms: Vec<S>,
    weights: Vec<S>,
    bins: usize,
    b: S,
    bin_length: S,
    gaussian: bool,
}

impl<S: Scalar> LevyAlgebra<S> {
    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    fn atom_index(&self, j: usize, i: usize) -> usize {
        j * self.bins + i
    }

    fn gaussian_index(&self, i: usize) -> usize {
        self.atoms.len() * self.bins + i
    }

    /// `f_i = b·ξ_i + x·χ_{bin i}`.
    pub fn increment(&self, i: usize) -> Vec<S> {
        let mut f = vec![S::zero(); self.dim()];
        for (j, x) in self.atoms.iter().enumerate() {
            f[self.atom_index(j, i)] = x.clone();
        }
        if self.gaussian {
            f[self.gaussian_index(i)] = self.b.clone();
        }
        f
    }

    /// `x^k·χ_{[0,t]}`.
    pub fn power(&self, k: usize) -> Vec<S> {
        let mut g = vec![S::zero(); self.dim()];
        for (j, x) in self.atoms.iter().enumerate() {
            let xk = x.powi(k);
            for i in 0..self.bins {
                g[self.atom_index(j, i)] = xk.clone();
            }
        }
        g
    }

    /// `∫ x^k dρ ⊗ dt` over `[0, t]`.
    pub fn power_weight(&self, k: usize) -> S {
        let mut total = S::zero();
        for (x, w) in self.atoms.iter().zip(&self.weights) {
            total += x.powi(k) * w.clone();
        }
        total * self.bin_length.clone() * S::from_i64(self.bins as i64)
    }

    /// `R_n(X(ξ₁),…,X(ξ_n))` from the function model: `∫ ξ₁⋯ξ_n` over the
    /// atom part, plus `⟨ξ₁,ξ₂⟩` on the Gaussian part when `n = 2`.
    /// Independent of the matrices in [`LevyAlgebra::algebra`].
    pub fn function_cumulant(&self, xis: &[&[S]]) -> S {
        let n = xis.len();
        if n < 2 {
            return S::zero();
        }
        let mut total = S::zero();
        for (j, w) in self.weights.iter().enumerate() {
            for i in 0..self.bins {
                let a = self.atom_index(j, i);
                let mut prod = w.clone() * self.bin_length.clone();
                for xi in xis {
                    prod *= xi[a].clone();
                    if prod.is_zero() {
                        break;
                    }
                }
                total += prod;
            }
        }
        if self.gaussian && n == 2 {
            for i in 0..self.bins {
                let a = self.gaussian_index(i);
                total += xis[0][a].clone() * xis[1][a].clone() * self.bin_length.clone();
            }
        }
        total
    }
}

/// See [`LevyAlgebra`] for the basis.
pub fn build_levy_algebra<S: Scalar>(triple: &LevyTriple, t: f64, bins: usize) -> Result<LevyAlgebra<S>> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::Domain(format!("time must be positive, got {t}")));
    }
    if bins == 0 {
        return Err(Error::Domain("need at least one bin".into()));
    }
    let gaussian = triple.b() != 0.0;
    let n_atoms = triple.rho().len();
    let dim = (n_atoms + usize::from(gaussian)) * bins;
    if dim == 0 {
        return Err(Error::Domain("triple has neither Gaussian part nor jumps".into()));
    }
    if dim > MAX_ALGEBRA_DIM {
        return Err(Error::SizeLimit(format!("algebra dimension {dim} exceeds {MAX_ALGEBRA_DIM}")));
    }
    let bin_length = S::from_f64(t) / S::from_i64(bins as i64);
    let atoms: Vec<S> = triple.rho().iter().map(|&(x, _)| S::from_f64(x)).collect();
    let weights: Vec<S> = triple.rho().iter().map(|&(_, w)| S::from_f64(w)).collect();
    let mut diag = Vec::with_capacity(dim);
    for w in &weights {
        for _ in 0..bins {
            diag.push(w.clone() * bin_length.clone());
        }
    }
    if gaussian {
        diag.extend(std::iter::repeat_n(bin_length.clone(), bins));
    }
    let lmul = (0..dim)
        .map(|a| {
            if a < n_atoms * bins {
                Matrix::from_fn(dim, dim, |r, c| if r == a && c == a { S::one() } else { S::zero() })
            } else {
                Matrix::zeros(dim, dim)
            }
        })
        .collect();
    let algebra = PseudoHilbertAlgebra::new(Matrix::diagonal(&diag), Matrix::identity(dim), lmul, None)?;
    Ok(LevyAlgebra { algebra, atoms, weights, bins, b: S::from_f64(triple.b()), bin_length, gaussian })
}

/// Constant part `δ_{2,k} b² t + ∫ x^k dρ·t` of the k-th variation.
fn variation_constant<S: Scalar>(alg: &LevyAlgebra<S>, exp: &VariationExperiment) -> S {
    let mut c = alg.power_weight(exp.k);
    if exp.k == 2 {
        let b = S::from_f64(exp.triple.b());
        c += b.clone() * b * S::from_f64(exp.t);
    }
    c
}

/// `‖(Σ_i X(f_i)^k − δ_{2,k}b²t − Y(x^k χ_{[0,t]}))Ω‖²` on the Fock space.
pub fn variation_error_sq_fock<S: Scalar>(exp: &VariationExperiment, bins: usize) -> Result<S> {
    exp.validate()?;
    let alg = build_levy_algebra::<S>(&exp.triple, exp.t, bins)?;
    let fock = FockSpace::over(&alg.algebra, exp.truncation(), Overflow::Strict)?;
    let mut v = FockVector::zero();
    for i in 0..bins {
        let x = field_x(&alg.algebra, &fock, &alg.increment(i));
        let word: Vec<FockOperator<S>> = vec![x; exp.k];
        let w = fock.apply_word(&word, &FockVector::vacuum())?;
        v.add_scaled(&S::one(), &w);
    }
    let g = field_x(&alg.algebra, &fock, &alg.power(exp.k));
    let yg = fock.apply(&g, &FockVector::vacuum())?;
    v.add_scaled(&-S::one(), &yg);
    v.add_scaled(&-variation_constant(&alg, exp), &FockVector::vacuum());
    Ok(fock.norm_sq(&v))
}

/// Labels `0..N` are the increments, label `N` is `x^k χ_{[0,t]}`.
struct FieldCumulants<'a, S> {
    alg: &'a LevyAlgebra<S>,
    vectors: Vec<Vec<S>>,
    memo: RefCell<HashMap<Vec<usize>, S>>,
}

impl<S: Scalar> CumulantSource<S> for FieldCumulants<'_, S> {
    fn cumulant(&self, word: &[usize]) -> Result<S> {
        if let Some(v) = self.memo.borrow().get(word) {
            return Ok(v.clone());
        }
        let mut xis: Vec<&[S]> = Vec::with_capacity(word.len());
        for &l in word {
            xis.push(self.vectors.get(l).ok_or_else(|| Error::Domain(format!("label {l} undefined")))?);
        }
        let value = self.alg.function_cumulant(&xis);
        self.memo.borrow_mut().insert(word.to_vec(), value.clone());
        Ok(value)
    }
}

/// Same quantity as [`variation_error_sq_fock`], expanded as
/// `φ(D²)` and evaluated by the moment-cumulant formula.
pub fn variation_error_sq_cumulants<S: Scalar>(exp: &VariationExperiment, bins: usize) -> Result<S> {
    exp.validate()?;
    let alg = build_levy_algebra::<S>(&exp.triple, exp.t, bins)?;
    let k = exp.k;
    let mut vectors: Vec<Vec<S>> = (0..bins).map(|i| alg.increment(i)).collect();
    vectors.push(alg.power(k));
    let source = FieldCumulants { alg: &alg, vectors, memo: RefCell::new(HashMap::new()) };
    let g = bins;
    let c = variation_constant(&alg, exp);
    let moment = |word: Vec<usize>| moments_from_cumulants(&source, &word);

    let mut total = S::zero();
    for i in 0..bins {
        for j in 0..bins {
            let mut w = vec![i; k];
            w.extend(std::iter::repeat_n(j, k));
            total += moment(w)?;
        }
        let mut wg = vec![i; k];
        wg.push(g);
        let mut gw = vec![g];
        gw.extend(std::iter::repeat_n(i, k));
        let wi = moment(vec![i; k])?;
        total -= moment(wg)? + moment(gw)?;
        total -= S::from_i64(2) * c.clone() * wi;
    }
    total += moment(vec![g, g])?;
    total += S::from_i64(2) * c.clone() * moment(vec![g])?;
    total += c.clone() * c;
    Ok(total)
}

/// Arithmetic used for an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Arithmetic {
    #[default]
    Exact,
    Float,
}

/// The L² error (Fock route).
pub fn variation_error(exp: &VariationExperiment, bins: usize, mode: Arithmetic) -> Result<f64> {
    let sq = match mode {
        Arithmetic::Exact => variation_error_sq_fock::<Rational>(exp, bins)?.re(),
        Arithmetic::Float => variation_error_sq_fock::<Complex64>(exp, bins)?.re(),
    };
    Ok(sq.max(0.0).sqrt())
}

/// Outcome of the log-log regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateFit {
    Slope { slope: f64, intercept: f64 },
    /// Every error is exactly zero.
    ExactMatch,
}

/// Least-squares slope of `log error` against `log N`.
pub fn rate_regression(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 4 {
        return Err(Error::InsufficientDegree(format!("need at least 4 points, got {}", points.len())));
    }
    if points.iter().all(|&(_, e)| e == 0.0) {
        return Ok(RateFit::ExactMatch);
    }
    if let Some(&(n, e)) = points.iter().find(|&&(n, e)| !(n > 0.0 && e > 0.0 && n.is_finite() && e.is_finite())) {
        return Err(Error::Domain(format!("cannot take logarithms of point ({n}, {e})")));
    }
    let m = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(a, b), &(n, e)| (a + n.ln(), b + e.ln()));
    let (mx, my) = (sx / m, sy / m);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(n, e) in points {
        let dx = n.ln() - mx;
        sxx += dx * dx;
        sxy += dx * (e.ln() - my);
    }
    if sxx == 0.0 {
        return Err(Error::Domain("all bin counts coincide".into()));
    }
    let slope = sxy / sxx;
    Ok(RateFit::Slope { slope, intercept: my - slope * mx })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationReport {
    /// `(N, error)` rows in the order of `n_list`.
    pub rows: Vec<(usize, f64)>,
    /// Absent when fewer than 4 bin counts were requested.
    pub fit: Option<RateFit>,
}

impl VariationReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,error\n");
        for (n, e) in &self.rows {
            out.push_str(&format!("{n},{e:e}\n"));
        }
        out
    }
}

/// Evaluates every bin count (in parallel) and fits the rate.
pub fn run_experiment(exp: &VariationExperiment, mode: Arithmetic) -> Result<VariationReport> {
    exp.validate()?;
    let results: Vec<Result<f64>> = std::thread::scope(|scope| {
        let handles: Vec<_> = exp.n_list.iter().map(|&n| scope.spawn(move || variation_error(exp, n, mode))).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::NonConvergence { message: "worker panicked".into(), last: None })))
            .collect()
    });
    let mut rows = Vec::with_capacity(results.len());
    for (&n, r) in exp.n_list.iter().zip(results) {
        rows.push((n, r?));
    }
    let fit = if rows.len() >= 4 {
        Some(rate_regression(&rows.iter().map(|&(n, e)| (n as f64, e)).collect::<Vec<_>>())?)
    } else {
        None
    };
    Ok(VariationReport { rows, fit })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn exp(triple: LevyTriple, k: usize) -> VariationExperiment {
        VariationExperiment::new(triple, 1.0, k, vec![1, 2, 4, 8]).unwrap()
    }

    #[test]
    fn algebra_shapes() {
        let p = LevyTriple::new(0.0, 0.0, vec![(1.0, 1.0)]).unwrap();
        let a = build_levy_algebra::<Rational>(&p, 1.0, 1).unwrap();
        assert_eq!(a.dim(), 1);
        assert_eq!(a.algebra.gram()[(0, 0)], q(1, 1));
        let two = LevyTriple::new(0.0, 0.0, vec![(1.0, 1.0), (2.0, 1.0)]).unwrap();
        let a = build_levy_algebra::<Rational>(&two, 1.0, 2).unwrap();
        assert_eq!(a.dim(), 4);
        assert!((0..4).all(|i| a.algebra.gram()[(i, i)] == q(1, 2)));
        let g = LevyTriple::gaussian(0.0, 1.0).unwrap();
        let a = build_levy_algebra::<Rational>(&g, 1.0, 2).unwrap();
        assert_eq!(a.dim(), 2);
        assert!(a.algebra.lmul().iter().all(|m| m.max_abs() == 0.0));
        assert!(a.algebra.axiom_defect() == 0.0);
        let big = LevyTriple::new(0.0, 1.0, vec![(1.0, 1.0)]).unwrap();
        assert!(matches!(build_levy_algebra::<Rational>(&big, 1.0, 64), Err(Error::SizeLimit(_))));
    }

    #[test]
    fn gaussian_square_variation() {
        // N semicircular bins of variance t/N: error² = t²/N.
        let e = exp(LevyTriple::gaussian(0.0, 1.0).unwrap(), 2);
        for n in [1, 2, 4] {
            let a = variation_error_sq_fock::<Rational>(&e, n).unwrap();
            let b = variation_error_sq_cumulants::<Rational>(&e, n).unwrap();
            assert_eq!(a, q(1, n as i64));
            assert_eq!(a, b);
        }
    }

    #[test]
    fn poisson_square_variation() {
        let e = exp(LevyTriple::new(0.0, 0.0, vec![(1.0, 1.0)]).unwrap(), 2);
        for n in [1, 2, 4] {
            let a = variation_error_sq_fock::<Rational>(&e, n).unwrap();
            assert_eq!(a, q(1, n as i64));
            assert_eq!(a, variation_error_sq_cumulants::<Rational>(&e, n).unwrap());
        }
    }

    #[test]
    fn routes_agree_mixed() {
        let tr = LevyTriple::new(0.3, 0.5, vec![(1.0, 0.5), (-2.0, 0.25)]).unwrap();
        for k in [2, 3] {
            let e = exp(tr.clone(), k);
            for n in [1, 2, 3] {
                let a = variation_error_sq_fock::<Rational>(&e, n).unwrap();
                let b = variation_error_sq_cumulants::<Rational>(&e, n).unwrap();
                assert_eq!(a, b, "k = {k}, N = {n}");
            }
        }
    }

    #[test]
    fn regression_slopes() {
        let half: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0].iter().map(|&n: &f64| (n, 3.0 / n.sqrt())).collect();
        let RateFit::Slope { slope, .. } = rate_regression(&half).unwrap() else { panic!() };
        assert!((slope + 0.5).abs() < 1e-12);
        let one: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0].iter().map(|&n| (n, 3.0 / n)).collect();
        let RateFit::Slope { slope, .. } = rate_regression(&one).unwrap() else { panic!() };
        assert!((slope + 1.0).abs() < 1e-12);
        assert_eq!(rate_regression(&[(1.0, 0.0); 4]).unwrap(), RateFit::ExactMatch);
        assert!(rate_regression(&half[..3]).is_err());
    }
}

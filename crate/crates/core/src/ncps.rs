//! Finite-dimensional noncommutative probability spaces and the
//! moment-cumulant calculus over noncrossing partitions.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::fock::PseudoHilbertAlgebra;
use crate::linalg;
use crate::matrix::Matrix;
use crate::ncpart::{kreweras, kreweras_inverse, nc_cached, NcPartition};
use crate::scalar::Scalar;

/// A word over variable labels `0..k`.
pub type Word = Vec<usize>;
pub type WordMap<S> = BTreeMap<Word, S>;

/// Largest word length handled by the cumulant engine.
pub const MAX_WORD: usize = 12;

/// Block-diagonal element of `⊕ M_{n_b}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix<S> {
    pub blocks: Vec<Matrix<S>>,
}

impl<S: Scalar> BlockMatrix<S> {
    pub fn new(blocks: Vec<Matrix<S>>) -> Self {
        BlockMatrix { blocks }
    }

    pub fn identity(dims: &[usize]) -> Self {
        BlockMatrix { blocks: dims.iter().map(|&d| Matrix::identity(d)).collect() }
    }

    pub fn zeros(dims: &[usize]) -> Self {
        BlockMatrix { blocks: dims.iter().map(|&d| Matrix::zeros(d, d)).collect() }
    }

    /// Element of a commutative algebra `ℂ^k` given by its values.
    pub fn diagonal(values: &[S]) -> Self {
        BlockMatrix { blocks: values.iter().map(|v| Matrix::diagonal(std::slice::from_ref(v))).collect() }
    }

    pub fn dims(&self) -> Vec<usize> {
        self.blocks.iter().map(Matrix::rows).collect()
    }

    pub fn mul(&self, other: &Self) -> Self {
        BlockMatrix { blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.mul(b)).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        BlockMatrix { blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.add(b)).collect() }
    }

    pub fn scale(&self, c: &S) -> Self {
        BlockMatrix { blocks: self.blocks.iter().map(|a| a.scale(c)).collect() }
    }

    pub fn adjoint(&self) -> Self {
        BlockMatrix { blocks: self.blocks.iter().map(Matrix::adjoint).collect() }
    }

    /// Dense matrix of total size `Σ n_b`.
    pub fn to_full(&self) -> Matrix<S> {
        let n: usize = self.dims().iter().sum();
        let mut out = Matrix::zeros(n, n);
        let mut off = 0;
        for b in &self.blocks {
            for i in 0..b.rows() {
                for j in 0..b.cols() {
                    out[(off + i, off + j)] = b[(i, j)].clone();
                }
            }
            off += b.rows();
        }
        out
    }

    /// Reads the block-diagonal part of a dense matrix.
    pub fn from_full(dims: &[usize], m: &Matrix<S>) -> Self {
        let mut off = 0;
        let mut blocks = Vec::with_capacity(dims.len());
        for &d in dims {
            blocks.push(Matrix::from_fn(d, d, |i, j| m[(off + i, off + j)].clone()));
            off += d;
        }
        BlockMatrix { blocks }
    }

    /// Largest entry magnitude outside the diagonal blocks of a dense matrix.
    pub fn off_block_defect(dims: &[usize], m: &Matrix<S>) -> f64 {
        let total: usize = dims.iter().sum();
        let mut owner = Vec::with_capacity(total);
        for (b, &d) in dims.iter().enumerate() {
            owner.extend(std::iter::repeat_n(b, d));
        }
        let mut worst = 0.0f64;
        for i in 0..total {
            for j in 0..total {
                if owner[i] != owner[j] {
                    worst = worst.max(m[(i, j)].magnitude());
                }
            }
        }
        worst
    }
}

/// `(M, φ)` with `M = ⊕ M_{n_b}` and `φ = trace(ρ ·)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NcProbSpace<S> {
    block_dims: Vec<usize>,
    density: BlockMatrix<S>,
}

impl<S: Scalar> NcProbSpace<S> {
    /// Validates the density: Hermitian positive definite per block. Exact
    /// scalars are only accepted on commutative (all blocks 1x1) algebras.
    pub fn new(block_dims: Vec<usize>, density: BlockMatrix<S>) -> Result<Self> {
        if block_dims.is_empty() || block_dims.contains(&0) {
            return Err(Error::Domain("block dimensions must be positive".into()));
        }
        if density.dims() != block_dims {
            return Err(Error::ShapeMismatch(format!(
                "density blocks {:?} vs declared {:?}",
                density.dims(),
                block_dims
            )));
        }
        if S::EXACT {
            if block_dims.iter().any(|&d| d != 1) {
                return Err(Error::Unsupported("exact mode needs a commutative algebra".into()));
            }
            for b in &density.blocks {
                if b[(0, 0)].re() <= 0.0 {
                    return Err(Error::NotPsd { message: "density entry not positive".into(), witness: None });
                }
            }
        } else {
            for (k, b) in density.blocks.iter().enumerate() {
                if !b.is_hermitian(1e-12) {
                    return Err(Error::Domain(format!("density block {k} not Hermitian")));
                }
                let (lo, v) = linalg::min_eigen(&linalg::to_cmat(b));
                if lo <= 0.0 {
                    return Err(Error::NotPsd {
                        message: format!("density block {k} not positive definite (eigenvalue {lo:e})"),
                        witness: Some(linalg::format_vec(&v)),
                    });
                }
            }
        }
        Ok(NcProbSpace { block_dims, density })
    }

    /// Commutative `ℂ^k` with point weights.
    pub fn diagonal(weights: &[S]) -> Result<Self> {
        Self::new(vec![1; weights.len()], BlockMatrix::diagonal(weights))
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn density(&self) -> &BlockMatrix<S> {
        &self.density
    }

    pub fn is_commutative(&self) -> bool {
        self.block_dims.iter().all(|&d| d == 1)
    }

    /// φ(1) = trace(ρ).
    pub fn total_weight(&self) -> S {
        let mut acc = S::zero();
        for b in &self.density.blocks {
            acc += b.trace();
        }
        acc
    }

    pub fn is_state(&self, tol: f64) -> bool {
        self.total_weight().approx_eq(&S::one(), tol)
    }

    pub fn check_element(&self, x: &BlockMatrix<S>) -> Result<()> {
        if x.dims() != self.block_dims {
            return Err(Error::ShapeMismatch(format!(
                "element blocks {:?} vs space {:?}",
                x.dims(),
                self.block_dims
            )));
        }
        Ok(())
    }

    /// φ(x) = trace(ρ x).
    pub fn weight(&self, x: &BlockMatrix<S>) -> S {
        let mut acc = S::zero();
        for (r, b) in self.density.blocks.iter().zip(&x.blocks) {
            acc += r.mul(b).trace();
        }
        acc
    }

    /// Same algebra with the weight multiplied by `alpha`.
    pub fn scaled(&self, alpha: &S) -> Result<Self> {
        Self::new(self.block_dims.clone(), self.density.scale(alpha))
    }
}

/// `φ(x₁⋯xₙ)`.
pub fn moment<S: Scalar>(space: &NcProbSpace<S>, word: &[BlockMatrix<S>]) -> Result<S> {
    if word.is_empty() {
        return Err(Error::Domain("empty word".into()));
    }
    for x in word {
        space.check_element(x)?;
    }
    let mut prod = word[0].clone();
    for x in &word[1..] {
        prod = prod.mul(x);
    }
    Ok(space.weight(&prod))
}

/// `M_π(x₁,…,xₙ) = ∏_V φ(∏_{i∈V} xᵢ)`.
pub fn partitioned_moment<S: Scalar>(space: &NcProbSpace<S>, pi: &NcPartition, word: &[BlockMatrix<S>]) -> Result<S> {
    if word.len() != pi.n() {
        return Err(Error::ShapeMismatch(format!("word length {} vs partition of {}", word.len(), pi.n())));
    }
    let mut acc = S::one();
    for block in pi.blocks() {
        let sub: Vec<BlockMatrix<S>> = block.iter().map(|&i| word[i - 1].clone()).collect();
        acc *= moment(space, &sub)?;
    }
    Ok(acc)
}

/// Anything that evaluates joint moments of labelled variables.
pub trait MomentOracle<S: Scalar> {
    fn moment(&self, word: &[usize]) -> Result<S>;
}

/// A labelled family of elements of an [`NcProbSpace`].
pub struct SpaceFamily<'a, S> {
    pub space: &'a NcProbSpace<S>,
    pub elements: Vec<BlockMatrix<S>>,
}

impl<S: Scalar> MomentOracle<S> for SpaceFamily<'_, S> {
    fn moment(&self, word: &[usize]) -> Result<S> {
        let mut xs = Vec::with_capacity(word.len());
        for &l in word {
            let x = self.elements.get(l).ok_or_else(|| Error::Domain(format!("label {l} undefined")))?;
            xs.push(x.clone());
        }
        moment(self.space, &xs)
    }
}

impl<S: Scalar> MomentOracle<S> for WordMap<S> {
    fn moment(&self, word: &[usize]) -> Result<S> {
        self.get(word)
            .cloned()
            .ok_or_else(|| Error::InsufficientDegree(format!("moment of word {word:?} not supplied")))
    }
}

impl<S: Scalar, F: Fn(&[usize]) -> Result<S>> MomentOracle<S> for F {
    fn moment(&self, word: &[usize]) -> Result<S> {
        self(word)
    }
}

/// Anything that evaluates free cumulants of labelled variables.
pub trait CumulantSource<S: Scalar> {
    fn cumulant(&self, word: &[usize]) -> Result<S>;
}

fn restrict(word: &[usize], block: &[usize]) -> Word {
    block.iter().map(|&i| word[i - 1]).collect()
}

/// The block `V ∋ 0` of a partition of `0..n`, given by a bitmask over
/// positions `1..n`, and the intervals between consecutive elements of `V`
/// (and after the last one). Every noncrossing partition is `V` together
/// with noncrossing partitions of these intervals.
fn first_block(n: usize, mask: usize) -> (Vec<usize>, Vec<(usize, usize)>) {
    let mut block = vec![0];
    block.extend((1..n).filter(|&i| mask >> (i - 1) & 1 == 1));
    let mut gaps = Vec::new();
    for (k, &start) in block.iter().enumerate() {
        let end = block.get(k + 1).copied().unwrap_or(n);
        if end > start + 1 {
            gaps.push((start + 1, end));
        }
    }
    (block, gaps)
}

fn check_length(n: usize) -> Result<()> {
    if n == 0 || n > MAX_WORD {
        return Err(Error::Domain(format!("word length {n} outside 1..={MAX_WORD}")));
    }
    Ok(())
}

/// Free cumulants computed on demand from a moment oracle and memoised,
/// through `R(w) = M(w) − Σ_{V ∋ 1, V ≠ [n]} R(w|V) ∏_gaps M(w|gap)`.
pub struct LazyCumulants<'a, S> {
    oracle: &'a dyn MomentOracle<S>,
    memo: RefCell<HashMap<Word, S>>,
    moments: RefCell<HashMap<Word, S>>,
}

impl<'a, S: Scalar> LazyCumulants<'a, S> {
    pub fn new(oracle: &'a dyn MomentOracle<S>) -> Self {
        LazyCumulants { oracle, memo: RefCell::new(HashMap::new()), moments: RefCell::new(HashMap::new()) }
    }

    fn moment(&self, word: &[usize]) -> Result<S> {
        if let Some(v) = self.moments.borrow().get(word) {
            return Ok(v.clone());
        }
        let v = self.oracle.moment(word)?;
        self.moments.borrow_mut().insert(word.to_vec(), v.clone());
        Ok(v)
    }
}

impl<S: Scalar> CumulantSource<S> for LazyCumulants<'_, S> {
    fn cumulant(&self, word: &[usize]) -> Result<S> {
        if let Some(v) = self.memo.borrow().get(word) {
            return Ok(v.clone());
        }
        let n = word.len();
        check_length(n)?;
        let mut value = self.moment(word)?;
        let full = (1usize << (n - 1)) - 1;
        for mask in 0..full {
            let (block, gaps) = first_block(n, mask);
            let mut term = S::one();
            for &(a, b) in &gaps {
                term *= self.moment(&word[a..b])?;
                if term.is_zero() {
                    break;
                }
            }
            if term.is_zero() {
                continue;
            }
            let sub: Word = block.iter().map(|&i| word[i]).collect();
            value -= term * self.cumulant(&sub)?;
        }
        self.memo.borrow_mut().insert(word.to_vec(), value.clone());
        Ok(value)
    }
}

/// Cumulants of every word in the domain of `moments`; all subwords of the
/// supplied words must be present.
pub fn cumulants_from_moments<S: Scalar>(moments: &WordMap<S>) -> Result<WordMap<S>> {
    let lazy = LazyCumulants::new(moments);
    moments.keys().map(|w| Ok((w.clone(), lazy.cumulant(w)?))).collect()
}

/// `M(w) = Σ_{π∈NC(n)} ∏_V R(w|V)`, evaluated by splitting off the block
/// of the first letter.
pub fn moments_from_cumulants<S: Scalar>(r: &dyn CumulantSource<S>, word: &[usize]) -> Result<S> {
    check_length(word.len())?;
    let mut memo: HashMap<Word, S> = HashMap::new();
    moment_rec(r, word, &mut memo)
}

fn moment_rec<S: Scalar>(r: &dyn CumulantSource<S>, word: &[usize], memo: &mut HashMap<Word, S>) -> Result<S> {
    let n = word.len();
    if n == 0 {
        return Ok(S::one());
    }
    if let Some(v) = memo.get(word) {
        return Ok(v.clone());
    }
    let mut total = S::zero();
    for mask in 0..1usize << (n - 1) {
        let (block, gaps) = first_block(n, mask);
        let sub: Word = block.iter().map(|&i| word[i]).collect();
        let mut term = r.cumulant(&sub)?;
        for &(a, b) in &gaps {
            if term.is_zero() {
                break;
            }
            term *= moment_rec(r, &word[a..b], memo)?;
        }
        total += term;
    }
    memo.insert(word.to_vec(), total.clone());
    Ok(total)
}

/// `R_π(w) = ∏_V R(w|V)`.
pub fn partitioned_cumulant<S: Scalar>(r: &dyn CumulantSource<S>, pi: &NcPartition, word: &[usize]) -> Result<S> {
    let mut term = S::one();
    for block in pi.blocks() {
        term *= r.cumulant(&restrict(word, block))?;
        if term.is_zero() {
            break;
        }
    }
    Ok(term)
}

/// `M_π(w)` from a moment oracle.
pub fn partitioned_oracle_moment<S: Scalar>(m: &dyn MomentOracle<S>, pi: &NcPartition, word: &[usize]) -> Result<S> {
    let mut term = S::one();
    for block in pi.blocks() {
        term *= m.moment(&restrict(word, block))?;
    }
    Ok(term)
}

/// Explicit table of free cumulants over named labels.
///
/// Words absent from `values` have cumulant zero; words longer than `d_max`
/// are rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantFunctional<S> {
    pub labels: Vec<String>,
    pub values: WordMap<S>,
    pub d_max: usize,
    pub tracial: bool,
}

impl<S: Scalar> CumulantFunctional<S> {
    pub fn new(labels: Vec<String>, values: WordMap<S>, d_max: usize, tracial: bool) -> Result<Self> {
        for w in values.keys() {
            if w.is_empty() || w.len() > d_max {
                return Err(Error::Domain(format!("word {w:?} outside lengths 1..={d_max}")));
            }
            if let Some(&l) = w.iter().find(|&&l| l >= labels.len()) {
                return Err(Error::Domain(format!("label index {l} undefined")));
            }
        }
        Ok(CumulantFunctional { labels, values, d_max, tracial })
    }

    /// Every word over `num_labels` labels up to `d_max`, valued by `f`.
    pub fn from_fn(num_labels: usize, d_max: usize, tracial: bool, f: impl Fn(&[usize]) -> S) -> Self {
        let labels = default_labels(num_labels);
        let mut values = WordMap::new();
        for w in all_words(num_labels, d_max) {
            let v = f(&w);
            if !v.is_zero() {
                values.insert(w, v);
            }
        }
        CumulantFunctional { labels, values, d_max, tracial }
    }

    /// Single variable with `κₙ = seq[n-1]`.
    pub fn from_sequence(seq: &[S]) -> Self {
        Self::from_fn(1, seq.len(), true, |w| seq[w.len() - 1].clone())
    }

    /// Single variable with every cumulant equal to `value`.
    pub fn constant(value: S, d_max: usize) -> Self {
        Self::from_fn(1, d_max, true, |_| value.clone())
    }

    /// Checks `R(w*) = conj R(w)` for self-adjoint labels, and cyclic
    /// invariance when tagged tracial.
    pub fn validate(&self, tol: f64) -> Result<()> {
        for (w, v) in &self.values {
            let mut rev = w.clone();
            rev.reverse();
            if !self.get(&rev)?.approx_eq(&v.conj(), tol) {
                return Err(Error::Inconsistent(format!("R({rev:?}) is not the conjugate of R({w:?})")));
            }
            if self.tracial {
                let mut rot = w.clone();
                rot.rotate_left(1);
                if !self.get(&rot)?.approx_eq(v, tol) {
                    return Err(Error::Inconsistent(format!("tracial tag but R({rot:?}) != R({w:?})")));
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, word: &[usize]) -> Result<S> {
        if word.len() > self.d_max {
            return Err(Error::InsufficientDegree(format!(
                "word of length {} exceeds d_max = {}",
                word.len(),
                self.d_max
            )));
        }
        Ok(self.values.get(word).cloned().unwrap_or_else(S::zero))
    }
}

impl<S: Scalar> CumulantSource<S> for CumulantFunctional<S> {
    fn cumulant(&self, word: &[usize]) -> Result<S> {
        self.get(word)
    }
}

pub fn default_labels(k: usize) -> Vec<String> {
    const NAMES: [&str; 6] = ["x", "y", "z", "u", "v", "w"];
    (0..k).map(|i| NAMES.get(i).map_or_else(|| format!("x{i}"), |s| s.to_string())).collect()
}

/// All words over `k` labels with lengths `1..=max_len`, shortest first.
pub fn all_words(k: usize, max_len: usize) -> Vec<Word> {
    let mut out = Vec::new();
    let mut layer: Vec<Word> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(layer.len() * k);
        for w in &layer {
            for l in 0..k {
                let mut v = w.clone();
                v.push(l);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// Both sides of the product formula for `x` free from `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductFormulas<S> {
    /// `R_n(x₁y₁,…,xₙyₙ) = Σ_π R_π(x) R_{K(π)}(y)`.
    pub cumulant: S,
    /// `M_n(x₁y₁,…,xₙyₙ) = Σ_π R_π(x) M_{K(π)}(y)`.
    pub moment: S,
    /// The same moment through `Σ_π M_{K⁻¹(π)}(x) R_π(y)`.
    pub moment_dual: S,
}

/// Product formulas for free families given by their cumulants. `x_word`
/// and `y_word` are label words of the same length.
pub fn product_moments_free<S: Scalar>(
    rx: &dyn CumulantSource<S>,
    ry: &dyn CumulantSource<S>,
    x_word: &[usize],
    y_word: &[usize],
) -> Result<ProductFormulas<S>> {
    let n = x_word.len();
    if n != y_word.len() || n == 0 {
        return Err(Error::ShapeMismatch(format!("words of lengths {n} and {}", y_word.len())));
    }
    let my = CumulantMoments(ry);
    let mx = CumulantMoments(rx);
    let mut out = ProductFormulas { cumulant: S::zero(), moment: S::zero(), moment_dual: S::zero() };
    for pi in nc_cached(n)?.iter() {
        let k = kreweras(pi);
        let rpx = partitioned_cumulant(rx, pi, x_word)?;
        if !rpx.is_zero() {
            out.cumulant += rpx.clone() * partitioned_cumulant(ry, &k, y_word)?;
            out.moment += rpx * partitioned_oracle_moment(&my, &k, y_word)?;
        }
        let rpy = partitioned_cumulant(ry, pi, y_word)?;
        if !rpy.is_zero() {
            out.moment_dual += partitioned_oracle_moment(&mx, &kreweras_inverse(pi), x_word)? * rpy;
        }
    }
    Ok(out)
}

/// Moments reconstructed from a cumulant source.
pub struct CumulantMoments<'a, S>(pub &'a dyn CumulantSource<S>);

impl<S: Scalar> MomentOracle<S> for CumulantMoments<'_, S> {
    fn moment(&self, word: &[usize]) -> Result<S> {
        moments_from_cumulants(self.0, word)
    }
}

/// Outcome of [`check_freeness`].
#[derive(Debug, Clone, PartialEq)]
pub struct FreenessReport<S> {
    pub free: bool,
    /// First mixed word (shortest, then lexicographic) with a nonzero cumulant.
    pub witness: Option<Word>,
    pub witness_value: Option<S>,
}

/// Tests freeness of two labelled families by checking that every mixed
/// cumulant of length `<= n_max` vanishes. Labels may be shared between the
/// families; a word is mixed when it uses a label of each.
pub fn check_freeness<S: Scalar>(
    oracle: &dyn MomentOracle<S>,
    family_a: &[usize],
    family_b: &[usize],
    n_max: usize,
) -> Result<FreenessReport<S>> {
    if n_max > 8 {
        return Err(Error::SizeLimit(format!("n_max = {n_max} exceeds 8")));
    }
    // distinct slots so that a label in both families is tested against itself
    let slots: Vec<(usize, bool)> =
        family_a.iter().map(|&l| (l, true)).chain(family_b.iter().map(|&l| (l, false))).collect();
    let relabelled = |w: &[usize]| -> Result<S> {
        let labels: Vec<usize> = w.iter().map(|&s| slots[s].0).collect();
        oracle.moment(&labels)
    };
    let lazy = LazyCumulants::new(&relabelled);
    for w in all_words(slots.len(), n_max) {
        let has_a = w.iter().any(|&s| slots[s].1);
        let has_b = w.iter().any(|&s| !slots[s].1);
        if !(has_a && has_b) {
            continue;
        }
        let r = lazy.cumulant(&w)?;
        if !r.is_negligible(crate::FLOAT_TOL) {
            let witness = w.iter().map(|&s| slots[s].0).collect();
            return Ok(FreenessReport { free: false, witness: Some(witness), witness_value: Some(r) });
        }
    }
    Ok(FreenessReport { free: true, witness: None, witness_value: None })
}

/// `Σ_{π∈NC(n)} α^{|π|} M_π(w)`: moments of the free Poisson field over the
/// weight `αφ` written through moments under `φ`.
pub fn rescaled_weight_moment<S: Scalar>(m: &dyn MomentOracle<S>, word: &[usize], alpha: &S) -> Result<S> {
    let mut total = S::zero();
    for pi in nc_cached(word.len())?.iter() {
        total += alpha.powi(pi.len()) * partitioned_oracle_moment(m, pi, word)?;
    }
    Ok(total)
}

/// The same quantity through the model `α^{n+1} φ(u₁s²⋯uₙs²)` with `s²`
/// free Poisson of rate `1/α` and free from the `uᵢ`, evaluated with the
/// product formula.
pub fn free_poisson_model_moment<S: Scalar>(m: &dyn MomentOracle<S>, word: &[usize], alpha: &S) -> Result<S> {
    let n = word.len();
    let u = LazyCumulants::new(m);
    let rate = S::one() / alpha.clone();
    let s2 = CumulantFunctional::constant(rate, n);
    let y_word = vec![0; n];
    let prod = product_moments_free(&u, &s2, word, &y_word)?;
    Ok(alpha.powi(n + 1) * prod.moment)
}

/// Output of [`build_pseudo_algebra`].
#[derive(Debug, Clone)]
pub struct CumulantAlgebra<S> {
    pub algebra: PseudoHilbertAlgebra<S>,
    /// Words whose classes form the basis, in the order of the algebra basis.
    pub basis_words: Vec<Word>,
    /// Coordinates of the class of each generator.
    pub generators: Vec<Vec<S>>,
    pub rank_by_degree: Vec<usize>,
}

/// Quotient of the word algebra by the null space of
/// `⟨w₁, w₂⟩ = R(w₁* w₂)`, where `w*` is the reversed word (the labels are
/// self-adjoint).
pub fn build_pseudo_algebra<S: Scalar>(r: &CumulantFunctional<S>, degree: usize) -> Result<CumulantAlgebra<S>> {
    if !r.tracial {
        return Err(Error::Unsupported("the cumulant functional must be tagged tracial".into()));
    }
    if degree == 0 || degree > 6 {
        return Err(Error::Domain(format!("degree {degree} outside 1..=6")));
    }
    if r.d_max < 2 * degree + 2 {
        return Err(Error::InsufficientDegree(format!(
            "need cumulants up to {} for degree {degree}, have {}",
            2 * degree + 2,
            r.d_max
        )));
    }
    let k = r.labels.len();
    let pairing = |a: &[usize], b: &[usize]| -> Result<S> {
        let mut w: Word = a.iter().rev().cloned().collect();
        w.extend_from_slice(b);
        r.get(&w)
    };
    let words = all_words(k, degree + 1);
    let split = words.iter().position(|w| w.len() == degree + 1).unwrap_or(words.len());
    let gram = Matrix::from_fn(words.len(), words.len(), |i, j| {
        pairing(&words[i], &words[j]).expect("length within d_max")
    });
    let selection = select_basis(&gram)?;
    let basis_idx: Vec<usize> = selection.pivots.iter().cloned().filter(|&i| i < split).collect();
    let rank_low = basis_idx.len();
    let rank_high = selection.pivots.len();
    if rank_high != rank_low {
        return Err(Error::Inconsistent(format!(
            "multiplication does not close at degree {degree}: rank {rank_low} grows to {rank_high}"
        )));
    }
    let dim = basis_idx.len();
    if dim == 0 {
        return Err(Error::Domain("the Gram matrix vanishes: trivial quotient".into()));
    }
    let basis_words: Vec<Word> = basis_idx.iter().map(|&i| words[i].clone()).collect();
    let gb = Matrix::from_fn(dim, dim, |i, j| gram[(basis_idx[i], basis_idx[j])].clone());
    let gb_inv = gb.inverse()?;
    let coords = |w: &[usize]| -> Result<Vec<S>> {
        let rhs: Vec<S> = basis_words.iter().map(|b| pairing(b, w)).collect::<Result<_>>()?;
        Ok(gb_inv.mul_vec(&rhs))
    };
    let mut generators = Vec::with_capacity(k);
    let mut gen_mats = Vec::with_capacity(k);
    for l in 0..k {
        generators.push(coords(&[l])?);
        let mut cols = Vec::with_capacity(dim);
        for b in &basis_words {
            let mut w = vec![l];
            w.extend_from_slice(b);
            cols.push(coords(&w)?);
        }
        gen_mats.push(Matrix::from_fn(dim, dim, |i, j| cols[j][i].clone()));
    }
    // π_l of a basis word is the product of its letters
    let mut lmul = Vec::with_capacity(dim);
    for b in &basis_words {
        let mut m = Matrix::identity(dim);
        for &l in b.iter().rev() {
            m = gen_mats[l].mul(&m);
        }
        lmul.push(m);
    }
    let mut involution = Matrix::zeros(dim, dim);
    for (j, b) in basis_words.iter().enumerate() {
        let rev: Word = b.iter().rev().cloned().collect();
        for (i, c) in coords(&rev)?.into_iter().enumerate() {
            involution[(i, j)] = c;
        }
    }
    let mut rank_by_degree = Vec::new();
    for d in 1..=degree + 1 {
        rank_by_degree.push(selection.pivots.iter().filter(|&&i| words[i].len() <= d).count());
    }
    let algebra = PseudoHilbertAlgebra::new(gb, involution, lmul, None)?;
    Ok(CumulantAlgebra { algebra, basis_words, generators, rank_by_degree })
}

struct BasisSelection {
    pivots: Vec<usize>,
}

/// Greedy pivoted LDL of a Hermitian Gram matrix in index order. Pivots are
/// kept when they exceed the null threshold (exact zero in exact mode,
/// `1e-9` times the largest eigenvalue otherwise); a negative pivot or a
/// nonzero row over a null pivot means the form is not positive.
fn select_basis<S: Scalar>(gram: &Matrix<S>) -> Result<BasisSelection> {
    let n = gram.rows();
    let threshold = if S::EXACT {
        0.0
    } else {
        let cm = linalg::to_cmat(gram);
        let (vals, vecs) = linalg::hermitian_eigen(&cm);
        let top = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if let Some(&lo) = vals.first() {
            if lo < -1e-9 * top {
                return Err(Error::NotPsd {
                    message: format!("Gram matrix has eigenvalue {lo:e}"),
                    witness: Some(linalg::format_vec(&vecs.column(0).iter().cloned().collect::<Vec<_>>())),
                });
            }
        }
        1e-9 * top
    };
    let mut a = gram.clone();
    let mut pivots = Vec::new();
    for i in 0..n {
        let p = a[(i, i)].clone();
        let keep = if S::EXACT { !p.is_zero() } else { p.re() > threshold };
        if S::EXACT && p.re() < 0.0 {
            return Err(Error::NotPsd { message: format!("negative pivot at word index {i}"), witness: None });
        }
        if !keep {
            if S::EXACT && (i..n).any(|j| !a[(i, j)].is_zero()) {
                return Err(Error::NotPsd { message: format!("null pivot with nonzero row at {i}"), witness: None });
            }
            continue;
        }
        pivots.push(i);
        for r in i + 1..n {
            if a[(r, i)].is_zero() {
                continue;
            }
            let f = a[(r, i)].clone() / p.clone();
            for c in i..n {
                let d = f.clone() * a[(i, c)].clone();
                a[(r, c)] -= d;
            }
        }
        for c in i + 1..n {
            a[(i, c)] = S::zero();
        }
        for r in i + 1..n {
            a[(r, i)] = S::zero();
        }
    }
    Ok(BasisSelection { pivots })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn single(moments: &[Rational]) -> WordMap<Rational> {
        (1..=moments.len()).map(|n| (vec![0; n], moments[n - 1].clone())).collect()
    }

    #[test]
    fn moment_examples() {
        let space = NcProbSpace::diagonal(&[q(1, 2), q(1, 2)]).unwrap();
        let x = BlockMatrix::diagonal(&[q(1, 1), q(-1, 1)]);
        assert_eq!(moment(&space, &[BlockMatrix::identity(&[1, 1])]).unwrap(), q(1, 1));
        assert_eq!(moment(&space, &[x.clone(), x]).unwrap(), q(1, 1));
        let space = NcProbSpace::diagonal(&[q(1, 3), q(2, 3)]).unwrap();
        let x = BlockMatrix::diagonal(&[q(3, 1), q(0, 1)]);
        assert_eq!(moment(&space, &[x.clone(), x.clone()]).unwrap(), q(3, 1));
        let pi = NcPartition::new(3, vec![vec![1, 3], vec![2]]).unwrap();
        assert_eq!(partitioned_moment(&space, &pi, &[x.clone(), x.clone(), x]).unwrap(), q(3, 1));
    }

    #[test]
    fn shape_mismatch() {
        let space = NcProbSpace::diagonal(&[q(1, 2), q(1, 2)]).unwrap();
        let x = BlockMatrix::diagonal(&[q(1, 1)]);
        assert!(matches!(moment(&space, &[x]), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn cumulant_examples() {
        let a = q(3, 2);
        let point = single(&[a.clone(), a.powi(2), a.powi(3), a.powi(4)]);
        let r = cumulants_from_moments(&point).unwrap();
        assert_eq!(r[&vec![0]], a);
        for n in 2..=4 {
            assert_eq!(r[&vec![0; n]], q(0, 1));
        }
        let semi = single(&[q(0, 1), q(1, 1), q(0, 1), q(2, 1)]);
        let r = cumulants_from_moments(&semi).unwrap();
        let expect = [0, 1, 0, 0];
        for n in 1..=4 {
            assert_eq!(r[&vec![0; n]], q(expect[n - 1], 1));
        }
        let cat: Vec<Rational> = (1..=6).map(|n| Rational::from_i64(crate::ncpart::catalan(n) as i64)).collect();
        let r = cumulants_from_moments(&single(&cat)).unwrap();
        for n in 1..=6 {
            assert_eq!(r[&vec![0; n]], q(1, 1));
        }
    }

    #[test]
    fn moments_from_cumulant_examples() {
        let ones = CumulantFunctional::constant(q(1, 1), 4);
        assert_eq!(moments_from_cumulants(&ones, &[0; 4]).unwrap(), q(14, 1));
        let semi = CumulantFunctional::from_sequence(&[q(0, 1), q(1, 1), q(0, 1), q(0, 1)]);
        assert_eq!(moments_from_cumulants(&semi, &[0; 4]).unwrap(), q(2, 1));
        let seq = CumulantFunctional::from_sequence(&[q(5, 7)]);
        assert_eq!(moments_from_cumulants(&seq, &[0]).unwrap(), q(5, 7));
        assert!(matches!(moments_from_cumulants(&seq, &[0, 0]), Err(Error::InsufficientDegree(_))));
    }

    #[test]
    fn product_with_unit() {
        let x = CumulantFunctional::from_sequence(&[q(1, 3), q(2, 5), q(-1, 7), q(3, 4)]);
        let one = CumulantFunctional::from_sequence(&[q(1, 1), q(0, 1), q(0, 1), q(0, 1)]);
        for n in 1..=4 {
            let p = product_moments_free(&x, &one, &vec![0; n], &vec![0; n]).unwrap();
            assert_eq!(p.cumulant, x.get(&vec![0; n]).unwrap());
            assert_eq!(p.moment, p.moment_dual);
        }
        let y = CumulantFunctional::from_sequence(&[q(2, 9)]);
        let p = product_moments_free(&x, &y, &[0], &[0]).unwrap();
        assert_eq!(p.cumulant, q(1, 3) * q(2, 9));
    }

    #[test]
    fn freeness_examples() {
        let space = NcProbSpace::diagonal(&[q(1, 3), q(2, 3)]).unwrap();
        let x = BlockMatrix::diagonal(&[q(2, 1), q(-1, 1)]);
        let fam = SpaceFamily { space: &space, elements: vec![x.clone(), BlockMatrix::identity(&[1, 1])] };
        assert!(check_freeness(&fam, &[0], &[1], 4).unwrap().free);
        let rep = check_freeness(&fam, &[0], &[0], 4).unwrap();
        assert!(!rep.free);
        assert_eq!(rep.witness.unwrap().len(), 2);
    }

    #[test]
    fn semicircle_algebra() {
        let r = CumulantFunctional::from_sequence(&[q(0, 1), q(1, 1), q(0, 1), q(0, 1)]);
        let alg = build_pseudo_algebra(&r, 1).unwrap();
        assert_eq!(alg.algebra.dim(), 1);
        assert_eq!(alg.algebra.gram()[(0, 0)], q(1, 1));
        assert_eq!(alg.algebra.lmul()[0][(0, 0)], q(0, 1));
        assert_eq!(alg.algebra.involution()[(0, 0)], q(1, 1));
    }

    #[test]
    fn poisson_algebra() {
        let lambda = q(3, 2);
        let r = CumulantFunctional::constant(lambda.clone(), 6);
        let alg = build_pseudo_algebra(&r, 2).unwrap();
        assert_eq!(alg.algebra.dim(), 1);
        assert_eq!(alg.algebra.gram()[(0, 0)], lambda);
        assert_eq!(alg.algebra.lmul()[0][(0, 0)], q(1, 1));
    }

    #[test]
    fn non_tracial_rejected() {
        let mut r = CumulantFunctional::constant(q(1, 1), 6);
        r.tracial = false;
        assert!(matches!(build_pseudo_algebra(&r, 1), Err(Error::Unsupported(_))));
    }

    #[test]
    fn non_positive_rejected() {
        // κ₂ = -1 gives a negative norm for the generator
        let r = CumulantFunctional::from_sequence(&[q(0, 1), q(-1, 1), q(0, 1), q(0, 1)]);
        assert!(matches!(build_pseudo_algebra(&r, 1), Err(Error::NotPsd { .. })));
    }
}

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::matrix::{inner, Matrix};
use crate::ncps::{BlockMatrix, NcProbSpace};
use crate::scalar::Scalar;
use num_complex::Complex64;

/// Finite-dimensional pseudo left Hilbert algebra in a fixed basis.
///
/// `involution` is the matrix of the conjugate-linear map `S`:
/// `S(Σ cⱼ eⱼ) = Σ conj(cⱼ) S eⱼ`, with `S eⱼ` stored as column `j`.
/// `lmul[k]` is the matrix of `π_l(e_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoHilbertAlgebra<S> {
    gram: Matrix<S>,
    involution: Matrix<S>,
    lmul: Vec<Matrix<S>>,
    unit: Option<Vec<S>>,
}

impl<S: Scalar> PseudoHilbertAlgebra<S> {
    /// Checks shapes and that the Gram matrix is Hermitian and positive
    /// definite. Algebraic axioms are checked separately by
    /// [`PseudoHilbertAlgebra::axiom_defect`].
    pub fn new(gram: Matrix<S>, involution: Matrix<S>, lmul: Vec<Matrix<S>>, unit: Option<Vec<S>>) -> Result<Self> {
        let d = gram.rows();
        if d == 0 || !gram.is_square() {
            return Err(Error::ShapeMismatch("gram must be square and nonempty".into()));
        }
        if involution.rows() != d || involution.cols() != d || lmul.len() != d {
            return Err(Error::ShapeMismatch("involution and lmul must match gram".into()));
        }
        if lmul.iter().any(|m| m.rows() != d || m.cols() != d) {
            return Err(Error::ShapeMismatch("lmul matrices must be d x d".into()));
        }
        if unit.as_ref().is_some_and(|u| u.len() != d) {
            return Err(Error::ShapeMismatch("unit vector length".into()));
        }
        if !gram.is_hermitian(1e-12) {
            return Err(Error::Domain("gram is not Hermitian".into()));
        }
        positive_definite(&gram)?;
        Ok(PseudoHilbertAlgebra { gram, involution, lmul, unit })
    }

    pub fn dim(&self) -> usize {
        self.gram.rows()
    }

    pub fn gram(&self) -> &Matrix<S> {
        &self.gram
    }

    pub fn involution(&self) -> &Matrix<S> {
        &self.involution
    }

    pub fn lmul(&self) -> &[Matrix<S>] {
        &self.lmul
    }

    pub fn unit(&self) -> Option<&[S]> {
        self.unit.as_deref()
    }

    pub fn inner(&self, x: &[S], y: &[S]) -> S {
        inner(&self.gram, x, y)
    }

    pub fn basis_vector(&self, i: usize) -> Vec<S> {
        let mut v = vec![S::zero(); self.dim()];
        v[i] = S::one();
        v
    }

    /// `Sξ`.
    pub fn apply_s(&self, xi: &[S]) -> Vec<S> {
        let c: Vec<S> = xi.iter().map(S::conj).collect();
        self.involution.mul_vec(&c)
    }

    /// Matrix of `π_l(ξ)`.
    pub fn left_matrix(&self, xi: &[S]) -> Matrix<S> {
        let mut m = Matrix::zeros(self.dim(), self.dim());
        for (k, c) in xi.iter().enumerate() {
            if !c.is_zero() {
                m = m.add(&self.lmul[k].scale(c));
            }
        }
        m
    }

    /// Matrix of right multiplication `ζ -> ζη`.
    pub fn right_matrix(&self, eta: &[S]) -> Matrix<S> {
        let cols: Vec<Vec<S>> = self.lmul.iter().map(|m| m.mul_vec(eta)).collect();
        Matrix::from_fn(self.dim(), self.dim(), |i, j| cols[j][i].clone())
    }

    /// `ξη`.
    pub fn product(&self, xi: &[S], eta: &[S]) -> Vec<S> {
        self.left_matrix(xi).mul_vec(eta)
    }

    /// `S` preserves norms, which at finite dimension means `Δ = 1`.
    pub fn is_unimodular(&self, tol: f64) -> bool {
        let s = &self.involution;
        let q = s.adjoint().mul(&self.gram).mul(s);
        q.approx_eq(&self.gram.transpose(), tol)
    }

    /// Largest violation of the pseudo left Hilbert algebra axioms on basis
    /// vectors: `S² = 1`, `⟨ξη,ζ⟩ = ⟨η,(Sξ)ζ⟩`, associativity and
    /// `S(ξη) = (Sη)(Sξ)`. Zero in exact mode means all hold.
    pub fn axiom_defect(&self) -> f64 {
        let d = self.dim();
        let e: Vec<Vec<S>> = (0..d).map(|i| self.basis_vector(i)).collect();
        let mut worst = 0.0f64;
        let mut note = |a: &S, b: &S| worst = worst.max((a.clone() - b.clone()).magnitude());
        for x in &e {
            let ssx = self.apply_s(&self.apply_s(x));
            for (a, b) in ssx.iter().zip(x) {
                note(a, b);
            }
        }
        let eye = Matrix::<S>::identity(d);
        let s_sq = self.involution.mul(&self.involution.conj());
        for i in 0..d {
            for j in 0..d {
                note(&s_sq[(i, j)], &eye[(i, j)]);
            }
        }
        for x in &e {
            let sx = self.apply_s(x);
            for y in &e {
                let xy = self.product(x, y);
                let s_xy = self.apply_s(&xy);
                let sy_sx = self.product(&self.apply_s(y), &sx);
                for (a, b) in s_xy.iter().zip(&sy_sx) {
                    note(a, b);
                }
                for z in &e {
                    note(&self.inner(&xy, z), &self.inner(y, &self.product(&sx, z)));
                    let l = self.product(&xy, z);
                    let r = self.product(x, &self.product(y, z));
                    for (a, b) in l.iter().zip(&r) {
                        note(a, b);
                    }
                }
            }
        }
        worst
    }

    /// Orthogonal direct sum; the multiplication is blockwise.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let (a, b) = (self.dim(), other.dim());
        let embed = |m: &Matrix<S>, off: usize| {
            Matrix::from_fn(a + b, a + b, |i, j| {
                if i >= off && j >= off && i - off < m.rows() && j - off < m.cols() {
                    m[(i - off, j - off)].clone()
                } else {
                    S::zero()
                }
            })
        };
        let gram = embed(&self.gram, 0).add(&embed(&other.gram, a));
        let involution = embed(&self.involution, 0).add(&embed(&other.involution, a));
        let mut lmul: Vec<Matrix<S>> = self.lmul.iter().map(|m| embed(m, 0)).collect();
        lmul.extend(other.lmul.iter().map(|m| embed(m, a)));
        let unit = match (&self.unit, &other.unit) {
            (Some(u), Some(v)) => Some(u.iter().chain(v).cloned().collect()),
            _ => None,
        };
        PseudoHilbertAlgebra { gram, involution, lmul, unit }
    }

    /// Modular operator `Δ = S*S`, characterised by `⟨Sx, Sy⟩ = ⟨y, Δx⟩`.
    pub fn modular_operator(&self) -> Result<Matrix<S>> {
        let s = &self.involution;
        let q = s.adjoint().mul(&self.gram).mul(s);
        Ok(self.gram.inverse()?.mul(&q.transpose()))
    }

    /// `Δ^{-1/2}` and the antiunitary `J = SΔ^{-1/2}` (as a conjugate-linear
    /// matrix), computed spectrally in floating point.
    pub fn modular_conjugation(&self) -> Result<(CMat, CMat)> {
        let g = linalg::to_cmat(&self.gram);
        let w = linalg::psd_sqrt(&g, 0.0);
        let w_inv = linalg::psd_inv_sqrt(&g, 0.0);
        let delta = linalg::to_cmat(&self.modular_operator()?);
        let dt = &w * &delta * &w_inv;
        let p = &w_inv * linalg::psd_inv_sqrt(&dt, 1e-12) * &w;
        let j = linalg::to_cmat(&self.involution) * p.map(|z| z.conj());
        Ok((p, j))
    }

    /// Converts the scalars of the algebra.
    pub fn to_complex(&self) -> PseudoHilbertAlgebra<Complex64> {
        let cv = |m: &Matrix<S>| m.map_into(|x| x.to_complex());
        PseudoHilbertAlgebra {
            gram: cv(&self.gram),
            involution: cv(&self.involution),
            lmul: self.lmul.iter().map(cv).collect(),
            unit: self.unit.as_ref().map(|u| u.iter().map(S::to_complex).collect()),
        }
    }
}

fn positive_definite<S: Scalar>(gram: &Matrix<S>) -> Result<()> {
    if S::EXACT {
        // LDL pivots of a Hermitian rational matrix
        let n = gram.rows();
        let mut a = gram.clone();
        for i in 0..n {
            let p = a[(i, i)].clone();
            if p.re() <= 0.0 {
                return Err(Error::NotPsd { message: format!("gram pivot {i} not positive"), witness: None });
            }
            for r in i + 1..n {
                let f = a[(r, i)].clone() / p.clone();
                for c in i..n {
                    let d = f.clone() * a[(i, c)].clone();
                    a[(r, c)] -= d;
                }
            }
        }
        Ok(())
    } else {
        let (lo, v) = linalg::min_eigen(&linalg::to_cmat(gram));
        let scale = gram.max_abs();
        if lo <= 1e-14 * scale {
            return Err(Error::NotPsd {
                message: format!("gram not positive definite (eigenvalue {lo:e})"),
                witness: Some(linalg::format_vec(&v)),
            });
        }
        Ok(())
    }
}

/// The algebra `ℂξ` with `ξ² = 0`, `Sξ = ξ` and `⟨ξ,ξ⟩ = norm_sq`.
pub fn trivial_algebra<S: Scalar>(norm_sq: S) -> Result<PseudoHilbertAlgebra<S>> {
    PseudoHilbertAlgebra::new(
        Matrix::diagonal(&[norm_sq]),
        Matrix::identity(1),
        vec![Matrix::zeros(1, 1)],
        None,
    )
}

/// `η_φ(M)` in the basis of matrix units `e_ij` of each block, ordered
/// block by block and row-major inside a block.
pub fn gns_algebra<S: Scalar>(space: &NcProbSpace<S>) -> Result<PseudoHilbertAlgebra<S>> {
    let units = matrix_units(space.block_dims());
    let d = units.len();
    let rho = &space.density().blocks;
    let gram = Matrix::from_fn(d, d, |a, b| {
        let (ba, i, j) = units[a];
        let (bb, k, l) = units[b];
        // trace(ρ e_ji e_kl) = δ_ik ρ_lj
        if ba == bb && i == k {
            rho[ba][(l, j)].clone()
        } else {
            S::zero()
        }
    });
    let index = |b: usize, i: usize, j: usize| units.iter().position(|&u| u == (b, i, j)).unwrap();
    let mut involution = Matrix::zeros(d, d);
    for (c, &(b, i, j)) in units.iter().enumerate() {
        involution[(index(b, j, i), c)] = S::one();
    }
    let lmul = units
        .iter()
        .map(|&(b, i, j)| {
            let mut m = Matrix::zeros(d, d);
            for (c, &(bb, k, l)) in units.iter().enumerate() {
                if bb == b && k == j {
                    m[(index(b, i, l), c)] = S::one();
                }
            }
            m
        })
        .collect();
    let unit = units.iter().map(|&(_, i, j)| if i == j { S::one() } else { S::zero() }).collect();
    PseudoHilbertAlgebra::new(gram, involution, lmul, Some(unit))
}

fn matrix_units(dims: &[usize]) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for (b, &n) in dims.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                out.push((b, i, j));
            }
        }
    }
    out
}

/// Coordinates of `η(x)` in the matrix-unit basis of [`gns_algebra`].
pub(crate) fn gns_coords<S: Scalar>(x: &BlockMatrix<S>) -> Vec<S> {
    let mut out = Vec::new();
    for b in &x.blocks {
        for i in 0..b.rows() {
            for j in 0..b.cols() {
                out.push(b[(i, j)].clone());
            }
        }
    }
    out
}

/// `L²(M, φ)` in an orthonormal basis: the vector `η(x)` is identified with
/// the Hilbert-Schmidt matrix `x ρ^{1/2}`, whose entries are the
/// coordinates. Multiplication becomes `ζ₁ ρ^{-1/2} ζ₂` and
/// `Sζ = ρ^{-1/2} ζ* ρ^{1/2}`.
#[derive(Debug, Clone)]
pub struct OrthonormalGns {
    pub algebra: PseudoHilbertAlgebra<Complex64>,
    pub dims: Vec<usize>,
    pub rho_sqrt: BlockMatrix<Complex64>,
    pub rho_inv_sqrt: BlockMatrix<Complex64>,
}

impl OrthonormalGns {
    /// Coordinates of `η(x)`.
    pub fn eta(&self, x: &BlockMatrix<Complex64>) -> Vec<Complex64> {
        gns_coords(&x.mul(&self.rho_sqrt))
    }

    /// The element `x` with `η(x) = ζ`.
    pub fn element(&self, zeta: &[Complex64]) -> BlockMatrix<Complex64> {
        self.from_coords(zeta).mul(&self.rho_inv_sqrt)
    }

    /// Block matrix whose entries are the coordinates `zeta`.
    pub fn from_coords(&self, zeta: &[Complex64]) -> BlockMatrix<Complex64> {
        let mut k = 0;
        let mut blocks = Vec::new();
        for &n in &self.dims {
            blocks.push(Matrix::from_fn(n, n, |i, j| zeta[k + i * n + j]));
            k += n * n;
        }
        BlockMatrix::new(blocks)
    }

    pub fn coords(&self, m: &BlockMatrix<Complex64>) -> Vec<Complex64> {
        gns_coords(m)
    }

    /// Matrix of left multiplication by the element `m` in these coordinates.
    pub fn left_action(&self, m: &BlockMatrix<Complex64>) -> Matrix<Complex64> {
        let d = self.algebra.dim();
        let cols: Vec<Vec<Complex64>> = (0..d)
            .map(|c| {
                let mut e = vec![Complex64::new(0.0, 0.0); d];
                e[c] = Complex64::new(1.0, 0.0);
                self.coords(&m.mul(&self.from_coords(&e)))
            })
            .collect();
        Matrix::from_fn(d, d, |i, j| cols[j][i])
    }
}

/// Orthonormal model of `L²(M, φ)` with its pseudo Hilbert algebra.
pub fn gns_algebra_orthonormal(space: &NcProbSpace<Complex64>) -> Result<OrthonormalGns> {
    let dims = space.block_dims().to_vec();
    let mut sq = Vec::new();
    let mut isq = Vec::new();
    for b in &space.density().blocks {
        let c = linalg::to_cmat(b);
        sq.push(linalg::from_cmat(&linalg::psd_sqrt(&c, 0.0)));
        isq.push(linalg::from_cmat(&linalg::psd_inv_sqrt(&c, 0.0)));
    }
    let rho_sqrt = BlockMatrix::new(sq);
    let rho_inv_sqrt = BlockMatrix::new(isq);
    let units = matrix_units(&dims);
    let d = units.len();
    let mut shell = OrthonormalGns {
        algebra: PseudoHilbertAlgebra {
            gram: Matrix::identity(d),
            involution: Matrix::zeros(d, d),
            lmul: Vec::new(),
            unit: None,
        },
        dims: dims.clone(),
        rho_sqrt: rho_sqrt.clone(),
        rho_inv_sqrt: rho_inv_sqrt.clone(),
    };
    let unit_vec = |c: usize| {
        let mut e = vec![Complex64::new(0.0, 0.0); d];
        e[c] = Complex64::new(1.0, 0.0);
        e
    };
    let mut involution = Matrix::zeros(d, d);
    let mut lmul = Vec::with_capacity(d);
    for c in 0..d {
        let z = shell.from_coords(&unit_vec(c));
        let s = rho_inv_sqrt.mul(&z.adjoint()).mul(&rho_sqrt);
        for (r, v) in shell.coords(&s).into_iter().enumerate() {
            involution[(r, c)] = v;
        }
        lmul.push(shell.left_action(&z.mul(&rho_inv_sqrt)));
    }
    let unit = Some(shell.coords(&rho_sqrt));
    shell.algebra = PseudoHilbertAlgebra::new(Matrix::identity(d), involution, lmul, unit)?;
    Ok(shell)
}

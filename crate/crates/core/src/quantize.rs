//! Completely positive maps between finite-dimensional weighted algebras and
//! their second quantization on free Poisson Fock spaces.
//!
//! Everything here is floating point. `L²(M, φ)` is taken in the orthonormal
//! coordinates of [`gns_algebra_orthonormal`]: `η(x) = x ρ^{1/2}` read off
//! entrywise, block by block.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{gns_algebra_orthonormal, wick_from_parts, Elementary, FockOperator, FockSpace, FockVector, OrthonormalGns, Overflow, WickTerm};
use crate::linalg::{self, CMat};
use crate::matrix::Matrix;
use crate::ncps::{BlockMatrix, NcProbSpace};

/// Tolerance for the positivity checks of [`check_admissible`].
pub const ADMISSIBLE_TOL: f64 = 1e-10;
const NULL_TOL: f64 = 1e-12;

type Space = NcProbSpace<Complex64>;
type Block = BlockMatrix<Complex64>;

fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn full(b: &Block) -> CMat {
    linalg::to_cmat(&b.to_full())
}

fn to_blocks(dims: &[usize], m: &CMat) -> Block {
    BlockMatrix::from_full(dims, &linalg::from_cmat(m))
}

fn full_size(dims: &[usize]) -> usize {
    dims.iter().sum()
}

fn block_offsets(dims: &[usize]) -> Vec<usize> {
    dims.iter()
        .scan(0, |acc, &d| {
            let o = *acc;
            *acc += d;
            Some(o)
        })
        .collect()
}

/// Matrix units `e^b_{ij}` in coordinate order (block, row, column).
pub fn matrix_units(dims: &[usize]) -> Vec<Block> {
    let mut out = Vec::new();
    for (b, &n) in dims.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                let mut e = BlockMatrix::zeros(dims);
                e.blocks[b] = Matrix::from_fn(n, n, |r, c| {
                    if r == i && c == j {
                        Complex64::new(1.0, 0.0)
                    } else {
                        czero()
                    }
                });
                out.push(e);
            }
        }
    }
    out
}

fn coords(x: &Block) -> Vec<Complex64> {
    x.blocks.iter().flat_map(|b| b.to_rows().into_iter().flatten()).collect()
}

/// The biweight `[x, y]_φ = tr(ρ^{1/2} x ρ^{1/2} y)`; `[1, y]_φ = φ(y)`.
pub fn biweight(space: &Space, x: &Block, y: &Block) -> Result<Complex64> {
    space.check_element(x)?;
    space.check_element(y)?;
    let root = linalg::psd_sqrt(&full(space.density()), 0.0);
    Ok((&root * full(x) * &root * full(y)).trace())
}

/// Modular conjugation `ζ ↦ ζ*` in orthonormal coordinates.
fn conjugate_coords(dims: &[usize], zeta: &[Complex64]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(zeta.len());
    let mut k = 0;
    for &n in dims {
        for i in 0..n {
            for j in 0..n {
                out.push(zeta[k + j * n + i].conj());
            }
        }
        k += n * n;
    }
    out
}

/// A linear map `T: M → N`, stored through the images of the matrix units
/// of `M` (equivalently, its Choi matrices).
#[derive(Debug, Clone)]
pub struct CpMap {
    source: Space,
    target: Space,
    images: Vec<CMat>,
}

/// Serialized form of a [`CpMap`]: Kraus operators or per-block Choi
/// matrices, each a list of rows of `[re, im]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum CpMapForm {
    Kraus { kraus: Vec<Vec<Vec<Complex64>>> },
    Choi { blocks: Vec<Vec<Vec<Complex64>>> },
}

fn rows_to_cmat(rows: &[Vec<Complex64>]) -> Result<CMat> {
    let m = Matrix::from_rows(rows.to_vec())?;
    Ok(linalg::to_cmat(&m))
}

fn cmat_to_rows(m: &CMat) -> Vec<Vec<Complex64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

impl CpMap {
    fn from_images(source: Space, target: Space, images: Vec<CMat>) -> Result<Self> {
        let dn = full_size(target.block_dims());
        for (a, img) in images.iter().enumerate() {
            if img.nrows() != dn || img.ncols() != dn {
                return Err(Error::ShapeMismatch(format!("image of unit {a} is {}x{}", img.nrows(), img.ncols())));
            }
            let scale = img.iter().map(|v| v.norm()).fold(1.0, f64::max);
            let defect = BlockMatrix::off_block_defect(target.block_dims(), &linalg::from_cmat(img));
            if defect > 1e-12 * scale {
                return Err(Error::Malformed(format!(
                    "map sends matrix unit {a} outside the target algebra (off-block entry {defect:e})"
                )));
            }
        }
        Ok(CpMap { source, target, images })
    }

    /// `T(x) = Σ K x K*` with `K` of size `full(N) × full(M)`.
    pub fn from_kraus(source: Space, target: Space, kraus: Vec<CMat>) -> Result<Self> {
        let (dm, dn) = (full_size(source.block_dims()), full_size(target.block_dims()));
        for (k, op) in kraus.iter().enumerate() {
            if op.nrows() != dn || op.ncols() != dm {
                return Err(Error::ShapeMismatch(format!(
                    "Kraus operator {k} is {}x{}, expected {dn}x{dm}",
                    op.nrows(),
                    op.ncols()
                )));
            }
        }
        let images = matrix_units(source.block_dims())
            .iter()
            .map(|e| {
                let f = full(e);
                kraus.iter().fold(CMat::zeros(dn, dn), |acc, k| acc + k * &f * k.adjoint())
            })
            .collect();
        Self::from_images(source, target, images)
    }

    /// One Choi matrix `Σ_{ij} E_ij ⊗ T(e^b_ij)` per block of `M`.
    pub fn from_choi(source: Space, target: Space, blocks: Vec<CMat>) -> Result<Self> {
        let dims = source.block_dims().to_vec();
        if blocks.len() != dims.len() {
            return Err(Error::ShapeMismatch(format!("{} Choi blocks for {} algebra blocks", blocks.len(), dims.len())));
        }
        let dn = full_size(target.block_dims());
        let mut images = Vec::new();
        for (c, &n) in blocks.iter().zip(&dims) {
            if c.nrows() != n * dn || c.ncols() != n * dn {
                return Err(Error::ShapeMismatch(format!("Choi block is {}x{}, expected {}", c.nrows(), c.ncols(), n * dn)));
            }
            for i in 0..n {
                for j in 0..n {
                    images.push(c.view((i * dn, j * dn), (dn, dn)).into_owned());
                }
            }
        }
        Self::from_images(source, target, images)
    }

    pub fn from_form(source: Space, target: Space, form: &CpMapForm) -> Result<Self> {
        match form {
            CpMapForm::Kraus { kraus } => {
                let ops = kraus.iter().map(|k| rows_to_cmat(k)).collect::<Result<Vec<_>>>()?;
                Self::from_kraus(source, target, ops)
            }
            CpMapForm::Choi { blocks } => {
                let bs = blocks.iter().map(|k| rows_to_cmat(k)).collect::<Result<Vec<_>>>()?;
                Self::from_choi(source, target, bs)
            }
        }
    }

    /// Kraus form when completely positive, otherwise the Choi blocks.
    pub fn to_form(&self) -> CpMapForm {
        match self.kraus() {
            Ok(k) => CpMapForm::Kraus { kraus: k.iter().map(cmat_to_rows).collect() },
            Err(_) => CpMapForm::Choi { blocks: self.choi().iter().map(cmat_to_rows).collect() },
        }
    }

    pub fn identity(space: &Space) -> Self {
        Self::scaled_identity(space, 1.0)
    }

    /// `x ↦ c x`.
    pub fn scaled_identity(space: &Space, c: f64) -> Self {
        let images = matrix_units(space.block_dims()).iter().map(|e| full(e) * Complex64::new(c, 0.0)).collect();
        CpMap { source: space.clone(), target: space.clone(), images }
    }

    pub fn zero(source: &Space, target: &Space) -> Self {
        let dn = full_size(target.block_dims());
        let images = matrix_units(source.block_dims()).iter().map(|_| CMat::zeros(dn, dn)).collect();
        CpMap { source: source.clone(), target: target.clone(), images }
    }

    pub fn source(&self) -> &Space {
        &self.source
    }

    pub fn target(&self) -> &Space {
        &self.target
    }

    pub fn apply(&self, x: &Block) -> Result<Block> {
        self.source.check_element(x)?;
        Ok(to_blocks(self.target.block_dims(), &self.apply_coords(&coords(x))))
    }

    fn apply_coords(&self, c: &[Complex64]) -> CMat {
        let dn = full_size(self.target.block_dims());
        c.iter().zip(&self.images).fold(CMat::zeros(dn, dn), |acc, (v, img)| acc + img * *v)
    }

    /// The transpose `Tᵗ: N → M`, `tr(Tᵗ(y) m) = tr(y T(m))` for `m ∈ M`.
    fn transpose_apply(&self, y: &CMat) -> Block {
        let dims = self.source.block_dims();
        let mut blocks = Vec::new();
        let mut a = 0;
        for &n in dims {
            let base = a;
            blocks.push(Matrix::from_fn(n, n, |i, j| (y * &self.images[base + j * n + i]).trace()));
            a += n * n;
        }
        BlockMatrix::new(blocks)
    }

    pub fn choi(&self) -> Vec<CMat> {
        let dn = full_size(self.target.block_dims());
        let mut out = Vec::new();
        let mut a = 0;
        for &n in self.source.block_dims() {
            let mut c = CMat::zeros(n * dn, n * dn);
            for i in 0..n {
                for j in 0..n {
                    c.view_mut((i * dn, j * dn), (dn, dn)).copy_from(&self.images[a + i * n + j]);
                }
            }
            out.push(c);
            a += n * n;
        }
        out
    }

    /// Kraus operators from the spectral decomposition of the Choi blocks.
    pub fn kraus(&self) -> Result<Vec<CMat>> {
        let dn = full_size(self.target.block_dims());
        let dm = full_size(self.source.block_dims());
        let offsets = block_offsets(self.source.block_dims());
        let mut out = Vec::new();
        for ((c, &n), &off) in self.choi().iter().zip(self.source.block_dims()).zip(&offsets) {
            if !c.iter().zip(c.adjoint().iter()).all(|(x, y)| (x - y).norm() <= 1e-10) {
                return Err(Error::NotPsd { message: "Choi matrix is not Hermitian".into(), witness: None });
            }
            let (vals, vecs) = linalg::hermitian_eigen(c);
            let top = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
            if let Some(&lo) = vals.first() {
                if lo < -ADMISSIBLE_TOL * top.max(1.0) {
                    return Err(Error::NotPsd {
                        message: format!("Choi eigenvalue {lo:e}"),
                        witness: Some(linalg::format_vec(&vecs.column(0).iter().cloned().collect::<Vec<_>>())),
                    });
                }
            }
            for (k, &lam) in vals.iter().enumerate() {
                if lam <= NULL_TOL * top.max(1.0) {
                    continue;
                }
                let s = lam.sqrt();
                let mut op = CMat::zeros(dn, dm);
                for i in 0..n {
                    for r in 0..dn {
                        op[(r, off + i)] = vecs[(i * dn + r, k)] * s;
                    }
                }
                out.push(op);
            }
        }
        Ok(out)
    }

    /// `T₂ η_φ(x) = η_ψ(T(x))` in orthonormal coordinates.
    pub fn l2_matrix(&self) -> Result<CMat> {
        let gm = gns_algebra_orthonormal(&self.source)?;
        let gn = gns_algebra_orthonormal(&self.target)?;
        Ok(self.l2_with(&gm, &gn))
    }

    fn l2_with(&self, gm: &OrthonormalGns, gn: &OrthonormalGns) -> CMat {
        let (dm, dn) = (gm.algebra.dim(), gn.algebra.dim());
        let mut t2 = CMat::zeros(dn, dm);
        for c in 0..dm {
            let mut e = vec![czero(); dm];
            e[c] = Complex64::new(1.0, 0.0);
            let x = gm.element(&e);
            let y = to_blocks(self.target.block_dims(), &self.apply_coords(&coords(&x)));
            for (r, v) in gn.eta(&y).into_iter().enumerate() {
                t2[(r, c)] = v;
            }
        }
        t2
    }
}

/// Outcome of [`check_admissible`]. Witnesses are eigenvectors for the most
/// negative eigenvalue of the violated inequality.
#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityReport {
    pub cp: bool,
    pub subunital: bool,
    pub weight_decreasing: bool,
    pub cp_min_eigenvalue: f64,
    pub subunital_margin: f64,
    pub weight_margin: f64,
    pub cp_witness: Option<Vec<Complex64>>,
    pub subunital_witness: Option<Vec<Complex64>>,
    pub weight_witness: Option<Vec<Complex64>>,
}

impl AdmissibilityReport {
    pub fn admissible(&self) -> bool {
        self.cp && self.subunital && self.weight_decreasing
    }
}

fn min_eig_blocks(b: &Block) -> (f64, Vec<Complex64>) {
    let offsets = block_offsets(&b.dims());
    let total = full_size(&b.dims());
    let mut best = (f64::INFINITY, Vec::new());
    for (m, &off) in b.blocks.iter().zip(&offsets) {
        let h = linalg::to_cmat(m);
        let h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
        let (lo, v) = linalg::min_eigen(&h);
        if lo < best.0 {
            let mut w = vec![czero(); total];
            w[off..off + v.len()].copy_from_slice(&v);
            best = (lo, w);
        }
    }
    best
}

/// Complete positivity, `T(1) ≤ 1`, and `ψ∘T ≤ φ` (the density inequality
/// `ρ_φ − Tᵗ(ρ_ψ) ≥ 0`).
pub fn check_admissible(t: &CpMap) -> AdmissibilityReport {
    let mut cp_min = f64::INFINITY;
    let mut cp_witness = None;
    for c in t.choi() {
        let h = (&c + c.adjoint()) * Complex64::new(0.5, 0.0);
        let herm = (&c - c.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max) <= ADMISSIBLE_TOL;
        let (lo, v) = linalg::min_eigen(&h);
        let lo = if herm { lo } else { f64::NEG_INFINITY };
        if lo < cp_min {
            cp_min = lo;
            cp_witness = Some(v);
        }
    }
    let cp = cp_min >= -ADMISSIBLE_TOL;

    let dims_n = t.target.block_dims();
    let one = coords(&BlockMatrix::identity(t.source.block_dims()));
    let t1 = to_blocks(dims_n, &t.apply_coords(&one));
    let slack = BlockMatrix::identity(dims_n).add(&t1.scale(&Complex64::new(-1.0, 0.0)));
    let (sub_margin, sub_w) = min_eig_blocks(&slack);
    let subunital = sub_margin >= -ADMISSIBLE_TOL;

    let pulled = t.transpose_apply(&full(t.target.density()));
    let gap = t.source.density().add(&pulled.scale(&Complex64::new(-1.0, 0.0)));
    let (w_margin, w_w) = min_eig_blocks(&gap);
    let weight_decreasing = w_margin >= -ADMISSIBLE_TOL;

    AdmissibilityReport {
        cp,
        subunital,
        weight_decreasing,
        cp_min_eigenvalue: cp_min,
        subunital_margin: sub_margin,
        weight_margin: w_margin,
        cp_witness: if cp { None } else { cp_witness },
        subunital_witness: if subunital { None } else { Some(sub_w) },
        weight_witness: if weight_decreasing { None } else { Some(w_w) },
    }
}

fn require_admissible(t: &CpMap) -> Result<()> {
    let r = check_admissible(t);
    if r.admissible() {
        return Ok(());
    }
    let failed: Vec<&str> = [(r.cp, "completely positive"), (r.subunital, "subunital"), (r.weight_decreasing, "weight decreasing")]
        .iter()
        .filter(|(ok, _)| !ok)
        .map(|(_, name)| *name)
        .collect();
    let witness = r.cp_witness.or(r.subunital_witness).or(r.weight_witness).map(|v| linalg::format_vec(&v));
    Err(Error::Inadmissible { message: format!("map is not {}", failed.join(", ")), witness })
}

/// The dual map `T*: N → M` with `[T*(n), m]_φ = [n, T(m)]_ψ`, from the
/// closed form `T*(n) = ρ_φ^{-1/2} Tᵗ(ρ_ψ^{1/2} n ρ_ψ^{1/2}) ρ_φ^{-1/2}`.
pub fn petz_dual(t: &CpMap) -> Result<CpMap> {
    let root_n = linalg::psd_sqrt(&full(t.target.density()), 0.0);
    let dims_m = t.source.block_dims().to_vec();
    let inv_root_m = to_blocks(&dims_m, &linalg::psd_inv_sqrt(&full(t.source.density()), 0.0));
    let images = matrix_units(t.target.block_dims())
        .iter()
        .map(|f| {
            let y = &root_n * full(f) * &root_n;
            full(&inv_root_m.mul(&t.transpose_apply(&y)).mul(&inv_root_m))
        })
        .collect();
    CpMap::from_images(t.target.clone(), t.source.clone(), images)
}

/// The same dual read off its `L²` action `(T*)₂ = J_φ T₂* J_ψ`.
pub fn petz_dual_l2(t: &CpMap) -> Result<CpMap> {
    let gm = gns_algebra_orthonormal(&t.source)?;
    let gn = gns_algebra_orthonormal(&t.target)?;
    let t2_adj = t.l2_with(&gm, &gn).adjoint();
    let dims_m = t.source.block_dims();
    let dims_n = t.target.block_dims();
    let images = matrix_units(dims_n)
        .iter()
        .map(|f| {
            let zeta = conjugate_coords(dims_n, &gn.eta(f));
            let moved: Vec<Complex64> = (&t2_adj * nalgebra::DVector::from_vec(zeta)).iter().cloned().collect();
            full(&gm.element(&conjugate_coords(dims_m, &moved)))
        })
        .collect();
    CpMap::from_images(t.target.clone(), t.source.clone(), images)
}

/// Largest entrywise difference between the unit images of two maps with
/// the same shape.
pub fn map_distance(a: &CpMap, b: &CpMap) -> f64 {
    a.images
        .iter()
        .zip(&b.images)
        .map(|(x, y)| linalg::max_abs_diff(x, y))
        .fold(if a.images.len() == b.images.len() { 0.0 } else { f64::INFINITY }, f64::max)
}

/// `Γ(e^{-t})`'s underlying map `x ↦ e^{-t} x`.
pub fn ornstein_uhlenbeck(space: &Space, time: f64) -> Result<CpMap> {
    if !(time.is_finite() && time >= 0.0) {
        return Err(Error::Domain(format!("semigroup time must be nonnegative, got {time}")));
    }
    Ok(CpMap::scaled_identity(space, (-time).exp()))
}

/// `H_T`: the completion of `M ⊙ L²(N)` under
/// `⟨m₁⊗ξ₁, m₂⊗ξ₂⟩ = ⟨ξ₁, T(m₁*m₂)ξ₂⟩`, in an orthonormal basis of the
/// quotient by the null space.
#[derive(Debug, Clone)]
pub struct StinespringBimodule {
    source_dims: Vec<usize>,
    target_dims: Vec<usize>,
    dm: usize,
    dn: usize,
    gram: CMat,
    to_coords: CMat,
    from_coords: CMat,
    gn: OrthonormalGns,
}

impl StinespringBimodule {
    pub fn dim(&self) -> usize {
        self.to_coords.nrows()
    }

    /// Gram matrix on the formal basis `e_a ⊗ f_b`, index `a·dn + b`.
    pub fn formal_gram(&self) -> &CMat {
        &self.gram
    }

    /// Coordinates of `m ⊗ ξ`.
    pub fn vector(&self, m: &Block, xi: &[Complex64]) -> Vec<Complex64> {
        let c = coords(m);
        let formal = nalgebra::DVector::from_fn(self.dm * self.dn, |k, _| c[k / self.dn] * xi[k % self.dn]);
        (&self.to_coords * formal).iter().cloned().collect()
    }

    fn formal_left(&self, m: &Block) -> CMat {
        let units = matrix_units(&self.source_dims);
        let cols: Vec<Vec<Complex64>> = units.iter().map(|e| coords(&m.mul(e))).collect();
        let mut out = CMat::zeros(self.dm * self.dn, self.dm * self.dn);
        for a in 0..self.dm {
            for a2 in 0..self.dm {
                let v = cols[a][a2];
                if v == czero() {
                    continue;
                }
                for b in 0..self.dn {
                    out[(a2 * self.dn + b, a * self.dn + b)] = v;
                }
            }
        }
        out
    }

    /// Left action of `m ∈ M`.
    pub fn left_action(&self, m: &Block) -> CMat {
        &self.to_coords * self.formal_left(m) * &self.from_coords
    }

    /// Right action of `n ∈ N`, induced by `ζ ↦ ζ n` on `L²(N)`.
    pub fn right_action(&self, n: &Block) -> CMat {
        let mut r = CMat::zeros(self.dn, self.dn);
        for b in 0..self.dn {
            let mut e = vec![czero(); self.dn];
            e[b] = Complex64::new(1.0, 0.0);
            let moved = coords(&self.gn.from_coords(&e).mul(n));
            for (b2, v) in moved.into_iter().enumerate() {
                r[(b2, b)] = v;
            }
        }
        let formal = CMat::identity(self.dm, self.dm).kronecker(&r);
        &self.to_coords * formal * &self.from_coords
    }

    /// `i_N: η ↦ 1 ⊗ η`.
    pub fn i_n(&self) -> CMat {
        let one = BlockMatrix::identity(&self.source_dims);
        let mut out = CMat::zeros(self.dim(), self.dn);
        for b in 0..self.dn {
            let mut e = vec![czero(); self.dn];
            e[b] = Complex64::new(1.0, 0.0);
            for (r, v) in self.vector(&one, &e).into_iter().enumerate() {
                out[(r, b)] = v;
            }
        }
        out
    }

    /// `j_M: η_φ(x) ↦ x ⊗ J_ψ η_ψ(1) = x ⊗ ρ_ψ^{1/2}`.
    pub fn j_m(&self, gm: &OrthonormalGns) -> CMat {
        let unit_n = self.gn.eta(&BlockMatrix::identity(&self.target_dims));
        let unit_n = conjugate_coords(&self.target_dims, &unit_n);
        let mut out = CMat::zeros(self.dim(), self.dm);
        for c in 0..self.dm {
            let mut e = vec![czero(); self.dm];
            e[c] = Complex64::new(1.0, 0.0);
            for (r, v) in self.vector(&gm.element(&e), &unit_n).into_iter().enumerate() {
                out[(r, c)] = v;
            }
        }
        out
    }
}

pub fn stinespring_bimodule(t: &CpMap) -> Result<StinespringBimodule> {
    let gn = gns_algebra_orthonormal(&t.target)?;
    let source_dims = t.source.block_dims().to_vec();
    let target_dims = t.target.block_dims().to_vec();
    let units = matrix_units(&source_dims);
    let dm = units.len();
    let dn = gn.algebra.dim();
    let mut gram = CMat::zeros(dm * dn, dm * dn);
    for a in 0..dm {
        for c in 0..dm {
            let prod = units[a].adjoint().mul(&units[c]);
            let img = to_blocks(&target_dims, &t.apply_coords(&coords(&prod)));
            let act = linalg::to_cmat(&gn.left_action(&img));
            for b in 0..dn {
                for d in 0..dn {
                    gram[(a * dn + b, c * dn + d)] = act[(b, d)];
                }
            }
        }
    }
    let gram = (&gram + gram.adjoint()) * Complex64::new(0.5, 0.0);
    let (vals, vecs) = linalg::hermitian_eigen(&gram);
    let top = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if let Some(&lo) = vals.first() {
        if lo < -ADMISSIBLE_TOL * top.max(1.0) {
            return Err(Error::NotPsd {
                message: format!("bimodule Gram matrix has eigenvalue {lo:e}; the map is not completely positive"),
                witness: Some(linalg::format_vec(&vecs.column(0).iter().cloned().collect::<Vec<_>>())),
            });
        }
    }
    let keep: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > NULL_TOL * top.max(1.0)).collect();
    let r = keep.len();
    let n = dm * dn;
    let to_coords = CMat::from_fn(r, n, |i, j| vecs[(j, keep[i])].conj() * vals[keep[i]].sqrt());
    let from_coords = CMat::from_fn(n, r, |i, j| vecs[(i, keep[j])] / vals[keep[j]].sqrt());
    Ok(StinespringBimodule { source_dims, target_dims, dm, dn, gram, to_coords, from_coords, gn })
}

/// Gram defect of the identification `H_{T*} ≅ conj(H_T)`,
/// `n ⊗_{T*} ζ ↦ conj(π_l(J_φζ) ⊗_T J_ψ η_ψ(n))`, over all basis pairs.
pub fn conjugate_identification_defect(t: &CpMap) -> Result<f64> {
    let dual = petz_dual(t)?;
    let gm = gns_algebra_orthonormal(&t.source)?;
    let gn = gns_algebra_orthonormal(&t.target)?;
    let dims_m = t.source.block_dims();
    let dims_n = t.target.block_dims();
    let units_n = matrix_units(dims_n);
    let dm = gm.algebra.dim();
    let basis = |i: usize| {
        let mut e = vec![czero(); dm];
        e[i] = Complex64::new(1.0, 0.0);
        e
    };
    let inner_m = |x: &[Complex64], y: &[Complex64]| x.iter().zip(y).map(|(a, b)| a.conj() * b).sum::<Complex64>();
    let mut worst: f64 = 0.0;
    for fa in &units_n {
        for fb in &units_n {
            let left_m = gm.left_action(&dual.apply(&fa.adjoint().mul(fb))?);
            let jn_a = conjugate_coords(dims_n, &gn.eta(fa));
            let jn_b = conjugate_coords(dims_n, &gn.eta(fb));
            for i in 0..dm {
                for j in 0..dm {
                    let lhs = inner_m(&basis(i), &left_m.mul_vec(&basis(j)));
                    let xi = gm.element(&conjugate_coords(dims_m, &basis(i)));
                    let xj = gm.element(&conjugate_coords(dims_m, &basis(j)));
                    let act = gn.left_action(&t.apply(&xj.adjoint().mul(&xi))?);
                    let rhs = inner_m(&jn_b, &act.mul_vec(&jn_a));
                    worst = worst.max((lhs - rhs).norm());
                }
            }
        }
    }
    Ok(worst)
}

/// The maps of the dilation `L²(M) → H̃ → L²(N)` with
/// `H̃ = L²(M) ⊕ H_T ⊕ L²(N)`.
#[derive(Debug, Clone)]
pub struct Dilation {
    pub t2: CMat,
    pub bimodule: StinespringBimodule,
    pub i_n: CMat,
    pub j_m: CMat,
    /// `k_M ξ = (√(1 − j_M*j_M) ξ, j_M ξ, 0)`.
    pub k_m: CMat,
    /// `p_N(ζ, ξ, η) = i_N* ξ + √(1 − i_N*i_N) η`.
    pub p_n: CMat,
    gm: OrthonormalGns,
    gn: OrthonormalGns,
}

fn defect_root(c: &CMat, what: &str) -> Result<CMat> {
    let n = c.ncols();
    let g = CMat::identity(n, n) - c.adjoint() * c;
    let (vals, vecs) = linalg::hermitian_eigen(&g);
    if let Some(&lo) = vals.first() {
        if lo < -1e-9 {
            return Err(Error::Inadmissible {
                message: format!("{what} is not a contraction (1 − c*c has eigenvalue {lo:e})"),
                witness: Some(linalg::format_vec(&vecs.column(0).iter().cloned().collect::<Vec<_>>())),
            });
        }
    }
    Ok(linalg::psd_sqrt(&g, NULL_TOL))
}

impl Dilation {
    pub fn tilde_dim(&self) -> usize {
        self.k_m.nrows()
    }

    /// Action of `m ∈ M` on `H̃`: left multiplication, the bimodule action and 0.
    pub fn tilde_left(&self, m: &Block) -> CMat {
        let dm = self.gm.algebra.dim();
        let r = self.bimodule.dim();
        let mut out = CMat::zeros(self.tilde_dim(), self.tilde_dim());
        out.view_mut((0, 0), (dm, dm)).copy_from(&linalg::to_cmat(&self.gm.left_action(m)));
        out.view_mut((dm, dm), (r, r)).copy_from(&self.bimodule.left_action(m));
        out
    }

    pub fn source_gns(&self) -> &OrthonormalGns {
        &self.gm
    }

    pub fn target_gns(&self) -> &OrthonormalGns {
        &self.gn
    }
}

/// Builds the dilation of an admissible map.
pub fn dilate(t: &CpMap) -> Result<Dilation> {
    require_admissible(t)?;
    let gm = gns_algebra_orthonormal(&t.source)?;
    let gn = gns_algebra_orthonormal(&t.target)?;
    let bimodule = stinespring_bimodule(t)?;
    let i_n = bimodule.i_n();
    let j_m = bimodule.j_m(&gm);
    let (dm, dn, r) = (gm.algebra.dim(), gn.algebra.dim(), bimodule.dim());
    let tilde = dm + r + dn;
    let mut k_m = CMat::zeros(tilde, dm);
    k_m.view_mut((0, 0), (dm, dm)).copy_from(&defect_root(&j_m, "j_M")?);
    k_m.view_mut((dm, 0), (r, dm)).copy_from(&j_m);
    let mut p_n = CMat::zeros(dn, tilde);
    p_n.view_mut((0, dm), (dn, r)).copy_from(&i_n.adjoint());
    p_n.view_mut((0, dm + r), (dn, dn)).copy_from(&defect_root(&i_n, "i_N")?);
    let t2 = t.l2_with(&gm, &gn);
    Ok(Dilation { t2, bimodule, i_n, j_m, k_m, p_n, gm, gn })
}

/// `Γ(T)X = F(p_N) I(X) F(p_N)*` acting on `F(L²(N))`.
#[derive(Debug, Clone)]
pub struct QuantizedOperator {
    inner: FockOperator<Complex64>,
    tilde: FockSpace<Complex64>,
    p: Matrix<Complex64>,
    p_adj: Matrix<Complex64>,
    degree: usize,
}

impl QuantizedOperator {
    /// Highest Wick degree in the quantized polynomial.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn truncation(&self) -> usize {
        self.tilde.truncation()
    }

    /// `I(X)` on `F(H̃)`.
    pub fn dilated(&self) -> &FockOperator<Complex64> {
        &self.inner
    }

    /// Exact on vectors whose degree plus the Wick degree fits the truncation.
    pub fn apply(&self, v: &FockVector<Complex64>) -> Result<FockVector<Complex64>> {
        if v.max_degree() + self.degree > self.truncation() {
            return Err(Error::TruncationTooSmall(format!(
                "input degree {} plus Wick degree {} exceeds truncation {}",
                v.max_degree(),
                self.degree,
                self.truncation()
            )));
        }
        let lifted = v.map_legs(&self.p_adj);
        Ok(self.tilde.apply(&self.inner, &lifted)?.map_legs(&self.p))
    }

    /// `⟨Ω, Γ(T)X Ω⟩`.
    pub fn vacuum_expectation(&self) -> Result<Complex64> {
        Ok(self.apply(&FockVector::vacuum())?.vacuum_coefficient())
    }
}

/// Second quantization of a Wick polynomial `X = Σ c Ψ(ξ₁⊗…⊗ξₙ)` over
/// `L²(M)` (orthonormal coordinates), truncated at `truncation`.
pub fn second_quantize(t: &CpMap, x: &[WickTerm<Complex64>], truncation: usize) -> Result<QuantizedOperator> {
    let dil = dilate(t)?;
    second_quantize_with(&dil, x, truncation)
}

pub fn second_quantize_with(dil: &Dilation, x: &[WickTerm<Complex64>], truncation: usize) -> Result<QuantizedOperator> {
    let degree = x.iter().map(|t| t.1.len()).max().unwrap_or(0);
    if truncation < degree + 2 {
        return Err(Error::TruncationTooSmall(format!("truncation {truncation} below Wick degree {degree} + 2")));
    }
    let dm = dil.gm.algebra.dim();
    for (_, legs) in x {
        if let Some(bad) = legs.iter().find(|l| l.len() != dm) {
            return Err(Error::ShapeMismatch(format!("leg of length {} in L² of dimension {dm}", bad.len())));
        }
    }
    let d = dil.tilde_dim();
    let tilde = FockSpace::new(Matrix::identity(d), truncation, Overflow::Projective)?;
    let lift = |xi: &[Complex64]| -> Vec<Complex64> {
        (&dil.k_m * nalgebra::DVector::from_column_slice(xi)).iter().cloned().collect()
    };
    let mut inner = FockOperator::zero();
    for (c, legs) in x {
        let plus: Vec<Elementary<Complex64>> = legs.iter().map(|l| Elementary::Create(lift(l))).collect();
        let minus: Vec<Elementary<Complex64>> = legs
            .iter()
            .map(|l| Elementary::Annihilate(tilde.functional(&lift(&dil.gm.algebra.apply_s(l)))))
            .collect();
        let zero: Vec<Elementary<Complex64>> = legs
            .iter()
            .map(|l| Elementary::Preserve(linalg::from_cmat(&dil.tilde_left(&dil.gm.element(l)))))
            .collect();
        inner = inner.plus(&wick_from_parts(&plus, &minus, &zero).scale(c));
    }
    Ok(QuantizedOperator {
        inner,
        tilde,
        p: linalg::from_cmat(&dil.p_n),
        p_adj: linalg::from_cmat(&dil.p_n.adjoint()),
        degree,
    })
}

/// `T₂` applied to every leg of a Wick polynomial.
pub fn push_forward(dil: &Dilation, x: &[WickTerm<Complex64>]) -> Vec<WickTerm<Complex64>> {
    x.iter()
        .map(|(c, legs)| {
            let moved = legs
                .iter()
                .map(|l| (&dil.t2 * nalgebra::DVector::from_column_slice(l)).iter().cloned().collect())
                .collect();
            (*c, moved)
        })
        .collect()
}

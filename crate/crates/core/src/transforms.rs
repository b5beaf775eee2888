//! Analytic transforms of probability measures on the line.
//!
//! Cauchy transforms, cumulant transforms by Newton inversion, free
//! Lévy-Khintchine triples with their jump decomposition, recovery of a
//! triple from finitely many cumulants, and free additive convolution with
//! Stieltjes density recovery.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::integrate;

const CZERO: Complex64 = Complex64::new(0.0, 0.0);
const QUAD_TOL: f64 = 1e-9;
const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 100;
/// Imaginary offset used for Stieltjes inversion.
pub const STIELTJES_EPS: f64 = 1e-4;
/// Relative PSD tolerance for Hankel matrices of cumulant sequences.
pub const HANKEL_PSD_TOL: f64 = 1e-9;
const HANKEL_RANK_TOL: f64 = 1e-10;
const MAX_RECOVERY_ORDER: usize = 5;

fn cnum(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Absolutely continuous part of a [`Measure`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Density {
    /// The free Poisson law of rate `lambda`, including its atom at 0 when
    /// `lambda < 1`.
    FreePoisson { lambda: f64 },
    /// Semicircle centred at `a` with variance `b²`.
    Semicircle { a: f64, b: f64 },
    /// Sampled density, integrated by the trapezoid rule.
    Grid { x: Vec<f64>, y: Vec<f64> },
}

impl Density {
    fn validate(&self) -> Result<()> {
        match self {
            Density::FreePoisson { lambda } => {
                if !(lambda.is_finite() && *lambda > 0.0) {
                    return Err(Error::Domain(format!("free Poisson rate must be positive, got {lambda}")));
                }
            }
            Density::Semicircle { a, b } => {
                if !(a.is_finite() && b.is_finite() && *b > 0.0) {
                    return Err(Error::Domain(format!("semicircle needs finite a and b > 0, got ({a}, {b})")));
                }
            }
            Density::Grid { x, y } => {
                if x.len() != y.len() || x.len() < 2 {
                    return Err(Error::Malformed("grid density needs matching x and y of length >= 2".into()));
                }
                if x.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::Malformed("grid x must be strictly increasing".into()));
                }
                if y.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::Domain("grid density values must be finite and nonnegative".into()));
                }
            }
        }
        Ok(())
    }

    /// Closed interval carrying the continuous part.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Density::FreePoisson { lambda } => free_poisson_support(*lambda),
            Density::Semicircle { a, b } => (a - 2.0 * b, a + 2.0 * b),
            Density::Grid { x, .. } => (x[0], x[x.len() - 1]),
        }
    }

    /// Value of the continuous part at `x`.
    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            Density::FreePoisson { lambda } => free_poisson_pdf(*lambda, x),
            Density::Semicircle { a, b } => {
                let r = 4.0 * b * b - (x - a) * (x - a);
                if r <= 0.0 {
                    0.0
                } else {
                    r.sqrt() / (2.0 * std::f64::consts::PI * b * b)
                }
            }
            Density::Grid { x: xs, y } => {
                if x < xs[0] || x > xs[xs.len() - 1] {
                    return 0.0;
                }
                let k = xs.partition_point(|v| *v <= x).clamp(1, xs.len() - 1);
                let (x0, x1) = (xs[k - 1], xs[k]);
                let s = (x - x0) / (x1 - x0);
                y[k - 1] * (1.0 - s) + y[k] * s
            }
        }
    }

    fn implied_atom(&self) -> Option<(f64, f64)> {
        match self {
            Density::FreePoisson { lambda } if *lambda < 1.0 => Some((0.0, 1.0 - lambda)),
            _ => None,
        }
    }

    /// `∫ f(x) p(x) dx` over the continuous part.
    fn integrate(&self, f: impl Fn(f64) -> Complex64, tol: f64) -> Result<Complex64> {
        use std::f64::consts::PI;
        match self {
            // x = λ + 1 + 2√λ cos θ turns the square-root edge into sin²θ.
            // Normalised by 2πx so that the law has unit mass. Written in
            // half angles: the direct form cancels to 0/0 near θ = π at λ = 1.
            Density::FreePoisson { lambda } => {
                let l = *lambda;
                let root = l.sqrt();
                integrate(
                    |th| {
                        let c2 = (0.5 * th).cos().powi(2);
                        let x = (1.0 - root).powi(2) + 4.0 * root * c2;
                        let weight = if x > 0.0 {
                            8.0 * l * (1.0 - c2) * c2 / (PI * x)
                        } else {
                            2.0 * l * (1.0 - c2) / (PI * root)
                        };
                        f(x) * weight
                    },
                    0.0,
                    PI,
                    tol,
                )
            }
            Density::Semicircle { a, b } => integrate(
                |th| {
                    let s = th.sin();
                    f(a + 2.0 * b * th.cos()) * (2.0 * s * s / PI)
                },
                0.0,
                PI,
                tol,
            ),
            Density::Grid { x, y } => {
                let mut acc = CZERO;
                for k in 1..x.len() {
                    let h = 0.5 * (x[k] - x[k - 1]);
                    acc += (f(x[k - 1]) * y[k - 1] + f(x[k]) * y[k]) * h;
                }
                Ok(acc)
            }
        }
    }
}

/// A finite positive measure: finitely many atoms plus an optional continuous
/// part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureRepr", into = "MeasureRepr")]
pub struct Measure {
    atoms: Vec<(f64, f64)>,
    density: Option<Density>,
}

#[derive(Serialize, Deserialize)]
struct MeasureRepr {
    #[serde(default)]
    atoms: Vec<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    density: Option<Density>,
}

impl TryFrom<MeasureRepr> for Measure {
    type Error = Error;
    fn try_from(r: MeasureRepr) -> Result<Self> {
        Measure::new(r.atoms, r.density)
    }
}

impl From<Measure> for MeasureRepr {
    fn from(m: Measure) -> Self {
        MeasureRepr { atoms: m.atoms, density: m.density }
    }
}

impl Measure {
    pub fn new(atoms: Vec<(f64, f64)>, density: Option<Density>) -> Result<Self> {
        if let Some(d) = &density {
            d.validate()?;
        }
        let m = Measure { atoms, density };
        let all = m.all_atoms();
        for (i, &(t, w)) in all.iter().enumerate() {
            if !(t.is_finite() && w.is_finite() && w > 0.0) {
                return Err(Error::Domain(format!("atom ({t}, {w}) needs finite location and positive weight")));
            }
            if all[..i].iter().any(|&(s, _)| s == t) {
                return Err(Error::Malformed(format!("duplicate atom location {t}")));
            }
        }
        if m.atoms.is_empty() && m.density.is_none() {
            return Err(Error::Domain("measure has zero mass".into()));
        }
        Ok(m)
    }

    pub fn atomic(atoms: Vec<(f64, f64)>) -> Result<Self> {
        Measure::new(atoms, None)
    }

    pub fn dirac(a: f64) -> Self {
        Measure { atoms: vec![(a, 1.0)], density: None }
    }

    pub fn free_poisson(lambda: f64) -> Result<Self> {
        Measure::new(Vec::new(), Some(Density::FreePoisson { lambda }))
    }

    pub fn semicircle(a: f64, b: f64) -> Result<Self> {
        Measure::new(Vec::new(), Some(Density::Semicircle { a, b }))
    }

    /// Explicitly listed atoms.
    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn density(&self) -> Option<&Density> {
        self.density.as_ref()
    }

    /// Listed atoms together with those implied by the density tag.
    pub fn all_atoms(&self) -> Vec<(f64, f64)> {
        let mut out = self.atoms.clone();
        out.extend(self.density.as_ref().and_then(Density::implied_atom));
        out
    }

    pub fn is_atomic(&self) -> bool {
        self.density.is_none()
    }

    /// `∫ f dμ`.
    pub fn integrate(&self, f: impl Fn(f64) -> Complex64, tol: f64) -> Result<Complex64> {
        let mut acc: Complex64 = self.all_atoms().iter().map(|&(t, w)| f(t) * w).sum();
        if let Some(d) = &self.density {
            acc += d.integrate(&f, tol)?;
        }
        Ok(acc)
    }

    pub fn mass(&self) -> f64 {
        self.moment(0)
    }

    pub fn moment(&self, k: u32) -> f64 {
        let atoms: f64 = self.all_atoms().iter().map(|&(t, w)| w * t.powi(k as i32)).sum();
        let cont = match &self.density {
            None => 0.0,
            Some(d) => d.integrate(|x| cnum(x.powi(k as i32)), 1e-12).map(|v| v.re).unwrap_or(f64::NAN),
        };
        atoms + cont
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    /// `true` when `x` lies in the closed support of the continuous part.
    fn on_continuous_support(&self, x: f64) -> bool {
        self.density.as_ref().is_some_and(|d| {
            let (lo, hi) = d.support();
            x >= lo && x <= hi
        })
    }
}

/// Support interval `[(√λ−1)², (√λ+1)²]` of the free Poisson law.
pub fn free_poisson_support(lambda: f64) -> (f64, f64) {
    let s = lambda.sqrt();
    ((s - 1.0) * (s - 1.0), (s + 1.0) * (s + 1.0))
}

fn free_poisson_pdf(lambda: f64, x: f64) -> f64 {
    let c = x - (lambda + 1.0);
    let r = 4.0 * lambda - c * c;
    if r <= 0.0 || x <= 0.0 {
        0.0
    } else {
        r.sqrt() / (2.0 * std::f64::consts::PI * x)
    }
}

/// Continuous density value and the weight of the atom at 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FreePoissonDensity {
    pub density: f64,
    pub atom_at_zero: f64,
}

pub fn free_poisson_density(lambda: f64, x: f64) -> Result<FreePoissonDensity> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Domain(format!("free Poisson rate must be positive, got {lambda}")));
    }
    Ok(FreePoissonDensity { density: free_poisson_pdf(lambda, x), atom_at_zero: (1.0 - lambda).max(0.0) })
}

fn check_point(mu: &Measure, z: Complex64) -> Result<()> {
    for (t, _) in mu.all_atoms() {
        if (z - t).norm() <= 1e-300 {
            return Err(Error::PoleHit(format!("evaluation at atom {t}")));
        }
    }
    if z.im == 0.0 && mu.on_continuous_support(z.re) {
        return Err(Error::Domain(format!("real point {} lies on the support of the density", z.re)));
    }
    Ok(())
}

fn cauchy_with_tol(mu: &Measure, z: Complex64, tol: f64) -> Result<Complex64> {
    check_point(mu, z)?;
    mu.integrate(|t| (z - t).inv(), tol)
}

/// `G_μ(z) = ∫ dμ(t)/(z − t)`.
pub fn cauchy_transform(mu: &Measure, z: Complex64) -> Result<Complex64> {
    cauchy_with_tol(mu, z, QUAD_TOL)
}

/// `G_μ'(z)`.
pub fn cauchy_derivative(mu: &Measure, z: Complex64) -> Result<Complex64> {
    check_point(mu, z)?;
    mu.integrate(|t| -(z - t).powi(-2), QUAD_TOL)
}

/// Solves `G_μ(w) = z` by damped Newton from `1/z + m₁`.
pub fn inverse_cauchy(mu: &Measure, z: Complex64) -> Result<Complex64> {
    if (mu.mass() - 1.0).abs() > 1e-8 {
        return Err(Error::Domain(format!("cumulant transform needs a probability measure, mass {}", mu.mass())));
    }
    if z == CZERO {
        return Err(Error::Domain("inverse Cauchy transform is singular at 0".into()));
    }
    let tol = 1e-14;
    let resid = |w: Complex64| cauchy_with_tol(mu, w, tol).map(|g| g - z);
    let mut w = z.inv() + mu.mean();
    let mut f = resid(w).map_err(|e| non_convergence(&format!("seed rejected: {e}"), w))?;
    for _ in 0..NEWTON_MAX_ITER {
        if f.norm() <= NEWTON_TOL * z.norm().max(1.0) {
            return Ok(w);
        }
        let step = f / cauchy_derivative(mu, w).map_err(|e| non_convergence(&e.to_string(), w))?;
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand = w - step * scale;
            if let Ok(fc) = resid(cand) {
                if fc.norm() < f.norm() {
                    w = cand;
                    f = fc;
                    accepted = true;
                    break;
                }
            }
            scale *= 0.5;
        }
        if !accepted {
            // Residual at quadrature noise level: the last iterate is as good as it gets.
            if f.norm() <= 1e3 * NEWTON_TOL * z.norm().max(1.0) {
                return Ok(w);
            }
            return Err(non_convergence("damped Newton step failed to decrease the residual", w));
        }
        if (step * scale).norm() <= NEWTON_TOL * (1.0 + w.norm()) {
            return Ok(w);
        }
    }
    Err(non_convergence("Newton iteration limit reached", w))
}

fn non_convergence(msg: &str, last: Complex64) -> Error {
    Error::NonConvergence { message: msg.to_string(), last: Some(format!("{} {:+}i", last.re, last.im)) }
}

/// `C_μ(z) = z G_μ^{-1}(z) − 1`.
pub fn cumulant_transform(mu: &Measure, z: Complex64) -> Result<Complex64> {
    Ok(z * inverse_cauchy(mu, z)? - 1.0)
}

/// Anything whose cumulant transform can be evaluated near 0.
pub trait CumulantTransform {
    fn c(&self, z: Complex64) -> Result<Complex64>;
    fn dc(&self, z: Complex64) -> Result<Complex64>;
}

impl CumulantTransform for Measure {
    fn c(&self, z: Complex64) -> Result<Complex64> {
        cumulant_transform(self, z)
    }

    fn dc(&self, z: Complex64) -> Result<Complex64> {
        let w = inverse_cauchy(self, z)?;
        Ok(w + z / cauchy_derivative(self, w)?)
    }
}

/// Free Lévy-Khintchine data `(a, b, ρ)` with finitely atomic `ρ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TripleRepr", into = "TripleRepr")]
pub struct LevyTriple {
    a: f64,
    b: f64,
    rho: Vec<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
struct TripleRepr {
    a: f64,
    b: f64,
    #[serde(default)]
    rho: Option<MeasureRepr>,
}

impl TryFrom<TripleRepr> for LevyTriple {
    type Error = Error;
    fn try_from(r: TripleRepr) -> Result<Self> {
        let rho = match r.rho {
            None => Vec::new(),
            Some(m) => {
                if m.density.is_some() {
                    return Err(Error::Unsupported("Lévy measures must be finitely atomic".into()));
                }
                m.atoms
            }
        };
        LevyTriple::new(r.a, r.b, rho)
    }
}

impl From<LevyTriple> for TripleRepr {
    fn from(t: LevyTriple) -> Self {
        TripleRepr { a: t.a, b: t.b, rho: Some(MeasureRepr { atoms: t.rho, density: None }) }
    }
}

impl LevyTriple {
    pub fn new(a: f64, b: f64, rho: Vec<(f64, f64)>) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && b >= 0.0) {
            return Err(Error::Domain(format!("triple needs finite a and b >= 0, got ({a}, {b})")));
        }
        for (i, &(t, w)) in rho.iter().enumerate() {
            if !(t.is_finite() && w.is_finite() && w > 0.0) {
                return Err(Error::Domain(format!("Lévy atom ({t}, {w}) needs finite location and positive weight")));
            }
            if t == 0.0 {
                return Err(Error::Domain("Lévy measure cannot charge 0".into()));
            }
            if rho[..i].iter().any(|&(s, _)| s == t) {
                return Err(Error::Malformed(format!("duplicate Lévy atom location {t}")));
            }
        }
        Ok(LevyTriple { a, b, rho })
    }

    pub fn gaussian(a: f64, b: f64) -> Result<Self> {
        LevyTriple::new(a, b, Vec::new())
    }

    /// Compound Poisson law with `C(z) = Σ w (1/(1−zt) − 1)`: the drift
    /// cancels the compensation of small jumps.
    pub fn compound_poisson(jumps: Vec<(f64, f64)>) -> Result<Self> {
        let a = jumps.iter().filter(|(t, _)| t.abs() <= 1.0).map(|(t, w)| t * w).sum();
        LevyTriple::new(a, 0.0, jumps)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn rho(&self) -> &[(f64, f64)] {
        &self.rho
    }

    /// Triple of the free convolution of the two laws.
    pub fn plus(&self, other: &LevyTriple) -> LevyTriple {
        let mut rho = self.rho.clone();
        for &(t, w) in &other.rho {
            match rho.iter_mut().find(|(s, _)| *s == t) {
                Some(entry) => entry.1 += w,
                None => rho.push((t, w)),
            }
        }
        LevyTriple { a: self.a + other.a, b: self.b.hypot(other.b), rho }
    }
}

/// `az + b²z² + Σ w (1/(1−zt) − 1 − zt·[|t| ≤ 1])`.
pub fn levy_khintchine_c(triple: &LevyTriple, z: Complex64) -> Result<Complex64> {
    let mut acc = z * triple.a + z * z * (triple.b * triple.b);
    for &(t, w) in &triple.rho {
        let d = 1.0 - z * t;
        if d.norm() <= 1e-14 {
            return Err(Error::PoleHit(format!("z = 1/{t}")));
        }
        let comp = if t.abs() <= 1.0 { z * t } else { CZERO };
        acc += (d.inv() - 1.0 - comp) * w;
    }
    Ok(acc)
}

impl CumulantTransform for LevyTriple {
    fn c(&self, z: Complex64) -> Result<Complex64> {
        levy_khintchine_c(self, z)
    }

    fn dc(&self, z: Complex64) -> Result<Complex64> {
        let mut acc = cnum(self.a) + z * (2.0 * self.b * self.b);
        for &(t, w) in &self.rho {
            let d = 1.0 - z * t;
            if d.norm() <= 1e-14 {
                return Err(Error::PoleHit(format!("z = 1/{t}")));
            }
            let comp = if t.abs() <= 1.0 { t } else { 0.0 };
            acc += (d.powi(-2) * t - comp) * w;
        }
        Ok(acc)
    }
}

/// Gaussian part, small jumps (compensated) and large jumps (uncompensated).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevyItoSplit {
    pub gaussian: LevyTriple,
    pub compensated: LevyTriple,
    pub compound: LevyTriple,
}

/// Splits `ρ` at `|t| ≤ 1`; atoms at `±1` are compensated.
pub fn levy_ito_split(triple: &LevyTriple) -> LevyItoSplit {
    let (small, large): (Vec<_>, Vec<_>) = triple.rho.iter().partition(|(t, _)| t.abs() <= 1.0);
    LevyItoSplit {
        gaussian: LevyTriple { a: triple.a, b: triple.b, rho: Vec::new() },
        compensated: LevyTriple { a: 0.0, b: 0.0, rho: small },
        compound: LevyTriple { a: 0.0, b: 0.0, rho: large },
    }
}

/// `κ₁, …, κ_{n_max}` of the law with the given triple.
pub fn cumulants_from_triple(triple: &LevyTriple, n_max: usize) -> Result<Vec<f64>> {
    if !(1..=12).contains(&n_max) {
        return Err(Error::Domain(format!("cumulant order must be in 1..=12, got {n_max}")));
    }
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let jumps: f64 = triple
            .rho
            .iter()
            .filter(|(t, _)| n > 1 || t.abs() > 1.0)
            .map(|(t, w)| w * t.powi(n as i32))
            .sum();
        let base = match n {
            1 => triple.a,
            2 => triple.b * triple.b,
            _ => 0.0,
        };
        out.push(base + jumps);
    }
    Ok(out)
}

fn real_sym_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (vals, vecs)
}

/// Rebuilds `(a, b, ρ)` from the mean `κ₁` and `κ₂, …, κ_{2m+2}`.
///
/// The numbers `σ_k = κ_{k+2}` must be moments of a positive measure with at
/// most `m` atoms; its mass at 0 becomes `b²` and an atom `(t, w)` elsewhere
/// becomes the Lévy atom `(t, w/t²)`.
pub fn recover_triple_from_cumulants(mean: f64, higher: &[f64]) -> Result<LevyTriple> {
    if higher.is_empty() || higher.len().is_multiple_of(2) {
        return Err(Error::Malformed(format!(
            "expected κ₂..κ_(2m+2), an odd number of values, got {}",
            higher.len()
        )));
    }
    let m = (higher.len() - 1) / 2;
    if m > MAX_RECOVERY_ORDER {
        return Err(Error::SizeLimit(format!("recovery order m = {m} exceeds {MAX_RECOVERY_ORDER}")));
    }
    if higher.iter().chain([&mean]).any(|v| !v.is_finite()) {
        return Err(Error::Domain("cumulants must be finite".into()));
    }
    let sigma = higher;
    let hankel = DMatrix::from_fn(m + 1, m + 1, |i, j| sigma[i + j]);
    let (vals, vecs) = real_sym_eigen(&hankel);
    let top = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if vals[0] < -HANKEL_PSD_TOL * top.max(1e-300) {
        let witness: Vec<String> = vecs.column(0).iter().map(|v| format!("{v:.6}")).collect();
        return Err(Error::NotFid {
            message: format!("Hankel matrix of order {} has eigenvalue {:e}", m + 1, vals[0]),
            witness: Some(format!("[{}]", witness.join(", "))),
        });
    }
    if top == 0.0 || sigma[0] <= 0.0 {
        if sigma.iter().any(|v| *v != 0.0) {
            return Err(Error::NotFid { message: "κ₂ = 0 forces all higher cumulants to vanish".into(), witness: None });
        }
        return LevyTriple::new(mean, 0.0, Vec::new());
    }

    // Rescale so atoms sit in [-1, 1]; rank detection is then well conditioned.
    let scale = (1..=m)
        .map(|j| (sigma[2 * j].max(0.0) / sigma[0]).powf(0.5 / j as f64))
        .fold(0.0, f64::max);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let scaled: Vec<f64> = sigma.iter().enumerate().map(|(j, s)| s / scale.powi(j as i32)).collect();
    let h = DMatrix::from_fn(m + 1, m + 1, |i, j| scaled[i + j]);
    let (svals, _) = real_sym_eigen(&h);
    let stop = svals.iter().cloned().fold(0.0, f64::max);
    let rank = svals.iter().filter(|v| **v > HANKEL_RANK_TOL * stop).count();
    if rank > m {
        return Err(Error::InsufficientDegree(format!(
            "Hankel matrix has full rank {rank}; more than {m} atoms cannot be resolved from {} cumulants",
            higher.len() + 1
        )));
    }

    let h0 = DMatrix::from_fn(rank, rank, |i, j| scaled[i + j]);
    let h1 = DMatrix::from_fn(rank, rank, |i, j| scaled[i + j + 1]);
    let chol = h0
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Inconsistent("leading Hankel block is not positive definite".into()))?;
    let l_inv = chol
        .l()
        .try_inverse()
        .ok_or_else(|| Error::Inconsistent("singular Cholesky factor".into()))?;
    let jacobi = &l_inv * h1 * l_inv.transpose();
    let jacobi = (&jacobi + jacobi.transpose()) * 0.5;
    let (nodes, _) = real_sym_eigen(&jacobi);

    // Weights by least squares against every available moment.
    let vander = DMatrix::from_fn(2 * m + 1, rank, |j, k| nodes[k].powi(j as i32));
    let rhs = DVector::from_column_slice(&scaled);
    let weights = vander
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::Inconsistent(format!("weight solve failed: {e}")))?;
    let resid = (&vander * &weights - &rhs).amax();
    if resid > 1e-6 * scaled.iter().map(|v| v.abs()).fold(0.0, f64::max) {
        return Err(Error::Inconsistent(format!("cumulants are not reproduced by {rank} atoms (residual {resid:e})")));
    }

    let mut b2 = 0.0;
    let mut rho = Vec::new();
    for (k, &node) in nodes.iter().enumerate() {
        let w = weights[k];
        if w <= 0.0 {
            return Err(Error::Inconsistent(format!("recovered non-positive weight {w:e}")));
        }
        if node.abs() <= 1e-7 {
            b2 += w;
        } else {
            let t = node * scale;
            rho.push((t, w / (t * t)));
        }
    }
    let large: f64 = rho.iter().filter(|(t, _)| t.abs() > 1.0).map(|(t, w)| t * w).sum();
    rho.sort_by(|x, y| x.0.total_cmp(&y.0));
    LevyTriple::new(mean - large, b2.sqrt(), rho)
}

/// One summand of a free convolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Summand {
    Measure(Measure),
    Triple(LevyTriple),
}

impl CumulantTransform for Summand {
    fn c(&self, z: Complex64) -> Result<Complex64> {
        match self {
            Summand::Measure(m) => m.c(z),
            Summand::Triple(t) => t.c(z),
        }
    }

    fn dc(&self, z: Complex64) -> Result<Complex64> {
        match self {
            Summand::Measure(m) => m.dc(z),
            Summand::Triple(t) => t.dc(z),
        }
    }
}

/// `μ₁ ⊞ … ⊞ μ_k`, represented by the sum of cumulant transforms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeConvolution {
    summands: Vec<Summand>,
}

pub fn free_convolve(summands: Vec<Summand>) -> Result<FreeConvolution> {
    if summands.is_empty() {
        return Err(Error::Domain("free convolution of nothing".into()));
    }
    Ok(FreeConvolution { summands })
}

impl CumulantTransform for FreeConvolution {
    fn c(&self, z: Complex64) -> Result<Complex64> {
        self.summands.iter().map(|s| s.c(z)).sum()
    }

    fn dc(&self, z: Complex64) -> Result<Complex64> {
        self.summands.iter().map(|s| s.dc(z)).sum()
    }
}

impl FreeConvolution {
    pub fn summands(&self) -> &[Summand] {
        &self.summands
    }

    /// A single triple when every summand is one.
    pub fn as_triple(&self) -> Option<LevyTriple> {
        let mut acc = LevyTriple { a: 0.0, b: 0.0, rho: Vec::new() };
        for s in &self.summands {
            match s {
                Summand::Triple(t) => acc = acc.plus(t),
                Summand::Measure(_) => return None,
            }
        }
        Some(acc)
    }

    /// Cauchy transform at `w` (upper half plane), by continuation in
    /// `Im w` of the equation `z w − 1 − C(z) = 0`.
    pub fn cauchy(&self, w: Complex64) -> Result<Complex64> {
        if !(w.im > 0.0) {
            return Err(Error::Domain("continuation needs Im w > 0".into()));
        }
        let top = 100.0 * (1.0 + w.re.abs());
        let mut y = top.max(w.im);
        let mut z = Complex64::new(w.re, y).inv();
        loop {
            let here = Complex64::new(w.re, y);
            z = self.solve_inverse(here, z)?;
            if y <= w.im {
                return Ok(z);
            }
            y = (0.5 * y).max(w.im);
        }
    }

    fn solve_inverse(&self, w: Complex64, seed: Complex64) -> Result<Complex64> {
        let resid = |z: Complex64| self.c(z).map(|c| z * w - 1.0 - c);
        let mut z = seed;
        let mut f = resid(z).map_err(|e| non_convergence(&format!("continuation left the domain: {e}"), z))?;
        for _ in 0..NEWTON_MAX_ITER {
            if f.norm() <= 1e-14 * (1.0 + (z * w).norm()) {
                return Ok(z);
            }
            let step = f / (w - self.dc(z).map_err(|e| non_convergence(&e.to_string(), z))?);
            let mut scale = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let cand = z - step * scale;
                if cand.im < 0.0 {
                    if let Ok(fc) = resid(cand) {
                        if fc.norm() < f.norm() {
                            z = cand;
                            f = fc;
                            accepted = true;
                            break;
                        }
                    }
                }
                scale *= 0.5;
            }
            if !accepted {
                if f.norm() <= 1e-10 * (1.0 + (z * w).norm()) {
                    return Ok(z);
                }
                return Err(non_convergence("density inversion stalled", z));
            }
            if (step * scale).norm() <= NEWTON_TOL * (1.0 + z.norm()) {
                return Ok(z);
            }
        }
        Err(non_convergence("density inversion iteration limit", z))
    }

    /// Density at `x` by Stieltjes inversion at `ε` and `2ε`, combined by
    /// Richardson extrapolation.
    pub fn density(&self, x: f64) -> Result<f64> {
        let at = |eps: f64| self.cauchy(Complex64::new(x, eps)).map(|g| -g.im / std::f64::consts::PI);
        let fine = at(STIELTJES_EPS)?;
        let coarse = at(2.0 * STIELTJES_EPS)?;
        Ok((2.0 * fine - coarse).max(0.0))
    }

    pub fn density_grid(&self, xs: &[f64]) -> Vec<Result<f64>> {
        xs.iter().map(|&x| self.density(x)).collect()
    }
}

/// Taylor coefficients `c₀..c_{n_max}` of an analytic `f` from samples on
/// the circle of the given radius.
pub fn series_coefficients(
    f: impl Fn(Complex64) -> Result<Complex64>,
    radius: f64,
    n_max: usize,
) -> Result<Vec<Complex64>> {
    let points = (2 * n_max + 2).max(32);
    let mut samples = Vec::with_capacity(points);
    for j in 0..points {
        let th = 2.0 * std::f64::consts::PI * j as f64 / points as f64;
        samples.push((th, f(Complex64::from_polar(radius, th))?));
    }
    Ok((0..=n_max)
        .map(|k| {
            let s: Complex64 = samples.iter().map(|(th, v)| v * Complex64::from_polar(1.0, -(k as f64) * th)).sum();
            s / (points as f64 * radius.powi(k as i32))
        })
        .collect())
}

//! Symbolic isomorphism classes of free Poisson algebras and of filtration
//! algebras of free Lévy processes.

use std::fmt;

use num_traits::{One, Zero};
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::{rational_to_f64, Rational};
use crate::transforms::LevyTriple;

/// Free-group parameter `r` of `L(F_r)`, possibly infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FreeDim {
    Finite(f64),
    Infinite,
}

impl FreeDim {
    /// Saturating sum.
    pub fn plus(self, other: FreeDim) -> FreeDim {
        match (self, other) {
            (FreeDim::Finite(a), FreeDim::Finite(b)) => FreeDim::Finite(a + b),
            _ => FreeDim::Infinite,
        }
    }

    pub fn value(self) -> f64 {
        match self {
            FreeDim::Finite(r) => r,
            FreeDim::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for FreeDim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FreeDim::Finite(r) => write!(f, "{r}"),
            FreeDim::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for FreeDim {
    fn serialize<Z: Serializer>(&self, s: Z) -> std::result::Result<Z::Ok, Z::Error> {
        match self {
            FreeDim::Finite(r) if r.fract() == 0.0 && r.abs() < 9.0e15 => s.serialize_i64(*r as i64),
            FreeDim::Finite(r) => s.serialize_f64(*r),
            FreeDim::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for FreeDim {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = FreeDim;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<FreeDim, E> {
                Ok(FreeDim::Finite(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<FreeDim, E> {
                Ok(FreeDim::Finite(v as f64))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<FreeDim, E> {
                Ok(FreeDim::Finite(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<FreeDim, E> {
                match v {
                    "inf" | "infinity" => Ok(FreeDim::Infinite),
                    _ => Err(E::custom(format!("unknown free dimension {v:?}"))),
                }
            }
        }
        d.deserialize_any(V)
    }
}

/// Named piece of a free-product expression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Expr {
    /// An algebra given by name, e.g. `L(Z)` or the input `(M, φ)`.
    Named { name: String },
    /// `ℂ`.
    Scalars,
    FreeProduct { factors: Vec<Expr> },
    /// Weighted direct sum; weights are the trace of each summand's unit.
    DirectSum { summands: Vec<(f64, Expr)> },
    /// `p A p` for a projection of trace `weight`.
    Corner { weight: f64, inner: Box<Expr> },
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Named { name } => write!(f, "{name}"),
            Expr::Scalars => write!(f, "C"),
            Expr::FreeProduct { factors } => {
                let parts: Vec<String> = factors.iter().map(|e| e.to_string()).collect();
                write!(f, "({})", parts.join(" * "))
            }
            Expr::DirectSum { summands } => {
                let parts: Vec<String> = summands.iter().map(|(w, e)| format!("{e}[{w}]")).collect();
                write!(f, "({})", parts.join(" + "))
            }
            Expr::Corner { weight, inner } => write!(f, "p{inner}p[{weight}]"),
        }
    }
}

/// Isomorphism class produced by the classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FactorDescriptor {
    /// `L(F_r)`.
    InterpolatedFreeGroup { r: FreeDim },
    /// `L(F_r)` with trace weight `alpha`, direct sum `ℂ` with `1 − alpha`.
    WithAtom { r: FreeDim, alpha: f64 },
    FreeProductExpression { expr: Expr },
    /// `ℂ`.
    Trivial,
}

impl FactorDescriptor {
    pub fn free_group(r: f64) -> Self {
        FactorDescriptor::InterpolatedFreeGroup { r: FreeDim::Finite(r) }
    }

    /// Trace weight of the `ℂ` summand.
    pub fn atom_weight(&self) -> f64 {
        match self {
            FactorDescriptor::WithAtom { alpha, .. } => 1.0 - alpha,
            FactorDescriptor::Trivial => 1.0,
            _ => 0.0,
        }
    }

    /// The free-group parameter, when the descriptor has one.
    pub fn free_parameter(&self) -> Option<FreeDim> {
        match self {
            FactorDescriptor::InterpolatedFreeGroup { r } | FactorDescriptor::WithAtom { r, .. } => Some(*r),
            _ => None,
        }
    }

    pub fn is_factor(&self) -> bool {
        matches!(self, FactorDescriptor::InterpolatedFreeGroup { .. })
    }
}

impl fmt::Display for FactorDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactorDescriptor::InterpolatedFreeGroup { r } => write!(f, "L(F_{r})"),
            FactorDescriptor::WithAtom { r, alpha } => write!(f, "L(F_{r})[{alpha}] + C[{}]", 1.0 - alpha),
            FactorDescriptor::FreeProductExpression { expr } => write!(f, "{expr}"),
            FactorDescriptor::Trivial => write!(f, "C"),
        }
    }
}

/// `2n + 2(α−n)² + 2(α−n)(n+1−α)`, checked to equal `2α` exactly.
pub fn freedim_combine(n: u64, alpha: &Rational) -> Result<Rational> {
    let nq = Rational::from_integer(n.into());
    if n < 1 || *alpha <= nq || *alpha > &nq + Rational::one() {
        return Err(Error::Domain(format!("need n >= 1 and n < α <= n+1, got n = {n}, α = {alpha}")));
    }
    let two = Rational::from_integer(2.into());
    let beta = alpha - &nq;
    let rest = &nq + Rational::one() - alpha;
    let value = &two * &nq + &two * &beta * &beta + &two * &beta * &rest;
    if value != &two * alpha {
        return Err(Error::Inconsistent(format!("free dimension {value} differs from 2α = {}", &two * alpha)));
    }
    Ok(value)
}

/// `L(F_r) * (L(F_s)[β] ⊕ ℂ[1−β]) ≅ L(F_{r + β²s + 2β(1−β)})`.
pub fn absorb_atom(r: FreeDim, s: FreeDim, beta: f64) -> Result<FreeDim> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::Domain(format!("summand weight must lie in (0, 1], got {beta}")));
    }
    Ok(match (r, s) {
        (FreeDim::Finite(r), FreeDim::Finite(s)) => FreeDim::Finite(r + beta * beta * s + 2.0 * beta * (1.0 - beta)),
        _ => FreeDim::Infinite,
    })
}

/// `Γ(L^∞[0, α])`, equivalently the free Poisson filtration at `λt = α`.
pub fn poisson_filtration(alpha: f64) -> Result<FactorDescriptor> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::Domain(format!("total weight must be positive and finite, got {alpha}")));
    }
    Ok(if alpha < 1.0 {
        FactorDescriptor::WithAtom { r: FreeDim::Finite(2.0), alpha }
    } else {
        // Split [0, α] into n unit intervals and a remainder β = α − n, then
        // absorb the remainder's atom into L(F_2n).
        let n = alpha.ceil() - 1.0;
        let n = n.max(1.0);
        if alpha == 1.0 {
            FactorDescriptor::free_group(2.0)
        } else {
            let beta = alpha - n;
            let r = absorb_atom(FreeDim::Finite(2.0 * n), FreeDim::Finite(2.0), beta)?;
            FactorDescriptor::InterpolatedFreeGroup { r }
        }
    })
}

/// Base algebra `(M, φ)` with `φ` a faithful state, as far as the
/// classifier needs to know it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseAlgebra {
    Trivial,
    /// `L^∞[0,1]` with Lebesgue measure, or any diffuse abelian algebra.
    DiffuseAbelian,
    Named { name: String },
}

/// `Γ(M, αφ)` for a state `φ` rescaled to total weight `α`.
pub fn gamma_finite_weight(base: &BaseAlgebra, alpha: f64) -> Result<FactorDescriptor> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::Domain(format!("total weight must be positive and finite, got {alpha}")));
    }
    let name = match base {
        BaseAlgebra::Trivial => {
            return Err(Error::Unsupported(
                "Γ(ℂ, αφ) is generated by a single free Poisson element; use poisson_filtration".into(),
            ))
        }
        BaseAlgebra::DiffuseAbelian => return poisson_filtration(alpha),
        BaseAlgebra::Named { name } => name.clone(),
    };
    let lz = Expr::Named { name: "L(Z)".into() };
    let m = Expr::Named { name };
    let expr = if alpha <= 1.0 {
        let prod = Expr::FreeProduct { factors: vec![lz, m] };
        if alpha == 1.0 {
            prod
        } else {
            Expr::DirectSum { summands: vec![(alpha, prod), (1.0 - alpha, Expr::Scalars)] }
        }
    } else {
        let split = Expr::DirectSum { summands: vec![(1.0 / alpha, Expr::Scalars), (1.0 - 1.0 / alpha, Expr::Scalars)] };
        let corner = Expr::Corner { weight: 1.0 / alpha, inner: Box::new(Expr::FreeProduct { factors: vec![m, split] }) };
        Expr::FreeProduct { factors: vec![lz, corner] }
    };
    Ok(FactorDescriptor::FreeProductExpression { expr })
}

/// Total weight `φ(1)`, possibly infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Weight {
    Finite(f64),
    Infinite(InfiniteTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfiniteTag {
    Inf,
}

impl Weight {
    pub const INFINITE: Weight = Weight::Infinite(InfiniteTag::Inf);

    pub fn value(self) -> f64 {
        match self {
            Weight::Finite(w) => w,
            Weight::Infinite(_) => f64::INFINITY,
        }
    }
}

/// Factoriality verdict with the type note.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Factoriality {
    pub factor: bool,
    pub type_note: Option<String>,
    /// Generators (other than 1) of the subgroup of `R₊` spanned by the
    /// supplied modular eigenvalues.
    pub sd_generators: Option<Vec<f64>>,
}

/// Factor iff `φ(1) ≥ 1` and `M ≠ ℂ`. Optional modular eigenvalues refine
/// the type note: trivial subgroup gives `II_1`, a cyclic subgroup `λ^Z`
/// gives `III_λ`, two incommensurable generators give `III_1`.
pub fn factoriality(total_weight: Weight, trivial: bool, modular_eigenvalues: Option<&[f64]>) -> Result<Factoriality> {
    let w = total_weight.value();
    if w.is_nan() || w <= 0.0 {
        return Err(Error::Domain(format!("total weight must be positive, got {w}")));
    }
    let factor = w >= 1.0 && !trivial;
    if !factor {
        return Ok(Factoriality { factor, type_note: None, sd_generators: None });
    }
    let Some(eigs) = modular_eigenvalues else {
        return Ok(Factoriality { factor, type_note: Some("type II_1 or III_lambda with lambda != 0".into()), sd_generators: None });
    };
    if eigs.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Domain("modular eigenvalues must be positive".into()));
    }
    let mut logs: Vec<f64> = eigs.iter().map(|v| v.ln().abs()).filter(|l| *l > 1e-12).collect();
    logs.sort_by(f64::total_cmp);
    logs.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.max(1.0));
    let gens: Vec<f64> = logs.iter().map(|l| (-l).exp()).collect();
    let note = match logs.first() {
        None => "type II_1".to_string(),
        Some(&base) => {
            let cyclic = cyclic_base(&logs, base);
            match cyclic {
                Some(b) => format!("type III_lambda, lambda = {}", (-b).exp()),
                None => "type III_1".to_string(),
            }
        }
    };
    Ok(Factoriality { factor, type_note: Some(note), sd_generators: Some(gens) })
}

/// Common generator of the additive group spanned by `logs`, when all are
/// (numerically) integer multiples of a fraction of the smallest one.
fn cyclic_base(logs: &[f64], smallest: f64) -> Option<f64> {
    for q in 1..=12u32 {
        let b = smallest / q as f64;
        if logs.iter().all(|l| {
            let k = l / b;
            (k - k.round()).abs() <= 1e-9 * k.max(1.0)
        }) {
            // Reduce to the gcd of the integer multiples.
            let ks: Vec<u64> = logs.iter().map(|l| (l / b).round() as u64).collect();
            let g = ks.iter().fold(0u64, |a, &k| gcd(a, k));
            return Some(b * g as f64);
        }
    }
    None
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Filtration algebra `W*(Z_s : s ≤ t)` of a free Lévy process from its
/// Gaussian scale and the total mass of its Lévy measure.
pub fn filtration_classify_mass(b: f64, rho_mass: Weight, t: f64) -> Result<FactorDescriptor> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::Domain(format!("time must be positive, got {t}")));
    }
    if !(b.is_finite() && b >= 0.0) {
        return Err(Error::Domain(format!("Gaussian scale must be nonnegative, got {b}")));
    }
    let mass = rho_mass.value();
    if mass.is_nan() || mass < 0.0 {
        return Err(Error::Domain(format!("Lévy mass must be nonnegative, got {mass}")));
    }
    if b != 0.0 || mass.is_infinite() {
        return Ok(FactorDescriptor::InterpolatedFreeGroup { r: FreeDim::Infinite });
    }
    let total = t * mass;
    if total == 0.0 {
        // Deterministic drift: the algebra is ℂ.
        return Ok(FactorDescriptor::Trivial);
    }
    if total >= 1.0 {
        Ok(FactorDescriptor::free_group(2.0 * total))
    } else {
        Ok(FactorDescriptor::WithAtom { r: FreeDim::Finite(2.0), alpha: total })
    }
}

pub fn filtration_classify(triple: &LevyTriple, t: f64) -> Result<FactorDescriptor> {
    let mass: f64 = triple.rho().iter().map(|(_, w)| w).sum();
    filtration_classify_mass(triple.b(), Weight::Finite(mass), t)
}

/// Exact `freedim_combine` on a float `α`, for callers without rationals.
pub fn freedim_combine_f64(n: u64, alpha: f64) -> Result<f64> {
    let q = Rational::from_float(alpha).ok_or_else(|| Error::Domain(format!("α = {alpha} is not finite")))?;
    let v = freedim_combine(n, &q)?;
    if v.is_zero() {
        return Ok(0.0);
    }
    Ok(rational_to_f64(&v))
}

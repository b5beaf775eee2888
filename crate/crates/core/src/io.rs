//! JSON encodings shared by the command-line tool and test fixtures.
//!
//! Every document carries `"schema": "v1"`. Scalars are read from a plain
//! number, a `"p/q"` or decimal string, `{"num": …, "den": …}`, or a
//! `[re, im]` pair; exact mode writes rationals as `{"num", "den"}`.

use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::fock::{FockVector, PseudoHilbertAlgebra};
use crate::matrix::Matrix;
use crate::ncps::{BlockMatrix, NcProbSpace, WordMap};
use crate::scalar::{parse_rational, rational_to_f64, Rational, Scalar};

pub const SCHEMA: &str = "v1";

/// Scalars with a JSON encoding.
pub trait JsonScalar: Scalar {
    fn from_json(v: &Value) -> Result<Self>;
    fn to_json(&self) -> Value;
}

fn number_text(v: &Value) -> Option<String> {
    match v {
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        _ => None,
    }
}

fn rational_part(v: &Value) -> Result<Rational> {
    if let Some(obj) = v.as_object() {
        let num = obj.get("num").and_then(number_text).and_then(|s| parse_rational(&s));
        let den = obj.get("den").and_then(number_text).and_then(|s| parse_rational(&s));
        return match (num, den) {
            (Some(n), Some(d)) if !d.is_zero() => Ok(n / d),
            _ => Err(Error::Malformed(format!("bad rational object {v}"))),
        };
    }
    number_text(v)
        .and_then(|s| parse_rational(&s))
        .ok_or_else(|| Error::Malformed(format!("expected a rational, got {v}")))
}

impl JsonScalar for Rational {
    fn from_json(v: &Value) -> Result<Self> {
        if let Some(pair) = v.as_array() {
            if pair.len() == 2 {
                let im = rational_part(&pair[1])?;
                if !im.is_zero() {
                    return Err(Error::Domain(format!("exact mode needs real scalars, got {v}")));
                }
                return rational_part(&pair[0]);
            }
        }
        rational_part(v)
    }

    fn to_json(&self) -> Value {
        let enc = |b: &num_bigint::BigInt| match b.to_i64() {
            Some(i) => json!(i),
            None => json!(b.to_string()),
        };
        json!({ "num": enc(self.numer()), "den": enc(self.denom()) })
    }
}

impl JsonScalar for Complex64 {
    fn from_json(v: &Value) -> Result<Self> {
        if let Some(pair) = v.as_array() {
            if pair.len() != 2 {
                return Err(Error::Malformed(format!("complex numbers are [re, im], got {v}")));
            }
            return Ok(Complex64::new(real(&pair[0])?, real(&pair[1])?));
        }
        Ok(Complex64::new(real(v)?, 0.0))
    }

    fn to_json(&self) -> Value {
        if self.im == 0.0 {
            json!(self.re)
        } else {
            json!([self.re, self.im])
        }
    }
}

/// A real number from a plain number or any rational encoding.
pub fn real(v: &Value) -> Result<f64> {
    if let Some(x) = v.as_f64() {
        return Ok(x);
    }
    rational_part(v).map(|q| rational_to_f64(&q))
}

/// Adds `"schema": "v1"` to an object, or wraps anything else as
/// `{"schema": "v1", "result": …}`.
pub fn with_schema(v: Value) -> Value {
    match v {
        Value::Object(mut m) => {
            let mut out = Map::new();
            out.insert("schema".into(), json!(SCHEMA));
            out.append(&mut m);
            Value::Object(out)
        }
        other => json!({ "schema": SCHEMA, "result": other }),
    }
}

/// Rejects documents tagged with another schema version.
pub fn check_schema(v: &Value) -> Result<()> {
    match v.get("schema") {
        None => Ok(()),
        Some(Value::String(s)) if s == SCHEMA => Ok(()),
        Some(other) => Err(Error::Malformed(format!("unsupported schema {other}, expected \"{SCHEMA}\""))),
    }
}

/// Strips the envelope added by [`with_schema`].
pub fn payload(v: &Value) -> Result<&Value> {
    check_schema(v)?;
    Ok(match v.get("result") {
        Some(r) if v.as_object().is_some_and(|m| m.len() == 2 && m.contains_key("schema")) => r,
        _ => v,
    })
}

pub fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| Error::Malformed(format!("missing field {key:?}")))
}

pub fn matrix_from_json<S: JsonScalar>(v: &Value) -> Result<Matrix<S>> {
    let rows = v.as_array().ok_or_else(|| Error::Malformed("matrix must be a list of rows".into()))?;
    let parsed = rows
        .iter()
        .map(|r| {
            r.as_array()
                .ok_or_else(|| Error::Malformed("matrix row must be a list".into()))?
                .iter()
                .map(S::from_json)
                .collect::<Result<Vec<S>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Matrix::from_rows(parsed)
}

pub fn matrix_to_json<S: JsonScalar>(m: &Matrix<S>) -> Value {
    Value::Array(m.to_rows().iter().map(|r| Value::Array(r.iter().map(S::to_json).collect())).collect())
}

pub fn vector_from_json<S: JsonScalar>(v: &Value) -> Result<Vec<S>> {
    v.as_array().ok_or_else(|| Error::Malformed("vector must be a list".into()))?.iter().map(S::from_json).collect()
}

pub fn vector_to_json<S: JsonScalar>(v: &[S]) -> Value {
    Value::Array(v.iter().map(S::to_json).collect())
}

/// A block-diagonal element as a list of square blocks.
pub fn block_matrix_from_json<S: JsonScalar>(v: &Value) -> Result<BlockMatrix<S>> {
    let blocks = v.as_array().ok_or_else(|| Error::Malformed("element must be a list of blocks".into()))?;
    Ok(BlockMatrix::new(blocks.iter().map(matrix_from_json).collect::<Result<_>>()?))
}

pub fn block_matrix_to_json<S: JsonScalar>(b: &BlockMatrix<S>) -> Value {
    Value::Array(b.blocks.iter().map(matrix_to_json).collect())
}

/// `{"blocks": [2, 1], "density": [[[…]], [[…]]]}`.
pub fn space_from_json<S: JsonScalar>(v: &Value) -> Result<NcProbSpace<S>> {
    let dims: Vec<usize> = serde_json::from_value(field(v, "blocks")?.clone())?;
    let density = block_matrix_from_json(field(v, "density")?)?;
    NcProbSpace::new(dims, density)
}

pub fn space_to_json<S: JsonScalar>(space: &NcProbSpace<S>) -> Value {
    json!({ "blocks": space.block_dims(), "density": block_matrix_to_json(space.density()) })
}

/// `{"gram": …, "S": …, "lmul": [...], "unit": [...]?}`.
pub fn algebra_from_json<S: JsonScalar>(v: &Value) -> Result<PseudoHilbertAlgebra<S>> {
    let gram = matrix_from_json(field(v, "gram")?)?;
    let s = matrix_from_json(field(v, "S")?)?;
    let lmul = field(v, "lmul")?
        .as_array()
        .ok_or_else(|| Error::Malformed("lmul must be a list of matrices".into()))?
        .iter()
        .map(matrix_from_json)
        .collect::<Result<Vec<_>>>()?;
    let unit = match v.get("unit") {
        None | Some(Value::Null) => None,
        Some(u) => Some(vector_from_json(u)?),
    };
    PseudoHilbertAlgebra::new(gram, s, lmul, unit)
}

pub fn algebra_to_json<S: JsonScalar>(alg: &PseudoHilbertAlgebra<S>) -> Value {
    let mut out = json!({
        "gram": matrix_to_json(alg.gram()),
        "S": matrix_to_json(alg.involution()),
        "lmul": alg.lmul().iter().map(matrix_to_json).collect::<Vec<_>>(),
    });
    if let Some(u) = alg.unit() {
        out["unit"] = vector_to_json(u);
    }
    out
}

/// `[{"word": [0, 1], "value": …}, …]`.
pub fn word_map_from_json<S: JsonScalar>(v: &Value) -> Result<WordMap<S>> {
    let items = v.as_array().ok_or_else(|| Error::Malformed("expected a list of {word, value}".into()))?;
    let mut out = WordMap::new();
    for item in items {
        let word: Vec<usize> = serde_json::from_value(field(item, "word")?.clone())?;
        out.insert(word, S::from_json(field(item, "value")?)?);
    }
    Ok(out)
}

pub fn word_map_to_json<S: JsonScalar>(m: &WordMap<S>) -> Value {
    Value::Array(m.iter().map(|(w, s)| json!({ "word": w, "value": s.to_json() })).collect())
}

/// Fock vector as `[{"word": [...], "value": …}]`, vacuum as the empty word.
pub fn fock_vector_to_json<S: JsonScalar>(v: &FockVector<S>) -> Value {
    Value::Array(v.iter().map(|(w, s)| json!({ "word": w, "value": s.to_json() })).collect())
}

pub fn fock_vector_from_json<S: JsonScalar>(v: &Value) -> Result<FockVector<S>> {
    let items = v.as_array().ok_or_else(|| Error::Malformed("expected a list of {word, value}".into()))?;
    let mut out = FockVector::zero();
    for item in items {
        let word: Vec<u16> = serde_json::from_value(field(item, "word")?.clone())?;
        out.add_term(word, S::from_json(field(item, "value")?)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_forms() {
        let half = Rational::new(1.into(), 2.into());
        for v in [json!(0.5), json!("1/2"), json!({"num": 1, "den": 2}), json!([0.5, 0])] {
            assert_eq!(Rational::from_json(&v).unwrap(), half);
        }
        assert_eq!(Rational::from_json(&json!(0.1)).unwrap(), Rational::new(1.into(), 10.into()));
        assert_eq!(half.to_json(), json!({"num": 1, "den": 2}));
        assert!(Rational::from_json(&json!([1, 1])).is_err());
    }

    #[test]
    fn schema_envelope() {
        let v = with_schema(json!({"a": 1}));
        assert_eq!(v["schema"], "v1");
        assert!(check_schema(&json!({"schema": "v2"})).is_err());
        let w = with_schema(json!([1, 2]));
        assert_eq!(payload(&w).unwrap(), &json!([1, 2]));
    }

    #[test]
    fn space_roundtrip() {
        let v = json!({"blocks": [1, 1], "density": [[["1/4"]], [["3/4"]]]});
        let s: NcProbSpace<Rational> = space_from_json(&v).unwrap();
        let back: NcProbSpace<Rational> = space_from_json(&space_to_json(&s)).unwrap();
        assert_eq!(back.density(), s.density());
    }
}

use std::io::Read;

use freepoisson_core::classify::{self, BaseAlgebra, Weight};
use freepoisson_core::fock::{field_x, wick, FockOperator, FockSpace, FockVector, Overflow};
use freepoisson_core::io::{self as fio, field, JsonScalar};
use freepoisson_core::ncpart::{self, NcPartition};
use freepoisson_core::ncps::{
    all_words, check_freeness, default_labels, CumulantFunctional, CumulantMoments, CumulantSource, LazyCumulants,
    MomentOracle, SpaceFamily, WordMap,
};
use freepoisson_core::quantize::{self, CpMap, CpMapForm};
use freepoisson_core::scalar::parse_rational;
use freepoisson_core::transforms::{self, LevyTriple, Measure, Summand};
use freepoisson_core::variation::{self, Arithmetic, VariationExperiment};
use freepoisson_core::{Complex64, Error, Rational, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use crate::args::*;

/// What a verb produced.
pub enum Output {
    Json(Value),
    /// JSON for the main output plus a CSV side table.
    JsonWithCsv(Value, Option<(std::path::PathBuf, String)>),
}

macro_rules! by_mode {
    ($mode:expr, $f:ident ( $($arg:expr),* )) => {
        match $mode {
            Mode::Exact => $f::<Rational>($($arg),*),
            Mode::Float => $f::<Complex64>($($arg),*),
        }
    };
}

/// A file path, inline JSON (anything starting with `{` or `[`), or `-`.
pub fn read_document(source: &str) -> Result<Value> {
    let text = source.trim_start();
    let raw = if text.starts_with('{') || text.starts_with('[') {
        source.to_string()
    } else if source == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| Error::Io(format!("stdin: {e}")))?;
        s
    } else {
        std::fs::read_to_string(source).map_err(|e| Error::Io(format!("{source}: {e}")))?
    };
    let v: Value = serde_json::from_str(&raw)?;
    Ok(strip_schema(fio::payload(&v)?.clone()))
}

fn strip_schema(mut v: Value) -> Value {
    if let Some(m) = v.as_object_mut() {
        m.remove("schema");
    }
    v
}

fn input(g: &Global) -> Result<Value> {
    let src = g.input.as_deref().ok_or_else(|| Error::Malformed("this verb needs --input".into()))?;
    read_document(src)
}

fn parse<T: DeserializeOwned>(v: &Value) -> Result<T> {
    Ok(serde_json::from_value(strip_schema(v.clone()))?)
}

fn to_value<T: serde::Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("serializable output")
}

fn tolerance(g: &Global) -> f64 {
    g.tolerance.unwrap_or(freepoisson_core::FLOAT_TOL)
}

pub fn run(cli: &Cli) -> Result<Output> {
    let g = &cli.global;
    let v = match &cli.command {
        Command::Nc(c) => nc(c, g)?,
        Command::Ncps(c) => ncps(c, g)?,
        Command::Fock(c) => fock(c, g)?,
        Command::Dist(c) => dist(c, g)?,
        Command::Levy(c) => levy(c, g)?,
        Command::Cp(c) => cp(c, g)?,
        Command::Classify(c) => classify_cmd(c)?,
        Command::Variation(VariationCmd::Run { config, csv }) => {
            let exp: VariationExperiment = parse(&read_document(config)?)?;
            exp.validate()?;
            let mode = match g.mode {
                Mode::Exact => Arithmetic::Exact,
                Mode::Float => Arithmetic::Float,
            };
            let report = variation::run_experiment(&exp, mode)?;
            let slope = match &report.fit {
                Some(variation::RateFit::Slope { slope, .. }) => json!(slope),
                _ => Value::Null,
            };
            let out = json!({ "rows": report.rows, "fit": report.fit, "slope": slope });
            let side = csv.as_ref().map(|p| (p.clone(), report.to_csv()));
            return Ok(Output::JsonWithCsv(fio::with_schema(out), side));
        }
    };
    Ok(Output::Json(fio::with_schema(v)))
}

fn nc(c: &NcCmd, g: &Global) -> Result<Value> {
    Ok(match c {
        NcCmd::Enumerate { n } => to_value(&ncpart::enumerate_nc(*n)?),
        NcCmd::Kreweras { inverse } => {
            let p: NcPartition = parse(&input(g)?)?;
            to_value(&if *inverse { ncpart::kreweras_inverse(&p) } else { ncpart::kreweras(&p) })
        }
        NcCmd::Check => {
            let v = input(g)?;
            let n: usize = parse(field(&v, "n")?)?;
            let blocks: Vec<Vec<usize>> = parse(field(&v, "blocks")?)?;
            json!({ "noncrossing": ncpart::is_noncrossing(n, &blocks)? })
        }
        NcCmd::Leq => {
            let v = input(g)?;
            let sigma: NcPartition = parse(field(&v, "sigma")?)?;
            let pi: NcPartition = parse(field(&v, "pi")?)?;
            json!({ "leq": ncpart::refinement_leq(&sigma, &pi)? })
        }
        NcCmd::Sample { n, count } => {
            let all = ncpart::nc_cached(*n)?;
            let mut rng = ChaCha8Rng::seed_from_u64(g.seed.unwrap_or(0));
            let picks: Vec<&NcPartition> = (0..*count).map(|_| &all[rng.gen_range(0..all.len())]).collect();
            to_value(&picks)
        }
    })
}

fn elements<S: JsonScalar>(v: &Value) -> Result<Vec<freepoisson_core::ncps::BlockMatrix<S>>> {
    field(v, "elements")?
        .as_array()
        .ok_or_else(|| Error::Malformed("elements must be a list".into()))?
        .iter()
        .map(fio::block_matrix_from_json)
        .collect()
}

fn ncps_moment<S: JsonScalar>(v: &Value) -> Result<Value> {
    let space = fio::space_from_json::<S>(field(v, "space")?)?;
    let fam = SpaceFamily { space: &space, elements: elements(v)? };
    let word: Vec<usize> = parse(field(v, "word")?)?;
    Ok(json!({ "value": fam.moment(&word)?.to_json() }))
}

fn ncps_cumulants<S: JsonScalar>(v: &Value) -> Result<Value> {
    let space = fio::space_from_json::<S>(field(v, "space")?)?;
    let fam = SpaceFamily { space: &space, elements: elements(v)? };
    let max_len: usize = parse(field(v, "max_len")?)?;
    let lazy = LazyCumulants::new(&fam);
    let mut out = WordMap::new();
    for w in all_words(fam.elements.len(), max_len) {
        out.insert(w.clone(), lazy.cumulant(&w)?);
    }
    Ok(json!({ "cumulants": fio::word_map_to_json(&out) }))
}

fn ncps_moments<S: JsonScalar>(v: &Value) -> Result<Value> {
    let labels: usize = parse(field(v, "labels")?)?;
    let max_len: usize = parse(field(v, "max_len")?)?;
    let values = fio::word_map_from_json::<S>(field(v, "cumulants")?)?;
    let r = CumulantFunctional::new(default_labels(labels), values, max_len, false)?;
    let m = CumulantMoments(&r);
    let mut out = WordMap::new();
    for w in all_words(labels, max_len) {
        out.insert(w.clone(), m.moment(&w)?);
    }
    Ok(json!({ "moments": fio::word_map_to_json(&out) }))
}

fn ncps_freeness<S: JsonScalar>(v: &Value) -> Result<Value> {
    let space = fio::space_from_json::<S>(field(v, "space")?)?;
    let fam = SpaceFamily { space: &space, elements: elements(v)? };
    let a: Vec<usize> = parse(field(v, "family_a")?)?;
    let b: Vec<usize> = parse(field(v, "family_b")?)?;
    let n_max: usize = v.get("n_max").map(parse).transpose()?.unwrap_or(4);
    let rep = check_freeness(&fam, &a, &b, n_max)?;
    Ok(json!({
        "free": rep.free,
        "witness": rep.witness,
        "witness_value": rep.witness_value.map(|s| s.to_json()),
    }))
}

fn ncps(c: &NcpsCmd, g: &Global) -> Result<Value> {
    let v = input(g)?;
    match c {
        NcpsCmd::Moment => by_mode!(g.mode, ncps_moment(&v)),
        NcpsCmd::Cumulants => by_mode!(g.mode, ncps_cumulants(&v)),
        NcpsCmd::Moments => by_mode!(g.mode, ncps_moments(&v)),
        NcpsCmd::Freeness => by_mode!(g.mode, ncps_freeness(&v)),
    }
}

fn vectors<S: JsonScalar>(v: &Value, key: &str) -> Result<Vec<Vec<S>>> {
    field(v, key)?
        .as_array()
        .ok_or_else(|| Error::Malformed(format!("{key} must be a list of vectors")))?
        .iter()
        .map(fio::vector_from_json)
        .collect()
}

fn field_word<S: JsonScalar>(v: &Value) -> Result<(FockSpace<S>, Vec<FockOperator<S>>)> {
    let alg = fio::algebra_from_json::<S>(field(v, "algebra")?)?;
    let xs = vectors::<S>(v, "vectors")?;
    let word: Vec<usize> = parse(field(v, "word")?)?;
    let truncation: usize = v.get("truncation").map(parse).transpose()?.unwrap_or(word.len().max(1));
    let fock = FockSpace::over(&alg, truncation, Overflow::Strict)?;
    let ops = word
        .iter()
        .map(|&l| {
            let xi = xs.get(l).ok_or_else(|| Error::Domain(format!("label {l} undefined")))?;
            Ok(field_x(&alg, &fock, xi))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((fock, ops))
}

fn fock_moments<S: JsonScalar>(v: &Value) -> Result<Value> {
    let (fock, ops) = field_word::<S>(v)?;
    Ok(json!({ "value": fock.vacuum_moment(&ops)?.to_json() }))
}

fn fock_wick<S: JsonScalar>(v: &Value) -> Result<Value> {
    let alg = fio::algebra_from_json::<S>(field(v, "algebra")?)?;
    let legs = vectors::<S>(v, "legs")?;
    let truncation: usize = v.get("truncation").map(parse).transpose()?.unwrap_or(legs.len().max(1));
    let fock = FockSpace::over(&alg, truncation, Overflow::Strict)?;
    let op = wick(&alg, &fock, &legs)?;
    Ok(json!({ "vector": fio::fock_vector_to_json(&fock.apply(&op, &FockVector::vacuum())?) }))
}

fn fock(c: &FockCmd, g: &Global) -> Result<Value> {
    let v = input(g)?;
    match c {
        FockCmd::Moments => by_mode!(g.mode, fock_moments(&v)),
        FockCmd::Wick => by_mode!(g.mode, fock_wick(&v)),
        FockCmd::Norm => {
            let (fock, ops) = field_word::<Complex64>(&v)?;
            let op = FockOperator::product(&ops);
            Ok(json!({ "norm": fock.operator_norm(&op)? }))
        }
    }
}

fn complex_point(v: &Value) -> Result<Complex64> {
    Complex64::from_json(field(v, "z")?)
}

fn dist(c: &DistCmd, g: &Global) -> Result<Value> {
    Ok(match c {
        DistCmd::Density { law, lambda, a, b, x } => match law {
            Law::FreePoisson => {
                let lambda = lambda.ok_or_else(|| Error::Malformed("free_poisson needs --lambda".into()))?;
                let d = transforms::free_poisson_density(lambda, *x)?;
                json!({ "density": d.density, "atom_at_zero": d.atom_at_zero })
            }
            Law::Semicircle => {
                let (a, b) = (a.unwrap_or(0.0), b.ok_or_else(|| Error::Malformed("semicircle needs --b".into()))?);
                let m = Measure::semicircle(a, b)?;
                let pdf = m.density().map(|d| d.pdf(*x)).unwrap_or(0.0);
                json!({ "density": pdf })
            }
        },
        DistCmd::Conv => {
            let v = input(g)?;
            let summands: Vec<Summand> = parse(field(&v, "summands")?)?;
            let xs: Vec<f64> = parse(field(&v, "x")?)?;
            let conv = transforms::free_convolve(summands)?;
            let density = xs.iter().map(|&x| conv.density(x)).collect::<Result<Vec<_>>>()?;
            json!({ "x": xs, "density": density, "triple": conv.as_triple() })
        }
        DistCmd::Cauchy => {
            let v = input(g)?;
            let m: Measure = parse(field(&v, "measure")?)?;
            json!({ "value": transforms::cauchy_transform(&m, complex_point(&v)?)?.to_json() })
        }
        DistCmd::Ctransform => {
            let v = input(g)?;
            let z = complex_point(&v)?;
            let c = if let Some(t) = v.get("triple") {
                transforms::levy_khintchine_c(&parse::<LevyTriple>(t)?, z)?
            } else {
                transforms::cumulant_transform(&parse::<Measure>(field(&v, "measure")?)?, z)?
            };
            json!({ "value": c.to_json() })
        }
    })
}

fn levy(c: &LevyCmd, g: &Global) -> Result<Value> {
    let v = input(g)?;
    Ok(match c {
        LevyCmd::Split => to_value(&transforms::levy_ito_split(&parse::<LevyTriple>(&v)?)),
        LevyCmd::Recover => {
            let mean = fio::real(field(&v, "mean")?)?;
            let higher: Vec<f64> = parse(field(&v, "higher")?)?;
            to_value(&transforms::recover_triple_from_cumulants(mean, &higher)?)
        }
        LevyCmd::Cumulants { n } => {
            json!({ "cumulants": transforms::cumulants_from_triple(&parse::<LevyTriple>(&v)?, *n)? })
        }
    })
}

fn cp_map(v: &Value) -> Result<CpMap> {
    let source = fio::space_from_json::<Complex64>(field(v, "source")?)?;
    let target = fio::space_from_json::<Complex64>(field(v, "target")?)?;
    let form: CpMapForm = parse(field(v, "map")?)?;
    CpMap::from_form(source, target, &form)
}

fn cp(c: &CpCmd, g: &Global) -> Result<Value> {
    let v = input(g)?;
    let t = cp_map(&v)?;
    Ok(match c {
        CpCmd::Check => {
            let rep = quantize::check_admissible(&t);
            let mut out = to_value(&rep);
            out["admissible"] = json!(rep.admissible());
            out
        }
        CpCmd::Dual => {
            let d = quantize::petz_dual(&t)?;
            json!({
                "source": fio::space_to_json(d.source()),
                "target": fio::space_to_json(d.target()),
                "map": to_value(&d.to_form()),
            })
        }
        CpCmd::Gamma => {
            let terms = field(&v, "wick")?
                .as_array()
                .ok_or_else(|| Error::Malformed("wick must be a list of {coeff, legs}".into()))?
                .iter()
                .map(|term| Ok((Complex64::from_json(field(term, "coeff")?)?, vectors::<Complex64>(term, "legs")?)))
                .collect::<Result<Vec<_>>>()?;
            let degree = terms.iter().map(|t| t.1.len()).max().unwrap_or(0);
            let truncation: usize = v.get("truncation").map(parse).transpose()?.unwrap_or(degree + 2);
            let q = quantize::second_quantize(&t, &terms, truncation)?;
            let w = q.apply(&FockVector::vacuum())?;
            let tol = tolerance(g);
            let mut kept = FockVector::zero();
            for (word, c) in w.iter() {
                if c.norm() > tol * 1e-2 {
                    kept.add_term(word.clone(), *c);
                }
            }
            json!({
                "vacuum_expectation": w.vacuum_coefficient().to_json(),
                "vector": fio::fock_vector_to_json(&kept),
            })
        }
    })
}

fn weight_arg(s: &str) -> Result<Weight> {
    match s.trim() {
        "inf" | "infinity" => Ok(Weight::INFINITE),
        other => other
            .parse::<f64>()
            .map(Weight::Finite)
            .map_err(|_| Error::Malformed(format!("weight must be a number or inf, got {other:?}"))),
    }
}

fn classify_cmd(c: &ClassifyCmd) -> Result<Value> {
    Ok(match c {
        ClassifyCmd::Filtration { triple, b, rho, t } => {
            let d = if let Some(src) = triple {
                classify::filtration_classify(&parse::<LevyTriple>(&read_document(src)?)?, *t)?
            } else {
                let b = b.unwrap_or(0.0);
                match rho.as_deref().map(str::trim) {
                    Some("inf") => classify::filtration_classify_mass(b, Weight::INFINITE, *t)?,
                    Some(text) => {
                        let atoms: Vec<(f64, f64)> = serde_json::from_str(text)?;
                        classify::filtration_classify(&LevyTriple::new(0.0, b, atoms)?, *t)?
                    }
                    None => classify::filtration_classify(&LevyTriple::gaussian(0.0, b)?, *t)?,
                }
            };
            to_value(&d)
        }
        ClassifyCmd::Poisson { alpha } => to_value(&classify::poisson_filtration(*alpha)?),
        ClassifyCmd::Factor { weight, trivial, eigenvalues } => {
            let eigs: Option<Vec<f64>> = eigenvalues.as_deref().map(serde_json::from_str).transpose()?;
            to_value(&classify::factoriality(weight_arg(weight)?, *trivial, eigs.as_deref())?)
        }
        ClassifyCmd::Freedim { n, alpha } => {
            let q = parse_rational(alpha).ok_or_else(|| Error::Malformed(format!("bad rational {alpha:?}")))?;
            let r = classify::freedim_combine(*n, &q)?;
            json!({ "r": r.to_json(), "descriptor": to_value(&classify::FactorDescriptor::free_group(freepoisson_core::scalar::rational_to_f64(&r))) })
        }
        ClassifyCmd::Gamma { base, alpha } => {
            let base = match base.as_str() {
                "trivial" => BaseAlgebra::Trivial,
                "diffuse_abelian" => BaseAlgebra::DiffuseAbelian,
                name => BaseAlgebra::Named { name: name.to_string() },
            };
            let d = classify::gamma_finite_weight(&base, *alpha)?;
            let mut out = to_value(&d);
            out["text"] = json!(d.to_string());
            out
        }
    })
}

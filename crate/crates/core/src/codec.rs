//! Canonical JSON encodings, manifests of named objects, and the small
//! text grammars used on the command line.
//!
//! Scalars are strings ("p/q") so nothing passes through floating point.
//! Decoders reject rather than clamp: sizes beyond the `MAX_*` limits are
//! malformed input.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde_json::{json, Map, Value};

use crate::construct::{make_antidifference, make_triangle_wave, EvaluableFunction, Node};
use crate::error::{Error, Result};
use crate::exppoly::{Atom, ExpPolynomial, MultiIndex};
use crate::groups::{frame_with_hyperplane, group_closure, GroupClosure, HyperplaneFrame};
use crate::opalg::{GridAxis, GridGeometry, TranslationPolynomial};
use crate::scalar::{AlgebraicScalar, ComplexAlgebraic, ExpCoefficient, NumberField};
use crate::solver::DifferenceSystem;
use crate::subspace::FunctionSubspace;
use crate::vector::FieldVector;

pub const FORMAT_VERSION: &str = "1";
pub const MAX_DIM: usize = 8;
pub const MAX_ORDER: u32 = 16;
/// Largest total degree of one polynomial term.
pub const MAX_DEGREE: u32 = 12;
pub const MAX_FIELD_DEGREE: usize = 32;
pub const MAX_GRID_POINTS: usize = 4_000_000;
pub const MAX_DEPTH: usize = 64;
/// Bound on Π(m_i + 1) over the factors of an operator string.
pub const MAX_OP_SHIFTS: u64 = 4096;
const MAX_DIGITS: usize = 4096;

fn malformed(msg: impl Into<String>) -> Error {
    Error::Malformed(msg.into())
}

/// Accepts "p/q", "p" and finite decimals such as "-1.25".
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if s.is_empty() || s.len() > MAX_DIGITS {
        return Err(malformed(format!("bad rational {s:?}")));
    }
    let int = |t: &str| -> Result<BigInt> {
        let digits = t.strip_prefix(['-', '+']).unwrap_or(t);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(malformed(format!("bad integer {t:?} in {s:?}")));
        }
        BigInt::from_str(t).map_err(|_| malformed(format!("bad integer {t:?}")))
    };
    if let Some((p, q)) = s.split_once('/') {
        let q = int(q)?;
        if q.is_zero() {
            return Err(malformed("zero denominator"));
        }
        return Ok(BigRational::new(int(p)?, q));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(malformed(format!("bad decimal {s:?}")));
        }
        let negative = whole.starts_with('-');
        let w = if whole == "-" || whole == "+" || whole.is_empty() { BigInt::zero() } else { int(whole)? };
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let f = BigRational::new(BigInt::from_str(frac).expect("digits"), scale);
        let w = BigRational::from_integer(w);
        return Ok(if negative { w - f } else { w + f });
    }
    Ok(BigRational::from_integer(int(s)?))
}

pub fn rational_to_string(q: &BigRational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

fn rational_value(v: &Value) -> Result<BigRational> {
    match v {
        Value::String(s) => parse_rational(s),
        Value::Number(n) if n.is_i64() => Ok(BigRational::from_integer(BigInt::from(n.as_i64().unwrap()))),
        _ => Err(malformed(format!("expected a rational string, found {v}"))),
    }
}

fn array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| malformed(format!("{what} must be an array")))
}

fn object<'a>(v: &'a Value, what: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| malformed(format!("{what} must be an object")))
}

fn field_of<'a>(m: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    m.get(key).ok_or_else(|| malformed(format!("missing key {key:?}")))
}

fn small_uint(v: &Value, what: &str, max: u64) -> Result<u64> {
    let n = v
        .as_u64()
        .or_else(|| v.as_str().and_then(|s| s.parse().ok()))
        .ok_or_else(|| malformed(format!("{what} must be a non-negative integer")))?;
    if n > max {
        return Err(malformed(format!("{what} = {n} exceeds {max}")));
    }
    Ok(n)
}

pub fn encode_field(k: &NumberField) -> Value {
    let (a, b) = k.interval();
    json!({
        "minpoly": k.minpoly().iter().map(rational_to_string).collect::<Vec<_>>(),
        "interval": [rational_to_string(a), rational_to_string(b)],
    })
}

/// `{"minpoly": [c_0, …, c_n], "interval": [a, b]}` with ascending monic
/// minimal polynomial. The strings "Q" and "sqrt(n)" are shorthands.
pub fn decode_field(v: &Value) -> Result<Arc<NumberField>> {
    if let Some(s) = v.as_str() {
        let s = s.trim();
        if s == "Q" {
            return Ok(NumberField::rationals());
        }
        if let Some(n) = s.strip_prefix("sqrt(").and_then(|r| r.strip_suffix(')')) {
            let n: u32 = n.trim().parse().map_err(|_| malformed(format!("bad field {s:?}")))?;
            return Ok(NumberField::sqrt(n)?);
        }
        return Err(malformed(format!("unknown field shorthand {s:?}")));
    }
    let m = object(v, "field")?;
    let minpoly = array(field_of(m, "minpoly")?, "minpoly")?;
    if minpoly.len() > MAX_FIELD_DEGREE + 1 {
        return Err(malformed("minimal polynomial degree too large"));
    }
    let minpoly = minpoly.iter().map(rational_value).collect::<Result<Vec<_>>>()?;
    let iv = array(field_of(m, "interval")?, "interval")?;
    if iv.len() != 2 {
        return Err(malformed("interval needs two endpoints"));
    }
    Ok(NumberField::new(minpoly, (rational_value(&iv[0])?, rational_value(&iv[1])?))?)
}

pub fn encode_scalar(x: &AlgebraicScalar) -> Value {
    json!({ "coords": x.coords().iter().map(rational_to_string).collect::<Vec<_>>() })
}

/// `{"coords": [...]}` in the power basis of θ. A bare rational string and
/// the string "theta" are accepted as shorthands.
pub fn decode_scalar(k: &Arc<NumberField>, v: &Value) -> Result<AlgebraicScalar> {
    match v {
        Value::String(s) if s.trim() == "theta" => Ok(AlgebraicScalar::theta(k)),
        Value::String(_) | Value::Number(_) => Ok(AlgebraicScalar::from_rational(k, rational_value(v)?)),
        _ => {
            let m = object(v, "scalar")?;
            let coords =
                array(field_of(m, "coords")?, "coords")?.iter().map(rational_value).collect::<Result<Vec<_>>>()?;
            Ok(AlgebraicScalar::from_coords(k, coords)?)
        }
    }
}

pub fn encode_vector(v: &[AlgebraicScalar]) -> Value {
    Value::Array(v.iter().map(encode_scalar).collect())
}

pub fn decode_vector(k: &Arc<NumberField>, v: &Value) -> Result<FieldVector> {
    let a = array(v, "vector")?;
    if a.is_empty() || a.len() > MAX_DIM {
        return Err(malformed(format!("vector length {} outside 1..={MAX_DIM}", a.len())));
    }
    a.iter().map(|x| decode_scalar(k, x)).collect()
}

fn decode_vectors(k: &Arc<NumberField>, v: &Value, what: &str) -> Result<Vec<FieldVector>> {
    let vs = array(v, what)?.iter().map(|x| decode_vector(k, x)).collect::<Result<Vec<_>>>()?;
    if let Some(first) = vs.first() {
        if vs.iter().any(|x| x.len() != first.len()) {
            return Err(malformed(format!("{what}: vectors of different lengths")));
        }
    }
    Ok(vs)
}

pub fn encode_complex(z: &ComplexAlgebraic) -> Value {
    json!([encode_scalar(&z.re), encode_scalar(&z.im)])
}

/// `[re, im]`, or a single real scalar.
pub fn decode_complex(k: &Arc<NumberField>, v: &Value) -> Result<ComplexAlgebraic> {
    match v.as_array() {
        Some(a) if a.len() == 2 => Ok(ComplexAlgebraic::new(decode_scalar(k, &a[0])?, decode_scalar(k, &a[1])?)),
        Some(_) => Err(malformed("complex scalar needs [re, im]")),
        None => Ok(ComplexAlgebraic::real(decode_scalar(k, v)?)),
    }
}

pub fn encode_exp_coefficient(c: &ExpCoefficient) -> Value {
    Value::Array(c.terms().map(|(e, a)| json!({"exp": encode_complex(e), "coeff": encode_complex(a)})).collect())
}

/// `[{"exp": z, "coeff": c}, …]` meaning Σ c·e^z, or a bare complex or real
/// scalar for a constant.
pub fn decode_exp_coefficient(k: &Arc<NumberField>, v: &Value) -> Result<ExpCoefficient> {
    if let Some(a) = v.as_array() {
        if a.iter().all(Value::is_object) {
            let pairs = a
                .iter()
                .map(|t| {
                    let m = object(t, "exp term")?;
                    Ok((decode_complex(k, field_of(m, "exp")?)?, decode_complex(k, field_of(m, "coeff")?)?))
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok(ExpCoefficient::from_terms(k, pairs));
        }
    }
    Ok(ExpCoefficient::constant(decode_complex(k, v)?))
}

pub fn encode_exp_poly(f: &ExpPolynomial) -> Value {
    let terms: Vec<Value> = f
        .blocks()
        .map(|(freq, poly)| {
            json!({
                "lambda": freq.iter().map(encode_complex).collect::<Vec<_>>(),
                "poly": poly.iter().map(|(a, c)| json!({"alpha": a.0, "coeff": encode_exp_coefficient(c)})).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({"dim": f.dim(), "terms": terms})
}

pub fn decode_exp_poly(k: &Arc<NumberField>, v: &Value) -> Result<ExpPolynomial> {
    let m = object(v, "exponential polynomial")?;
    let dim = small_uint(field_of(m, "dim")?, "dim", MAX_DIM as u64)? as usize;
    if dim == 0 {
        return Err(malformed("dim must be positive"));
    }
    let mut atoms = Vec::new();
    for t in array(field_of(m, "terms")?, "terms")? {
        let t = object(t, "term")?;
        let freq = array(field_of(t, "lambda")?, "lambda")?
            .iter()
            .map(|z| decode_complex(k, z))
            .collect::<Result<Vec<_>>>()?;
        if freq.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: freq.len() });
        }
        for p in array(field_of(t, "poly")?, "poly")? {
            let p = object(p, "poly term")?;
            let alpha = array(field_of(p, "alpha")?, "alpha")?
                .iter()
                .map(|a| small_uint(a, "alpha entry", MAX_DEGREE as u64).map(|x| x as u32))
                .collect::<Result<Vec<_>>>()?;
            if alpha.iter().sum::<u32>() > MAX_DEGREE {
                return Err(malformed(format!("term degree exceeds {MAX_DEGREE}")));
            }
            if alpha.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: alpha.len() });
            }
            atoms.push((
                Atom { alpha: MultiIndex(alpha), freq: freq.clone() },
                decode_exp_coefficient(k, field_of(p, "coeff")?)?,
            ));
        }
    }
    Ok(ExpPolynomial::from_atoms(k, dim, atoms))
}

pub fn encode_operator(op: &TranslationPolynomial) -> Value {
    json!({
        "dim": op.dim(),
        "terms": op.terms().map(|(y, c)| json!({"shift": encode_vector(y), "coeff": encode_exp_coefficient(c)})).collect::<Vec<_>>(),
    })
}

/// `{"dim", "terms": [{"shift", "coeff"}]}` or `{"delta": {"h", "m"}}`.
pub fn decode_operator(k: &Arc<NumberField>, v: &Value) -> Result<TranslationPolynomial> {
    let m = object(v, "operator")?;
    if let Some(d) = m.get("delta") {
        let d = object(d, "delta")?;
        let h = decode_vector(k, field_of(d, "h")?)?;
        let order = match d.get("m") {
            Some(x) => small_uint(x, "m", MAX_ORDER as u64)? as u32,
            None => 1,
        };
        return Ok(TranslationPolynomial::delta(k, &h, order));
    }
    let dim = small_uint(field_of(m, "dim")?, "dim", MAX_DIM as u64)? as usize;
    let terms = array(field_of(m, "terms")?, "terms")?
        .iter()
        .map(|t| {
            let t = object(t, "operator term")?;
            Ok((decode_vector(k, field_of(t, "shift")?)?, decode_exp_coefficient(k, field_of(t, "coeff")?)?))
        })
        .collect::<Result<Vec<_>>>()?;
    TranslationPolynomial::from_terms(k, dim, terms)
}

pub fn encode_subspace(s: &FunctionSubspace) -> Value {
    json!({
        "dim": s.dim_ambient(),
        "basis": s.basis().iter().map(encode_exp_poly).collect::<Vec<_>>(),
    })
}

/// `{"dim", "basis": [exp-poly, …]}`.
pub fn decode_subspace(k: &Arc<NumberField>, v: &Value) -> Result<FunctionSubspace> {
    let m = object(v, "space")?;
    let dim = small_uint(field_of(m, "dim")?, "dim", MAX_DIM as u64)? as usize;
    let basis =
        array(field_of(m, "basis")?, "basis")?.iter().map(|b| decode_exp_poly(k, b)).collect::<Result<Vec<_>>>()?;
    FunctionSubspace::span(k, dim, &basis)
}

pub fn encode_system(s: &DifferenceSystem) -> Value {
    json!({
        "steps": s.steps.iter().zip(&s.rhs).map(|((h, m), g)| json!({"h": encode_vector(h), "m": m, "g": encode_exp_poly(g)})).collect::<Vec<_>>(),
    })
}

/// `{"steps": [{"h", "m", "g"}]}`, or `{"steps": [{"h", "m"}], "f": …}`
/// with right-hand sides generated from f.
pub fn decode_system(k: &Arc<NumberField>, v: &Value) -> Result<DifferenceSystem> {
    let m = object(v, "system")?;
    let mut steps = Vec::new();
    let mut rhs = Vec::new();
    for s in array(field_of(m, "steps")?, "steps")? {
        let s = object(s, "step")?;
        let h = decode_vector(k, field_of(s, "h")?)?;
        let order = small_uint(field_of(s, "m")?, "m", MAX_ORDER as u64)? as u32;
        steps.push((h, order));
        if let Some(g) = s.get("g") {
            rhs.push(decode_exp_poly(k, g)?);
        }
    }
    match m.get("f") {
        Some(f) => {
            if !rhs.is_empty() {
                return Err(malformed("give either f or every g, not both"));
            }
            let f = decode_exp_poly(k, f)?;
            if steps.iter().any(|(h, _)| h.len() != f.dim()) {
                return Err(malformed("step and f dimensions differ"));
            }
            DifferenceSystem::from_function(&f, steps)
        }
        None => DifferenceSystem::new(k, steps, rhs),
    }
}

pub fn encode_closure(c: &GroupClosure) -> Value {
    json!({
        "dim": c.dim,
        "generators": c.generators.iter().map(|g| encode_vector(g)).collect::<Vec<_>>(),
        "dense": c.dense,
        "V": c.v_basis.iter().map(|g| encode_vector(g)).collect::<Vec<_>>(),
        "Lambda": c.lambda_basis.iter().map(|g| encode_vector(g)).collect::<Vec<_>>(),
        "lambda_coefficients": c.lambda_coefficients.iter().map(|r| r.iter().map(|z| z.to_string()).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "rounds": c.rounds,
    })
}

/// Recomputes the closure from `"generators"` (or a bare list of vectors);
/// any of "V", "Lambda", "dense" present must agree with the recomputation.
pub fn decode_closure(k: &Arc<NumberField>, v: &Value) -> Result<GroupClosure> {
    let gens = match v {
        Value::Array(_) => v,
        _ => field_of(object(v, "closure")?, "generators")?,
    };
    let gens = decode_vectors(k, gens, "generators")?;
    let c = group_closure(&gens)?;
    if let Value::Object(m) = v {
        let enc = encode_closure(&c);
        for key in ["V", "Lambda", "dense"] {
            if let Some(given) = m.get(key) {
                let same = match key {
                    "dense" => given == &enc[key],
                    _ => decode_vectors(k, given, key)? == decode_vectors(k, &enc[key], key)?,
                };
                if !same {
                    return Err(malformed(format!("{key} disagrees with the closure of the generators")));
                }
            }
        }
    }
    Ok(c)
}

pub fn encode_frame(f: &HyperplaneFrame, generators: &[FieldVector]) -> Value {
    json!({
        "generators": generators.iter().map(|g| encode_vector(g)).collect::<Vec<_>>(),
        "vt_basis": f.vt_basis.iter().map(|g| encode_vector(g)).collect::<Vec<_>>(),
        "w": encode_vector(&f.w),
        "r": encode_scalar(&f.r),
        "p": f.p.iter().map(|z| z.to_string()).collect::<Vec<_>>(),
    })
}

/// Rebuilds the frame from "generators" and "vt_basis"; "w" and "r", when
/// present, must match.
pub fn decode_frame(k: &Arc<NumberField>, v: &Value) -> Result<HyperplaneFrame> {
    let m = object(v, "frame")?;
    let gens = decode_vectors(k, field_of(m, "generators")?, "generators")?;
    let closure = group_closure(&gens)?;
    let vt = decode_vectors(k, field_of(m, "vt_basis")?, "vt_basis")?;
    let frame = frame_with_hyperplane(&closure, &vt)?;
    if let Some(w) = m.get("w") {
        if decode_vector(k, w)? != frame.w {
            return Err(malformed("w disagrees with the rebuilt frame"));
        }
    }
    if let Some(r) = m.get("r") {
        if decode_scalar(k, r)? != frame.r {
            return Err(malformed("r disagrees with the rebuilt frame"));
        }
    }
    Ok(frame)
}

/// Function trees. Coset nodes need the generators of the closure to
/// re-derive their frame, so the encoder takes them.
pub fn encode_function(f: &EvaluableFunction, generators: &[FieldVector]) -> Value {
    match f.node() {
        Node::ExpPoly { f, .. } => json!({"node": "exp_poly", "f": encode_exp_poly(f)}),
        Node::TriangleWave { h } => json!({"node": "triangle", "h": encode_scalar(h)}),
        Node::AntiDifference { child, h, depth } => json!({
            "node": "antidifference",
            "h": encode_scalar(h),
            "depth": depth,
            "child": encode_function(child, generators),
        }),
        Node::Project { child, matrix } => json!({
            "node": "project",
            "matrix": matrix.iter().map(|r| encode_vector(r)).collect::<Vec<_>>(),
            "child": encode_function(child, generators),
        }),
        Node::Sum(children) => json!({
            "node": "sum",
            "children": children.iter().map(|c| encode_function(c, generators)).collect::<Vec<_>>(),
        }),
        Node::Scale { factor, child } => json!({
            "node": "scale",
            "factor": encode_complex(factor),
            "child": encode_function(child, generators),
        }),
        Node::CosetBuild { frame, e, inner, .. } => json!({
            "node": "coset",
            "frame": encode_frame(frame, generators),
            "e": encode_exp_poly(e),
            "inner": encode_function(inner, generators),
        }),
    }
}

/// Antidifferences nested inside one another must share their step, which
/// keeps evaluation linear in the lattice index.
pub fn decode_function(k: &Arc<NumberField>, v: &Value) -> Result<EvaluableFunction> {
    decode_function_at(k, v, 0, None)
}

fn decode_function_at(
    k: &Arc<NumberField>,
    v: &Value,
    depth: usize,
    outer_step: Option<&AlgebraicScalar>,
) -> Result<EvaluableFunction> {
    if depth > MAX_DEPTH {
        return Err(malformed("function tree too deep"));
    }
    let m = object(v, "function")?;
    let kind = field_of(m, "node")?.as_str().ok_or_else(|| malformed("node must be a string"))?;
    let child = |key: &str| decode_function_at(k, field_of(m, key)?, depth + 1, outer_step);
    match kind {
        "exp_poly" => Ok(EvaluableFunction::exp_poly(decode_exp_poly(k, field_of(m, "f")?)?)),
        "triangle" => make_triangle_wave(&decode_scalar(k, field_of(m, "h")?)?),
        "antidifference" => {
            let h = decode_scalar(k, field_of(m, "h")?)?;
            let n = small_uint(field_of(m, "depth")?, "depth", MAX_ORDER as u64)?;
            if n == 0 {
                return Err(malformed("antidifference depth must be positive"));
            }
            if outer_step.is_some_and(|o| *o != h) {
                return Err(malformed("nested antidifferences must share their step"));
            }
            let mut f = decode_function_at(k, field_of(m, "child")?, depth + 1, Some(&h))?;
            for _ in 0..n {
                f = make_antidifference(f, &h)?;
            }
            Ok(f)
        }
        "project" => {
            let matrix = decode_vectors(k, field_of(m, "matrix")?, "matrix")?;
            EvaluableFunction::project(child("child")?, matrix)
        }
        "sum" => {
            let children = array(field_of(m, "children")?, "children")?
                .iter()
                .map(|c| decode_function_at(k, c, depth + 1, outer_step))
                .collect::<Result<Vec<_>>>()?;
            EvaluableFunction::sum(children)
        }
        "scale" => Ok(EvaluableFunction::scale(decode_complex(k, field_of(m, "factor")?)?, child("child")?)),
        "coset" => {
            let frame = decode_frame(k, field_of(m, "frame")?)?;
            let e = decode_exp_poly(k, field_of(m, "e")?)?;
            EvaluableFunction::coset_build(frame, e, child("inner")?)
        }
        other => Err(malformed(format!("unknown node kind {other:?}"))),
    }
}

/// A self-contained document of named objects.
#[derive(Clone, Debug)]
pub struct Manifest {
    pub version: String,
    pub field: Arc<NumberField>,
    objects: BTreeMap<String, (String, Value)>,
}

pub const OBJECT_KINDS: [&str; 8] =
    ["scalar", "vector", "exp_poly", "operator", "space", "system", "closure", "function"];

impl Manifest {
    /// `{"version", "field", "objects": [{"id", "kind", "value"}]}`. Values
    /// may contain `{"ref": id}` anywhere; references are resolved eagerly
    /// and cycles are rejected.
    pub fn parse(v: &Value) -> Result<Self> {
        let m = object(v, "manifest")?;
        let version =
            field_of(m, "version")?.as_str().ok_or_else(|| malformed("version must be a string"))?.to_string();
        if version != FORMAT_VERSION {
            return Err(malformed(format!("unsupported manifest version {version:?}")));
        }
        let field = decode_field(field_of(m, "field")?)?;
        let mut raw: BTreeMap<String, (String, Value)> = BTreeMap::new();
        for o in array(field_of(m, "objects")?, "objects")? {
            let o = object(o, "object")?;
            let id = field_of(o, "id")?.as_str().ok_or_else(|| malformed("id must be a string"))?.to_string();
            let kind = field_of(o, "kind")?.as_str().ok_or_else(|| malformed("kind must be a string"))?.to_string();
            if !OBJECT_KINDS.contains(&kind.as_str()) {
                return Err(malformed(format!("unknown object kind {kind:?}")));
            }
            if raw.insert(id.clone(), (kind, field_of(o, "value")?.clone())).is_some() {
                return Err(malformed(format!("duplicate id {id:?}")));
            }
        }
        let mut objects = BTreeMap::new();
        for (id, (kind, value)) in &raw {
            let mut stack = BTreeSet::from([id.clone()]);
            objects.insert(id.clone(), (kind.clone(), resolve(value, &raw, &mut stack, 0)?));
        }
        let manifest = Manifest { version, field, objects };
        for id in manifest.objects.keys() {
            manifest.check(id)?;
        }
        Ok(manifest)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.objects.keys().map(String::as_str)
    }

    /// (kind, resolved value).
    pub fn get(&self, id: &str) -> Result<(&str, &Value)> {
        self.objects.get(id).map(|(k, v)| (k.as_str(), v)).ok_or_else(|| malformed(format!("unknown id {id:?}")))
    }

    fn check(&self, id: &str) -> Result<()> {
        let (kind, v) = self.get(id)?;
        let k = &self.field;
        match kind {
            "scalar" => decode_scalar(k, v).map(drop),
            "vector" => decode_vector(k, v).map(drop),
            "exp_poly" => decode_exp_poly(k, v).map(drop),
            "operator" => decode_operator(k, v).map(drop),
            "space" => decode_subspace(k, v).map(drop),
            "system" => decode_system(k, v).map(drop),
            "closure" => decode_closure(k, v).map(drop),
            "function" => decode_function(k, v).map(drop),
            _ => unreachable!("kinds are checked on parse"),
        }
        .map_err(|e| malformed(format!("object {id:?}: {e}")))
    }
}

fn resolve(
    v: &Value,
    raw: &BTreeMap<String, (String, Value)>,
    stack: &mut BTreeSet<String>,
    depth: usize,
) -> Result<Value> {
    if depth > MAX_DEPTH {
        return Err(malformed("manifest nesting too deep"));
    }
    match v {
        Value::Object(m) if m.len() == 1 && m.contains_key("ref") => {
            let id = m["ref"].as_str().ok_or_else(|| malformed("ref must be a string"))?;
            let (_, target) = raw.get(id).ok_or_else(|| malformed(format!("unresolved ref {id:?}")))?;
            if !stack.insert(id.to_string()) {
                return Err(malformed(format!("reference cycle through {id:?}")));
            }
            let out = resolve(target, raw, stack, depth + 1)?;
            stack.remove(id);
            Ok(out)
        }
        Value::Object(m) => {
            let mut out = Map::new();
            for (key, x) in m {
                out.insert(key.clone(), resolve(x, raw, stack, depth + 1)?);
            }
            Ok(Value::Object(out))
        }
        Value::Array(a) => {
            Ok(Value::Array(a.iter().map(|x| resolve(x, raw, stack, depth + 1)).collect::<Result<_>>()?))
        }
        _ => Ok(v.clone()),
    }
}

/// One factor Δ_h^m of an operator string.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeltaSpec {
    pub h: Vec<BigRational>,
    pub m: u32,
}

/// `delta h=<r>[,<r>…] m=<n>` terms joined by `;`. `m` defaults to 1.
pub fn parse_op_string(s: &str) -> Result<Vec<DeltaSpec>> {
    let mut out = Vec::new();
    let mut shifts: u64 = 1;
    for part in s.split(';') {
        let mut words = part.split_whitespace();
        match words.next() {
            Some("delta") => {}
            Some(w) => return Err(malformed(format!("expected \"delta\", found {w:?}"))),
            None => return Err(malformed("empty operator term")),
        }
        let (mut h, mut m) = (None, None);
        for w in words {
            let (key, value) =
                w.split_once('=').ok_or_else(|| malformed(format!("expected key=value, found {w:?}")))?;
            match key {
                "h" if h.is_none() => {
                    let v = value.split(',').map(parse_rational).collect::<Result<Vec<_>>>()?;
                    if v.len() > MAX_DIM {
                        return Err(malformed("step has too many coordinates"));
                    }
                    h = Some(v);
                }
                "m" if m.is_none() => {
                    let n: u32 = value.parse().map_err(|_| malformed(format!("bad order {value:?}")))?;
                    if n == 0 || n > MAX_ORDER {
                        return Err(malformed(format!("order {n} outside 1..={MAX_ORDER}")));
                    }
                    m = Some(n);
                }
                _ => return Err(malformed(format!("unexpected or repeated key {key:?}"))),
            }
        }
        let h = h.ok_or_else(|| malformed("delta needs h=…"))?;
        if let Some(first) = out.first() {
            let first: &DeltaSpec = first;
            if first.h.len() != h.len() {
                return Err(malformed("operator terms have different dimensions"));
            }
        }
        let m = m.unwrap_or(1);
        shifts = shifts.saturating_mul(u64::from(m) + 1);
        if shifts > MAX_OP_SHIFTS {
            return Err(malformed(format!("operator expands to more than {MAX_OP_SHIFTS} shifts")));
        }
        out.push(DeltaSpec { h, m });
    }
    Ok(out)
}

/// The product of the factors as a translation polynomial.
pub fn op_string_operator(k: &Arc<NumberField>, specs: &[DeltaSpec]) -> Result<TranslationPolynomial> {
    let d = specs.first().map(|s| s.h.len()).ok_or(Error::EmptyInput("operator"))?;
    let mut op = TranslationPolynomial::identity(k, d);
    for s in specs {
        let h: FieldVector = s.h.iter().map(|q| AlgebraicScalar::from_rational(k, q.clone())).collect();
        op = op.compose(&TranslationPolynomial::delta(k, &h, s.m))?;
    }
    Ok(op)
}

/// `min,max,n` per axis, axes joined by `;`.
pub fn parse_grid(s: &str) -> Result<GridGeometry> {
    let mut axes = Vec::new();
    for part in s.split(';') {
        let fields: Vec<&str> = part.split(',').collect();
        if fields.len() != 3 {
            return Err(malformed(format!("grid axis {part:?} is not min,max,n")));
        }
        let n: usize = fields[2].trim().parse().map_err(|_| malformed(format!("bad point count {:?}", fields[2])))?;
        axes.push(GridAxis::new(parse_rational(fields[0])?, parse_rational(fields[1])?, n)?);
    }
    if axes.len() > MAX_DIM {
        return Err(malformed("too many grid axes"));
    }
    let total = axes.iter().try_fold(1usize, |acc, a| acc.checked_mul(a.n));
    if total.is_none_or(|t| t > MAX_GRID_POINTS) {
        return Err(malformed(format!("grid exceeds {MAX_GRID_POINTS} points")));
    }
    Ok(GridGeometry::new(axes))
}

pub fn encode_grid(g: &GridGeometry) -> Value {
    json!({
        "axes": g.axes.iter().map(|a| json!({"min": rational_to_string(&a.min), "max": rational_to_string(&a.max), "n": a.n})).collect::<Vec<_>>(),
        "order": "row-major, last axis fastest",
        "points": g.len(),
    })
}

/// Reads a JSON document that may declare its own field.
pub fn document_field(v: &Value) -> Option<Result<Arc<NumberField>>> {
    v.as_object().and_then(|m| m.get("field")).map(decode_field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::make_fm;
    use crate::vector;

    fn k2() -> Arc<NumberField> {
        NumberField::sqrt(2).unwrap()
    }

    #[test]
    fn rationals() {
        assert_eq!(rational_to_string(&parse_rational("-6/4").unwrap()), "-3/2");
        assert_eq!(parse_rational("0.125").unwrap(), BigRational::new(1.into(), 8.into()));
        assert_eq!(parse_rational("-1.5").unwrap(), BigRational::new((-3).into(), 2.into()));
        assert_eq!(parse_rational("-0.5").unwrap(), BigRational::new((-1).into(), 2.into()));
        for bad in ["", "1/0", "a", "1.", "--1", "1/-", "+"] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn field_and_scalars_round_trip() {
        let k = k2();
        let v = encode_field(&k);
        let k2 = decode_field(&v).unwrap();
        assert!(k.same_as(&k2));
        let x = &AlgebraicScalar::theta(&k) + &AlgebraicScalar::from_ratio(&k, 1, 3);
        assert_eq!(decode_scalar(&k, &encode_scalar(&x)).unwrap(), x);
        assert_eq!(encode_scalar(&x), json!({"coords": ["1/3", "1/1"]}));
    }

    #[test]
    fn exp_poly_and_operator_round_trip() {
        let k = k2();
        let theta = ComplexAlgebraic::real(AlgebraicScalar::theta(&k));
        let f = ExpPolynomial::power(&k, &[2, 1])
            .try_add(&ExpPolynomial::exponential(&k, vec![theta.clone(), ComplexAlgebraic::i(&k)]))
            .unwrap()
            .scale(&ExpCoefficient::exp(theta));
        let enc = encode_exp_poly(&f);
        assert_eq!(decode_exp_poly(&k, &enc).unwrap(), f);
        let op = TranslationPolynomial::delta(&k, &vector::from_ints(&k, &[1, 2]), 3);
        let back = decode_operator(&k, &encode_operator(&op)).unwrap();
        assert!(back.sub(&op).unwrap().is_zero());
        let short = decode_operator(&k, &json!({"delta": {"h": ["1", "2"], "m": 3}})).unwrap();
        assert!(short.sub(&op).unwrap().is_zero());
    }

    #[test]
    fn function_tree_round_trip() {
        let k = k2();
        let one = AlgebraicScalar::one(&k);
        let f = make_fm(3, &one).unwrap();
        let enc = encode_function(&f, &[]);
        assert_eq!(enc["depth"], json!(2));
        let g = decode_function(&k, &enc).unwrap();
        for x in [-2.3, 0.4, 5.9] {
            assert_eq!(f.eval(&[x]), g.eval(&[x]));
        }
        assert_eq!(encode_function(&g, &[]), enc);
    }

    #[test]
    fn manifest_refs_and_duplicates() {
        let doc = json!({
            "version": "1",
            "field": "sqrt(2)",
            "objects": [
                {"id": "h", "kind": "vector", "value": ["1"]},
                {"id": "sys", "kind": "system", "value": {"steps": [{"h": {"ref": "h"}, "m": 1}, {"h": ["theta"], "m": 1}], "f": {"dim": 1, "terms": []}}},
            ]
        });
        let m = Manifest::parse(&doc).unwrap();
        assert_eq!(m.get("sys").unwrap().1["steps"][0]["h"], json!(["1"]));
        let mut dup = doc.clone();
        dup["objects"][1]["id"] = json!("h");
        assert!(Manifest::parse(&dup).is_err());
        let mut cyc = doc.clone();
        cyc["objects"][0]["value"] = json!({"ref": "h"});
        assert!(Manifest::parse(&cyc).is_err());
        let mut dangling = doc;
        dangling["objects"][0]["value"] = json!({"ref": "nope"});
        assert!(Manifest::parse(&dangling).is_err());
    }

    #[test]
    fn op_strings_and_grids() {
        let ops = parse_op_string("delta h=1/2,1 m=2; delta h=0,1").unwrap();
        assert_eq!(ops.len(), 2);
        assert_eq!(ops[0].m, 2);
        assert_eq!(ops[1].m, 1);
        for bad in ["", "delta", "delta h=1 m=0", "delta h=1 h=2", "gamma h=1", "delta h=1; delta h=1,2"] {
            assert!(parse_op_string(bad).is_err(), "{bad}");
        }
        assert!(parse_op_string(&["delta h=1 m=16"; 2].join(";")).is_ok());
        assert!(parse_op_string(&["delta h=1 m=16"; 3].join(";")).is_err());
        let g = parse_grid("-1,1,5;0,1/2,3").unwrap();
        assert_eq!(g.len(), 15);
        assert!(parse_grid("0,1").is_err());
        assert!(parse_grid("0,1,100000;0,1,100000").is_err());
    }
}

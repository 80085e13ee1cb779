use std::path::PathBuf;
use std::sync::Arc;

use deltaclose_core::codec::{self, parse_grid, parse_op_string};
use deltaclose_core::construct::{
    self, certify_prop7, corner_witness, make_fm, make_prop7_phi, make_triangle_wave, EvaluableFunction,
};
use deltaclose_core::exppoly::ExpPolynomial;
use deltaclose_core::groups::{frame_build, frame_with_hyperplane, group_closure, GroupClosure, HyperplaneFrame};
use deltaclose_core::opalg::{telescope_expand, GridFunction, GridGeometry, TranslationPolynomial};
use deltaclose_core::scalar::{AlgebraicScalar, NumberField};
use deltaclose_core::solver::{coset_fit, solver_kernel, solver_solve, SliceGrid};
use deltaclose_core::subspace::FunctionSubspace;
use deltaclose_core::vector::{self, FieldVector};
use deltaclose_core::{Error, Result};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::args::{Command, ConstructCmd, FitCmd, Global, GroupCmd, OpCmd, SpaceCmd, VerifyCmd};
use crate::input::{part, Inputs};
use crate::report::{complex, coordinate_header, num, Certificates, Tolerance};

pub struct Ctx {
    inputs: Inputs,
    tol: Tolerance,
    grid: Option<String>,
    seed: u64,
    pub out: Option<PathBuf>,
}

pub struct Csv {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub sidecar: Value,
}

pub struct Outcome {
    pub field: Arc<NumberField>,
    pub body: Map<String, Value>,
    pub certificates: Certificates,
    pub csv: Option<Csv>,
}

impl Outcome {
    fn new(field: &Arc<NumberField>) -> Self {
        Outcome { field: field.clone(), body: Map::new(), certificates: Certificates::default(), csv: None }
    }

    fn set(&mut self, key: &str, v: Value) {
        self.body.insert(key.to_string(), v);
    }
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::Malformed(msg.into())
}

impl Ctx {
    pub fn new(g: &Global) -> Result<Self> {
        Ok(Ctx {
            inputs: Inputs::new(g)?,
            tol: Tolerance { atol: g.atol, rtol: g.rtol },
            grid: g.grid.clone(),
            seed: g.seed,
            out: g.out.clone(),
        })
    }

    fn geometry(&self, default_axis: &str, d: usize) -> Result<GridGeometry> {
        let spec = match &self.grid {
            Some(g) => g.clone(),
            None => vec![default_axis; d].join(";"),
        };
        let g = parse_grid(&spec)?;
        if g.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: g.dim() });
        }
        Ok(g)
    }

    /// A scalar given as JSON or as a bare rational / "theta".
    fn scalar(&self, k: &Arc<NumberField>, arg: &str) -> Result<AlgebraicScalar> {
        let t = arg.trim();
        let v =
            if t.starts_with('{') || t.starts_with('@') { self.inputs.read(t)? } else { Value::String(t.to_string()) };
        codec::decode_scalar(k, &v)
    }
}

pub fn run(ctx: &Ctx, cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::Group(GroupCmd::Closure { generators, hyperplane }) => closure(ctx, generators, hyperplane.as_deref()),
        Command::Op(OpCmd::Expand { steps, powers, n }) => expand(ctx, steps, powers, *n),
        Command::Op(OpCmd::Divide { h, p, n }) => divide(ctx, h, *p, *n),
        Command::Space(SpaceCmd::Diamond { space, ops }) => diamond(ctx, space, ops),
        Command::Solve { system } => solve(ctx, system),
        Command::Kernel { steps, cap } => kernel(ctx, steps, *cap),
        Command::Construct(ConstructCmd::Triangle { period }) => triangle(ctx, period),
        Command::Construct(ConstructCmd::Fm { m, period }) => fm(ctx, *m, period),
        Command::Construct(ConstructCmd::Prop7 { generators, m, e, hyperplane }) => {
            prop7(ctx, generators, *m, e.as_deref(), hyperplane.as_deref())
        }
        Command::Verify(VerifyCmd::Grid { function, op }) => verify_grid(ctx, function, op),
        Command::Fit(FitCmd::Cosets { function, closure, lambdas, space, orders }) => {
            fit_cosets(ctx, function, closure.as_deref(), lambdas.as_deref(), space.as_deref(), orders.as_deref())
        }
    }
}

fn vectors(k: &Arc<NumberField>, v: &Value) -> Result<Vec<FieldVector>> {
    let a = v.as_array().ok_or_else(|| malformed("expected a list of vectors"))?;
    let vs = a.iter().map(|x| codec::decode_vector(k, x)).collect::<Result<Vec<_>>>()?;
    if let Some(f) = vs.first() {
        if let Some(bad) = vs.iter().find(|x| x.len() != f.len()) {
            return Err(Error::DimensionMismatch { expected: f.len(), found: bad.len() });
        }
    }
    Ok(vs)
}

fn steps_with_orders(k: &Arc<NumberField>, v: &Value) -> Result<Vec<(FieldVector, u32)>> {
    let a = v.as_array().ok_or_else(|| malformed("expected [{\"h\", \"m\"}, …]"))?;
    let out = a
        .iter()
        .map(|s| {
            let h = codec::decode_vector(k, s.get("h").ok_or_else(|| malformed("step needs h"))?)?;
            let m = s
                .get("m")
                .and_then(Value::as_u64)
                .filter(|m| (1..=codec::MAX_ORDER as u64).contains(m))
                .ok_or_else(|| malformed(format!("step order must be an integer in 1..={}", codec::MAX_ORDER)))?;
            Ok((h, m as u32))
        })
        .collect::<Result<Vec<_>>>()?;
    if out.is_empty() {
        return Err(Error::EmptyInput("steps"));
    }
    Ok(out)
}

fn encode_steps(steps: &[(FieldVector, u32)]) -> Value {
    Value::Array(steps.iter().map(|(h, m)| json!({"h": codec::encode_vector(h), "m": m})).collect())
}

fn int_scale(v: &[AlgebraicScalar], z: &BigInt) -> FieldVector {
    let k = v[0].field();
    vector::scale(v, &AlgebraicScalar::from_rational(k, BigRational::from_integer(z.clone())))
}

fn frame_certificates(out: &mut Outcome, c: &GroupClosure, frame: &HyperplaneFrame) {
    let decomposes = c.generators.iter().all(|z| {
        let (p, s) = frame.project(z);
        vector::add(&p, &vector::scale(&frame.w, &s)) == *z
    });
    out.certificates.add("frame_decomposition", decomposes, Value::Null);
    let integral = c.generators.iter().zip(&frame.p).all(|(z, p)| {
        frame.s(z) == &frame.r * &AlgebraicScalar::from_rational(&c.field, BigRational::from_integer(p.clone()))
    });
    out.certificates.add("p_integral", integral, json!(frame.p.iter().map(|z| z.to_string()).collect::<Vec<_>>()));
    let ratios: Option<Vec<BigRational>> =
        frame.s_lambda.iter().map(|s| s.div(&frame.r).ok().and_then(|q| q.as_rational().cloned())).collect();
    let (pass, detail) = match ratios {
        _ if frame.s_lambda.is_empty() => (frame.r.is_one(), json!("Lambda = {0}, r = 1")),
        Some(q) if q.iter().all(|x| x.is_integer()) => {
            let g = q.iter().fold(BigInt::zero(), |acc, x| acc.gcd(&x.to_integer()));
            (g.is_one(), json!({"s_lambda_over_r": q.iter().map(codec::rational_to_string).collect::<Vec<_>>()}))
        }
        _ => (false, json!("s(Lambda)/r is not integral")),
    };
    out.certificates.add("gamma_equals_r_z", pass, detail);
}

fn closure(ctx: &Ctx, generators: &str, hyperplane: Option<&str>) -> Result<Outcome> {
    let doc = ctx.inputs.read(generators)?;
    let hdoc = hyperplane.map(|h| ctx.inputs.read(h)).transpose()?;
    let mut docs = vec![&doc];
    docs.extend(hdoc.iter());
    let k = ctx.inputs.field(&docs)?;
    let c = codec::decode_closure(&k, part(&doc, "closure"))?;
    let mut out = Outcome::new(&k);
    if let Value::Object(m) = codec::encode_closure(&c) {
        out.body.extend(m);
    }
    let decomposes = c.generators.iter().zip(&c.lambda_coefficients).all(|(h, z)| {
        let lattice = c
            .lambda_basis
            .iter()
            .zip(z)
            .fold(vector::zeros(&k, c.dim), |acc, (l, zj)| vector::add(&acc, &int_scale(l, zj)));
        vector::sub(h, &c.project_v(h)) == lattice
    });
    out.certificates.add("generators_decompose", decomposes, Value::Null);
    let orthogonal = c.lambda_basis.iter().all(|l| c.v_basis.iter().all(|v| vector::dot(l, v).is_zero()));
    out.certificates.add("lambda_orthogonal_to_v", orthogonal, Value::Null);
    out.certificates.add("dense_flag", c.dense == (c.v_basis.len() == c.dim), Value::Null);
    if !c.dense {
        let frame = match &hdoc {
            Some(h) => frame_with_hyperplane(&c, &vectors(&k, part(h, "hyperplane"))?)?,
            None => frame_build(&c)?,
        };
        out.set("frame", codec::encode_frame(&frame, &c.generators));
        out.set("lattice_step", codec::encode_vector(&frame.lattice_step()));
        frame_certificates(&mut out, &c, &frame);
    }
    Ok(out)
}

fn expand(ctx: &Ctx, steps: &str, powers: &str, n: u32) -> Result<Outcome> {
    let sdoc = ctx.inputs.read(steps)?;
    let pdoc = ctx.inputs.read(powers)?;
    let k = ctx.inputs.field(&[&sdoc, &pdoc])?;
    let h = vectors(&k, part(&sdoc, "steps"))?;
    let m: Vec<i64> = part(&pdoc, "powers")
        .as_array()
        .ok_or_else(|| malformed("powers must be a list of integers"))?
        .iter()
        .map(|x| x.as_i64().filter(|v| v.abs() <= 64).ok_or_else(|| malformed("powers must be integers with |m| ≤ 64")))
        .collect::<Result<_>>()?;
    if n > codec::MAX_ORDER {
        return Err(malformed(format!("N must be at most {}", codec::MAX_ORDER)));
    }
    let t = telescope_expand(&k, &h, &m, n)?;
    let mut out = Outcome::new(&k);
    let need = n.div_ceil(h.len().max(1) as u32);
    let summands: Vec<Value> = t
        .summands
        .iter()
        .map(|s| {
            json!({
                "alpha": s.alpha,
                "operator": codec::encode_operator(&s.op),
                "dominant_index": s.dominant_index(&vec![need; h.len()]),
            })
        })
        .collect();
    out.set("summands", Value::Array(summands));
    out.set("target", codec::encode_operator(&t.target));
    out.set("identity", json!(if t.identity_holds { "exact-pass" } else { "fail" }));
    out.certificates.add("telescoping_identity", t.identity_holds, Value::Null);
    out.certificates.add("pigeonhole", t.pigeonhole_holds, json!({"ceil_N_over_t": need}));
    Ok(out)
}

fn divide(ctx: &Ctx, h: &str, p: i64, n: u32) -> Result<Outcome> {
    let hdoc = ctx.inputs.read(h)?;
    let k = ctx.inputs.field(&[&hdoc])?;
    let h = codec::decode_vector(&k, part(&hdoc, "h"))?;
    if p.abs() > 64 || n > codec::MAX_ORDER {
        return Err(malformed("need |p| ≤ 64 and n ≤ 16"));
    }
    let q = TranslationPolynomial::divisibility_factor(&k, &h, p, n)?;
    let lhs = TranslationPolynomial::delta(&k, &vector::scale_int(&h, p), n);
    let rhs = q.compose(&TranslationPolynomial::delta(&k, &h, n))?;
    let mut out = Outcome::new(&k);
    out.set("quotient", codec::encode_operator(&q));
    out.certificates.add("divisibility", lhs.sub(&rhs)?.is_zero(), Value::Null);
    Ok(out)
}

fn diamond(ctx: &Ctx, space: &str, ops: &str) -> Result<Outcome> {
    let sdoc = ctx.inputs.read(space)?;
    let odoc = ctx.inputs.read(ops)?;
    let k = ctx.inputs.field(&[&sdoc, &odoc])?;
    let v = codec::decode_subspace(&k, part(&sdoc, "space"))?;
    let ops: Vec<(TranslationPolynomial, u32)> = part(&odoc, "ops")
        .as_array()
        .ok_or_else(|| malformed("ops must be [{\"op\", \"power\"}, …]"))?
        .iter()
        .map(|o| {
            let op = codec::decode_operator(&k, o.get("op").ok_or_else(|| malformed("missing op"))?)?;
            let s = o
                .get("power")
                .and_then(Value::as_u64)
                .filter(|s| *s <= codec::MAX_ORDER as u64)
                .ok_or_else(|| malformed("power must be an integer ≤ 16"))?;
            Ok((op, s as u32))
        })
        .collect::<Result<_>>()?;
    let w = v.diamond(&ops)?;
    let bound = deltaclose_core::subspace::diamond_dimension_bound(v.dim(), ops.iter().map(|(_, s)| *s));
    let mut out = Outcome::new(&k);
    out.set("space", codec::encode_subspace(&w));
    out.set("dim", json!(w.dim()));
    out.set("input_dim", json!(v.dim()));
    out.set("dimension_bound", json!(bound));
    out.certificates.add("contains_input", w.contains_space(&v), Value::Null);
    let invariant: Vec<bool> = ops.iter().map(|(op, _)| w.is_invariant(op)).collect::<Result<_>>()?;
    out.certificates.add("invariant_under_each_operator", invariant.iter().all(|b| *b), json!(invariant));
    out.certificates.add("dimension_bound", w.dim() <= bound, Value::Null);
    let reversed: Vec<_> = ops.iter().rev().cloned().collect();
    out.certificates.add("relabeling_invariant", v.diamond(&reversed)?.same_span(&w), Value::Null);
    let oracle = v.saturate(&ops.iter().map(|(op, _)| op.clone()).collect::<Vec<_>>(), bound + 1);
    out.certificates.add(
        "saturation_oracle",
        !oracle.capped && oracle.space.same_span(&w),
        json!({"iterations": oracle.iterations}),
    );
    Ok(out)
}

fn solve(ctx: &Ctx, system: &str) -> Result<Outcome> {
    let doc = ctx.inputs.read(system)?;
    let k = ctx.inputs.field(&[&doc])?;
    let sys = codec::decode_system(&k, part(&doc, "system"))?;
    let sol = solver_solve(&sys)?;
    let mut out = Outcome::new(&k);
    out.set("particular", codec::encode_exp_poly(&sol.particular));
    out.set("real", json!(sol.particular.is_real()));
    out.set("kernel", Value::Array(sol.kernel_basis.iter().map(codec::encode_exp_poly).collect()));
    out.set(
        "ansatz",
        Value::Array(
            sol.ansatz
                .entries
                .iter()
                .map(|e| json!({"lambda": e.freq.iter().map(codec::encode_complex).collect::<Vec<_>>(), "degree_bound": e.degree_bound}))
                .collect(),
        ),
    );
    out.set("zero_degree_searched", json!(sol.ansatz.zero_degree_searched));
    let residual_zero = sys
        .steps
        .iter()
        .zip(&sys.rhs)
        .map(|((h, m), g)| Ok(sol.particular.forward_difference(h, *m)? == *g))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .all(|b| b);
    out.certificates.add("forward_residual_zero", residual_zero, Value::Null);
    out.certificates.add("kernel_annihilated", annihilated(&sol.kernel_basis, &sys.steps)?, Value::Null);
    let in_ansatz = sol.particular.frequencies().all(|f| sol.ansatz.entries.iter().any(|e| e.freq == *f));
    out.certificates.add("ansatz_frequencies", in_ansatz, Value::Null);
    Ok(out)
}

fn annihilated(basis: &[ExpPolynomial], steps: &[(FieldVector, u32)]) -> Result<bool> {
    for b in basis {
        for (h, m) in steps {
            if !b.forward_difference(h, *m)?.is_zero() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn kernel(ctx: &Ctx, steps: &str, cap: Option<u32>) -> Result<Outcome> {
    let doc = ctx.inputs.read(steps)?;
    let k = ctx.inputs.field(&[&doc])?;
    let steps = steps_with_orders(&k, part(&doc, "steps"))?;
    let max_m = steps.iter().map(|(_, m)| *m).max().unwrap_or(0);
    let cap = cap.unwrap_or_else(|| max_m.max(steps.iter().map(|(_, m)| m - 1).sum()));
    if cap > codec::MAX_DEGREE {
        return Err(malformed(format!("degree cap must be at most {}", codec::MAX_DEGREE)));
    }
    let basis = solver_kernel(&k, &steps, cap)?;
    let mut out = Outcome::new(&k);
    out.set("cap", json!(cap));
    out.set("kernel", Value::Array(basis.iter().map(codec::encode_exp_poly).collect()));
    out.certificates.add("kernel_annihilated", annihilated(&basis, &steps)?, Value::Null);
    Ok(out)
}

fn sample_csv(f: &EvaluableFunction, geometry: &GridGeometry) -> Csv {
    let samples = GridFunction::sample(geometry.clone(), |x| f.eval(x));
    let rows = (0..geometry.len())
        .filter_map(|i| {
            samples.values[i].map(|v| {
                let mut r = geometry.point(i);
                r.extend([v.re, v.im]);
                r
            })
        })
        .collect();
    let mut header = coordinate_header(geometry.dim());
    header.extend(["re".to_string(), "im".to_string()]);
    Csv { header, rows, sidecar: json!({"grid": codec::encode_grid(geometry), "columns": "coordinates, then value"}) }
}

fn lattice_certificate(out: &mut Outcome, ctx: &Ctx, f: &EvaluableFunction, h: f64) {
    let worst = (-construct::LATTICE_CHECK_RANGE..=construct::LATTICE_CHECK_RANGE)
        .map(|j| f.eval(&[j as f64 * h]).norm())
        .fold(0.0, f64::max);
    let tol = ctx.tol.bound(1e-10, construct::LATTICE_CHECK_RANGE as f64 * h);
    out.certificates.add("lattice_zero", worst <= tol, json!({"max_abs": num(worst), "tolerance": num(tol)}));
}

fn triangle(ctx: &Ctx, period: &str) -> Result<Outcome> {
    let k = ctx.inputs.field(&[])?;
    let h = ctx.scalar(&k, period)?;
    let f = make_triangle_wave(&h)?;
    let hf = h.to_f64();
    let mut out = Outcome::new(&k);
    out.set("function", codec::encode_function(&f, &[]));
    lattice_certificate(&mut out, ctx, &f, hf);
    let tol = ctx.tol.bound(1e-12, hf);
    let half = (f.eval(&[hf / 2.0]).re - hf / 2.0).abs();
    out.certificates.add("half_period_value", half <= tol, json!({"error": num(half)}));
    let xs: Vec<f64> = (0..=200).map(|i| -3.1 * hf + 6.2 * hf * i as f64 / 200.0).collect();
    let even = xs.iter().map(|&x| (f.eval(&[x]) - f.eval(&[-x])).norm()).fold(0.0, f64::max);
    out.certificates.add("even", even <= tol, json!({"max_abs": num(even)}));
    let periodic = xs.iter().map(|&x| (f.eval(&[x + hf]) - f.eval(&[x])).norm()).fold(0.0, f64::max);
    out.certificates.add("periodic", periodic <= tol, json!({"max_abs": num(periodic)}));
    if ctx.out.is_some() {
        out.csv = Some(sample_csv(&f, &ctx.geometry("-2,2,401", 1)?));
    }
    Ok(out)
}

fn corner_value(c: &Option<construct::Corner>) -> Value {
    match c {
        Some(c) => json!({
            "point": c.point.iter().map(|x| num(*x)).collect::<Vec<_>>(),
            "direction": c.direction.iter().map(|x| num(*x)).collect::<Vec<_>>(),
            "gaps": c.gaps.iter().map(|x| num(*x)).collect::<Vec<_>>(),
        }),
        None => json!("no corner found"),
    }
}

fn fm(ctx: &Ctx, m: u32, period: &str) -> Result<Outcome> {
    let k = ctx.inputs.field(&[])?;
    let h = ctx.scalar(&k, period)?;
    if m == 0 || m > codec::MAX_ORDER {
        return Err(malformed(format!("m must be in 1..={}", codec::MAX_ORDER)));
    }
    let f = make_fm(m, &h)?;
    let phi = make_triangle_wave(&h)?;
    let hf = h.to_f64();
    let mut out = Outcome::new(&k);
    out.set("function", codec::encode_function(&f, &[]));
    out.set("m", json!(m));
    lattice_certificate(&mut out, ctx, &f, hf);
    let xs: Vec<f64> = (0..10_000).map(|i| -20.0 * hf + 40.0 * hf * (i as f64 + 0.5) / 10_000.0).collect();
    let magnitude = xs.iter().map(|&x| f.eval(&[x]).norm()).fold(0.0, f64::max);
    let tol = ctx.tol.bound(1e-9, magnitude);
    let to_phi = xs.iter().map(|&x| (f.difference_at(&[x], &[hf], m - 1) - phi.eval(&[x])).norm()).fold(0.0, f64::max);
    out.certificates.add(
        "difference_m_minus_1_is_triangle",
        to_phi <= tol,
        json!({"max_abs": num(to_phi), "tolerance": num(tol)}),
    );
    let vanish = xs.iter().map(|&x| f.difference_at(&[x], &[hf], m).norm()).fold(0.0, f64::max);
    out.certificates.add(
        "m_fold_difference_vanishes",
        vanish <= tol,
        json!({"max_abs": num(vanish), "tolerance": num(tol)}),
    );
    let corner = corner_witness(&f, &[(-2.5 * hf, 2.5 * hf)], &[]);
    out.certificates.add("corner_witness", corner.is_some(), corner_value(&corner));
    if ctx.out.is_some() {
        out.csv = Some(sample_csv(&f, &ctx.geometry("-5,5,1001", 1)?));
    }
    Ok(out)
}

fn random_shift(rng: &mut ChaCha8Rng, k: &Arc<NumberField>, d: usize) -> FieldVector {
    let theta = AlgebraicScalar::theta(k);
    (0..d)
        .map(|_| {
            let a = AlgebraicScalar::from_ratio(k, rng.gen_range(-20..=20), rng.gen_range(1..=20));
            let b = AlgebraicScalar::from_ratio(k, rng.gen_range(-20..=20), rng.gen_range(1..=20));
            &a + &(&b * &theta)
        })
        .collect()
}

fn prop7(ctx: &Ctx, generators: &str, m: u32, e: Option<&str>, hyperplane: Option<&str>) -> Result<Outcome> {
    let gdoc = ctx.inputs.read(generators)?;
    let edoc = e.map(|e| ctx.inputs.read(e)).transpose()?;
    let hdoc = hyperplane.map(|h| ctx.inputs.read(h)).transpose()?;
    let mut docs = vec![&gdoc];
    docs.extend(edoc.iter().chain(hdoc.iter()));
    let k = ctx.inputs.field(&docs)?;
    if m == 0 || m > codec::MAX_ORDER {
        return Err(malformed(format!("m must be in 1..={}", codec::MAX_ORDER)));
    }
    let gens = vectors(&k, part(&gdoc, "generators"))?;
    let c = group_closure(&gens)?;
    let frame = match &hdoc {
        Some(h) => frame_with_hyperplane(&c, &vectors(&k, part(h, "hyperplane"))?)?,
        None => frame_build(&c)?,
    };
    let e = match &edoc {
        Some(doc) => codec::decode_exp_poly(&k, part(doc, "e"))?,
        None => ExpPolynomial::zero(&k, c.dim),
    };
    let p = make_prop7_phi(&frame, &e, m)?;
    let geometry = ctx.geometry("-1,1,41", c.dim)?;
    let cert = certify_prop7(&p, &frame, &gens, &geometry)?;

    let mut out = Outcome::new(&k);
    out.set("function", codec::encode_function(&p.phi, &gens));
    out.set("h_space", codec::encode_subspace(&p.h_space));
    out.set("closure", codec::encode_closure(&c));
    out.set("frame", codec::encode_frame(&frame, &gens));
    out.set("lattice_step", codec::encode_vector(&frame.lattice_step()));
    out.set("orders", encode_steps(&gens.iter().map(|g| (g.clone(), m)).collect::<Vec<_>>()));
    out.set("m", json!(m));

    out.certificates.add("h_invariance", cert.invariance.iter().all(|b| *b), json!(cert.invariance));
    let magnitude = GridFunction::sample(geometry.clone(), |x| p.phi.eval(x)).max_abs();
    let tol = ctx.tol.bound(1e-8, magnitude);
    out.certificates.add(
        "phi_difference_membership",
        cert.membership_residuals.iter().all(|r| *r <= tol),
        json!({"residuals": cert.membership_residuals.iter().map(|r| num(*r)).collect::<Vec<_>>(), "tolerance": num(tol), "grid_points": geometry.len()}),
    );
    out.certificates.add("corner_witness", cert.corner.is_some(), corner_value(&cert.corner));

    let hull = FunctionSubspace::span(&k, c.dim, &p.e_hull)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut closed = true;
    for _ in 0..20 {
        closed &= hull.contains(&e.translate(&random_shift(&mut rng, &k, c.dim))?);
    }
    out.certificates.add("hull_translation_closed", closed, json!({"shifts": 20, "seed": ctx.seed}));
    frame_certificates(&mut out, &c, &frame);
    if ctx.out.is_some() {
        out.csv = Some(sample_csv(&p.phi, &geometry));
    }
    Ok(out)
}

fn verify_grid(ctx: &Ctx, function: &str, op: &str) -> Result<Outcome> {
    let doc = ctx.inputs.read(function)?;
    let k = ctx.inputs.field(&[&doc])?;
    let f = codec::decode_function(&k, part(&doc, "function"))?;
    let specs = parse_op_string(op)?;
    if specs[0].h.len() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), found: specs[0].h.len() });
    }
    let operator = codec::op_string_operator(&k, &specs)?;
    let geometry = ctx.geometry(if f.dim() == 1 { "-20,20,4001" } else { "-2,2,41" }, f.dim())?;
    let samples = GridFunction::sample(geometry.clone(), |x| f.eval(x));
    let magnitude = samples.max_abs();
    let residual = operator.apply_grid(&samples)?;
    let max_residual = residual.max_abs();
    let present = residual.present();
    let tol = ctx.tol.bound(1e-9, magnitude);
    let mut out = Outcome::new(&k);
    out.set("max_residual", num(max_residual));
    out.set("magnitude", num(magnitude));
    out.set("tolerance", num(tol));
    out.set("points", json!(geometry.len()));
    out.set("present", json!(present));
    out.set("grid", codec::encode_grid(&geometry));
    out.certificates.add("residual_within_tolerance", present > 0 && max_residual <= tol, json!({"operator": op}));
    if ctx.out.is_some() {
        let rows = (0..geometry.len())
            .filter_map(|i| {
                residual.values[i].map(|v| {
                    let mut r = geometry.point(i);
                    r.extend([v.re, v.im]);
                    r
                })
            })
            .collect();
        let mut header = coordinate_header(geometry.dim());
        header.extend(["re".to_string(), "im".to_string()]);
        out.csv = Some(Csv {
            header,
            rows,
            sidecar: json!({"grid": codec::encode_grid(&geometry), "columns": "coordinates, then operator applied to the samples", "operator": op}),
        });
    }
    Ok(out)
}

fn slice_grid(spec: Option<&str>) -> Result<SliceGrid> {
    let g = parse_grid(spec.unwrap_or("-1,1,21"))?;
    let a = &g.axes[0];
    Ok(SliceGrid { min: a.point(0), max: a.point(a.n - 1), n: a.n })
}

fn fit_cosets(
    ctx: &Ctx,
    function: &str,
    closure: Option<&str>,
    lambdas: Option<&str>,
    space: Option<&str>,
    orders: Option<&str>,
) -> Result<Outcome> {
    let doc = ctx.inputs.read(function)?;
    let read = |arg: Option<&str>| arg.map(|a| ctx.inputs.read(a)).transpose();
    let (cdoc, ldoc, sdoc, odoc) = (read(closure)?, read(lambdas)?, read(space)?, read(orders)?);
    let mut docs = vec![&doc];
    docs.extend(cdoc.iter().chain(ldoc.iter()).chain(sdoc.iter()).chain(odoc.iter()));
    let k = ctx.inputs.field(&docs)?;
    let from_doc = |key: &str, flag: &str| {
        doc.get(key).ok_or_else(|| malformed(format!("missing --{flag} and the function document has no {key:?}")))
    };

    let f = codec::decode_function(&k, part(&doc, "function"))?;
    let c = match &cdoc {
        Some(v) => codec::decode_closure(&k, part(v, "closure"))?,
        None => codec::decode_closure(&k, from_doc("closure", "closure")?)?,
    };
    let h = match &sdoc {
        Some(v) => codec::decode_subspace(&k, part(v, "space"))?,
        None => codec::decode_subspace(&k, from_doc("h_space", "space")?)?,
    };
    let orders = match (&odoc, doc.get("orders")) {
        (Some(v), _) => steps_with_orders(&k, part(v, "orders"))?,
        (None, Some(v)) => steps_with_orders(&k, v)?,
        (None, None) => c.generators.iter().map(|g| (g.clone(), 1)).collect(),
    };
    let lambdas = match (&ldoc, doc.get("lattice_step")) {
        (Some(v), _) => vectors(&k, part(v, "lambdas"))?,
        (None, Some(step)) => vec![vector::zeros(&k, c.dim), codec::decode_vector(&k, step)?],
        (None, None) => std::iter::once(vector::zeros(&k, c.dim)).chain(c.lambda_basis.iter().cloned()).collect(),
    };
    let fit = coset_fit(&f, &c, &orders, &h, &lambdas, slice_grid(ctx.grid.as_deref())?)?;

    let first: Vec<Complex64> = fit.heldout_points.iter().map(|x| fit.slices[0].eval(x)).collect();
    let magnitude = first.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tol = ctx.tol.bound(1e-8, magnitude);
    let mut out = Outcome::new(&k);
    let mut heldout_ok = true;
    let mut constant_ok = true;
    let mut slices = Vec::new();
    let mut columns: Vec<Vec<Complex64>> = Vec::new();
    for s in &fit.slices {
        let values: Vec<Complex64> = fit.heldout_points.iter().map(|x| s.eval(x)).collect();
        let diffs: Vec<Complex64> = values.iter().zip(&first).map(|(a, b)| a - b).collect();
        let mean = diffs.iter().sum::<Complex64>() / diffs.len().max(1) as f64;
        let spread = diffs.iter().map(|d| (d - mean).norm()).fold(0.0, f64::max);
        heldout_ok &= s.heldout_residual <= tol;
        constant_ok &= spread <= tol;
        slices.push(json!({
            "lambda": codec::encode_vector(&s.lambda),
            "coefficients": s.coefficients.iter().map(|z| complex(*z)).collect::<Vec<_>>(),
            "rank": s.rank,
            "fit_residual": num(s.fit_residual),
            "heldout_residual": num(s.heldout_residual),
            "offset_from_first": complex(mean),
            "offset_spread": num(spread),
        }));
        columns.push(values);
    }
    out.set("slices", Value::Array(slices));
    out.set("basis", Value::Array(fit.slices[0].basis.iter().map(codec::encode_exp_poly).collect()));
    out.set("h_tilde_dim", json!(fit.h_tilde_dim));
    out.set("kernel_dim", json!(fit.kernel_dim));
    out.set("kernel_steps", encode_steps(&fit.kernel_steps));
    out.set("grid_points", json!(fit.grid_points));
    out.set("heldout_points", json!(fit.heldout_points.len()));
    out.set("tolerance", num(tol));
    out.certificates.add("heldout_residual_within_tolerance", heldout_ok, Value::Null);
    out.certificates.add("slices_differ_by_constant", constant_ok, Value::Null);
    if ctx.out.is_some() {
        let mut header = coordinate_header(c.dim);
        for j in 0..columns.len() {
            header.extend([format!("re_{j}"), format!("im_{j}")]);
        }
        let rows = fit
            .heldout_points
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let mut r = x.clone();
                for col in &columns {
                    r.extend([col[i].re, col[i].im]);
                }
                r
            })
            .collect();
        out.csv = Some(Csv {
            header,
            rows,
            sidecar: json!({"columns": "held-out point, then one (re, im) pair per lambda in input order", "lambdas": lambdas.iter().map(|l| codec::encode_vector(l)).collect::<Vec<_>>()}),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_shifts_are_seeded() {
        let k = NumberField::sqrt(2).unwrap();
        let a = random_shift(&mut ChaCha8Rng::seed_from_u64(7), &k, 2);
        let b = random_shift(&mut ChaCha8Rng::seed_from_u64(7), &k, 2);
        assert_eq!(a, b);
    }

    #[test]
    fn tolerance_policy() {
        let t = Tolerance { atol: None, rtol: None };
        assert_eq!(t.bound(1e-8, 1.0), 1e-8);
        let explicit = Tolerance { atol: Some(1e-14), rtol: Some(0.0) };
        assert_eq!(explicit.bound(1e-8, 1.0), 1e-14);
    }

    #[test]
    fn slice_grid_default() {
        let g = slice_grid(None).unwrap();
        assert_eq!((g.min, g.max, g.n), (-1.0, 1.0, 21));
    }
}

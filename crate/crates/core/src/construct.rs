//! Evaluable function trees: triangle waves, lattice antidifferences, the
//! functions f_m, and the coset construction φ(z) = e(P_Ṽ z) + f_m(s(z)/r),
//! together with the numerical certificates around them.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exppoly::{CompiledExpPoly, ExpPolynomial};
use crate::groups::HyperplaneFrame;
use crate::numeric::least_squares;
use crate::opalg::{GridFunction, GridGeometry, TranslationPolynomial};
use crate::scalar::{AlgebraicScalar, ComplexAlgebraic, ExpCoefficient, NumberField};
use crate::subspace::FunctionSubspace;
use crate::vector::{self, FieldVector};

/// Lattice points checked for the antidifference precondition.
pub const LATTICE_CHECK_RANGE: i64 = 50;
pub const LATTICE_TOLERANCE: f64 = 1e-10;
/// Antidifferences evaluate to NaN beyond this lattice index.
pub const MAX_LATTICE_INDEX: f64 = 16_777_216.0;

#[derive(Clone, Debug)]
pub enum Node {
    ExpPoly {
        f: ExpPolynomial,
        compiled: CompiledExpPoly,
    },
    /// h-periodic, equal to |x| on [−h/2, h/2].
    TriangleWave {
        h: AlgebraicScalar,
    },
    /// The depth-fold lattice antidifference along hℤ.
    AntiDifference {
        child: Arc<EvaluableFunction>,
        h: AlgebraicScalar,
        depth: u32,
    },
    /// z ↦ child(M z), with M given by rows.
    Project {
        child: Arc<EvaluableFunction>,
        matrix: Vec<FieldVector>,
    },
    Sum(Vec<Arc<EvaluableFunction>>),
    Scale {
        factor: ComplexAlgebraic,
        child: Arc<EvaluableFunction>,
    },
    /// z ↦ e(P_Ṽ z) + inner(s(z)/r).
    CosetBuild {
        frame: Box<HyperplaneFrame>,
        e: ExpPolynomial,
        e_compiled: CompiledExpPoly,
        inner: Arc<EvaluableFunction>,
    },
}

#[derive(Clone, Debug)]
pub struct EvaluableFunction {
    dim: usize,
    field: Arc<NumberField>,
    node: Node,
}

impl EvaluableFunction {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn field(&self) -> &Arc<NumberField> {
        &self.field
    }

    pub fn node(&self) -> &Node {
        &self.node
    }

    pub fn exp_poly(f: ExpPolynomial) -> Self {
        EvaluableFunction { dim: f.dim(), field: f.field().clone(), node: Node::ExpPoly { compiled: f.compile(), f } }
    }

    pub fn sum(children: Vec<EvaluableFunction>) -> Result<Self> {
        let first = children.first().ok_or(Error::EmptyInput("sum"))?;
        let (dim, field) = (first.dim, first.field.clone());
        if let Some(bad) = children.iter().find(|c| c.dim != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: bad.dim });
        }
        Ok(EvaluableFunction { dim, field, node: Node::Sum(children.into_iter().map(Arc::new).collect()) })
    }

    pub fn scale(factor: ComplexAlgebraic, child: EvaluableFunction) -> Self {
        EvaluableFunction {
            dim: child.dim,
            field: child.field.clone(),
            node: Node::Scale { factor, child: Arc::new(child) },
        }
    }

    /// z ↦ child(M z) for a `child.dim × d` matrix.
    pub fn project(child: EvaluableFunction, matrix: Vec<FieldVector>) -> Result<Self> {
        if matrix.len() != child.dim {
            return Err(Error::DimensionMismatch { expected: child.dim, found: matrix.len() });
        }
        let dim = matrix.first().map(Vec::len).unwrap_or(0);
        if matrix.iter().any(|r| r.len() != dim) {
            return Err(Error::Malformed("ragged projection matrix".into()));
        }
        Ok(EvaluableFunction {
            dim,
            field: child.field.clone(),
            node: Node::Project { child: Arc::new(child), matrix },
        })
    }

    pub fn coset_build(frame: HyperplaneFrame, e: ExpPolynomial, inner: EvaluableFunction) -> Result<Self> {
        if e.dim() != frame.dim {
            return Err(Error::FrameInvalid(format!("e has dimension {}, frame has {}", e.dim(), frame.dim)));
        }
        if inner.dim != 1 {
            return Err(Error::FrameInvalid("inner function must be univariate".into()));
        }
        Ok(EvaluableFunction {
            dim: frame.dim,
            field: frame.field.clone(),
            node: Node::CosetBuild { e_compiled: e.compile(), e, frame: Box::new(frame), inner: Arc::new(inner) },
        })
    }

    /// Numeric value at a real point.
    pub fn eval(&self, x: &[f64]) -> Complex64 {
        match &self.node {
            Node::ExpPoly { compiled, .. } => compiled.eval(x),
            Node::TriangleWave { h } => Complex64::new(triangle(x[0], h.to_f64()), 0.0),
            Node::AntiDifference { child, h, depth } => {
                let h = h.to_f64();
                let k = (x[0] / h).floor();
                if k.is_nan() || k.abs() > MAX_LATTICE_INDEX {
                    return Complex64::new(f64::NAN, f64::NAN);
                }
                let x0 = x[0] - k * h;
                antidifference_at(k as i64, *depth, |j| child.eval(&[x0 + j as f64 * h]))
            }
            Node::Project { child, matrix } => {
                let y: Vec<f64> =
                    matrix.iter().map(|row| row.iter().zip(x).map(|(a, b)| a.to_f64() * b).sum()).collect();
                child.eval(&y)
            }
            Node::Sum(children) => children.iter().map(|c| c.eval(x)).sum(),
            Node::Scale { factor, child } => factor.to_c64() * child.eval(x),
            Node::CosetBuild { frame, e_compiled, inner, .. } => {
                let (p, s) = frame.project_f64(x);
                e_compiled.eval(&p) + inner.eval(&[s / frame.r.to_f64()])
            }
        }
    }

    /// Exact value at a field point.
    pub fn eval_exact(&self, x: &[AlgebraicScalar]) -> Result<ExpCoefficient> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        Ok(match &self.node {
            Node::ExpPoly { f, .. } => f.eval_exact(x)?,
            Node::TriangleWave { h } => {
                let shift = x[0].div(h)?.try_add(&AlgebraicScalar::from_ratio(h.field(), 1, 2))?;
                let k = AlgebraicScalar::from_rational(h.field(), shift.floor().into());
                let y = &x[0] - &(&k * h);
                ExpCoefficient::constant(ComplexAlgebraic::real(y.abs()))
            }
            Node::AntiDifference { child, h, depth } => {
                let k = x[0].div(h)?.floor();
                let kf = AlgebraicScalar::from_rational(h.field(), k.clone().into());
                let x0 = &x[0] - &(&kf * h);
                let k: i64 = i64::try_from(k).map_err(|_| Error::Internal("lattice index overflow".into()))?;
                let mut err = None;
                let v = antidifference_generic(
                    k,
                    *depth,
                    ExpCoefficient::zero(&self.field),
                    |x, y| x + y,
                    |x, y| x - y,
                    |j| {
                        let pt = &x0 + &AlgebraicScalar::from_int(h.field(), j).try_mul(h).expect("same field");
                        child.eval_exact(&[pt]).unwrap_or_else(|e| {
                            err = Some(e);
                            ExpCoefficient::zero(&self.field)
                        })
                    },
                );
                if let Some(e) = err {
                    return Err(e);
                }
                v
            }
            Node::Project { child, matrix } => child.eval_exact(&vector::mat_vec(matrix, x))?,
            Node::Sum(children) => {
                let mut acc = ExpCoefficient::zero(&self.field);
                for c in children {
                    acc = &acc + &c.eval_exact(x)?;
                }
                acc
            }
            Node::Scale { factor, child } => child.eval_exact(x)?.scale(factor),
            Node::CosetBuild { frame, e, inner, .. } => {
                let (p, s) = frame.project(x);
                &e.eval_exact(&p)? + &inner.eval_exact(&[s.div(&frame.r)?])?
            }
        })
    }

    /// Samples on a grid.
    pub fn sample(&self, geometry: GridGeometry) -> GridFunction {
        GridFunction::sample(geometry, |x| self.eval(x))
    }

    /// (Δ_h^m self)(x) by direct summation.
    pub fn difference_at(&self, x: &[f64], h: &[f64], m: u32) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut binom = 1.0;
        for k in 0..=m {
            if k > 0 {
                binom = binom * (m - k + 1) as f64 / k as f64;
            }
            let sign = if (m - k).is_multiple_of(2) { 1.0 } else { -1.0 };
            let pt: Vec<f64> = x.iter().zip(h).map(|(a, b)| a + k as f64 * b).collect();
            acc += sign * binom * self.eval(&pt);
        }
        acc
    }
}

fn triangle(x: f64, h: f64) -> f64 {
    (x - h * (x / h + 0.5).floor()).abs()
}

/// depth-fold antidifference of the sequence j ↦ a(j) at lattice index k.
/// One fold maps a to b with b_0 = 0 and b_{j+1} = b_j + a_j.
fn antidifference_generic<T: Clone>(
    k: i64,
    depth: u32,
    zero: T,
    add: impl Fn(&T, &T) -> T,
    sub: impl Fn(&T, &T) -> T,
    mut a: impl FnMut(i64) -> T,
) -> T {
    if depth == 0 {
        return a(k);
    }
    let lo = k.min(0);
    let hi = k.max(0);
    let mut seq: Vec<T> = (lo..=hi).map(&mut a).collect();
    let origin = (-lo) as usize;
    for _ in 0..depth {
        let mut next = vec![zero.clone(); seq.len()];
        for j in origin..seq.len() - 1 {
            next[j + 1] = add(&next[j], &seq[j]);
        }
        for j in (1..=origin).rev() {
            next[j - 1] = sub(&next[j], &seq[j - 1]);
        }
        seq = next;
    }
    seq[(k - lo) as usize].clone()
}

fn antidifference_at(k: i64, depth: u32, a: impl FnMut(i64) -> Complex64) -> Complex64 {
    antidifference_generic(k, depth, Complex64::new(0.0, 0.0), |x, y| x + y, |x, y| x - y, a)
}

fn check_period(h: &AlgebraicScalar) -> Result<()> {
    if h.sign() <= 0 {
        return Err(Error::NonpositivePeriod);
    }
    let hf = h.to_f64();
    if !hf.is_normal() || !(1e-12..=1e12).contains(&hf) {
        return Err(Error::Malformed(format!("period {hf:e} is outside [1e-12, 1e12]")));
    }
    Ok(())
}

/// ϕ with period h: |x| on [−h/2, h/2], extended periodically.
pub fn make_triangle_wave(h: &AlgebraicScalar) -> Result<EvaluableFunction> {
    check_period(h)?;
    Ok(EvaluableFunction { dim: 1, field: h.field().clone(), node: Node::TriangleWave { h: h.clone() } })
}

/// f with f(hℤ) = 0 and Δ_h f = g, for univariate g vanishing on hℤ.
pub fn make_antidifference(g: EvaluableFunction, h: &AlgebraicScalar) -> Result<EvaluableFunction> {
    check_period(h)?;
    if g.dim != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: g.dim });
    }
    let hf = h.to_f64();
    for k in -LATTICE_CHECK_RANGE..=LATTICE_CHECK_RANGE {
        let at = k as f64 * hf;
        let value = g.eval(&[at]).norm();
        if value > LATTICE_TOLERANCE * (1.0 + at.abs()) {
            return Err(Error::LatticeValuesNonzero { at, value });
        }
    }
    let field = g.field.clone();
    let node = match g.node {
        Node::AntiDifference { child, h: inner_h, depth } if inner_h == *h => {
            Node::AntiDifference { child, h: inner_h, depth: depth + 1 }
        }
        node => {
            Node::AntiDifference { child: Arc::new(EvaluableFunction { dim: 1, field, node }), h: h.clone(), depth: 1 }
        }
    };
    Ok(EvaluableFunction { dim: 1, field: g.field, node })
}

/// f_1 = ϕ and f_m = (m−1)-fold antidifference of ϕ, so Δ_h^{m−1} f_m = ϕ
/// and Δ_h^m f_m = 0.
pub fn make_fm(m: u32, h: &AlgebraicScalar) -> Result<EvaluableFunction> {
    if m == 0 {
        return Err(Error::Malformed("f_m needs m ≥ 1".into()));
    }
    let mut f = make_triangle_wave(h)?;
    for _ in 1..m {
        f = make_antidifference(f, h)?;
    }
    Ok(f)
}

/// The coset construction and its translation-invariant companion space.
#[derive(Clone, Debug)]
pub struct Prop7 {
    pub phi: EvaluableFunction,
    /// {b(P_Ṽ z) : b in the translation hull of e}.
    pub h_space: FunctionSubspace,
    /// Hull of e itself, before composing with P_Ṽ.
    pub e_hull: Vec<ExpPolynomial>,
    pub m: u32,
}

/// φ(z) = e(P_Ṽ z) + f_m(s(z)/r) with f_m of unit period.
pub fn make_prop7_phi(frame: &HyperplaneFrame, e: &ExpPolynomial, m: u32) -> Result<Prop7> {
    if frame.r.sign() <= 0 || frame.w.len() != frame.dim || frame.vt_basis.len() + 1 != frame.dim {
        return Err(Error::FrameInvalid("frame data are inconsistent".into()));
    }
    let one = AlgebraicScalar::one(&frame.field);
    let fm = make_fm(m, &one)?;
    let phi = EvaluableFunction::coset_build(frame.clone(), e.clone(), fm)?;
    let proj = frame.projector();
    let e_hull = e.translation_hull();
    let composed = e_hull.iter().map(|b| b.compose_linear(&proj)).collect::<Result<Vec<_>>>()?;
    let h_space = FunctionSubspace::span(&frame.field, frame.dim, &composed)?;
    Ok(Prop7 { phi, h_space, e_hull, m })
}

/// Result of checking the three coset-construction certificates.
#[derive(Clone, Debug)]
pub struct Prop7Certificate {
    /// Δ_{h_k}(H) ⊆ H exactly, per generator.
    pub invariance: Vec<bool>,
    /// Least-squares residual of Δ_{h_k}^m φ against H on the grid.
    pub membership_residuals: Vec<f64>,
    pub corner: Option<Corner>,
}

impl Prop7Certificate {
    pub fn holds(&self, tolerance: f64) -> bool {
        self.invariance.iter().all(|&b| b)
            && self.membership_residuals.iter().all(|&r| r <= tolerance)
            && self.corner.is_some()
    }
}

pub fn certify_prop7(
    p: &Prop7,
    frame: &HyperplaneFrame,
    generators: &[FieldVector],
    geometry: &GridGeometry,
) -> Result<Prop7Certificate> {
    let field = &frame.field;
    let mut invariance = Vec::new();
    for h in generators {
        invariance.push(p.h_space.is_invariant(&TranslationPolynomial::delta(field, h, 1))?);
    }
    let basis: Vec<CompiledExpPoly> = p.h_space.basis().iter().map(ExpPolynomial::compile).collect();
    let points = geometry.points();
    let columns: Vec<Vec<Complex64>> = basis.iter().map(|b| points.par_iter().map(|x| b.eval(x)).collect()).collect();
    let mut membership_residuals = Vec::new();
    for h in generators {
        let hf = vector::to_f64(h);
        let g: Vec<Complex64> = points.par_iter().map(|x| p.phi.difference_at(x, &hf, p.m)).collect();
        let fit = if columns.is_empty() {
            g.iter().map(|v| v.norm()).fold(0.0, f64::max)
        } else {
            least_squares(&columns, &g)?.max_residual
        };
        membership_residuals.push(fit);
    }
    let window: Vec<(f64, f64)> = geometry.axes.iter().map(|a| (a.point(0), a.point(a.n - 1))).collect();
    let corner = corner_witness(&p.phi, &window, &[vector::to_f64(&frame.w)]);
    Ok(Prop7Certificate { invariance, membership_residuals, corner })
}

/// A point where one-sided slopes along `direction` disagree.
#[derive(Clone, Debug, PartialEq)]
pub struct Corner {
    pub point: Vec<f64>,
    pub direction: Vec<f64>,
    /// |forward slope − backward slope| at steps 1e−2, 1e−3, 1e−4.
    pub gaps: [f64; 3],
}

impl Corner {
    /// Gap at the finest step.
    pub fn gap(&self) -> f64 {
        self.gaps[2]
    }
}

pub const CORNER_STEPS: [f64; 3] = [1e-2, 1e-3, 1e-4];
pub const CORNER_MIN_GAP: f64 = 0.1;

fn slope_gap(f: &EvaluableFunction, x: &[f64], u: &[f64], delta: f64) -> f64 {
    let at = |t: f64| -> Complex64 {
        let pt: Vec<f64> = x.iter().zip(u).map(|(a, b)| a + t * b).collect();
        f.eval(&pt)
    };
    let c = at(0.0);
    let fwd = (at(delta) - c) / delta;
    let bwd = (c - at(-delta)) / delta;
    (fwd - bwd).norm()
}

/// Scans lines through the window along the coordinate axes and the extra
/// `directions`, then zooms in on the strongest candidate. Returns a point
/// whose slope gap is at least 0.1 at each of the three certification
/// steps.
pub fn corner_witness(f: &EvaluableFunction, window: &[(f64, f64)], directions: &[Vec<f64>]) -> Option<Corner> {
    let d = f.dim();
    if window.len() != d {
        return None;
    }
    let mut dirs: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            e
        })
        .collect();
    for u in directions {
        let n = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if u.len() == d && n > 0.0 {
            dirs.push(u.iter().map(|x| x / n).collect());
        }
    }
    let center: Vec<f64> = window.iter().map(|(a, b)| 0.5 * (a + b)).collect();
    let offsets = [0.0, 0.237, -0.311];
    let mut best: Option<Corner> = None;
    for u in &dirs {
        for off in offsets {
            let base: Vec<f64> = center.iter().zip(window).map(|(c, (a, b))| c + off * (b - a) * 0.5).collect();
            let Some(reach) = line_reach(&base, u, window) else {
                continue;
            };
            let (lo, hi) = reach;
            let coarse = CORNER_STEPS[0];
            let n = ((hi - lo) / coarse).floor() as i64;
            let mut cand: Option<(f64, f64)> = None;
            for i in 1..n {
                let t = lo + i as f64 * coarse;
                let pt: Vec<f64> = base.iter().zip(u).map(|(a, b)| a + t * b).collect();
                let g = slope_gap(f, &pt, u, coarse);
                if g >= 0.5 * CORNER_MIN_GAP && cand.is_none_or(|(_, bg)| g > bg) {
                    cand = Some((t, g));
                }
            }
            let Some((t0, _)) = cand else {
                continue;
            };
            let t = zoom(f, &base, u, t0, (lo, hi));
            let pt: Vec<f64> = base.iter().zip(u).map(|(a, b)| a + t * b).collect();
            let gaps = CORNER_STEPS.map(|s| slope_gap(f, &pt, u, s));
            let ok = gaps.iter().all(|&g| g >= CORNER_MIN_GAP);
            if ok && best.as_ref().is_none_or(|b| gaps[2] > b.gaps[2]) {
                best = Some(Corner { point: pt, direction: u.clone(), gaps });
            }
        }
        if best.is_some() {
            break;
        }
    }
    best
}

/// Parameter range keeping base + t·u inside the window, shrunk so the
/// coarse stencil also stays inside.
fn line_reach(base: &[f64], u: &[f64], window: &[(f64, f64)]) -> Option<(f64, f64)> {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for ((b, ui), (a, c)) in base.iter().zip(u).zip(window) {
        if ui.abs() < 1e-15 {
            if b < a || b > c {
                return None;
            }
            continue;
        }
        let (t1, t2) = ((a - b) / ui, (c - b) / ui);
        lo = lo.max(t1.min(t2));
        hi = hi.min(t1.max(t2));
    }
    (hi - lo > 4.0 * CORNER_STEPS[0]).then_some((lo, hi))
}

fn zoom(f: &EvaluableFunction, base: &[f64], u: &[f64], t0: f64, range: (f64, f64)) -> f64 {
    let mut t = t0;
    let mut spacing = CORNER_STEPS[0];
    while spacing > 1e-9 {
        let next = spacing / 10.0;
        let mut best = (t, -1.0);
        for i in -20..=20 {
            let s = t + i as f64 * next;
            if s <= range.0 || s >= range.1 {
                continue;
            }
            let pt: Vec<f64> = base.iter().zip(u).map(|(a, b)| a + s * b).collect();
            let g = slope_gap(f, &pt, u, next.max(1e-7));
            if g > best.1 {
                best = (s, g);
            }
        }
        t = best.0;
        spacing = next;
    }
    t
}

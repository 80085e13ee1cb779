#![allow(dead_code)]

use std::sync::Arc;

use deltaclose_core::exppoly::{ExpPolynomial, Frequency, MultiIndex};
use deltaclose_core::opalg::TranslationPolynomial;
use deltaclose_core::scalar::{AlgebraicScalar, ComplexAlgebraic, ExpCoefficient, NumberField};
use deltaclose_core::subspace::FunctionSubspace;
use deltaclose_core::vector::{self, FieldVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn k2() -> Arc<NumberField> {
    NumberField::sqrt(2).unwrap()
}

/// ℚ(∛2).
pub fn cubic() -> Arc<NumberField> {
    NumberField::new(vec![q(-2), q(0), q(0), q(1)], (q(1), q(2))).unwrap()
}

pub fn q(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn qq(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// a + bθ.
pub fn sc(k: &Arc<NumberField>, a: BigRational, b: BigRational) -> AlgebraicScalar {
    let mut coords = vec![BigRational::zero(); k.degree()];
    coords[0] = a;
    if k.degree() > 1 {
        coords[1] = b;
    }
    AlgebraicScalar::from_poly(k, coords)
}

pub fn int(k: &Arc<NumberField>, n: i64) -> AlgebraicScalar {
    AlgebraicScalar::from_int(k, n)
}

pub fn theta(k: &Arc<NumberField>) -> AlgebraicScalar {
    AlgebraicScalar::theta(k)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn small_rational(r: &mut impl Rng, height: i64) -> BigRational {
    qq(r.gen_range(-height..=height), r.gen_range(1..=2))
}

/// a + bθ with small rational a, b; b is zero half the time.
pub fn random_scalar(r: &mut impl Rng, k: &Arc<NumberField>, height: i64) -> AlgebraicScalar {
    let a = small_rational(r, height);
    let b = if r.gen_bool(0.5) { small_rational(r, height) } else { BigRational::zero() };
    sc(k, a, b)
}

pub fn random_nonzero_vector(r: &mut impl Rng, k: &Arc<NumberField>, d: usize, height: i64) -> FieldVector {
    loop {
        let v: FieldVector = (0..d).map(|_| random_scalar(r, k, height)).collect();
        if !vector::is_zero(&v) {
            return v;
        }
    }
}

fn frequency_component(r: &mut impl Rng, k: &Arc<NumberField>) -> ComplexAlgebraic {
    let zero = AlgebraicScalar::zero(k);
    match r.gen_range(0..8) {
        0 | 1 => ComplexAlgebraic::zero(k),
        2 => ComplexAlgebraic::real(int(k, 1)),
        3 => ComplexAlgebraic::real(int(k, -1)),
        4 => ComplexAlgebraic::real(theta(k)),
        5 => ComplexAlgebraic::new(zero, int(k, 1)),
        6 => ComplexAlgebraic::new(sc(k, qq(1, 2), q(0)), int(k, 1)),
        _ => ComplexAlgebraic::new(zero, theta(k)),
    }
}

pub fn random_frequency(r: &mut impl Rng, k: &Arc<NumberField>, d: usize) -> Frequency {
    (0..d).map(|_| frequency_component(r, k)).collect()
}

pub fn random_coefficient(r: &mut impl Rng, k: &Arc<NumberField>) -> ExpCoefficient {
    loop {
        let re = random_scalar(r, k, 3);
        let im = if r.gen_bool(0.3) { random_scalar(r, k, 2) } else { AlgebraicScalar::zero(k) };
        let c = ComplexAlgebraic::new(re, im);
        if !c.is_zero() {
            return ExpCoefficient::constant(c);
        }
    }
}

pub fn random_alpha(r: &mut impl Rng, d: usize, max_degree: u32) -> MultiIndex {
    let total = r.gen_range(0..=max_degree);
    let mut alpha = vec![0u32; d];
    for _ in 0..total {
        alpha[r.gen_range(0..d)] += 1;
    }
    MultiIndex(alpha)
}

/// Up to `max_freqs` frequencies, each carrying up to three monomials of
/// total degree ≤ `max_degree`.
pub fn random_exp_poly(
    r: &mut impl Rng,
    k: &Arc<NumberField>,
    d: usize,
    max_freqs: usize,
    max_degree: u32,
) -> ExpPolynomial {
    let mut f = ExpPolynomial::zero(k, d);
    let nf = r.gen_range(1..=max_freqs);
    for _ in 0..nf {
        let freq = random_frequency(r, k, d);
        for _ in 0..r.gen_range(1..=3) {
            let alpha = random_alpha(r, d, max_degree);
            f.add_term(freq.clone(), alpha, random_coefficient(r, k));
        }
    }
    f
}

/// Σ_j C(n,j)(−1)^{n−j} τ_{j·y}, built term by term.
pub fn binomial_power(k: &Arc<NumberField>, y: &[AlgebraicScalar], n: u32) -> TranslationPolynomial {
    let mut terms = Vec::new();
    let mut c = BigInt::one();
    for j in 0..=n {
        if j > 0 {
            c = c * BigInt::from(n - j + 1) / BigInt::from(j);
        }
        let signed = if (n - j) % 2 == 1 { -c.clone() } else { c.clone() };
        terms.push((
            vector::scale_int(y, j as i64),
            ExpCoefficient::one(k).scale_rational(&BigRational::from_integer(signed)),
        ));
    }
    TranslationPolynomial::from_terms(k, y.len(), terms).unwrap()
}

/// Closure of span(V) under the operators by repeated application to a
/// growing generator list.
pub fn saturation_oracle(v: &FunctionSubspace, ops: &[TranslationPolynomial]) -> FunctionSubspace {
    let field = v.field().clone();
    let d = v.dim_ambient();
    let mut gens = v.basis();
    let mut dim = v.dim();
    loop {
        let mut next = gens.clone();
        for g in &gens {
            for op in ops {
                next.push(op.apply(g).unwrap());
            }
        }
        let span = FunctionSubspace::span(&field, d, &next).unwrap();
        if span.dim() == dim {
            return span;
        }
        dim = span.dim();
        gens = span.basis();
    }
}

/// Rank of a rational matrix by plain Gaussian elimination.
pub fn rational_rank(mut rows: Vec<Vec<BigRational>>) -> usize {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..ncols {
        let Some(p) = (rank..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(rank, p);
        let prow = rows[rank].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != rank && !row[c].is_zero() {
                let f = &row[c] / &prow[c];
                for (x, p) in row[c..ncols].iter_mut().zip(&prow[c..ncols]) {
                    *x -= p * &f;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Coordinates of a scalar times θ^i, flattened over ℚ.
fn shifted_coords(x: &AlgebraicScalar, i: usize) -> Vec<BigRational> {
    let k = x.field();
    let mut y = x.clone();
    for _ in 0..i {
        y = &y * &AlgebraicScalar::theta(k);
    }
    y.coords().to_vec()
}

/// Field rank of the generator matrix, and rational functionals on ℚ^t whose
/// common kernel is ℚ^t ∩ (its column space over the field).
fn rational_trace_annihilator(generators: &[FieldVector]) -> (usize, Vec<Vec<BigRational>>) {
    let k = generators[0][0].field().clone();
    let t = generators.len();
    let d = generators[0].len();
    let deg = k.degree();
    // ℚ-spanning set of the field column space, as vectors in ℚ^{t·deg}.
    let mut span = Vec::new();
    for j in 0..d {
        for i in 0..deg {
            let mut v = Vec::with_capacity(t * deg);
            for g in generators {
                v.extend(shifted_coords(&g[j], i));
            }
            span.push(v);
        }
    }
    let field_rank = rational_rank(span.clone()) / deg;
    let width = t * deg;
    let mut m = span;
    let pivots = rref(&mut m, width);
    // x is in the row space iff x_f = Σ_p x_p·m[p][f] at every free column f.
    let free: Vec<usize> = (0..width).filter(|c| !pivots.contains(c)).collect();
    let mut annihilator = Vec::new();
    for &f in &free {
        let mut phi = vec![BigRational::zero(); width];
        phi[f] = BigRational::one();
        for (row, &p) in pivots.iter().enumerate() {
            phi[p] = -m[row][f].clone();
        }
        let restricted: Vec<BigRational> = (0..t).map(|s| phi[s * deg].clone()).collect();
        annihilator.push(restricted);
    }
    (field_rank, annihilator)
}

fn rref(m: &mut [Vec<BigRational>], ncols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut rank = 0;
    for c in 0..ncols {
        let Some(p) = (rank..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(rank, p);
        let pivot = m[rank][c].clone();
        for x in m[rank][..ncols].iter_mut() {
            *x /= &pivot;
        }
        let prow = m[rank].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i != rank && !row[c].is_zero() {
                let f = row[c].clone();
                for (x, p) in row[..ncols].iter_mut().zip(&prow[..ncols]) {
                    *x -= p * &f;
                }
            }
        }
        pivots.push(c);
        rank += 1;
    }
    pivots
}

/// Verdict of the dual search: the group is not dense iff the generators
/// span less than ℝ^d or some nonzero integer vector n with |n_i| ≤
/// `height` equals (⟨u,h_k⟩)_k for a real u.
#[derive(Debug)]
pub struct DualityVerdict {
    pub field_rank: usize,
    pub relation: Option<Vec<i64>>,
}

impl DualityVerdict {
    pub fn dense(&self, d: usize) -> bool {
        self.field_rank == d && self.relation.is_none()
    }
}

pub fn duality_search(generators: &[FieldVector], height: i64) -> DualityVerdict {
    let t = generators.len();
    let (field_rank, ann) = rational_trace_annihilator(generators);
    // Clear denominators row by row so the search runs in machine integers.
    let rows: Vec<Vec<i128>> = ann
        .iter()
        .map(|row| {
            let lcm = row.iter().fold(BigInt::one(), |acc, x| num_integer::Integer::lcm(&acc, x.denom()));
            row.iter()
                .map(|x| i128::try_from((x * BigRational::from_integer(lcm.clone())).to_integer()).unwrap())
                .collect()
        })
        .collect();
    let mut n = vec![-height; t];
    loop {
        if n.iter().any(|&x| x != 0)
            && rows.iter().all(|row| row.iter().zip(&n).map(|(a, &b)| a * b as i128).sum::<i128>() == 0)
        {
            return DualityVerdict { field_rank, relation: Some(n) };
        }
        let mut i = 0;
        loop {
            if i == t {
                return DualityVerdict { field_rank, relation: None };
            }
            n[i] += 1;
            if n[i] <= height {
                break;
            }
            n[i] = -height;
            i += 1;
        }
    }
}

pub fn dense_steps_1d(k: &Arc<NumberField>, m: &[u32; 2]) -> Vec<(FieldVector, u32)> {
    vec![(vec![int(k, 1)], m[0]), (vec![theta(k)], m[1])]
}

pub fn dense_steps_2d(k: &Arc<NumberField>, m: &[u32; 4]) -> Vec<(FieldVector, u32)> {
    let z = AlgebraicScalar::zero(k);
    vec![
        (vec![int(k, 1), z.clone()], m[0]),
        (vec![theta(k), z.clone()], m[1]),
        (vec![z.clone(), int(k, 1)], m[2]),
        (vec![z, theta(k)], m[3]),
    ]
}

pub fn max_abs_f64(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, f64::max)
}

/// V with frequencies {0, λ}, operators each nilpotent on such spaces or
/// arbitrary when V is a translation hull, and powers satisfying the
/// invariance precondition.
pub fn random_diamond_instance(r: &mut impl Rng) -> (FunctionSubspace, Vec<(TranslationPolynomial, u32)>) {
    let k = k2();
    let d = r.gen_range(1..=2);
    let lambda = loop {
        let l = random_frequency(r, &k, d);
        if l.iter().any(|c| !c.is_zero()) {
            break l;
        }
    };
    let zero = vec![ComplexAlgebraic::zero(&k); d];
    let mut gens = Vec::new();
    for _ in 0..r.gen_range(1..=3) {
        let mut f = ExpPolynomial::zero(&k, d);
        for freq in [&zero, &lambda] {
            if r.gen_bool(0.7) {
                f.add_term(freq.clone(), random_alpha(r, d, 2), random_coefficient(r, &k));
            }
        }
        if !f.is_zero() {
            gens.push(f);
        }
    }
    if gens.is_empty() {
        gens.push(ExpPolynomial::monomial(&k, lambda.clone(), MultiIndex::zero(d), ExpCoefficient::one(&k)));
    }
    let hull = r.gen_bool(0.4);
    let v = if hull {
        let all: Vec<ExpPolynomial> = gens.iter().flat_map(|g| g.translation_hull()).collect();
        FunctionSubspace::span(&k, d, &all).unwrap()
    } else {
        FunctionSubspace::span(&k, d, &gens).unwrap()
    };
    let mut ops = Vec::new();
    for _ in 0..r.gen_range(1..=3) {
        let h = random_nonzero_vector(r, &k, d, 2);
        let (op, s) = if hull {
            let terms: Vec<(FieldVector, ExpCoefficient)> = (0..r.gen_range(1..=2))
                .map(|_| (random_nonzero_vector(r, &k, d, 2), random_coefficient(r, &k)))
                .collect();
            (TranslationPolynomial::from_terms(&k, d, terms).unwrap(), r.gen_range(1..=2))
        } else {
            let e = ExpCoefficient::exp(deltaclose_core::scalar::complex_dot(&lambda, &h));
            let shift = TranslationPolynomial::tau(&k, h.clone())
                .sub(&TranslationPolynomial::identity(&k, d).scale(&e))
                .unwrap();
            let op = TranslationPolynomial::delta(&k, &h, 1).compose(&shift).unwrap();
            let s = r.gen_range(1..=4);
            let s = if v.is_invariant(&op.pow(s)).unwrap() { s } else { 3 };
            (op, s)
        };
        ops.push((op, s));
    }
    (v, ops)
}

/// Generators in ℚ(√2)^d, d ≤ 2, t ≤ 3, with coordinates a + bθ for
/// a, b ∈ {−1, 0, 1}, which keeps integer relations within the duality
/// search's height bound.
pub fn random_group_instance(r: &mut impl Rng) -> Vec<FieldVector> {
    let k = k2();
    let d = r.gen_range(1..=2);
    let t = r.gen_range(1..=3);
    (0..t)
        .map(|_| loop {
            let v: FieldVector = (0..d).map(|_| sc(&k, q(r.gen_range(-1..=1)), q(r.gen_range(-1..=1)))).collect();
            if !vector::is_zero(&v) {
                break v;
            }
        })
        .collect()
}

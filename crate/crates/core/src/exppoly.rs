//! Exponential polynomials Σ p_j(x) e^{λ_j·x} on ℝ^d with coefficients in
//! the exponential group ring, so that translations stay inside the class.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::linalg::Echelon;
use crate::scalar::{complex_dot, AlgebraicScalar, ComplexAlgebraic, ExpCoefficient, NumberField, NumericValue};
use crate::vector::FieldVector;

/// Exponent vector of a monomial. Ordered by total degree, then
/// lexicographically.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(d: usize) -> Self {
        MultiIndex(vec![0; d])
    }

    pub fn unit(d: usize, i: usize) -> Self {
        let mut a = vec![0; d];
        a[i] = 1;
        MultiIndex(a)
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// All β with β ≤ self componentwise, in graded order.
    pub fn below(&self) -> Vec<MultiIndex> {
        let mut out = vec![Vec::new()];
        for &a in &self.0 {
            out = out
                .into_iter()
                .flat_map(|prefix: Vec<u32>| {
                    (0..=a).map(move |b| {
                        let mut p = prefix.clone();
                        p.push(b);
                        p
                    })
                })
                .collect();
        }
        let mut out: Vec<MultiIndex> = out.into_iter().map(MultiIndex).collect();
        out.sort();
        out
    }

    /// All multi-indices of dimension `d` with total degree ≤ `deg`.
    pub fn up_to_degree(d: usize, deg: u32) -> Vec<MultiIndex> {
        MultiIndex(vec![deg; d]).below().into_iter().filter(|a| a.total() <= deg).collect()
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total().cmp(&other.total()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub type Frequency = Vec<ComplexAlgebraic>;

/// A basis label x^α e^{λ·x}. Ordered by (|α|, α, λ).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Atom {
    pub alpha: MultiIndex,
    pub freq: Frequency,
}

pub fn zero_frequency(field: &Arc<NumberField>, d: usize) -> Frequency {
    vec![ComplexAlgebraic::zero(field); d]
}

pub fn is_zero_frequency(freq: &[ComplexAlgebraic]) -> bool {
    freq.iter().all(ComplexAlgebraic::is_zero)
}

type Poly = BTreeMap<MultiIndex, ExpCoefficient>;

#[derive(Clone)]
pub struct ExpPolynomial {
    field: Arc<NumberField>,
    dim: usize,
    terms: BTreeMap<Frequency, Poly>,
}

pub(crate) fn binomial(n: u32, k: u32) -> BigInt {
    num_integer::binomial(BigInt::from(n), BigInt::from(k))
}

fn real_scalar(field: &Arc<NumberField>, q: BigRational) -> ComplexAlgebraic {
    ComplexAlgebraic::real(AlgebraicScalar::from_rational(field, q))
}

impl ExpPolynomial {
    pub fn zero(field: &Arc<NumberField>, dim: usize) -> Self {
        ExpPolynomial { field: field.clone(), dim, terms: BTreeMap::new() }
    }

    pub fn constant(field: &Arc<NumberField>, dim: usize, c: ExpCoefficient) -> Self {
        Self::monomial(field, zero_frequency(field, dim), MultiIndex::zero(dim), c)
    }

    pub fn one(field: &Arc<NumberField>, dim: usize) -> Self {
        Self::constant(field, dim, ExpCoefficient::one(field))
    }

    pub fn monomial(field: &Arc<NumberField>, freq: Frequency, alpha: MultiIndex, c: ExpCoefficient) -> Self {
        assert_eq!(freq.len(), alpha.0.len(), "frequency and multi-index dimensions differ");
        let mut out = Self::zero(field, freq.len());
        out.add_term(freq, alpha, c);
        out
    }

    /// x^α with unit coefficient.
    pub fn power(field: &Arc<NumberField>, alpha: &[u32]) -> Self {
        let d = alpha.len();
        Self::monomial(field, zero_frequency(field, d), MultiIndex(alpha.to_vec()), ExpCoefficient::one(field))
    }

    /// The coordinate function x_i.
    pub fn variable(field: &Arc<NumberField>, dim: usize, i: usize) -> Self {
        Self::monomial(field, zero_frequency(field, dim), MultiIndex::unit(dim, i), ExpCoefficient::one(field))
    }

    /// e^{λ·x}.
    pub fn exponential(field: &Arc<NumberField>, freq: Frequency) -> Self {
        let d = freq.len();
        Self::monomial(field, freq, MultiIndex::zero(d), ExpCoefficient::one(field))
    }

    /// The linear form x ↦ a·x.
    pub fn linear_form(field: &Arc<NumberField>, a: &[AlgebraicScalar]) -> Self {
        let d = a.len();
        let mut out = Self::zero(field, d);
        for (i, ai) in a.iter().enumerate() {
            if !ai.is_zero() {
                out.add_term(
                    zero_frequency(field, d),
                    MultiIndex::unit(d, i),
                    ExpCoefficient::constant(ComplexAlgebraic::real(ai.clone())),
                );
            }
        }
        out
    }

    pub fn from_atoms<I>(field: &Arc<NumberField>, dim: usize, atoms: I) -> Self
    where
        I: IntoIterator<Item = (Atom, ExpCoefficient)>,
    {
        let mut out = Self::zero(field, dim);
        for (a, c) in atoms {
            out.add_term(a.freq, a.alpha, c);
        }
        out
    }

    pub fn field(&self) -> &Arc<NumberField> {
        &self.field
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of stored atoms.
    pub fn len(&self) -> usize {
        self.terms.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    pub fn frequencies(&self) -> impl Iterator<Item = &Frequency> {
        self.terms.keys()
    }

    pub fn blocks(&self) -> impl Iterator<Item = (&Frequency, &BTreeMap<MultiIndex, ExpCoefficient>)> {
        self.terms.iter()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Frequency, &MultiIndex, &ExpCoefficient)> {
        self.terms.iter().flat_map(|(f, p)| p.iter().map(move |(a, c)| (f, a, c)))
    }

    pub fn atoms(&self) -> impl Iterator<Item = (Atom, &ExpCoefficient)> {
        self.terms().map(|(f, a, c)| (Atom { alpha: a.clone(), freq: f.clone() }, c))
    }

    pub fn coefficient(&self, atom: &Atom) -> Option<&ExpCoefficient> {
        self.terms.get(&atom.freq)?.get(&atom.alpha)
    }

    /// Largest atom in the (|α|, α, λ) order.
    pub fn leading_atom(&self) -> Option<Atom> {
        self.atoms().map(|(a, _)| a).max()
    }

    /// Total degree of the polynomial attached to `freq`, if present.
    pub fn degree_at(&self, freq: &[ComplexAlgebraic]) -> Option<u32> {
        self.terms.get(freq).map(|p| p.keys().map(MultiIndex::total).max().unwrap_or(0))
    }

    /// The λ-component p_λ(x) e^{λ·x}.
    pub fn component(&self, freq: &[ComplexAlgebraic]) -> Self {
        let mut out = Self::zero(&self.field, self.dim);
        if let Some(p) = self.terms.get(freq) {
            out.terms.insert(freq.to_vec(), p.clone());
        }
        out
    }

    pub fn add_term(&mut self, freq: Frequency, alpha: MultiIndex, c: ExpCoefficient) {
        if c.is_zero() {
            return;
        }
        let poly = self.terms.entry(freq.clone()).or_default();
        match poly.get_mut(&alpha) {
            Some(existing) => {
                let sum = &*existing + &c;
                if sum.is_zero() {
                    poly.remove(&alpha);
                    if poly.is_empty() {
                        self.terms.remove(&freq);
                    }
                } else {
                    *existing = sum;
                }
            }
            None => {
                poly.insert(alpha, c);
            }
        }
    }

    fn check_dim(&self, other: usize) -> Result<()> {
        if self.dim != other {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other.dim)?;
        let mut out = self.clone();
        for (f, a, c) in other.terms() {
            out.add_term(f.clone(), a.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.map_coefficients(|c| -c)
    }

    pub fn scale(&self, s: &ExpCoefficient) -> Self {
        if s.is_zero() {
            return Self::zero(&self.field, self.dim);
        }
        self.map_coefficients(|c| c * s)
    }

    pub fn scale_complex(&self, s: &ComplexAlgebraic) -> Self {
        if s.is_zero() {
            return Self::zero(&self.field, self.dim);
        }
        self.map_coefficients(|c| c.scale(s))
    }

    fn map_coefficients(&self, f: impl Fn(&ExpCoefficient) -> ExpCoefficient) -> Self {
        let mut out = Self::zero(&self.field, self.dim);
        for (fr, a, c) in self.terms() {
            out.add_term(fr.clone(), a.clone(), f(c));
        }
        out
    }

    /// Pointwise product.
    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other.dim)?;
        let mut out = Self::zero(&self.field, self.dim);
        for (f1, a1, c1) in self.terms() {
            for (f2, a2, c2) in other.terms() {
                let f: Frequency = f1.iter().zip(f2).map(|(x, y)| x + y).collect();
                out.add_term(f, a1.add(a2), c1 * c2);
            }
        }
        Ok(out)
    }

    /// τ_y f = f(· + y).
    pub fn translate(&self, y: &[AlgebraicScalar]) -> Result<Self> {
        self.check_dim(y.len())?;
        let max_deg: Vec<u32> =
            (0..self.dim).map(|i| self.terms().map(|(_, a, _)| a.0[i]).max().unwrap_or(0)).collect();
        let powers: Vec<Vec<AlgebraicScalar>> = y
            .iter()
            .zip(&max_deg)
            .map(|(yi, &m)| {
                let mut p = vec![AlgebraicScalar::one(&self.field)];
                for k in 1..=m as usize {
                    let next = &p[k - 1] * yi;
                    p.push(next);
                }
                p
            })
            .collect();
        let mut out = Self::zero(&self.field, self.dim);
        for (freq, poly) in &self.terms {
            let shift = ExpCoefficient::exp(complex_dot(freq, y));
            for (alpha, c) in poly {
                let c = c * &shift;
                for beta in alpha.below() {
                    let mut s = AlgebraicScalar::one(&self.field);
                    for ((&a, &b), row) in alpha.0.iter().zip(&beta.0).zip(&powers) {
                        if a == b {
                            continue;
                        }
                        let pw = &row[(a - b) as usize];
                        s = &s * &pw.scale(&BigRational::from_integer(binomial(a, b)));
                    }
                    if s.is_zero() {
                        continue;
                    }
                    out.add_term(freq.clone(), beta, c.scale(&ComplexAlgebraic::real(s)));
                }
            }
        }
        Ok(out)
    }

    /// Δ_h^m f = Σ_k C(m,k) (−1)^{m−k} τ_{kh} f.
    pub fn forward_difference(&self, h: &[AlgebraicScalar], m: u32) -> Result<Self> {
        self.check_dim(h.len())?;
        let mut out = Self::zero(&self.field, self.dim);
        for k in 0..=m {
            let mut coef = BigRational::from_integer(binomial(m, k));
            if (m - k) % 2 == 1 {
                coef = -coef;
            }
            let kh = crate::vector::scale_int(h, k as i64);
            let shifted = self.translate(&kh)?;
            out = out.try_add(&shifted.scale_complex(&real_scalar(&self.field, coef)))?;
        }
        Ok(out)
    }

    /// ∂/∂x_i applied to the polynomial parts only (the exponential factors
    /// are left untouched).
    pub fn poly_partial(&self, i: usize) -> Self {
        let mut out = Self::zero(&self.field, self.dim);
        for (f, a, c) in self.terms() {
            if a.0[i] == 0 {
                continue;
            }
            let mut b = a.clone();
            b.0[i] -= 1;
            let k = BigRational::from_integer(BigInt::from(a.0[i]));
            out.add_term(f.clone(), b, c.scale_rational(&k));
        }
        out
    }

    fn poly_derivative(&self, beta: &MultiIndex) -> Self {
        let mut out = self.clone();
        for (i, &b) in beta.0.iter().enumerate() {
            for _ in 0..b {
                out = out.poly_partial(i);
            }
        }
        out
    }

    /// Basis of the smallest translation-invariant space containing `self`:
    /// the functions D^β p_λ(x) e^{λ·x}.
    pub fn translation_hull(&self) -> Vec<ExpPolynomial> {
        let mut ech = Echelon::new(&self.field, self.dim);
        for freq in self.terms.keys() {
            let comp = self.component(freq);
            let max: Vec<u32> =
                (0..self.dim).map(|i| comp.terms().map(|(_, a, _)| a.0[i]).max().unwrap_or(0)).collect();
            for beta in MultiIndex(max).below() {
                let g = comp.poly_derivative(&beta);
                if !g.is_zero() {
                    ech.insert(g);
                }
            }
        }
        ech.into_basis()
    }

    /// x ↦ f(A x) for a `dim × d'` matrix `a` given by rows; the result lives
    /// on ℝ^{d'}.
    pub fn compose_linear(&self, a: &[FieldVector]) -> Result<Self> {
        self.check_dim(a.len())?;
        let d_out = a.first().map(Vec::len).unwrap_or(0);
        if a.iter().any(|row| row.len() != d_out) {
            return Err(Error::Malformed("ragged matrix".into()));
        }
        let forms: Vec<ExpPolynomial> = a.iter().map(|row| Self::linear_form(&self.field, row)).collect();
        let mut form_powers: Vec<Vec<ExpPolynomial>> =
            forms.iter().map(|_| vec![Self::one(&self.field, d_out)]).collect();
        let mut out = Self::zero(&self.field, d_out);
        for (freq, poly) in &self.terms {
            let new_freq: Frequency = (0..d_out)
                .map(|j| {
                    let mut acc = ComplexAlgebraic::zero(&self.field);
                    for (i, lam) in freq.iter().enumerate() {
                        acc = &acc + &lam.scale_real(&a[i][j]);
                    }
                    acc
                })
                .collect();
            let exp = Self::exponential(&self.field, new_freq);
            for (alpha, c) in poly {
                let mut mono = Self::one(&self.field, d_out);
                for (i, &k) in alpha.0.iter().enumerate() {
                    while form_powers[i].len() <= k as usize {
                        let next = form_powers[i].last().unwrap().try_mul(&forms[i])?;
                        form_powers[i].push(next);
                    }
                    mono = mono.try_mul(&form_powers[i][k as usize])?;
                }
                out = out.try_add(&mono.try_mul(&exp)?.scale(c))?;
            }
        }
        Ok(out)
    }

    /// Complex conjugate function.
    pub fn conj(&self) -> Self {
        let mut out = Self::zero(&self.field, self.dim);
        for (f, a, c) in self.terms() {
            let f: Frequency = f.iter().map(ComplexAlgebraic::conj).collect();
            let c = ExpCoefficient::from_terms(&self.field, c.terms().map(|(e, v)| (e.conj(), v.conj())));
            out.add_term(f, a.clone(), c);
        }
        out
    }

    /// Real-valued iff equal to its own conjugate.
    pub fn is_real(&self) -> bool {
        self.conj() == *self
    }

    /// Exact value at a field point, as an element of the exponential ring.
    pub fn eval_exact(&self, x: &[AlgebraicScalar]) -> Result<ExpCoefficient> {
        let shifted = self.translate(x)?;
        let origin = MultiIndex::zero(self.dim);
        let mut acc = ExpCoefficient::zero(&self.field);
        for poly in shifted.terms.values() {
            if let Some(c) = poly.get(&origin) {
                acc = &acc + c;
            }
        }
        Ok(acc)
    }

    pub fn compile(&self) -> CompiledExpPoly {
        let blocks = self
            .terms
            .iter()
            .map(|(freq, poly)| CompiledBlock {
                lambda: freq.iter().map(ComplexAlgebraic::to_c64).collect(),
                monomials: poly.iter().map(|(a, c)| (a.0.clone(), c.to_c64())).collect(),
            })
            .collect();
        CompiledExpPoly { dim: self.dim, blocks }
    }

    /// Numeric value at a real point, with an error bound.
    pub fn eval(&self, x: &[f64]) -> Result<NumericValue> {
        self.check_dim(x.len())?;
        Ok(self.compile().eval_with_bound(x))
    }
}

impl PartialEq for ExpPolynomial {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.terms == other.terms
    }
}

impl Eq for ExpPolynomial {}

impl fmt::Debug for ExpPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for ExpPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (freq, alpha, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})")?;
            for (i, &k) in alpha.0.iter().enumerate() {
                match k {
                    0 => {}
                    1 => write!(f, "·x{}", i + 1)?,
                    _ => write!(f, "·x{}^{k}", i + 1)?,
                }
            }
            if !is_zero_frequency(freq) {
                let parts: Vec<String> = freq.iter().map(|l| l.to_string()).collect();
                write!(f, "·e^{{({})·x}}", parts.join(", "))?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
struct CompiledBlock {
    lambda: Vec<Complex64>,
    monomials: Vec<(Vec<u32>, Complex64)>,
}

/// Double-precision snapshot of an [`ExpPolynomial`] for repeated
/// evaluation.
#[derive(Clone, Debug)]
pub struct CompiledExpPoly {
    dim: usize,
    blocks: Vec<CompiledBlock>,
}

impl CompiledExpPoly {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        self.eval_with_bound(x).value
    }

    pub fn eval_with_bound(&self, x: &[f64]) -> NumericValue {
        let mut value = Complex64::new(0.0, 0.0);
        let mut magnitude = 0.0;
        let mut ops = 1usize;
        for b in &self.blocks {
            let mut arg = Complex64::new(0.0, 0.0);
            for (l, xi) in b.lambda.iter().zip(x) {
                arg += l * xi;
            }
            let e = arg.exp();
            let mut s = Complex64::new(0.0, 0.0);
            let mut s_mag = 0.0;
            for (alpha, c) in &b.monomials {
                let mut m = 1.0;
                for (k, xi) in alpha.iter().zip(x) {
                    m *= xi.powi(*k as i32);
                }
                s += c * m;
                s_mag += c.norm() * m.abs();
                ops = ops.max(alpha.iter().sum::<u32>() as usize + self.dim + 2);
            }
            value += s * e;
            magnitude += s_mag * e.norm() * (1.0 + arg.norm());
        }
        let terms: usize = self.blocks.iter().map(|b| b.monomials.len()).sum();
        let error_bound = 4.0 * f64::EPSILON * ((ops + terms) as f64) * magnitude;
        NumericValue { value, error_bound }
    }
}

//! The group ring of formal exponentials e^μ, μ complex algebraic.
//!
//! Distinct algebraic exponents give linearly independent exponentials over
//! the algebraic numbers (Lindemann–Weierstrass), so an element is zero
//! exactly when its term map is empty. Exact arithmetic on the scalars
//! e^{λ·h} produced by translations rests on that.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use num_rational::BigRational;

use super::{ComplexAlgebraic, NumberField, ScalarError};

const MAX_DIVISION_STEPS: usize = 200_000;

#[derive(Clone)]
pub struct ExpCoefficient {
    field: Arc<NumberField>,
    terms: BTreeMap<ComplexAlgebraic, ComplexAlgebraic>,
}

/// Numeric value of an [`ExpCoefficient`] with an a-priori error bound.
#[derive(Clone, Copy, Debug)]
pub struct NumericValue {
    pub value: Complex64,
    pub error_bound: f64,
}

impl ExpCoefficient {
    pub fn zero(field: &Arc<NumberField>) -> Self {
        ExpCoefficient { field: field.clone(), terms: BTreeMap::new() }
    }

    pub fn one(field: &Arc<NumberField>) -> Self {
        Self::constant(ComplexAlgebraic::one(field))
    }

    pub fn from_int(field: &Arc<NumberField>, n: i64) -> Self {
        Self::constant(ComplexAlgebraic::from_int(field, n))
    }

    pub fn constant(c: ComplexAlgebraic) -> Self {
        let field = c.field().clone();
        let exp = ComplexAlgebraic::zero(&field);
        Self::monomial(exp, c)
    }

    /// `c · e^{exp}`.
    pub fn monomial(exp: ComplexAlgebraic, c: ComplexAlgebraic) -> Self {
        let field = c.field().clone();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(exp, c);
        }
        ExpCoefficient { field, terms }
    }

    /// `e^{exp}`.
    pub fn exp(exp: ComplexAlgebraic) -> Self {
        let one = ComplexAlgebraic::one(exp.field());
        Self::monomial(exp, one)
    }

    /// Builds from arbitrary (exponent, coefficient) pairs, merging repeated
    /// exponents and dropping zeros.
    pub fn from_terms(
        field: &Arc<NumberField>,
        pairs: impl IntoIterator<Item = (ComplexAlgebraic, ComplexAlgebraic)>,
    ) -> Self {
        let mut out = Self::zero(field);
        for (e, c) in pairs {
            out.add_term(e, c);
        }
        out
    }

    pub fn field(&self) -> &Arc<NumberField> {
        &self.field
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ComplexAlgebraic, &ComplexAlgebraic)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms.iter().next().is_some_and(|(e, c)| e.is_zero() && c.is_one())
    }

    /// Units of the group ring are the nonzero monomials.
    pub fn is_unit(&self) -> bool {
        self.terms.len() == 1
    }

    /// `Some(c)` when the element is a plain constant `c·e^0`.
    pub fn as_constant(&self) -> Option<ComplexAlgebraic> {
        match self.terms.len() {
            0 => Some(ComplexAlgebraic::zero(&self.field)),
            1 => {
                let (e, c) = self.terms.iter().next().unwrap();
                e.is_zero().then(|| c.clone())
            }
            _ => None,
        }
    }

    fn add_term(&mut self, exp: ComplexAlgebraic, c: ComplexAlgebraic) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&exp) {
            Some(existing) => {
                let sum = &*existing + &c;
                if sum.is_zero() {
                    self.terms.remove(&exp);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.terms.insert(exp, c);
            }
        }
    }

    /// Re-canonicalizes: merges nothing new but drops zero coefficients.
    /// Values built through the public API are already canonical.
    pub fn normalize(&self) -> Self {
        let mut out = Self::zero(&self.field);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, ScalarError> {
        if !self.field.same_as(&other.field) {
            return Err(ScalarError::FieldMismatch);
        }
        Ok(self * other)
    }

    pub fn scale(&self, s: &ComplexAlgebraic) -> Self {
        if s.is_zero() {
            return Self::zero(&self.field);
        }
        ExpCoefficient {
            field: self.field.clone(),
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * s)).collect(),
        }
    }

    pub fn scale_rational(&self, q: &BigRational) -> Self {
        let s = ComplexAlgebraic::real(super::AlgebraicScalar::from_rational(&self.field, q.clone()));
        self.scale(&s)
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one(&self.field);
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// Exact quotient `self / divisor`, or `None` if `divisor` does not
    /// divide `self` in the group ring.
    ///
    /// Long division in the lexicographic exponent order. Every quotient
    /// exponent must lie in the coordinate box spanned by the Newton
    /// polytopes (`min(A) - min(B) ≤ q ≤ max(A) - max(B)` per coordinate),
    /// and exponents live in a lattice, so the loop is finite.
    pub fn div_exact(&self, divisor: &Self) -> Option<Self> {
        if divisor.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(self.clone());
        }
        if divisor.is_unit() {
            let (e, c) = divisor.terms.iter().next().unwrap();
            let c_inv = c.inv().ok()?;
            return Some(ExpCoefficient {
                field: self.field.clone(),
                terms: self.terms.iter().map(|(k, v)| (k - e, v * &c_inv)).collect(),
            });
        }
        let (lo_a, hi_a) = coordinate_box(&self.terms);
        let (lo_b, hi_b) = coordinate_box(&divisor.terms);
        let lo: Vec<BigRational> = lo_a.iter().zip(&lo_b).map(|(a, b)| a - b).collect();
        let hi: Vec<BigRational> = hi_a.iter().zip(&hi_b).map(|(a, b)| a - b).collect();
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return None;
        }
        let (lead_e, lead_c) = divisor.terms.iter().next_back().unwrap();
        let lead_inv = lead_c.inv().ok()?;
        let mut rem = self.clone();
        let mut quot = Self::zero(&self.field);
        for _ in 0..MAX_DIVISION_STEPS {
            let Some((re, rc)) = rem.terms.iter().next_back() else {
                return Some(quot);
            };
            let qe = re - lead_e;
            let coords = flat_coords(&qe);
            if coords.iter().zip(&lo).any(|(x, l)| x < l) || coords.iter().zip(&hi).any(|(x, h)| x > h) {
                return None;
            }
            let qc = rc * &lead_inv;
            let step = Self::monomial(qe.clone(), qc.clone());
            rem = &rem - &(&step * divisor);
            quot.add_term(qe, qc);
        }
        None
    }

    /// Numeric value Σ c·exp(μ) in double precision.
    ///
    /// Precision above 53 bits is not available; the bound reports the
    /// double-precision error `2^{1-53}·(terms)·max|term|` scaled by a small
    /// constant for the exp/trig evaluation.
    pub fn eval(&self, precision: u32) -> NumericValue {
        let _ = precision.max(53);
        let mut value = Complex64::new(0.0, 0.0);
        let mut max_term: f64 = 0.0;
        for (e, c) in &self.terms {
            let term = c.to_c64() * e.to_c64().exp();
            max_term = max_term.max(term.norm());
            value += term;
        }
        let error_bound = 8.0 * f64::EPSILON * (self.terms.len().max(1) as f64) * max_term;
        NumericValue { value, error_bound }
    }

    pub fn to_c64(&self) -> Complex64 {
        self.eval(53).value
    }

    fn combine(&self, other: &Self, negate: bool) -> Self {
        assert!(self.field.same_as(&other.field), "exp-coefficients from different number fields");
        let mut out = self.clone();
        for (e, c) in &other.terms {
            let c = if negate { -c } else { c.clone() };
            out.add_term(e.clone(), c);
        }
        out
    }
}

fn flat_coords(e: &ComplexAlgebraic) -> Vec<BigRational> {
    e.re.coords().iter().chain(e.im.coords()).cloned().collect()
}

fn coordinate_box(terms: &BTreeMap<ComplexAlgebraic, ComplexAlgebraic>) -> (Vec<BigRational>, Vec<BigRational>) {
    let mut iter = terms.keys().map(flat_coords);
    let first = iter.next().expect("nonempty term map");
    let (mut lo, mut hi) = (first.clone(), first);
    for c in iter {
        for (i, x) in c.into_iter().enumerate() {
            if x < lo[i] {
                lo[i] = x.clone();
            }
            if x > hi[i] {
                hi[i] = x;
            }
        }
    }
    (lo, hi)
}

impl PartialEq for ExpCoefficient {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
    }
}

impl Eq for ExpCoefficient {}

impl fmt::Debug for ExpCoefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for ExpCoefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(e, c)| if e.is_zero() { format!("({c})") } else { format!("({c})·e^({e})") })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl<'a> Add<&'a ExpCoefficient> for &'a ExpCoefficient {
    type Output = ExpCoefficient;
    fn add(self, rhs: &ExpCoefficient) -> ExpCoefficient {
        self.combine(rhs, false)
    }
}

impl<'a> Sub<&'a ExpCoefficient> for &'a ExpCoefficient {
    type Output = ExpCoefficient;
    fn sub(self, rhs: &ExpCoefficient) -> ExpCoefficient {
        self.combine(rhs, true)
    }
}

impl<'a> Mul<&'a ExpCoefficient> for &'a ExpCoefficient {
    type Output = ExpCoefficient;
    fn mul(self, rhs: &ExpCoefficient) -> ExpCoefficient {
        assert!(self.field.same_as(&rhs.field), "exp-coefficients from different number fields");
        let mut out = ExpCoefficient::zero(&self.field);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                out.add_term(ea + eb, ca * cb);
            }
        }
        out
    }
}

impl Neg for &ExpCoefficient {
    type Output = ExpCoefficient;
    fn neg(self) -> ExpCoefficient {
        ExpCoefficient { field: self.field.clone(), terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect() }
    }
}

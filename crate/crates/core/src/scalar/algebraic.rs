use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, ToPrimitive, Zero};

use super::upoly;
use super::{NumberField, ScalarError};

const MAX_REFINEMENTS: usize = 4096;

/// An element of a real number field, stored as coordinates over the power
/// basis 1, θ, …, θ^{n-1}.
///
/// `Ord` is the structural (lexicographic coordinate) order used for map
/// keys; it is compatible with addition but is not the order of the reals.
/// Use [`AlgebraicScalar::sign`] or [`AlgebraicScalar::cmp_value`] for that.
#[derive(Clone)]
pub struct AlgebraicScalar {
    field: Arc<NumberField>,
    coords: Vec<BigRational>,
}

impl AlgebraicScalar {
    pub fn from_coords(field: &Arc<NumberField>, coords: Vec<BigRational>) -> Result<Self, ScalarError> {
        if coords.len() != field.degree() {
            return Err(ScalarError::CoordinateCount { expected: field.degree(), found: coords.len() });
        }
        Ok(AlgebraicScalar { field: field.clone(), coords })
    }

    pub fn zero(field: &Arc<NumberField>) -> Self {
        Self::from_rational(field, BigRational::zero())
    }

    pub fn one(field: &Arc<NumberField>) -> Self {
        Self::from_rational(field, BigRational::one())
    }

    pub fn from_rational(field: &Arc<NumberField>, q: BigRational) -> Self {
        let mut coords = vec![BigRational::zero(); field.degree()];
        coords[0] = q;
        AlgebraicScalar { field: field.clone(), coords }
    }

    pub fn from_int(field: &Arc<NumberField>, n: i64) -> Self {
        Self::from_rational(field, BigRational::from_integer(n.into()))
    }

    pub fn from_ratio(field: &Arc<NumberField>, num: i64, den: i64) -> Self {
        Self::from_rational(field, BigRational::new(num.into(), den.into()))
    }

    /// The generator θ.
    pub fn theta(field: &Arc<NumberField>) -> Self {
        Self::from_poly(field, vec![BigRational::zero(), BigRational::one()])
    }

    /// The element q(θ) for an arbitrary rational polynomial q.
    pub fn from_poly(field: &Arc<NumberField>, poly: Vec<BigRational>) -> Self {
        AlgebraicScalar { field: field.clone(), coords: field.reduce(poly) }
    }

    pub fn field(&self) -> &Arc<NumberField> {
        &self.field
    }

    pub fn coords(&self) -> &[BigRational] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(Zero::is_zero)
    }

    pub fn is_one(&self) -> bool {
        self.coords[0].is_one() && self.coords[1..].iter().all(Zero::is_zero)
    }

    /// `Some(q)` when the element lies in ℚ.
    pub fn as_rational(&self) -> Option<&BigRational> {
        self.coords[1..].iter().all(Zero::is_zero).then(|| &self.coords[0])
    }

    pub(crate) fn same_field(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.field, &other.field) || self.field.same_as(&other.field)
    }

    fn expect_same_field(&self, other: &Self) {
        assert!(self.same_field(other), "scalars from different number fields");
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, ScalarError> {
        if !self.same_field(other) {
            return Err(ScalarError::FieldMismatch);
        }
        Ok(self + other)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, ScalarError> {
        if !self.same_field(other) {
            return Err(ScalarError::FieldMismatch);
        }
        Ok(self * other)
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        AlgebraicScalar { field: self.field.clone(), coords: self.coords.iter().map(|c| c * q).collect() }
    }

    /// Multiplicative inverse; fails on zero, or on a zero divisor when the
    /// declared minimal polynomial is reducible.
    pub fn inv(&self) -> Result<Self, ScalarError> {
        if self.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        if let Some(q) = self.as_rational() {
            return Ok(Self::from_rational(&self.field, q.recip()));
        }
        let (g, s) = upoly::ext_gcd_left(&self.coords, self.field.minpoly());
        if upoly::degree(&g) != Some(0) {
            return Err(ScalarError::ZeroDivisor);
        }
        Ok(Self::from_poly(&self.field, s))
    }

    pub fn div(&self, other: &Self) -> Result<Self, ScalarError> {
        if !self.same_field(other) {
            return Err(ScalarError::FieldMismatch);
        }
        Ok(self * &other.inv()?)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one(&self.field);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Sign of the real value: interval evaluation over an enclosure of θ,
    /// refined until the enclosure excludes zero.
    pub fn sign(&self) -> i8 {
        if self.is_zero() {
            return 0;
        }
        if let Some(q) = self.as_rational() {
            return upoly::sign_of(q);
        }
        let mut enc = self.field.enclosure().clone();
        // A nonzero element of an irreducible field separates from zero long
        // before this; hitting the cap means the minimal polynomial was reducible.
        for _ in 0..MAX_REFINEMENTS {
            if enc.lo == enc.hi {
                return upoly::sign_at(&self.coords, &enc.lo);
            }
            if let Some(s) = upoly::eval_interval(&self.coords, &enc).excludes_zero() {
                return s;
            }
            self.field.refine(&mut enc);
        }
        0
    }

    /// An interval containing the value, computed from an enclosure of θ of
    /// width at most 2^-bits.
    pub fn enclose(&self, bits: u32) -> (BigRational, BigRational) {
        let mut enc = self.field.enclosure().clone();
        let target = BigRational::new(BigInt::one(), BigInt::one() << bits);
        while &enc.hi - &enc.lo > target {
            self.field.refine(&mut enc);
        }
        let iv = upoly::eval_interval(&self.coords, &enc);
        (iv.lo, iv.hi)
    }

    pub fn cmp_value(&self, other: &Self) -> Ordering {
        match (self - other).sign() {
            -1 => Ordering::Less,
            0 => Ordering::Equal,
            _ => Ordering::Greater,
        }
    }

    pub fn abs(&self) -> Self {
        if self.sign() < 0 {
            -self
        } else {
            self.clone()
        }
    }

    /// ⌊x⌋, decided exactly.
    pub fn floor(&self) -> BigInt {
        if let Some(q) = self.as_rational() {
            return q.floor().to_integer();
        }
        let (lo, _) = self.enclose(64);
        let mut n = lo.floor().to_integer();
        loop {
            let below = self - &Self::from_rational(&self.field, BigRational::from_integer(n.clone()));
            if below.sign() < 0 {
                n -= 1;
                continue;
            }
            let above = &below - &Self::one(&self.field);
            if above.sign() >= 0 {
                n += 1;
                continue;
            }
            return n;
        }
    }

    /// Nearest double, evaluated exactly at a 2^-64 approximation of θ.
    pub fn to_f64(&self) -> f64 {
        if let Some(q) = self.as_rational() {
            return q.to_f64().unwrap_or(f64::NAN);
        }
        upoly::eval(&self.coords, self.field.theta_approx()).to_f64().unwrap_or(f64::NAN)
    }

    pub fn from_f64_rational(field: &Arc<NumberField>, x: f64) -> Option<Self> {
        BigRational::from_f64(x).map(|q| Self::from_rational(field, q))
    }
}

impl PartialEq for AlgebraicScalar {
    fn eq(&self, other: &Self) -> bool {
        self.coords == other.coords
    }
}

impl Eq for AlgebraicScalar {}

impl PartialOrd for AlgebraicScalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for AlgebraicScalar {
    fn cmp(&self, other: &Self) -> Ordering {
        self.coords.cmp(&other.coords)
    }
}

impl std::hash::Hash for AlgebraicScalar {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.coords.hash(state);
    }
}

impl fmt::Debug for AlgebraicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for AlgebraicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (i, c) in self.coords.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            parts.push(match i {
                0 => c.to_string(),
                1 => format!("{c}*θ"),
                _ => format!("{c}*θ^{i}"),
            });
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

impl<'a> Add<&'a AlgebraicScalar> for &'a AlgebraicScalar {
    type Output = AlgebraicScalar;
    fn add(self, rhs: &AlgebraicScalar) -> AlgebraicScalar {
        self.expect_same_field(rhs);
        AlgebraicScalar {
            field: self.field.clone(),
            coords: self.coords.iter().zip(&rhs.coords).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<'a> Sub<&'a AlgebraicScalar> for &'a AlgebraicScalar {
    type Output = AlgebraicScalar;
    fn sub(self, rhs: &AlgebraicScalar) -> AlgebraicScalar {
        self.expect_same_field(rhs);
        AlgebraicScalar {
            field: self.field.clone(),
            coords: self.coords.iter().zip(&rhs.coords).map(|(a, b)| a - b).collect(),
        }
    }
}

impl<'a> Mul<&'a AlgebraicScalar> for &'a AlgebraicScalar {
    type Output = AlgebraicScalar;
    fn mul(self, rhs: &AlgebraicScalar) -> AlgebraicScalar {
        self.expect_same_field(rhs);
        if let Some(q) = rhs.as_rational() {
            return self.scale(q);
        }
        if let Some(q) = self.as_rational() {
            return rhs.scale(q);
        }
        AlgebraicScalar::from_poly(&self.field, upoly::mul(&self.coords, &rhs.coords))
    }
}

impl Neg for &AlgebraicScalar {
    type Output = AlgebraicScalar;
    fn neg(self) -> AlgebraicScalar {
        AlgebraicScalar { field: self.field.clone(), coords: self.coords.iter().map(|c| -c).collect() }
    }
}

impl Neg for AlgebraicScalar {
    type Output = AlgebraicScalar;
    fn neg(self) -> AlgebraicScalar {
        -&self
    }
}

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use super::{AlgebraicScalar, NumberField, ScalarError};

/// `re + i·im` with both parts in the real field ℚ(θ).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ComplexAlgebraic {
    pub re: AlgebraicScalar,
    pub im: AlgebraicScalar,
}

impl ComplexAlgebraic {
    pub fn new(re: AlgebraicScalar, im: AlgebraicScalar) -> Self {
        ComplexAlgebraic { re, im }
    }

    pub fn real(re: AlgebraicScalar) -> Self {
        let im = AlgebraicScalar::zero(re.field());
        ComplexAlgebraic { re, im }
    }

    pub fn zero(field: &Arc<NumberField>) -> Self {
        Self::real(AlgebraicScalar::zero(field))
    }

    pub fn one(field: &Arc<NumberField>) -> Self {
        Self::real(AlgebraicScalar::one(field))
    }

    pub fn from_int(field: &Arc<NumberField>, n: i64) -> Self {
        Self::real(AlgebraicScalar::from_int(field, n))
    }

    pub fn i(field: &Arc<NumberField>) -> Self {
        ComplexAlgebraic { re: AlgebraicScalar::zero(field), im: AlgebraicScalar::one(field) }
    }

    pub fn field(&self) -> &Arc<NumberField> {
        self.re.field()
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        ComplexAlgebraic { re: self.re.clone(), im: -&self.im }
    }

    pub fn scale_real(&self, s: &AlgebraicScalar) -> Self {
        ComplexAlgebraic { re: &self.re * s, im: &self.im * s }
    }

    pub fn inv(&self) -> Result<Self, ScalarError> {
        let norm = &(&self.re * &self.re) + &(&self.im * &self.im);
        let inv_norm = norm.inv()?;
        Ok(ComplexAlgebraic { re: &self.re * &inv_norm, im: -&(&self.im * &inv_norm) })
    }

    pub fn div(&self, other: &Self) -> Result<Self, ScalarError> {
        if !self.re.same_field(&other.re) {
            return Err(ScalarError::FieldMismatch);
        }
        Ok(self * &other.inv()?)
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    /// Lexicographic structural order, re first.
    pub fn structural_cmp(&self, other: &Self) -> Ordering {
        self.cmp(other)
    }
}

impl fmt::Debug for ComplexAlgebraic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for ComplexAlgebraic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else if self.re.is_zero() {
            write!(f, "({})i", self.im)
        } else {
            write!(f, "{} + ({})i", self.re, self.im)
        }
    }
}

impl<'a> Add<&'a ComplexAlgebraic> for &'a ComplexAlgebraic {
    type Output = ComplexAlgebraic;
    fn add(self, rhs: &ComplexAlgebraic) -> ComplexAlgebraic {
        ComplexAlgebraic { re: &self.re + &rhs.re, im: &self.im + &rhs.im }
    }
}

impl<'a> Sub<&'a ComplexAlgebraic> for &'a ComplexAlgebraic {
    type Output = ComplexAlgebraic;
    fn sub(self, rhs: &ComplexAlgebraic) -> ComplexAlgebraic {
        ComplexAlgebraic { re: &self.re - &rhs.re, im: &self.im - &rhs.im }
    }
}

impl<'a> Mul<&'a ComplexAlgebraic> for &'a ComplexAlgebraic {
    type Output = ComplexAlgebraic;
    fn mul(self, rhs: &ComplexAlgebraic) -> ComplexAlgebraic {
        if self.im.is_zero() && rhs.im.is_zero() {
            return ComplexAlgebraic::real(&self.re * &rhs.re);
        }
        ComplexAlgebraic {
            re: &(&self.re * &rhs.re) - &(&self.im * &rhs.im),
            im: &(&self.re * &rhs.im) + &(&self.im * &rhs.re),
        }
    }
}

impl Neg for &ComplexAlgebraic {
    type Output = ComplexAlgebraic;
    fn neg(self) -> ComplexAlgebraic {
        ComplexAlgebraic { re: -&self.re, im: -&self.im }
    }
}

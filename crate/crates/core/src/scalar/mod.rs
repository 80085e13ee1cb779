//! Exact scalars: a declared real number field ℚ(θ), its complexification,
//! and the ring of formal exponentials with algebraic exponents.

mod algebraic;
mod complex;
mod expcoef;
mod field;
pub(crate) mod upoly;

pub use algebraic::AlgebraicScalar;
pub use complex::ComplexAlgebraic;
pub use expcoef::{ExpCoefficient, NumericValue};
pub use field::NumberField;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScalarError {
    #[error("minimal polynomial is not square-free")]
    NotSquareFree,
    #[error("interval endpoints do not bracket a root of the minimal polynomial")]
    NoSignChange,
    #[error("interval contains {roots} real roots, expected exactly one")]
    AmbiguousInterval { roots: usize },
    #[error("minimal polynomial must be monic")]
    NotMonic,
    #[error("minimal polynomial must have degree at least one")]
    DegreeTooLow,
    #[error("operands belong to different number fields")]
    FieldMismatch,
    #[error("division by zero")]
    DivisionByZero,
    #[error("zero divisor: declared minimal polynomial is reducible")]
    ZeroDivisor,
    #[error("expected {expected} coordinates, found {found}")]
    CoordinateCount { expected: usize, found: usize },
}

/// Sign of a scalar: −1, 0 or +1.
pub fn scalar_sign(x: &AlgebraicScalar) -> i8 {
    x.sign()
}

/// Inner product of two field vectors.
pub fn dot(a: &[AlgebraicScalar], b: &[AlgebraicScalar]) -> AlgebraicScalar {
    assert_eq!(a.len(), b.len(), "dot product of vectors of different length");
    let field = a.first().or(b.first()).map(|x| x.field().clone());
    let mut acc = match field {
        Some(k) => AlgebraicScalar::zero(&k),
        None => return AlgebraicScalar::zero(&NumberField::rationals()),
    };
    for (x, y) in a.iter().zip(b) {
        acc = &acc + &(x * y);
    }
    acc
}

/// λ·y for a complex frequency and a real shift.
pub fn complex_dot(lambda: &[ComplexAlgebraic], y: &[AlgebraicScalar]) -> ComplexAlgebraic {
    assert_eq!(lambda.len(), y.len(), "dimension mismatch in λ·y");
    let k = y
        .first()
        .map(|s| s.field().clone())
        .or_else(|| lambda.first().map(|l| l.field().clone()))
        .unwrap_or_else(NumberField::rationals);
    let mut acc = ComplexAlgebraic::zero(&k);
    for (l, s) in lambda.iter().zip(y) {
        acc = &acc + &l.scale_real(s);
    }
    acc
}

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::upoly::{self, Interval};
use super::ScalarError;

/// Bits of precision the cached enclosure of θ is refined to at construction.
const CACHED_BITS: u32 = 64;

/// A real number field ℚ(θ), θ the unique root of a monic square-free
/// polynomial inside a rational isolating interval.
///
/// Values are immutable once built. Sign decisions that need a tighter
/// enclosure than the cached one refine a local copy.
pub struct NumberField {
    minpoly: Vec<BigRational>,
    interval: (BigRational, BigRational),
    enclosure: Interval,
    theta_mid: BigRational,
    theta_f64: f64,
}

impl NumberField {
    /// Declares ℚ(θ) from `minpoly` (ascending coefficients, monic) and an
    /// interval isolating θ. Irreducibility is assumed, square-freeness is
    /// checked.
    pub fn new(minpoly: Vec<BigRational>, interval: (BigRational, BigRational)) -> Result<Arc<Self>, ScalarError> {
        let mut minpoly = minpoly;
        upoly::trim(&mut minpoly);
        let deg = match upoly::degree(&minpoly) {
            Some(d) if d >= 1 => d,
            _ => return Err(ScalarError::DegreeTooLow),
        };
        if !minpoly[deg].is_one() {
            return Err(ScalarError::NotMonic);
        }
        let g = upoly::gcd(&minpoly, &upoly::derivative(&minpoly));
        if upoly::degree(&g) != Some(0) {
            return Err(ScalarError::NotSquareFree);
        }
        let (mut lo, mut hi) = interval.clone();
        if lo > hi {
            std::mem::swap(&mut lo, &mut hi);
        }
        let s_lo = upoly::sign_at(&minpoly, &lo);
        let s_hi = upoly::sign_at(&minpoly, &hi);
        let enclosure = if s_lo == 0 || s_hi == 0 {
            let roots = upoly::count_roots(&minpoly, &lo, &hi) + usize::from(s_lo == 0);
            if roots != 1 {
                return Err(ScalarError::AmbiguousInterval { roots });
            }
            Interval::point(if s_lo == 0 { lo.clone() } else { hi.clone() })
        } else {
            if s_lo == s_hi {
                return Err(ScalarError::NoSignChange);
            }
            let roots = upoly::count_roots(&minpoly, &lo, &hi);
            if roots != 1 {
                return Err(ScalarError::AmbiguousInterval { roots });
            }
            let mut enc = Interval { lo: lo.clone(), hi: hi.clone() };
            let target = BigRational::new(BigInt::one(), BigInt::one() << CACHED_BITS);
            while &enc.hi - &enc.lo > target {
                bisect(&minpoly, &mut enc);
            }
            enc
        };
        let theta_mid = (&enclosure.lo + &enclosure.hi) / BigRational::from_integer(2.into());
        let theta_f64 = theta_mid.to_f64().unwrap_or(f64::NAN);
        Ok(Arc::new(NumberField { minpoly, interval: (lo, hi), enclosure, theta_mid, theta_f64 }))
    }

    /// ℚ itself, encoded as ℚ(θ) with θ = 0 the root of `x`.
    pub fn rationals() -> Arc<Self> {
        Self::new(
            vec![BigRational::zero(), BigRational::one()],
            (BigRational::from_integer((-1).into()), BigRational::from_integer(1.into())),
        )
        .expect("x has the single root 0 in [-1, 1]")
    }

    /// ℚ(√n) for a positive non-square integer `n`.
    pub fn sqrt(n: u32) -> Result<Arc<Self>, ScalarError> {
        let n_q = BigRational::from_integer(n.into());
        let hi = BigRational::from_integer((n.max(1) + 1).into());
        Self::new(vec![-n_q, BigRational::zero(), BigRational::one()], (BigRational::zero(), hi))
    }

    pub fn degree(&self) -> usize {
        self.minpoly.len() - 1
    }

    pub fn minpoly(&self) -> &[BigRational] {
        &self.minpoly
    }

    /// The interval as declared (not the refined enclosure).
    pub fn interval(&self) -> (&BigRational, &BigRational) {
        (&self.interval.0, &self.interval.1)
    }

    pub fn theta_f64(&self) -> f64 {
        self.theta_f64
    }

    /// A dyadic rational within 2^-64 of θ.
    pub fn theta_approx(&self) -> &BigRational {
        &self.theta_mid
    }

    pub(crate) fn enclosure(&self) -> &Interval {
        &self.enclosure
    }

    /// Refines `enc` (an enclosure of θ) by one bisection step.
    pub(crate) fn refine(&self, enc: &mut Interval) {
        bisect(&self.minpoly, enc);
    }

    /// Structural identity: same polynomial and same root.
    pub fn same_as(&self, other: &NumberField) -> bool {
        std::ptr::eq(self, other)
            || (self.minpoly == other.minpoly
                && self.enclosure.lo <= other.enclosure.hi
                && other.enclosure.lo <= self.enclosure.hi)
    }

    /// Reduces a coefficient vector modulo the minimal polynomial and pads to
    /// `degree` entries.
    pub(crate) fn reduce(&self, mut coeffs: Vec<BigRational>) -> Vec<BigRational> {
        let n = self.degree();
        while coeffs.len() > n {
            let top = coeffs.pop().unwrap();
            if top.is_zero() {
                continue;
            }
            let shift = coeffs.len() - n;
            for (i, c) in self.minpoly.iter().take(n).enumerate() {
                coeffs[shift + i] -= &top * c;
            }
        }
        coeffs.resize(n, BigRational::zero());
        coeffs
    }
}

fn bisect(minpoly: &[BigRational], enc: &mut Interval) {
    if enc.lo == enc.hi {
        return;
    }
    let mid = (&enc.lo + &enc.hi) / BigRational::from_integer(2.into());
    let s_mid = upoly::sign_at(minpoly, &mid);
    if s_mid == 0 {
        *enc = Interval::point(mid);
        return;
    }
    if upoly::sign_at(minpoly, &enc.lo) == s_mid {
        enc.lo = mid;
    } else {
        enc.hi = mid;
    }
}

impl PartialEq for NumberField {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

impl fmt::Debug for NumberField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let coeffs: Vec<String> = self.minpoly.iter().map(|c| c.to_string()).collect();
        write!(f, "NumberField(minpoly=[{}], θ≈{})", coeffs.join(", "), self.theta_f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn rationals_is_degree_one_with_theta_zero() {
        let k = NumberField::rationals();
        assert_eq!(k.degree(), 1);
        assert_eq!(k.theta_f64(), 0.0);
    }

    #[test]
    fn sqrt2_bisection_oracle() {
        let k = NumberField::new(vec![q(-2), q(0), q(1)], (q(1), q(2))).unwrap();
        // independent oracle: float bisection on x^2 - 2
        let (mut a, mut b) = (1.0f64, 2.0f64);
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if m * m - 2.0 > 0.0 {
                b = m
            } else {
                a = m
            }
        }
        assert!((k.theta_f64() - a).abs() < 1e-15);
        assert!((k.theta_f64() - std::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn no_real_root_is_rejected() {
        let err = NumberField::new(vec![q(1), q(0), q(1)], (q(0), q(2))).unwrap_err();
        assert_eq!(err, ScalarError::NoSignChange);
    }

    #[test]
    fn repeated_root_is_not_square_free() {
        let err = NumberField::new(vec![q(1), q(-2), q(1)], (q(0), q(2))).unwrap_err();
        assert_eq!(err, ScalarError::NotSquareFree);
    }

    #[test]
    fn interval_with_three_roots_is_ambiguous() {
        // x^3 - x has roots -1, 0, 1
        let err = NumberField::new(vec![q(0), q(-1), q(0), q(1)], (q(-2), q(3))).unwrap_err();
        assert_eq!(err, ScalarError::AmbiguousInterval { roots: 3 });
    }

    #[test]
    fn rational_root_on_endpoint_is_exact() {
        let k = NumberField::new(vec![q(-3), q(1)], (q(3), q(5))).unwrap();
        assert_eq!(k.theta_approx(), &q(3));
    }
}

//! Dense univariate polynomials over ℚ, coefficients in ascending order.
//!
//! Only what the number-field layer needs: reduction, extended gcd, Sturm
//! counting and rational interval evaluation.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub(crate) type Poly = Vec<BigRational>;

pub(crate) fn trim(p: &mut Poly) {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
}

pub(crate) fn degree(p: &[BigRational]) -> Option<usize> {
    p.iter().rposition(|c| !c.is_zero())
}

pub(crate) fn eval(p: &[BigRational], x: &BigRational) -> BigRational {
    let mut acc = BigRational::zero();
    for c in p.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

pub(crate) fn sign_at(p: &[BigRational], x: &BigRational) -> i8 {
    sign_of(&eval(p, x))
}

pub(crate) fn sign_of(x: &BigRational) -> i8 {
    if x.is_zero() {
        0
    } else if x.is_positive() {
        1
    } else {
        -1
    }
}

pub(crate) fn derivative(p: &[BigRational]) -> Poly {
    let mut out: Poly = p.iter().enumerate().skip(1).map(|(i, c)| c * BigRational::from_integer(i.into())).collect();
    trim(&mut out);
    out
}

pub(crate) fn sub(a: &[BigRational], b: &[BigRational]) -> Poly {
    let n = a.len().max(b.len());
    let mut out: Poly = (0..n)
        .map(|i| {
            let x = a.get(i).cloned().unwrap_or_else(BigRational::zero);
            match b.get(i) {
                Some(y) => x - y,
                None => x,
            }
        })
        .collect();
    trim(&mut out);
    out
}

pub(crate) fn mul(a: &[BigRational], b: &[BigRational]) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim(&mut out);
    out
}

/// Quotient and remainder of `a / b`; `b` must be nonzero.
pub(crate) fn div_rem(a: &[BigRational], b: &[BigRational]) -> (Poly, Poly) {
    let db = degree(b).expect("division by the zero polynomial");
    let lead = b[db].clone();
    let mut rem: Poly = a.to_vec();
    trim(&mut rem);
    let mut quot = vec![BigRational::zero(); rem.len().saturating_sub(db).max(1)];
    while let Some(dr) = degree(&rem) {
        if dr < db {
            break;
        }
        let factor = &rem[dr] / &lead;
        let shift = dr - db;
        for (j, c) in b.iter().enumerate().take(db + 1) {
            rem[shift + j] -= &factor * c;
        }
        quot[shift] = factor;
        trim(&mut rem);
    }
    trim(&mut quot);
    (quot, rem)
}

fn monic(mut p: Poly) -> Poly {
    trim(&mut p);
    if let Some(lead) = p.last().cloned() {
        for c in p.iter_mut() {
            *c = &*c / &lead;
        }
    }
    p
}

/// Returns `(g, s)` with `g = gcd(a, m)` monic and `s·a ≡ g (mod m)`.
pub(crate) fn ext_gcd_left(a: &[BigRational], m: &[BigRational]) -> (Poly, Poly) {
    let (mut r0, mut r1): (Poly, Poly) = (m.to_vec(), a.to_vec());
    trim(&mut r0);
    trim(&mut r1);
    let (mut s0, mut s1): (Poly, Poly) = (Vec::new(), vec![BigRational::one()]);
    while degree(&r1).is_some() {
        let (q, r) = div_rem(&r0, &r1);
        let s2 = sub(&s0, &mul(&q, &s1));
        r0 = std::mem::replace(&mut r1, r);
        s0 = std::mem::replace(&mut s1, s2);
    }
    let lead = r0.last().cloned().unwrap_or_else(BigRational::one);
    let s: Poly = s0.into_iter().map(|c| c / &lead).collect();
    (monic(r0), s)
}

pub(crate) fn gcd(a: &[BigRational], b: &[BigRational]) -> Poly {
    let (mut r0, mut r1): (Poly, Poly) = (a.to_vec(), b.to_vec());
    trim(&mut r0);
    trim(&mut r1);
    while degree(&r1).is_some() {
        let (_, r) = div_rem(&r0, &r1);
        r0 = std::mem::replace(&mut r1, r);
    }
    monic(r0)
}

fn sturm_sequence(p: &[BigRational]) -> Vec<Poly> {
    let mut seq = vec![p.to_vec(), derivative(p)];
    loop {
        let n = seq.len();
        if degree(&seq[n - 1]).is_none() {
            seq.pop();
            break;
        }
        let (_, r) = div_rem(&seq[n - 2], &seq[n - 1]);
        if degree(&r).is_none() {
            break;
        }
        seq.push(r.into_iter().map(|c| -c).collect());
    }
    seq
}

fn sign_changes(seq: &[Poly], x: &BigRational) -> usize {
    let signs: Vec<i8> = seq.iter().map(|q| sign_at(q, x)).filter(|&s| s != 0).collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Number of distinct real roots of a square-free `p` in the half-open
/// interval `(lo, hi]`.
pub(crate) fn count_roots(p: &[BigRational], lo: &BigRational, hi: &BigRational) -> usize {
    let seq = sturm_sequence(p);
    sign_changes(&seq, lo).saturating_sub(sign_changes(&seq, hi))
}

/// Closed rational interval.
#[derive(Clone, Debug)]
pub(crate) struct Interval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl Interval {
    pub fn point(x: BigRational) -> Self {
        Interval { lo: x.clone(), hi: x }
    }

    fn mul(&self, other: &Interval) -> Interval {
        let products = [&self.lo * &other.lo, &self.lo * &other.hi, &self.hi * &other.lo, &self.hi * &other.hi];
        let lo = products.iter().min().cloned().unwrap();
        let hi = products.iter().max().cloned().unwrap();
        Interval { lo, hi }
    }

    pub fn excludes_zero(&self) -> Option<i8> {
        if self.lo.is_positive() {
            Some(1)
        } else if self.hi.is_negative() {
            Some(-1)
        } else {
            None
        }
    }
}

/// Horner evaluation of `p` over the interval `x`.
pub(crate) fn eval_interval(p: &[BigRational], x: &Interval) -> Interval {
    let mut acc = Interval::point(BigRational::zero());
    for c in p.iter().rev() {
        let prod = acc.mul(x);
        acc = Interval { lo: prod.lo + c, hi: prod.hi + c };
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn sturm_counts_roots_of_x2_minus_2() {
        let p = vec![q(-2), q(0), q(1)];
        assert_eq!(count_roots(&p, &q(1), &q(2)), 1);
        assert_eq!(count_roots(&p, &q(-2), &q(2)), 2);
        assert_eq!(count_roots(&p, &q(2), &q(3)), 0);
    }

    #[test]
    fn ext_gcd_inverts_modulo_minpoly() {
        let m = vec![q(-2), q(0), q(1)];
        let a = vec![q(1), q(1)]; // 1 + x
        let (g, s) = ext_gcd_left(&a, &m);
        assert_eq!(g, vec![q(1)]);
        let (_, r) = div_rem(&mul(&s, &a), &m);
        assert_eq!(r, vec![q(1)]);
    }

    #[test]
    fn gcd_detects_repeated_factor() {
        // (x-1)^2 (x+1)
        let p = mul(&mul(&[q(-1), q(1)], &[q(-1), q(1)]), &[q(1), q(1)]);
        let g = gcd(&p, &derivative(&p));
        assert_eq!(g, vec![q(-1), q(1)]);
    }
}

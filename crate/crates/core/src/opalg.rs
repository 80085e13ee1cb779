//! The group ring of translation operators on ℝ^d with exponential-ring
//! coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exppoly::{binomial, ExpPolynomial};
use crate::scalar::{AlgebraicScalar, ExpCoefficient, NumberField};
use crate::vector::{self, FieldVector};

/// Σ c_y τ_y. Operators act on functions by (τ_y f)(x) = f(x + y).
#[derive(Clone)]
pub struct TranslationPolynomial {
    field: Arc<NumberField>,
    dim: usize,
    terms: BTreeMap<FieldVector, ExpCoefficient>,
}

impl TranslationPolynomial {
    pub fn zero(field: &Arc<NumberField>, dim: usize) -> Self {
        TranslationPolynomial { field: field.clone(), dim, terms: BTreeMap::new() }
    }

    /// 1_d.
    pub fn identity(field: &Arc<NumberField>, dim: usize) -> Self {
        Self::tau(field, vector::zeros(field, dim))
    }

    pub fn tau(field: &Arc<NumberField>, y: FieldVector) -> Self {
        Self::term(field, y, ExpCoefficient::one(field))
    }

    pub fn term(field: &Arc<NumberField>, y: FieldVector, c: ExpCoefficient) -> Self {
        let mut out = Self::zero(field, y.len());
        out.add_term(y, c);
        out
    }

    pub fn from_terms(
        field: &Arc<NumberField>,
        dim: usize,
        terms: impl IntoIterator<Item = (FieldVector, ExpCoefficient)>,
    ) -> Result<Self> {
        let mut out = Self::zero(field, dim);
        for (y, c) in terms {
            out.check_dim(y.len())?;
            out.add_term(y, c);
        }
        Ok(out)
    }

    /// Δ_h^m = Σ_k C(m,k) (−1)^{m−k} τ_{kh}.
    pub fn delta(field: &Arc<NumberField>, h: &[AlgebraicScalar], m: u32) -> Self {
        let mut out = Self::zero(field, h.len());
        for k in 0..=m {
            let mut c = binomial(m, k);
            if (m - k) % 2 == 1 {
                c = -c;
            }
            out.add_term(
                vector::scale_int(h, k as i64),
                ExpCoefficient::one(field).scale_rational(&BigRational::from_integer(c)),
            );
        }
        out
    }

    /// Q with (τ_{ph} − 1)^n = Q·(τ_h − 1)^n.
    ///
    /// For p > 0 this is (Σ_{j<p} τ_{jh})^n; for p < 0 it uses
    /// τ_{−qh} − 1 = −τ_{−qh}(τ_{qh} − 1).
    pub fn divisibility_factor(field: &Arc<NumberField>, h: &[AlgebraicScalar], p: i64, n: u32) -> Result<Self> {
        if p == 0 {
            return Err(Error::Malformed("divisibility factor needs p ≠ 0".into()));
        }
        let d = h.len();
        let q = p.unsigned_abs() as i64;
        let mut base = Self::zero(field, d);
        for j in 0..q {
            base.add_term(vector::scale_int(h, j), ExpCoefficient::one(field));
        }
        if p < 0 {
            let sign = Self::term(field, vector::scale_int(h, -q), ExpCoefficient::from_int(field, -1));
            base = sign.compose(&base)?;
        }
        Ok(base.pow(n))
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

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&FieldVector, &ExpCoefficient)> {
        self.terms.iter()
    }

    fn add_term(&mut self, y: FieldVector, c: ExpCoefficient) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&y) {
            Some(existing) => {
                let sum = &*existing + &c;
                if sum.is_zero() {
                    self.terms.remove(&y);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.terms.insert(y, c);
            }
        }
    }

    fn check_dim(&self, other: usize) -> Result<()> {
        if self.dim != other {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other.dim)?;
        let mut out = self.clone();
        for (y, c) in &other.terms {
            out.add_term(y.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&ExpCoefficient::from_int(&self.field, -1))
    }

    pub fn scale(&self, s: &ExpCoefficient) -> Self {
        let mut out = Self::zero(&self.field, self.dim);
        for (y, c) in &self.terms {
            out.add_term(y.clone(), c * s);
        }
        out
    }

    /// Convolution product A∘B.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_dim(other.dim)?;
        let mut out = Self::zero(&self.field, self.dim);
        for (y1, c1) in &self.terms {
            for (y2, c2) in &other.terms {
                out.add_term(vector::add(y1, y2), c1 * c2);
            }
        }
        Ok(out)
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::identity(&self.field, self.dim);
        for _ in 0..n {
            acc = acc.compose(self).expect("same dimension");
        }
        acc
    }

    /// A f = Σ c_y τ_y f.
    pub fn apply(&self, f: &ExpPolynomial) -> Result<ExpPolynomial> {
        self.check_dim(f.dim())?;
        let mut out = ExpPolynomial::zero(&self.field, self.dim);
        for (y, c) in &self.terms {
            out = out.try_add(&f.translate(y)?.scale(c))?;
        }
        Ok(out)
    }

    /// Applies to a sampled grid function. Every shift must be an integer
    /// multiple of the grid step along each axis; points whose shifted
    /// arguments leave the grid come back as `None`.
    pub fn apply_grid(&self, samples: &GridFunction) -> Result<GridFunction> {
        let geom = &samples.geometry;
        self.check_dim(geom.axes.len())?;
        let mut offsets = Vec::with_capacity(self.terms.len());
        for (y, c) in &self.terms {
            let mut off = Vec::with_capacity(self.dim);
            for (yi, axis) in y.iter().zip(&geom.axes) {
                let q = yi.as_rational().ok_or(Error::ShiftNotOnGrid)?;
                if q.is_zero() {
                    off.push(0i64);
                    continue;
                }
                let step = axis.step().ok_or(Error::ShiftNotOnGrid)?;
                let k = q / step;
                if !k.is_integer() {
                    return Err(Error::ShiftNotOnGrid);
                }
                off.push(k.to_integer().to_i64().ok_or(Error::ShiftNotOnGrid)?);
            }
            offsets.push((off, c.to_c64()));
        }
        let values = (0..geom.len())
            .into_par_iter()
            .map(|idx| {
                let base = geom.unflatten(idx);
                let mut acc = Complex64::new(0.0, 0.0);
                for (off, c) in &offsets {
                    let mut shifted = Vec::with_capacity(base.len());
                    for ((b, o), axis) in base.iter().zip(off).zip(&geom.axes) {
                        let j = *b as i64 + o;
                        if j < 0 || j >= axis.n as i64 {
                            return None;
                        }
                        shifted.push(j as usize);
                    }
                    acc += c * samples.values[geom.flatten(&shifted)]?;
                }
                Some(acc)
            })
            .collect();
        Ok(GridFunction { geometry: geom.clone(), values })
    }
}

impl PartialEq for TranslationPolynomial {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.terms == other.terms
    }
}

impl Eq for TranslationPolynomial {}

impl fmt::Debug for TranslationPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for TranslationPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(y, c)| {
                let ys: Vec<String> = y.iter().map(|s| s.to_string()).collect();
                format!("({c})τ[{}]", ys.join(", "))
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// One multinomial summand of the telescoped power.
#[derive(Clone, Debug)]
pub struct TelescopeSummand {
    pub alpha: Vec<u32>,
    pub op: TranslationPolynomial,
}

impl TelescopeSummand {
    /// Index k with α_k ≥ n_k, if any.
    pub fn dominant_index(&self, n: &[u32]) -> Option<usize> {
        self.alpha.iter().zip(n).position(|(a, b)| a >= b)
    }
}

#[derive(Clone, Debug)]
pub struct TelescopeExpansion {
    pub summands: Vec<TelescopeSummand>,
    /// (τ_{Σ m_k h_k} − 1)^N.
    pub target: TranslationPolynomial,
    /// Σ summands = target, exactly.
    pub identity_holds: bool,
    /// Every summand has some α_k ≥ ⌈N/t⌉.
    pub pigeonhole_holds: bool,
}

/// Expands (τ_{m_1h_1+⋯+m_th_t} − 1)^N by writing the inner operator as the
/// telescoping sum Σ_i τ_{m_{i+1}h_{i+1}+⋯+m_th_t}(τ_{m_ih_i} − 1) and
/// applying the multinomial theorem.
pub fn telescope_expand(
    field: &Arc<NumberField>,
    h: &[FieldVector],
    m: &[i64],
    n_power: u32,
) -> Result<TelescopeExpansion> {
    let t = h.len();
    if t == 0 {
        return Err(Error::EmptyGeneratorList);
    }
    if m.len() != t {
        return Err(Error::DimensionMismatch { expected: t, found: m.len() });
    }
    let d = h[0].len();
    if let Some(bad) = h.iter().find(|v| v.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, found: bad.len() });
    }
    let scaled: Vec<FieldVector> = h.iter().zip(m).map(|(v, &k)| vector::scale_int(v, k)).collect();
    let one = TranslationPolynomial::identity(field, d);
    let mut factors = Vec::with_capacity(t);
    for i in 0..t {
        let mut tail = vector::zeros(field, d);
        for v in &scaled[i + 1..] {
            tail = vector::add(&tail, v);
        }
        let diff = TranslationPolynomial::tau(field, scaled[i].clone()).sub(&one)?;
        factors.push(TranslationPolynomial::tau(field, tail).compose(&diff)?);
    }
    let powers: Vec<Vec<TranslationPolynomial>> = factors
        .iter()
        .map(|f| {
            let mut p = vec![one.clone()];
            for k in 1..=n_power as usize {
                let next = p[k - 1].compose(f).expect("same dimension");
                p.push(next);
            }
            p
        })
        .collect();
    let fact: Vec<BigInt> = (0..=n_power)
        .scan(BigInt::from(1), |acc, k| {
            if k > 0 {
                *acc *= k;
            }
            Some(acc.clone())
        })
        .collect();
    let threshold = n_power.div_ceil(t as u32);
    let mut summands = Vec::new();
    let mut sum = TranslationPolynomial::zero(field, d);
    let mut pigeonhole_holds = true;
    for alpha in compositions(n_power, t) {
        let mut coef = fact[n_power as usize].clone();
        for &a in &alpha {
            coef /= &fact[a as usize];
        }
        let mut op = one.clone();
        for (i, &a) in alpha.iter().enumerate() {
            op = op.compose(&powers[i][a as usize])?;
        }
        let op = op.scale(&ExpCoefficient::one(field).scale_rational(&BigRational::from_integer(coef)));
        sum = sum.add(&op)?;
        if !alpha.iter().any(|&a| a >= threshold) {
            pigeonhole_holds = false;
        }
        summands.push(TelescopeSummand { alpha, op });
    }
    let mut total = vector::zeros(field, d);
    for v in &scaled {
        total = vector::add(&total, v);
    }
    let target = TranslationPolynomial::tau(field, total).sub(&one)?.pow(n_power);
    Ok(TelescopeExpansion { identity_holds: sum == target, pigeonhole_holds, summands, target })
}

/// All α ∈ ℕ^t with Σα = n, lexicographically descending.
pub fn compositions(n: u32, t: usize) -> Vec<Vec<u32>> {
    if t == 1 {
        return vec![vec![n]];
    }
    let mut out = Vec::new();
    for first in (0..=n).rev() {
        for mut rest in compositions(n - first, t - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// One grid axis: `n` equally spaced points from `min` to `max`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridAxis {
    pub min: BigRational,
    pub max: BigRational,
    pub n: usize,
}

impl GridAxis {
    pub fn new(min: BigRational, max: BigRational, n: usize) -> Result<Self> {
        if n == 0 || max < min || (n > 1 && max == min) {
            return Err(Error::Malformed("grid axis needs n ≥ 1 and min < max".into()));
        }
        Ok(GridAxis { min, max, n })
    }

    pub fn step(&self) -> Option<BigRational> {
        (self.n > 1).then(|| (&self.max - &self.min) / BigRational::from_integer(BigInt::from(self.n - 1)))
    }

    pub fn point(&self, j: usize) -> f64 {
        let x = match self.step() {
            Some(s) => &self.min + s * BigRational::from_integer(BigInt::from(j)),
            None => self.min.clone(),
        };
        x.to_f64().unwrap_or(f64::NAN)
    }
}

/// Axis-aligned tensor grid; points are flattened with the last axis
/// fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct GridGeometry {
    pub axes: Vec<GridAxis>,
}

impl GridGeometry {
    pub fn new(axes: Vec<GridAxis>) -> Self {
        GridGeometry { axes }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn unflatten(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.axes.len()];
        for (i, a) in self.axes.iter().enumerate().rev() {
            out[i] = idx % a.n;
            idx /= a.n;
        }
        out
    }

    pub fn flatten(&self, ix: &[usize]) -> usize {
        ix.iter().zip(&self.axes).fold(0, |acc, (i, a)| acc * a.n + i)
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        self.unflatten(idx).iter().zip(&self.axes).map(|(&j, a)| a.point(j)).collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }
}

/// Samples on a grid; `None` marks points without a value.
#[derive(Clone, Debug)]
pub struct GridFunction {
    pub geometry: GridGeometry,
    pub values: Vec<Option<Complex64>>,
}

impl GridFunction {
    pub fn sample(geometry: GridGeometry, f: impl Fn(&[f64]) -> Complex64 + Sync) -> Self {
        let values = (0..geometry.len()).into_par_iter().map(|i| Some(f(&geometry.point(i)))).collect();
        GridFunction { geometry, values }
    }

    /// Largest |value| over present points.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn present(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k2() -> Arc<NumberField> {
        NumberField::sqrt(2).unwrap()
    }

    #[test]
    fn delta_examples() {
        let k = k2();
        let h = vector::from_ints(&k, &[1]);
        assert_eq!(TranslationPolynomial::delta(&k, &h, 0), TranslationPolynomial::identity(&k, 1));
        let d2 = TranslationPolynomial::delta(&k, &h, 2);
        let expected = TranslationPolynomial::from_terms(
            &k,
            1,
            [
                (vector::from_ints(&k, &[2]), ExpCoefficient::one(&k)),
                (vector::from_ints(&k, &[1]), ExpCoefficient::from_int(&k, -2)),
                (vector::from_ints(&k, &[0]), ExpCoefficient::one(&k)),
            ],
        )
        .unwrap();
        assert_eq!(d2, expected);
        let d1 = TranslationPolynomial::delta(&k, &h, 1);
        assert_eq!(d1.pow(2), d2);
    }

    #[test]
    fn compose_examples() {
        let k = k2();
        let h = vec![AlgebraicScalar::theta(&k)];
        let one = TranslationPolynomial::identity(&k, 1);
        let th = TranslationPolynomial::tau(&k, h.clone());
        let a = th.sub(&one).unwrap();
        assert_eq!(a.compose(&one).unwrap(), a);
        let b = th.add(&one).unwrap();
        let t2h = TranslationPolynomial::tau(&k, vector::scale_int(&h, 2)).sub(&one).unwrap();
        assert_eq!(a.compose(&b).unwrap(), t2h);
    }

    #[test]
    fn divisibility_examples() {
        let k = k2();
        let h = vec![AlgebraicScalar::theta(&k)];
        let one = TranslationPolynomial::identity(&k, 1);
        assert_eq!(TranslationPolynomial::divisibility_factor(&k, &h, 1, 3).unwrap(), one);
        let q2 = TranslationPolynomial::divisibility_factor(&k, &h, 2, 1).unwrap();
        assert_eq!(q2, TranslationPolynomial::tau(&k, h.clone()).add(&one).unwrap());
        let qm1 = TranslationPolynomial::divisibility_factor(&k, &h, -1, 1).unwrap();
        assert_eq!(qm1, TranslationPolynomial::term(&k, vector::neg(&h), ExpCoefficient::from_int(&k, -1)));
        let lhs = TranslationPolynomial::tau(&k, vector::neg(&h)).sub(&one).unwrap();
        let rhs = qm1.compose(&TranslationPolynomial::delta(&k, &h, 1)).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn telescope_base_case() {
        let k = k2();
        let h = vec![vector::from_ints(&k, &[1, 0]), vector::from_ints(&k, &[0, 1])];
        let exp = telescope_expand(&k, &h, &[1, 1], 1).unwrap();
        assert!(exp.identity_holds && exp.pigeonhole_holds);
        assert_eq!(exp.summands.len(), 2);
        let one = TranslationPolynomial::identity(&k, 2);
        let first = TranslationPolynomial::tau(&k, h[0].clone())
            .sub(&one)
            .unwrap()
            .compose(&TranslationPolynomial::tau(&k, h[1].clone()))
            .unwrap();
        assert_eq!(exp.summands[0].op, first);
        assert_eq!(exp.summands[1].op, TranslationPolynomial::tau(&k, h[1].clone()).sub(&one).unwrap());
    }

    #[test]
    fn telescope_mixed_signs() {
        let k = k2();
        let theta = AlgebraicScalar::theta(&k);
        let h = vec![
            vec![AlgebraicScalar::one(&k)],
            vec![theta.clone()],
            vec![&theta + &AlgebraicScalar::from_ratio(&k, 1, 2)],
        ];
        let exp = telescope_expand(&k, &h, &[2, -1, 3], 4).unwrap();
        assert!(exp.identity_holds);
        assert!(exp.pigeonhole_holds);
        assert_eq!(exp.summands.len(), 15);
        assert!(matches!(telescope_expand(&k, &[], &[], 1), Err(Error::EmptyGeneratorList)));
    }

    #[test]
    fn grid_second_difference() {
        let k = k2();
        let q = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        let geom = GridGeometry::new(vec![GridAxis::new(q(-2, 1), q(2, 1), 41).unwrap()]);
        let samples = GridFunction::sample(geom, |x| Complex64::new(x[0] * x[0], 0.0));
        let h = vec![AlgebraicScalar::from_ratio(&k, 1, 5)];
        let out = TranslationPolynomial::delta(&k, &h, 2).apply_grid(&samples).unwrap();
        assert_eq!(out.present(), 41 - 4);
        for v in out.values.iter().flatten() {
            assert!((v.re - 2.0 * 0.04).abs() < 1e-12);
        }
        let id = TranslationPolynomial::identity(&k, 1).apply_grid(&samples).unwrap();
        assert_eq!(id.values, samples.values);
        let bad = vec![AlgebraicScalar::theta(&k)];
        assert!(matches!(TranslationPolynomial::delta(&k, &bad, 1).apply_grid(&samples), Err(Error::ShiftNotOnGrid)));
        let off = vec![AlgebraicScalar::from_ratio(&k, 1, 7)];
        assert!(matches!(TranslationPolynomial::delta(&k, &off, 1).apply_grid(&samples), Err(Error::ShiftNotOnGrid)));
    }

    #[test]
    fn apply_matches_forward_difference() {
        let k = k2();
        let h = vec![AlgebraicScalar::theta(&k)];
        let f = ExpPolynomial::power(&k, &[3]);
        let a = TranslationPolynomial::delta(&k, &h, 2).apply(&f).unwrap();
        assert_eq!(a, f.forward_difference(&h, 2).unwrap());
    }
}

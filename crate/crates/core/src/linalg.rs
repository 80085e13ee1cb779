//! Exact linear algebra.
//!
//! [`Echelon`] keeps a fraction-free row echelon form of exponential
//! polynomials over the exponential ring (a domain, not a field). The free
//! functions do Gauss–Jordan elimination over a field, with right-hand sides
//! in any vector space over it.

use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::exppoly::{Atom, ExpPolynomial};
use crate::scalar::{AlgebraicScalar, ComplexAlgebraic, ExpCoefficient, NumberField};

#[derive(Clone, Debug)]
struct Row {
    pivot: Atom,
    vec: ExpPolynomial,
}

/// Row echelon form of a span of exponential polynomials.
///
/// Every row has a distinct pivot atom, and every other row vanishes at it,
/// so a vector lies in the span iff reducing it leaves nothing.
#[derive(Clone, Debug)]
pub struct Echelon {
    field: Arc<NumberField>,
    dim: usize,
    rows: Vec<Row>,
}

impl Echelon {
    pub fn new(field: &Arc<NumberField>, dim: usize) -> Self {
        Echelon { field: field.clone(), dim, rows: Vec::new() }
    }

    pub fn from_generators<'a>(
        field: &Arc<NumberField>,
        dim: usize,
        gens: impl IntoIterator<Item = &'a ExpPolynomial>,
    ) -> Self {
        let mut e = Self::new(field, dim);
        for g in gens {
            e.insert(g.clone());
        }
        e
    }

    pub fn field(&self) -> &Arc<NumberField> {
        &self.field
    }

    pub fn dim_ambient(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn basis(&self) -> Vec<ExpPolynomial> {
        self.rows.iter().map(|r| r.vec.clone()).collect()
    }

    pub fn into_basis(self) -> Vec<ExpPolynomial> {
        self.rows.into_iter().map(|r| r.vec).collect()
    }

    pub fn pivots(&self) -> Vec<Atom> {
        self.rows.iter().map(|r| r.pivot.clone()).collect()
    }

    /// Remainder of `v` after clearing every pivot. Zero iff `v` is in the
    /// span. The remainder is a nonzero ring multiple of the true residue.
    pub fn reduce(&self, v: &ExpPolynomial) -> ExpPolynomial {
        let mut v = v.clone();
        for row in &self.rows {
            let Some(c) = v.coefficient(&row.pivot).cloned() else {
                continue;
            };
            let p = row.vec.coefficient(&row.pivot).expect("pivot present");
            v = if p.is_one() { sub(&v, &row.vec.scale(&c)) } else { sub(&v.scale(p), &row.vec.scale(&c)) };
        }
        v
    }

    pub fn contains(&self, v: &ExpPolynomial) -> bool {
        self.reduce(v).is_zero()
    }

    /// Adds `v` to the span. Returns false if it was already a member.
    pub fn insert(&mut self, v: ExpPolynomial) -> bool {
        let rem = self.reduce(&v);
        if rem.is_zero() {
            return false;
        }
        let (pivot, rem) = normalize(rem);
        let p = rem.coefficient(&pivot).expect("pivot present").clone();
        for row in &mut self.rows {
            let Some(c) = row.vec.coefficient(&pivot).cloned() else {
                continue;
            };
            let updated =
                if p.is_one() { sub(&row.vec, &rem.scale(&c)) } else { sub(&row.vec.scale(&p), &rem.scale(&c)) };
            row.vec = divide_by_pivot(updated, &row.pivot);
        }
        self.rows.push(Row { pivot, vec: rem });
        true
    }

    pub fn contains_all(&self, vs: &[ExpPolynomial]) -> bool {
        vs.iter().all(|v| self.contains(v))
    }

    /// Exact span equality.
    pub fn same_span(&self, other: &Echelon) -> bool {
        self.len() == other.len() && self.rows.iter().all(|r| other.contains(&r.vec))
    }

    pub fn union(&self, other: &Echelon) -> Echelon {
        let mut out = self.clone();
        for r in &other.rows {
            out.insert(r.vec.clone());
        }
        out
    }
}

/// Row `i` mutably alongside row `r`, for `i != r`.
pub(crate) fn row_pair<T>(rows: &mut [T], i: usize, r: usize) -> (&mut T, &T) {
    if i < r {
        let (head, tail) = rows.split_at_mut(r);
        (&mut head[i], &tail[0])
    } else {
        let (head, tail) = rows.split_at_mut(i);
        (&mut tail[0], &head[r])
    }
}

fn sub(a: &ExpPolynomial, b: &ExpPolynomial) -> ExpPolynomial {
    a.try_sub(b).expect("echelon rows share a dimension")
}

/// Picks a pivot for a fresh remainder and scales the row so the pivot
/// coefficient is as simple as possible.
fn normalize(v: ExpPolynomial) -> (Atom, ExpPolynomial) {
    let unit_pivot = v.atoms().filter(|(_, c)| c.is_unit()).map(|(a, _)| a).max();
    if let Some(a) = unit_pivot {
        let c = v.coefficient(&a).unwrap().clone();
        let inv = ExpCoefficient::one(c.field()).div_exact(&c).expect("units are invertible");
        return (a, v.scale(&inv));
    }
    let pivot = v.atoms().map(|(a, c)| (std::cmp::Reverse(c.len()), a)).max().map(|(_, a)| a).expect("nonzero vector");
    let v = divide_by_pivot(v, &pivot);
    (pivot, v)
}

/// Divides the whole row by its pivot coefficient when that is exact.
fn divide_by_pivot(v: ExpPolynomial, pivot: &Atom) -> ExpPolynomial {
    let p = v.coefficient(pivot).expect("pivot present").clone();
    if p.is_one() {
        return v;
    }
    let mut parts = Vec::new();
    for (a, c) in v.atoms() {
        match c.div_exact(&p) {
            Some(q) => parts.push((a, q)),
            None => return v.clone(),
        }
    }
    ExpPolynomial::from_atoms(v.field(), v.dim(), parts)
}

/// Field elements for Gauss–Jordan elimination.
pub trait FieldElem: Clone {
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn is_zero_elem(&self) -> bool;
    fn sub_elem(&self, o: &Self) -> Self;
    fn mul_elem(&self, o: &Self) -> Self;
    fn inv_elem(&self) -> Self;
}

impl FieldElem for AlgebraicScalar {
    fn zero_like(&self) -> Self {
        AlgebraicScalar::zero(self.field())
    }
    fn one_like(&self) -> Self {
        AlgebraicScalar::one(self.field())
    }
    fn is_zero_elem(&self) -> bool {
        self.is_zero()
    }
    fn sub_elem(&self, o: &Self) -> Self {
        self - o
    }
    fn mul_elem(&self, o: &Self) -> Self {
        self * o
    }
    fn inv_elem(&self) -> Self {
        self.inv().expect("nonzero pivot")
    }
}

impl FieldElem for BigRational {
    fn zero_like(&self) -> Self {
        BigRational::zero()
    }
    fn one_like(&self) -> Self {
        BigRational::one()
    }
    fn is_zero_elem(&self) -> bool {
        self.is_zero()
    }
    fn sub_elem(&self, o: &Self) -> Self {
        self - o
    }
    fn mul_elem(&self, o: &Self) -> Self {
        self * o
    }
    fn inv_elem(&self) -> Self {
        self.recip()
    }
}

/// Right-hand-side values: a vector space over `F`.
pub trait Module<F>: Clone {
    fn is_zero_vec(&self) -> bool;
    /// `self − s·o`.
    fn sub_scaled(&self, s: &F, o: &Self) -> Self;
    fn scaled(&self, s: &F) -> Self;
}

impl<F: FieldElem> Module<F> for F {
    fn is_zero_vec(&self) -> bool {
        self.is_zero_elem()
    }
    fn sub_scaled(&self, s: &F, o: &Self) -> Self {
        self.sub_elem(&s.mul_elem(o))
    }
    fn scaled(&self, s: &F) -> Self {
        self.mul_elem(s)
    }
}

impl Module<AlgebraicScalar> for ExpCoefficient {
    fn is_zero_vec(&self) -> bool {
        self.is_zero()
    }
    fn sub_scaled(&self, s: &AlgebraicScalar, o: &Self) -> Self {
        self - &o.scale(&ComplexAlgebraic::real(s.clone()))
    }
    fn scaled(&self, s: &AlgebraicScalar) -> Self {
        self.scale(&ComplexAlgebraic::real(s.clone()))
    }
}

/// Reduced row echelon form in place; returns pivot columns.
pub fn rref<F: FieldElem>(m: &mut [Vec<F>], ncols: usize) -> Vec<usize> {
    rref_with_rhs::<F, F>(m, ncols, &mut [])
}

/// Reduced row echelon form, applying the same row operations to one
/// right-hand-side value per row (`rhs` may be empty).
pub fn rref_with_rhs<F: FieldElem, R: Module<F>>(m: &mut [Vec<F>], ncols: usize, rhs: &mut [R]) -> Vec<usize> {
    let with_rhs = !rhs.is_empty();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == m.len() {
            break;
        }
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero_elem()) else {
            continue;
        };
        m.swap(r, p);
        if with_rhs {
            rhs.swap(r, p);
        }
        let inv = m[r][c].inv_elem();
        for x in m[r].iter_mut() {
            *x = x.mul_elem(&inv);
        }
        if with_rhs {
            rhs[r] = rhs[r].scaled(&inv);
        }
        for i in 0..m.len() {
            if i == r || m[i][c].is_zero_elem() {
                continue;
            }
            let f = m[i][c].clone();
            let (row, pivot) = row_pair(m, i, r);
            for (x, p) in row.iter_mut().zip(pivot) {
                *x = x.sub_elem(&f.mul_elem(p));
            }
            if with_rhs {
                let v = rhs[i].sub_scaled(&f, &rhs[r]);
                rhs[i] = v;
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank<F: FieldElem>(m: &[Vec<F>], ncols: usize) -> usize {
    let mut m = m.to_vec();
    rref(&mut m, ncols).len()
}

/// Basis of {x : m·x = 0}. `one` supplies the field's unit.
pub fn kernel<F: FieldElem>(m: &[Vec<F>], ncols: usize, one: &F) -> Vec<Vec<F>> {
    let mut m = m.to_vec();
    let pivots = rref(&mut m, ncols);
    let zero = one.zero_like();
    let mut out = Vec::new();
    for free in (0..ncols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![zero.clone(); ncols];
        v[free] = one.clone();
        for (row, &pc) in pivots.iter().enumerate() {
            v[pc] = zero.sub_elem(&m[row][free]);
        }
        out.push(v);
    }
    out
}

/// Solution of `m·x = b` with free variables set to zero, plus a kernel
/// basis; `None` when the system is inconsistent.
pub fn solve<F: FieldElem, R: Module<F>>(
    m: &[Vec<F>],
    ncols: usize,
    b: &[R],
    one: &F,
    zero_rhs: &R,
) -> Option<(Vec<R>, Vec<Vec<F>>)> {
    let mut a = m.to_vec();
    let mut rhs = b.to_vec();
    let pivots = rref_with_rhs(&mut a, ncols, &mut rhs);
    if rhs[pivots.len()..].iter().any(|r| !r.is_zero_vec()) {
        return None;
    }
    let mut x = vec![zero_rhs.clone(); ncols];
    for (row, &pc) in pivots.iter().enumerate() {
        x[pc] = rhs[row].clone();
    }
    Some((x, kernel(m, ncols, one)))
}

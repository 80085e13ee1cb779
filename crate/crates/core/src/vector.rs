//! Small helpers for vectors with coordinates in the declared field.

use std::sync::Arc;

use crate::scalar::{AlgebraicScalar, NumberField};

pub type FieldVector = Vec<AlgebraicScalar>;

pub fn zeros(field: &Arc<NumberField>, d: usize) -> FieldVector {
    vec![AlgebraicScalar::zero(field); d]
}

pub fn unit(field: &Arc<NumberField>, d: usize, i: usize) -> FieldVector {
    let mut v = zeros(field, d);
    v[i] = AlgebraicScalar::one(field);
    v
}

pub fn from_ints(field: &Arc<NumberField>, xs: &[i64]) -> FieldVector {
    xs.iter().map(|&x| AlgebraicScalar::from_int(field, x)).collect()
}

pub fn add(a: &[AlgebraicScalar], b: &[AlgebraicScalar]) -> FieldVector {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[AlgebraicScalar], b: &[AlgebraicScalar]) -> FieldVector {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[AlgebraicScalar], s: &AlgebraicScalar) -> FieldVector {
    a.iter().map(|x| x * s).collect()
}

pub fn scale_int(a: &[AlgebraicScalar], n: i64) -> FieldVector {
    let s = num_rational::BigRational::from_integer(n.into());
    a.iter().map(|x| x.scale(&s)).collect()
}

pub fn neg(a: &[AlgebraicScalar]) -> FieldVector {
    a.iter().map(|x| -x).collect()
}

pub fn dot(a: &[AlgebraicScalar], b: &[AlgebraicScalar]) -> AlgebraicScalar {
    crate::scalar::dot(a, b)
}

pub fn is_zero(a: &[AlgebraicScalar]) -> bool {
    a.iter().all(AlgebraicScalar::is_zero)
}

pub fn to_f64(a: &[AlgebraicScalar]) -> Vec<f64> {
    a.iter().map(AlgebraicScalar::to_f64).collect()
}

/// `M·x` for a row-major matrix.
pub fn mat_vec(m: &[FieldVector], x: &[AlgebraicScalar]) -> FieldVector {
    m.iter().map(|row| dot(row, x)).collect()
}

/// Orthogonal basis of span(vectors) by Gram–Schmidt without normalization,
/// so everything stays in the field.
pub fn orthogonal_basis(vectors: &[FieldVector]) -> Vec<FieldVector> {
    let mut basis: Vec<FieldVector> = Vec::new();
    for v in vectors {
        let r = reject(v, &basis);
        if !is_zero(&r) {
            basis.push(r);
        }
    }
    basis
}

/// Component of `v` orthogonal to the span of an orthogonal family.
pub fn reject(v: &[AlgebraicScalar], orthogonal: &[FieldVector]) -> FieldVector {
    let mut r = v.to_vec();
    for b in orthogonal {
        let num = dot(&r, b);
        if num.is_zero() {
            continue;
        }
        let coef = num.div(&dot(b, b)).expect("nonzero basis vector");
        r = sub(&r, &scale(b, &coef));
    }
    r
}

/// Orthogonal projection matrix onto span of an orthogonal family.
pub fn projector(field: &Arc<NumberField>, d: usize, orthogonal: &[FieldVector]) -> Vec<FieldVector> {
    let mut m = vec![zeros(field, d); d];
    for b in orthogonal {
        let inv = dot(b, b).inv().expect("nonzero basis vector");
        for i in 0..d {
            for j in 0..d {
                m[i][j] = &m[i][j] + &(&(&b[i] * &b[j]) * &inv);
            }
        }
    }
    m
}

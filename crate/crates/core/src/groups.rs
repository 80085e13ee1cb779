//! Closures of finitely generated subgroups of ℝ^d with field coordinates,
//! split as a subspace V plus a discrete group Λ ⊂ V^⊥, and the hyperplane
//! frame used to build non-analytic solutions.
//!
//! With φ(n) = Σ n_k h_k on ℝ^t and U = ker φ, the closure of the group is
//! φ(ℤ^t) + φ(U^ℚ), where U^ℚ is the smallest rationally defined subspace
//! containing U. Since φ is defined over the field, U^ℚ is spanned by the
//! rational coordinate vectors of a field basis of the kernel.

use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::linalg::{kernel, rank, row_pair, rref, solve};
use crate::scalar::{AlgebraicScalar, NumberField, ScalarError};
use crate::vector::{self, FieldVector};

#[derive(Clone, Debug)]
pub struct GroupClosure {
    pub field: Arc<NumberField>,
    pub dim: usize,
    pub generators: Vec<FieldVector>,
    /// Reduced echelon basis of V.
    pub v_basis: Vec<FieldVector>,
    /// Hermite-reduced basis of Λ, orthogonal to V.
    pub lambda_basis: Vec<FieldVector>,
    /// Row k: integers z with P_{V^⊥}(h_k) = Σ_j z_j λ_j.
    pub lambda_coefficients: Vec<Vec<BigInt>>,
    pub dense: bool,
    /// Rounds of the kernel/rational-closure loop that enlarged V.
    pub rounds: usize,
}

impl GroupClosure {
    pub fn is_dense(&self) -> bool {
        self.dense
    }

    /// Orthogonal field basis of V.
    pub fn v_orthogonal(&self) -> Vec<FieldVector> {
        vector::orthogonal_basis(&self.v_basis)
    }

    /// Orthogonal projection onto V^⊥.
    pub fn project_out_v(&self, z: &[AlgebraicScalar]) -> FieldVector {
        vector::reject(z, &self.v_orthogonal())
    }

    /// Orthogonal projection onto V.
    pub fn project_v(&self, z: &[AlgebraicScalar]) -> FieldVector {
        vector::sub(z, &self.project_out_v(z))
    }
}

fn check_generators(generators: &[FieldVector]) -> Result<(Arc<NumberField>, usize)> {
    let first = generators.first().ok_or(Error::EmptyInput("generators"))?;
    let d = first.len();
    if d == 0 {
        return Err(Error::EmptyInput("generator coordinates"));
    }
    let field = first[0].field().clone();
    for g in generators {
        if g.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: g.len() });
        }
        if g.iter().any(|x| !x.field().same_as(&field)) {
            return Err(ScalarError::FieldMismatch.into());
        }
    }
    Ok((field, d))
}

/// Closure decomposition of h_1ℤ + ⋯ + h_tℤ.
pub fn group_closure(generators: &[FieldVector]) -> Result<GroupClosure> {
    let (field, d) = check_generators(generators)?;
    let one = AlgebraicScalar::one(&field);
    let mut v_span: Vec<FieldVector> = Vec::new();
    let mut current = generators.to_vec();
    let mut rounds = 0;
    loop {
        let extra = rational_closure_image(&current, d, &one);
        let before = rank(&v_span, d);
        v_span.extend(extra);
        if rank(&v_span, d) == before {
            break;
        }
        rounds += 1;
        if rounds > d {
            return Err(Error::Internal("closure recursion exceeded the dimension cap".into()));
        }
        let orth = vector::orthogonal_basis(&v_span);
        current = generators.iter().map(|h| vector::reject(h, &orth)).collect();
    }
    let mut v_basis = v_span;
    let pivots = rref(&mut v_basis, d);
    v_basis.truncate(pivots.len());

    let (lambda_basis, lambda_coefficients) = lattice_basis(&field, &current)?;
    if rank(&lambda_basis, d) != lambda_basis.len() {
        return Err(Error::Internal("lattice part is not discrete".into()));
    }
    let dense = v_basis.len() == d && lambda_basis.is_empty();
    Ok(GroupClosure {
        field,
        dim: d,
        generators: generators.to_vec(),
        v_basis,
        lambda_basis,
        lambda_coefficients,
        dense,
        rounds,
    })
}

pub fn group_is_dense(c: &GroupClosure) -> bool {
    c.dense
}

/// φ(U^ℚ) for the generator matrix of `gens`.
fn rational_closure_image(gens: &[FieldVector], d: usize, one: &AlgebraicScalar) -> Vec<FieldVector> {
    let t = gens.len();
    let field = one.field();
    let h: Vec<FieldVector> = (0..d).map(|i| gens.iter().map(|g| g[i].clone()).collect()).collect();
    let ker = kernel(&h, t, one);
    let n = field.degree();
    let mut rational: Vec<Vec<BigRational>> = Vec::new();
    for c in &ker {
        for j in 0..n {
            rational.push(c.iter().map(|x| x.coords()[j].clone()).collect());
        }
    }
    let pivots = rref(&mut rational, t);
    rational.truncate(pivots.len());
    rational
        .iter()
        .map(|u| {
            let mut acc = vector::zeros(field, d);
            for (g, q) in gens.iter().zip(u) {
                if !q.is_zero() {
                    acc = vector::add(&acc, &g.iter().map(|x| x.scale(q)).collect::<Vec<_>>());
                }
            }
            acc
        })
        .filter(|v| !vector::is_zero(v))
        .collect()
}

fn flatten_coords(v: &[AlgebraicScalar]) -> Vec<BigRational> {
    v.iter().flat_map(|x| x.coords().iter().cloned()).collect()
}

fn unflatten_coords(field: &Arc<NumberField>, flat: &[BigRational], d: usize) -> Result<FieldVector> {
    let n = field.degree();
    (0..d)
        .map(|i| AlgebraicScalar::from_coords(field, flat[i * n..(i + 1) * n].to_vec()).map_err(Error::from))
        .collect()
}

/// Hermite basis of the ℤ-span of `vecs`, via their rational coordinates,
/// and the integer coordinates of each input in that basis.
fn lattice_basis(field: &Arc<NumberField>, vecs: &[FieldVector]) -> Result<(Vec<FieldVector>, Vec<Vec<BigInt>>)> {
    let d = vecs.first().map(Vec::len).unwrap_or(0);
    let flat: Vec<Vec<BigRational>> = vecs.iter().map(|v| flatten_coords(v)).collect();
    let cols = flat.first().map(Vec::len).unwrap_or(0);
    let mut den = BigInt::one();
    for row in &flat {
        for q in row {
            den = den.lcm(q.denom());
        }
    }
    let ints: Vec<Vec<BigInt>> = flat
        .iter()
        .map(|row| row.iter().map(|q| (q * BigRational::from_integer(den.clone())).to_integer()).collect())
        .collect();
    let hnf = hermite_normal_form(ints, cols);
    let basis_flat: Vec<Vec<BigRational>> =
        hnf.iter().map(|row| row.iter().map(|x| BigRational::new(x.clone(), den.clone())).collect()).collect();
    let basis = basis_flat.iter().map(|row| unflatten_coords(field, row, d)).collect::<Result<Vec<_>>>()?;
    let r = basis_flat.len();
    // Solve Σ_j z_j b_j = v over ℚ, columns are basis vectors.
    let mat: Vec<Vec<BigRational>> = (0..cols).map(|c| basis_flat.iter().map(|b| b[c].clone()).collect()).collect();
    let mut coefficients = Vec::with_capacity(vecs.len());
    for v in &flat {
        if r == 0 {
            coefficients.push(Vec::new());
            continue;
        }
        let (x, _) = solve(&mat, r, v, &BigRational::one(), &BigRational::zero())
            .ok_or_else(|| Error::Internal("generator outside its own lattice".into()))?;
        if x.iter().any(|q| !q.is_integer()) {
            return Err(Error::Internal("non-integral lattice coordinates".into()));
        }
        coefficients.push(x.into_iter().map(|q| q.to_integer()).collect());
    }
    Ok((basis, coefficients))
}

/// Row-style Hermite normal form: nonzero rows only, pivots positive and
/// strictly increasing, entries above each pivot reduced into [0, pivot).
pub fn hermite_normal_form(mut rows: Vec<Vec<BigInt>>, cols: usize) -> Vec<Vec<BigInt>> {
    let mut r = 0;
    for c in 0..cols {
        if r == rows.len() {
            break;
        }
        loop {
            let nonzero: Vec<usize> = (r..rows.len()).filter(|&i| !rows[i][c].is_zero()).collect();
            if nonzero.is_empty() {
                break;
            }
            let p = *nonzero.iter().min_by(|&&a, &&b| rows[a][c].abs().cmp(&rows[b][c].abs())).unwrap();
            rows.swap(r, p);
            let mut done = true;
            for i in r + 1..rows.len() {
                if rows[i][c].is_zero() {
                    continue;
                }
                let q = rows[i][c].div_floor(&rows[r][c]);
                let (row, pivot) = row_pair(&mut rows, i, r);
                for (x, p) in row.iter_mut().zip(pivot) {
                    *x = &*x - &q * p;
                }
                if !rows[i][c].is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if rows[r][c].is_zero() {
            continue;
        }
        if rows[r][c].is_negative() {
            for x in rows[r].iter_mut() {
                *x = -x.clone();
            }
        }
        for i in 0..r {
            let q = rows[i][c].div_floor(&rows[r][c]);
            if q.is_zero() {
                continue;
            }
            let (row, pivot) = row_pair(&mut rows, i, r);
            for (x, p) in row.iter_mut().zip(pivot) {
                *x = &*x - &q * p;
            }
        }
        r += 1;
    }
    rows.truncate(r);
    rows
}

/// The data (Ṽ, w, r, s, p_k) of a hyperplane transverse to the closure.
///
/// w is a field normal of Ṽ, not normalized, and s(z) = ⟨z,w⟩/⟨w,w⟩, so
/// z = P_Ṽ(z) + s(z)·w and s(w) = 1.
#[derive(Clone, Debug)]
pub struct HyperplaneFrame {
    pub field: Arc<NumberField>,
    pub dim: usize,
    pub vt_basis: Vec<FieldVector>,
    pub w: FieldVector,
    pub w_norm2: AlgebraicScalar,
    pub r: AlgebraicScalar,
    pub p: Vec<BigInt>,
    /// s(λ_j) for the closure's Λ basis.
    pub s_lambda: Vec<AlgebraicScalar>,
}

impl HyperplaneFrame {
    pub fn s(&self, z: &[AlgebraicScalar]) -> AlgebraicScalar {
        vector::dot(z, &self.w).div(&self.w_norm2).expect("nonzero normal")
    }

    /// (P_Ṽ(z), s(z)).
    pub fn project(&self, z: &[AlgebraicScalar]) -> (FieldVector, AlgebraicScalar) {
        let s = self.s(z);
        (vector::sub(z, &vector::scale(&self.w, &s)), s)
    }

    pub fn project_f64(&self, z: &[f64]) -> (Vec<f64>, f64) {
        let w = vector::to_f64(&self.w);
        let n2 = self.w_norm2.to_f64();
        let s = z.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / n2;
        (z.iter().zip(&w).map(|(a, b)| a - s * b).collect(), s)
    }

    /// Matrix of P_Ṽ by rows.
    pub fn projector(&self) -> Vec<FieldVector> {
        let n = vector::projector(&self.field, self.dim, std::slice::from_ref(&self.w));
        (0..self.dim)
            .map(|i| {
                (0..self.dim)
                    .map(|j| {
                        let id =
                            if i == j { AlgebraicScalar::one(&self.field) } else { AlgebraicScalar::zero(&self.field) };
                        &id - &n[i][j]
                    })
                    .collect()
            })
            .collect()
    }

    /// r·w, the generator of the lattice transverse to Ṽ.
    pub fn lattice_step(&self) -> FieldVector {
        vector::scale(&self.w, &self.r)
    }
}

/// Builds the frame with Ṽ = V ⊕ span(all Λ vectors but the last) ⊕ a
/// completion orthogonal to V ⊕ span(Λ).
pub fn frame_build(c: &GroupClosure) -> Result<HyperplaneFrame> {
    if c.dense {
        return Err(Error::DenseGroup);
    }
    let d = c.dim;
    let mut vt: Vec<FieldVector> = c.v_basis.clone();
    if let Some((_, head)) = c.lambda_basis.split_last() {
        vt.extend(head.iter().cloned());
    }
    let mut occupied: Vec<FieldVector> = c.v_basis.iter().chain(&c.lambda_basis).cloned().collect();
    for i in 0..d {
        if vt.len() + 1 >= d {
            break;
        }
        let e = vector::unit(&c.field, d, i);
        let orth = vector::orthogonal_basis(&occupied);
        let r = vector::reject(&e, &orth);
        if !vector::is_zero(&r) {
            vt.push(r.clone());
            occupied.push(r);
        }
    }
    frame_with_hyperplane(c, &vt)
}

/// Builds the frame for a given hyperplane Ṽ ⊇ V.
pub fn frame_with_hyperplane(c: &GroupClosure, vt_basis: &[FieldVector]) -> Result<HyperplaneFrame> {
    if c.dense {
        return Err(Error::DenseGroup);
    }
    let d = c.dim;
    if vt_basis.iter().any(|v| v.len() != d) {
        return Err(Error::FrameInvalid("hyperplane vectors have the wrong dimension".into()));
    }
    let orth = vector::orthogonal_basis(vt_basis);
    if orth.len() + 1 != d {
        return Err(Error::FrameInvalid(format!("hyperplane has dimension {}, expected {}", orth.len(), d - 1)));
    }
    if c.v_basis.iter().any(|v| !vector::is_zero(&vector::reject(v, &orth))) {
        return Err(Error::FrameInvalid("hyperplane does not contain V".into()));
    }
    let mut w = (0..d)
        .map(|i| vector::reject(&vector::unit(&c.field, d, i), &orth))
        .find(|r| !vector::is_zero(r))
        .ok_or_else(|| Error::FrameInvalid("no normal direction".into()))?;
    let w_norm2 = vector::dot(&w, &w);
    let s = |z: &[AlgebraicScalar]| vector::dot(z, &w).div(&w_norm2).expect("nonzero normal");
    let s_lambda: Vec<AlgebraicScalar> = c.lambda_basis.iter().map(|l| s(l)).collect();
    let mut r = discrete_generator(&c.field, &s_lambda)?;
    if r.sign() < 0 {
        r = -r;
    }
    let flip = s_lambda.iter().rev().find(|x| !x.is_zero()).is_some_and(|x| x.sign() < 0);
    if flip {
        w = vector::neg(&w);
    }
    let s_lambda: Vec<AlgebraicScalar> = if flip { s_lambda.iter().map(|x| -x).collect() } else { s_lambda };
    let w_norm2 = vector::dot(&w, &w);
    let mut p = Vec::with_capacity(c.generators.len());
    for h in &c.generators {
        let sh = vector::dot(h, &w).div(&w_norm2)?;
        let ratio = sh.div(&r)?;
        match ratio.as_rational() {
            Some(q) if q.is_integer() => p.push(q.to_integer()),
            _ => return Err(Error::NonIntegralRatio),
        }
    }
    Ok(HyperplaneFrame { field: c.field.clone(), dim: d, vt_basis: vt_basis.to_vec(), w, w_norm2, r, p, s_lambda })
}

/// Positive generator r of the group Σ ℤ x_j ⊂ ℝ when it is discrete
/// (all ratios rational); 1 for the zero group.
fn discrete_generator(field: &Arc<NumberField>, xs: &[AlgebraicScalar]) -> Result<AlgebraicScalar> {
    let Some(base) = xs.iter().find(|x| !x.is_zero()) else {
        return Ok(AlgebraicScalar::one(field));
    };
    let mut num_gcd = BigInt::zero();
    let mut den_lcm = BigInt::one();
    for x in xs {
        let q = x.div(base)?;
        let q =
            q.as_rational().cloned().ok_or_else(|| Error::FrameInvalid("Ṽ + Λ is dense along the normal".into()))?;
        num_gcd = num_gcd.gcd(q.numer());
        den_lcm = den_lcm.lcm(q.denom());
    }
    let g = BigRational::new(num_gcd, den_lcm);
    let r = base.scale(&g);
    Ok(if r.sign() < 0 { -r } else { r })
}

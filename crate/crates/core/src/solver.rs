//! Recovering an exponential polynomial from prescribed forward
//! differences, the joint polynomial kernel, and numerical slices of a
//! function along the cosets of a non-dense closure.
//!
//! Δ_h^m maps p(x)e^{λ·x} to (T p)(x)e^{λ·x}, where T is triangular in the
//! graded order with diagonal (e^{λ·h} − 1)^m. For λ ≠ 0 and a dense step
//! set some λ·h_k is nonzero, the diagonal is then a nonzero element of the
//! exponential ring and the λ-block is solved by back substitution. The
//! λ = 0 block is a linear system over the field.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::construct::EvaluableFunction;
use crate::error::{Error, Result};
use crate::exppoly::{is_zero_frequency, zero_frequency, Atom, CompiledExpPoly, ExpPolynomial, Frequency, MultiIndex};
use crate::groups::{group_closure, GroupClosure};
use crate::linalg;
use crate::numeric::least_squares;
use crate::opalg::TranslationPolynomial;
use crate::scalar::{complex_dot, AlgebraicScalar, ComplexAlgebraic, ExpCoefficient, NumberField};
use crate::subspace::FunctionSubspace;
use crate::vector::{self, FieldVector};

/// Δ_{h_k}^{m_k} f = g_k for all k.
#[derive(Clone, Debug)]
pub struct DifferenceSystem {
    pub field: Arc<NumberField>,
    pub dim: usize,
    pub steps: Vec<(FieldVector, u32)>,
    pub rhs: Vec<ExpPolynomial>,
}

impl DifferenceSystem {
    pub fn new(field: &Arc<NumberField>, steps: Vec<(FieldVector, u32)>, rhs: Vec<ExpPolynomial>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::EmptyInput("steps"));
        }
        if steps.len() != rhs.len() {
            return Err(Error::DimensionMismatch { expected: steps.len(), found: rhs.len() });
        }
        let dim = steps[0].0.len();
        for (h, m) in &steps {
            if h.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: h.len() });
            }
            if *m == 0 {
                return Err(Error::Malformed("difference orders must be positive".into()));
            }
        }
        if let Some(g) = rhs.iter().find(|g| g.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: g.dim() });
        }
        Ok(DifferenceSystem { field: field.clone(), dim, steps, rhs })
    }

    /// The system with right-hand sides Δ_{h_k}^{m_k} f.
    pub fn from_function(f: &ExpPolynomial, steps: Vec<(FieldVector, u32)>) -> Result<Self> {
        let rhs = steps.iter().map(|(h, m)| f.forward_difference(h, *m)).collect::<Result<Vec<_>>>()?;
        Self::new(f.field(), steps, rhs)
    }

    pub fn closure(&self) -> Result<GroupClosure> {
        let gens: Vec<FieldVector> = self.steps.iter().map(|(h, _)| h.clone()).collect();
        group_closure(&gens)
    }
}

/// Degree bound D_λ for one frequency of the ansatz.
#[derive(Clone, Debug, PartialEq)]
pub struct AnsatzEntry {
    pub freq: Frequency,
    pub degree_bound: u32,
}

#[derive(Clone, Debug)]
pub struct Ansatz {
    pub entries: Vec<AnsatzEntry>,
    /// Degree actually searched for λ = 0: D_0, raised to Σ(m_k − 1) when
    /// that is larger so homogeneous joint-kernel polynomials fit.
    pub zero_degree_searched: u32,
}

impl Ansatz {
    pub fn atoms(&self) -> Vec<Atom> {
        let mut out = Vec::new();
        for e in &self.entries {
            let d = e.freq.len();
            let deg = if is_zero_frequency(&e.freq) { self.zero_degree_searched } else { e.degree_bound };
            for alpha in MultiIndex::up_to_degree(d, deg) {
                out.push(Atom { alpha, freq: e.freq.clone() });
            }
        }
        out.sort();
        out
    }
}

fn require_dense(sys: &DifferenceSystem) -> Result<()> {
    if !sys.closure()?.dense {
        return Err(Error::NotDense);
    }
    Ok(())
}

/// Frequencies and degree bounds of the exponential polynomials that can
/// solve the system.
pub fn solver_ansatz(sys: &DifferenceSystem) -> Result<Ansatz> {
    require_dense(sys)?;
    Ok(ansatz_unchecked(sys))
}

fn ansatz_unchecked(sys: &DifferenceSystem) -> Ansatz {
    let zero = zero_frequency(&sys.field, sys.dim);
    let mut freqs: BTreeMap<Frequency, ()> = BTreeMap::new();
    freqs.insert(zero.clone(), ());
    for g in &sys.rhs {
        for f in g.frequencies() {
            freqs.insert(f.clone(), ());
        }
    }
    let mut entries = Vec::new();
    for freq in freqs.into_keys() {
        let bound = if is_zero_frequency(&freq) {
            sys.steps.iter().zip(&sys.rhs).map(|((_, m), g)| g.degree_at(&freq).unwrap_or(0) + m).max().unwrap_or(0)
        } else {
            sys.steps
                .iter()
                .zip(&sys.rhs)
                .filter_map(|((h, m), g)| {
                    let deg = g.degree_at(&freq)?;
                    Some(if complex_dot(&freq, h).is_zero() { deg + m } else { deg })
                })
                .max()
                .unwrap_or(0)
        };
        entries.push(AnsatzEntry { freq, degree_bound: bound });
    }
    let kernel_degree: u32 = sys.steps.iter().map(|(_, m)| m - 1).sum();
    let zero_bound = entries.iter().find(|e| e.freq == zero).map(|e| e.degree_bound).unwrap_or(0);
    Ansatz { entries, zero_degree_searched: zero_bound.max(kernel_degree) }
}

#[derive(Clone, Debug)]
pub struct SolutionBundle {
    pub particular: ExpPolynomial,
    pub kernel_basis: Vec<ExpPolynomial>,
    pub ansatz: Ansatz,
}

/// Exact solution of the system, unique up to the returned kernel.
pub fn solver_solve(sys: &DifferenceSystem) -> Result<SolutionBundle> {
    require_dense(sys)?;
    let ansatz = ansatz_unchecked(sys);
    let field = &sys.field;
    let mut particular = ExpPolynomial::zero(field, sys.dim);
    for entry in &ansatz.entries {
        if is_zero_frequency(&entry.freq) {
            continue;
        }
        particular = particular.try_add(&solve_frequency_block(sys, &entry.freq)?)?;
    }
    let (poly_part, kernel_basis) = solve_polynomial_block(sys, ansatz.zero_degree_searched, true)?;
    particular = particular.try_add(&poly_part)?;
    for ((h, m), g) in sys.steps.iter().zip(&sys.rhs) {
        if particular.forward_difference(h, *m)? != *g {
            return Err(Error::Inconsistent);
        }
    }
    for k in &kernel_basis {
        for (h, m) in &sys.steps {
            if !k.forward_difference(h, *m)?.is_zero() {
                return Err(Error::Internal("kernel element is not annihilated".into()));
            }
        }
    }
    Ok(SolutionBundle { particular, kernel_basis, ansatz })
}

/// Back substitution for the λ-component through one equation with
/// λ·h ≠ 0.
fn solve_frequency_block(sys: &DifferenceSystem, freq: &[ComplexAlgebraic]) -> Result<ExpPolynomial> {
    let field = &sys.field;
    let driver = sys
        .steps
        .iter()
        .enumerate()
        .filter(|(_, (h, _))| !complex_dot(freq, h).is_zero())
        .min_by_key(|(_, (_, m))| *m)
        .map(|(k, _)| k)
        .ok_or(Error::NotDense)?;
    let (h, m) = &sys.steps[driver];
    let diag = (&ExpCoefficient::exp(complex_dot(freq, h)) - &ExpCoefficient::one(field)).pow(*m);
    let mut residual = sys.rhs[driver].component(freq);
    let mut p = ExpPolynomial::zero(field, sys.dim);
    while let Some(atom) = residual.leading_atom() {
        let c = residual.coefficient(&atom).expect("leading atom present");
        let q = c.div_exact(&diag).ok_or(Error::OutsideCoefficientRing)?;
        let term = ExpPolynomial::monomial(field, atom.freq.clone(), atom.alpha.clone(), q);
        residual = residual.try_sub(&term.forward_difference(h, *m)?)?;
        p = p.try_add(&term)?;
    }
    Ok(p)
}

/// The λ = 0 block over the field: a particular polynomial solution with
/// free coordinates set to zero, and the kernel.
fn solve_polynomial_block(
    sys: &DifferenceSystem,
    degree: u32,
    with_rhs: bool,
) -> Result<(ExpPolynomial, Vec<ExpPolynomial>)> {
    let field = &sys.field;
    let d = sys.dim;
    let zero = zero_frequency(field, d);
    let unknowns = MultiIndex::up_to_degree(d, degree);
    let n = unknowns.len();
    let mut rows: Vec<Vec<AlgebraicScalar>> = Vec::new();
    let mut rhs: Vec<ExpCoefficient> = Vec::new();
    for ((h, m), g) in sys.steps.iter().zip(&sys.rhs) {
        let images: Vec<ExpPolynomial> = unknowns
            .iter()
            .map(|a| ExpPolynomial::power(field, &a.0).forward_difference(h, *m))
            .collect::<Result<_>>()?;
        let mut targets: BTreeMap<MultiIndex, ExpCoefficient> = BTreeMap::new();
        for img in &images {
            for (_, a, _) in img.terms() {
                targets.entry(a.clone()).or_insert_with(|| ExpCoefficient::zero(field));
            }
        }
        if with_rhs {
            if let Some((_, poly)) = g.blocks().find(|(f, _)| **f == zero) {
                for (a, c) in poly {
                    targets.insert(a.clone(), c.clone());
                }
            }
        }
        for (beta, value) in targets {
            let atom = Atom { alpha: beta, freq: zero.clone() };
            let row: Vec<AlgebraicScalar> = images
                .iter()
                .map(|img| match img.coefficient(&atom) {
                    Some(c) => c.as_constant().expect("polynomial differences have constant coefficients").re,
                    None => AlgebraicScalar::zero(field),
                })
                .collect();
            rows.push(row);
            rhs.push(value);
        }
    }
    let one = AlgebraicScalar::one(field);
    let (x, ker) = if rows.is_empty() {
        let ker = (0..n).map(|i| {
            let mut v = vec![AlgebraicScalar::zero(field); n];
            v[i] = one.clone();
            v
        });
        (vec![ExpCoefficient::zero(field); n], ker.collect())
    } else {
        linalg::solve(&rows, n, &rhs, &one, &ExpCoefficient::zero(field)).ok_or(Error::Inconsistent)?
    };
    let particular = ExpPolynomial::from_atoms(
        field,
        d,
        unknowns.iter().zip(x).map(|(a, c)| (Atom { alpha: a.clone(), freq: zero.clone() }, c)),
    );
    let kernel = ker
        .into_iter()
        .map(|v| {
            ExpPolynomial::from_atoms(
                field,
                d,
                unknowns.iter().zip(v).map(|(a, c)| {
                    (Atom { alpha: a.clone(), freq: zero.clone() }, ExpCoefficient::constant(ComplexAlgebraic::real(c)))
                }),
            )
        })
        .collect();
    Ok((particular, kernel))
}

/// Polynomials of degree ≤ `cap` annihilated by every Δ_{h_k}^{m_k}.
pub fn solver_kernel(field: &Arc<NumberField>, steps: &[(FieldVector, u32)], cap: u32) -> Result<Vec<ExpPolynomial>> {
    let sys = homogeneous(field, steps)?;
    require_dense(&sys)?;
    Ok(solve_polynomial_block(&sys, cap, false)?.1)
}

/// [`solver_kernel`] without the density gate.
pub fn polynomial_kernel(
    field: &Arc<NumberField>,
    steps: &[(FieldVector, u32)],
    cap: u32,
) -> Result<Vec<ExpPolynomial>> {
    let sys = homogeneous(field, steps)?;
    Ok(solve_polynomial_block(&sys, cap, false)?.1)
}

fn homogeneous(field: &Arc<NumberField>, steps: &[(FieldVector, u32)]) -> Result<DifferenceSystem> {
    let d = steps.first().map(|(h, _)| h.len()).ok_or(Error::EmptyInput("steps"))?;
    DifferenceSystem::new(field, steps.to_vec(), vec![ExpPolynomial::zero(field, d); steps.len()])
}

/// Sampling of V: `n` points per coordinate of an orthogonal basis of V,
/// over [min, max]. Held-out points are the cell midpoints.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SliceGrid {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

/// Fit of x ↦ f(x + λ) on V.
#[derive(Clone, Debug)]
pub struct CosetSlice {
    pub lambda: FieldVector,
    /// Candidate functions; the slice is Σ coefficients[i]·basis[i].
    pub basis: Arc<Vec<ExpPolynomial>>,
    compiled: Arc<Vec<CompiledExpPoly>>,
    pub coefficients: Vec<Complex64>,
    pub rank: usize,
    pub fit_residual: f64,
    pub heldout_residual: f64,
}

impl CosetSlice {
    pub fn eval(&self, x: &[f64]) -> Complex64 {
        self.compiled.iter().zip(&self.coefficients).filter(|(_, c)| c.norm() > 0.0).map(|(b, c)| c * b.eval(x)).sum()
    }
}

/// Report of [`coset_fit`].
#[derive(Clone, Debug)]
pub struct CosetFit {
    pub slices: Vec<CosetSlice>,
    /// Dimension of the diamond closure of H.
    pub h_tilde_dim: usize,
    /// Steps used for the kernel part: projected generators with order N,
    /// then V^⊥ directions with order 1.
    pub kernel_steps: Vec<(FieldVector, u32)>,
    pub kernel_dim: usize,
    /// Size of the fitting grid.
    pub grid_points: usize,
    /// Held-out points, in ℝ^d.
    pub heldout_points: Vec<Vec<f64>>,
}

/// Fits f(x + λ), x ∈ V, inside (H̃∘P_V) + (kernel polynomials) for each λ.
pub fn coset_fit(
    f: &EvaluableFunction,
    closure: &GroupClosure,
    orders: &[(FieldVector, u32)],
    h: &FunctionSubspace,
    lambdas: &[FieldVector],
    grid: SliceGrid,
) -> Result<CosetFit> {
    if closure.dense {
        return Err(Error::DenseGroup);
    }
    let field = &closure.field;
    let d = closure.dim;
    if f.dim() != d || h.dim_ambient() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: if f.dim() != d { f.dim() } else { h.dim_ambient() },
        });
    }
    if grid.n < 2 || grid.max <= grid.min {
        return Err(Error::Malformed("slice grid needs n ≥ 2 and min < max".into()));
    }
    for l in lambdas {
        if !in_lattice(closure, l)? {
            return Err(Error::Malformed("λ is not in the lattice part of the closure".into()));
        }
    }
    let ops: Vec<(TranslationPolynomial, u32)> =
        orders.iter().map(|(hk, m)| (TranslationPolynomial::delta(field, hk, 1), *m)).collect();
    let h_tilde = h.diamond(&ops)?;

    let v_orth = closure.v_orthogonal();
    let p_v = vector::projector(field, d, &v_orth);
    let mut candidates: Vec<ExpPolynomial> =
        h_tilde.basis().iter().map(|b| b.compose_linear(&p_v)).collect::<Result<_>>()?;

    // Kernel polynomials are constant along V^⊥, so they are solved in the
    // coordinates of the orthogonal basis of V and pulled back.
    let n_total: u32 = orders.iter().map(|(_, m)| m).sum::<u32>().max(1);
    let coordinate_map: Vec<FieldVector> = v_orth
        .iter()
        .map(|v| {
            let n2 = vector::dot(v, v);
            v.iter().map(|x| x.div(&n2).expect("nonzero basis vector")).collect()
        })
        .collect();
    let mut kernel_steps: Vec<(FieldVector, u32)> = Vec::new();
    let mut coordinate_steps: Vec<(FieldVector, u32)> = Vec::new();
    for (hk, _) in orders {
        let projected = vector::mat_vec(&p_v, hk);
        if !vector::is_zero(&projected) {
            coordinate_steps.push((vector::mat_vec(&coordinate_map, hk), n_total));
            kernel_steps.push((projected, n_total));
        }
    }
    let theta = AlgebraicScalar::theta(field);
    let mut complement: Vec<FieldVector> = v_orth.clone();
    for i in 0..d {
        let r = vector::reject(&vector::unit(field, d, i), &vector::orthogonal_basis(&complement));
        if !vector::is_zero(&r) {
            complement.push(r.clone());
            kernel_steps.push((r.clone(), 1));
            if field.degree() > 1 {
                kernel_steps.push((vector::scale(&r, &theta), 1));
            }
        }
    }
    let kernel = if coordinate_steps.is_empty() {
        vec![ExpPolynomial::one(field, d)]
    } else {
        let cap: u32 = coordinate_steps.iter().map(|(_, m)| m - 1).sum();
        polynomial_kernel(field, &coordinate_steps, cap)?
            .iter()
            .map(|p| p.compose_linear(&coordinate_map))
            .collect::<Result<Vec<_>>>()?
    };
    let kernel_dim = kernel.len();
    candidates.extend(kernel);
    let basis = Arc::new(candidates);

    let v_f64: Vec<Vec<f64>> = v_orth
        .iter()
        .map(|v| {
            let x = vector::to_f64(v);
            let n = x.iter().map(|a| a * a).sum::<f64>().sqrt();
            x.iter().map(|a| a / n).collect()
        })
        .collect();
    let fit_pts = slice_points(&v_f64, d, grid, false);
    let held_pts = slice_points(&v_f64, d, grid, true);
    let compiled: Arc<Vec<CompiledExpPoly>> = Arc::new(basis.iter().map(ExpPolynomial::compile).collect());
    let columns_at = |pts: &[Vec<f64>]| -> Vec<Vec<Complex64>> {
        compiled.iter().map(|b| pts.iter().map(|x| b.eval(x)).collect()).collect()
    };
    let fit_cols = columns_at(&fit_pts);
    let held_cols = columns_at(&held_pts);

    let slices = lambdas
        .par_iter()
        .map(|l| {
            let lf = vector::to_f64(l);
            let shifted = |x: &Vec<f64>| -> Vec<f64> { x.iter().zip(&lf).map(|(a, b)| a + b).collect() };
            let g: Vec<Complex64> = fit_pts.iter().map(|x| f.eval(&shifted(x))).collect();
            let fit = least_squares(&fit_cols, &g)?;
            let heldout_residual = held_pts
                .iter()
                .enumerate()
                .map(|(i, x)| {
                    let model: Complex64 = held_cols.iter().zip(&fit.coefficients).map(|(c, a)| c[i] * a).sum();
                    (f.eval(&shifted(x)) - model).norm()
                })
                .fold(0.0, f64::max);
            Ok(CosetSlice {
                lambda: l.clone(),
                basis: basis.clone(),
                compiled: compiled.clone(),
                coefficients: fit.coefficients,
                rank: fit.rank,
                fit_residual: fit.max_residual,
                heldout_residual,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CosetFit {
        slices,
        h_tilde_dim: h_tilde.dim(),
        kernel_steps,
        kernel_dim,
        grid_points: fit_pts.len(),
        heldout_points: held_pts,
    })
}

fn in_lattice(c: &GroupClosure, l: &[AlgebraicScalar]) -> Result<bool> {
    if l.len() != c.dim {
        return Err(Error::DimensionMismatch { expected: c.dim, found: l.len() });
    }
    if vector::is_zero(l) {
        return Ok(true);
    }
    let r = c.lambda_basis.len();
    if r == 0 {
        return Ok(false);
    }
    let flat = |v: &[AlgebraicScalar]| -> Vec<num_rational::BigRational> {
        v.iter().flat_map(|x| x.coords().iter().cloned()).collect()
    };
    let cols: Vec<Vec<num_rational::BigRational>> = c.lambda_basis.iter().map(|v| flat(v)).collect();
    let rows: Vec<Vec<num_rational::BigRational>> =
        (0..cols[0].len()).map(|i| cols.iter().map(|c| c[i].clone()).collect()).collect();
    use num_traits::{One, Zero};
    Ok(match linalg::solve(&rows, r, &flat(l), &num_rational::BigRational::one(), &num_rational::BigRational::zero()) {
        Some((x, _)) => x.iter().all(|q| q.is_integer()),
        None => false,
    })
}

fn slice_points(v: &[Vec<f64>], d: usize, grid: SliceGrid, midpoints: bool) -> Vec<Vec<f64>> {
    let k = v.len();
    if k == 0 {
        return vec![vec![0.0; d]];
    }
    let step = (grid.max - grid.min) / (grid.n - 1) as f64;
    let per_axis: Vec<f64> = if midpoints {
        (0..grid.n - 1).map(|i| grid.min + (i as f64 + 0.5) * step).collect()
    } else {
        (0..grid.n).map(|i| grid.min + i as f64 * step).collect()
    };
    let total = per_axis.len().pow(k as u32);
    (0..total)
        .map(|mut idx| {
            let mut x = vec![0.0; d];
            for basis in v {
                let t = per_axis[idx % per_axis.len()];
                idx /= per_axis.len();
                for (xi, bi) in x.iter_mut().zip(basis) {
                    *xi += t * bi;
                }
            }
            x
        })
        .collect()
}

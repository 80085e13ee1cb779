//! Finite-dimensional spaces of exponential polynomials and their closures
//! under translation operators.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exppoly::ExpPolynomial;
use crate::linalg::Echelon;
use crate::opalg::TranslationPolynomial;
use crate::scalar::NumberField;

#[derive(Clone, Debug)]
pub struct FunctionSubspace {
    ech: Echelon,
}

impl FunctionSubspace {
    pub fn zero(field: &Arc<NumberField>, dim: usize) -> Self {
        FunctionSubspace { ech: Echelon::new(field, dim) }
    }

    /// Echelonized span of `generators`.
    pub fn span(field: &Arc<NumberField>, dim: usize, generators: &[ExpPolynomial]) -> Result<Self> {
        let mut ech = Echelon::new(field, dim);
        for g in generators {
            if g.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: g.dim() });
            }
            ech.insert(g.clone());
        }
        Ok(FunctionSubspace { ech })
    }

    pub fn field(&self) -> &Arc<NumberField> {
        self.ech.field()
    }

    pub fn dim_ambient(&self) -> usize {
        self.ech.dim_ambient()
    }

    pub fn dim(&self) -> usize {
        self.ech.len()
    }

    pub fn basis(&self) -> Vec<ExpPolynomial> {
        self.ech.basis()
    }

    pub fn echelon(&self) -> &Echelon {
        &self.ech
    }

    pub fn contains(&self, f: &ExpPolynomial) -> bool {
        f.dim() == self.dim_ambient() && self.ech.contains(f)
    }

    pub fn contains_space(&self, other: &FunctionSubspace) -> bool {
        other.basis().iter().all(|b| self.contains(b))
    }

    pub fn same_span(&self, other: &FunctionSubspace) -> bool {
        self.ech.same_span(&other.ech)
    }

    pub fn insert(&mut self, f: ExpPolynomial) -> bool {
        self.ech.insert(f)
    }

    pub fn sum(&self, other: &FunctionSubspace) -> FunctionSubspace {
        FunctionSubspace { ech: self.ech.union(&other.ech) }
    }

    /// L(V) ⊆ V, checked on the basis.
    pub fn is_invariant(&self, op: &TranslationPolynomial) -> Result<bool> {
        for b in self.ech.basis() {
            if !self.ech.contains(&op.apply(&b)?) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// V + L(V) + ⋯ + L^n(V), which is the smallest L-invariant space
    /// containing V when V is L^n-invariant.
    pub fn one_step_hull(&self, op: &TranslationPolynomial, n: u32) -> Result<FunctionSubspace> {
        self.one_step_hull_indexed(op, n, 0)
    }

    fn one_step_hull_indexed(&self, op: &TranslationPolynomial, n: u32, index: usize) -> Result<FunctionSubspace> {
        if !self.is_invariant(&op.pow(n))? {
            return Err(Error::PreconditionNotInvariant { index });
        }
        let mut out = self.clone();
        let mut layer = self.basis();
        for _ in 0..n {
            layer = layer.iter().map(|b| op.apply(b)).collect::<Result<_>>()?;
            for v in &layer {
                out.insert(v.clone());
            }
        }
        if !out.contains_space(self) || !out.is_invariant(op)? {
            return Err(Error::Internal("one-step hull failed its postconditions".into()));
        }
        Ok(out)
    }

    /// The recursion V_0 = V, V_i = (V_{i−1})^{[s_i]} under L_i.
    pub fn diamond(&self, ops: &[(TranslationPolynomial, u32)]) -> Result<FunctionSubspace> {
        for (i, (op, s)) in ops.iter().enumerate() {
            if op.dim() != self.dim_ambient() {
                return Err(Error::DimensionMismatch { expected: self.dim_ambient(), found: op.dim() });
            }
            if !self.is_invariant(&op.pow(*s))? {
                return Err(Error::PreconditionNotInvariant { index: i });
            }
        }
        let mut v = self.clone();
        for (i, (op, s)) in ops.iter().enumerate() {
            v = v.one_step_hull_indexed(op, *s, i)?;
        }
        let bound = diamond_dimension_bound(self.dim(), ops.iter().map(|(_, s)| *s));
        let invariant =
            ops.iter().map(|(op, _)| v.is_invariant(op)).collect::<Result<Vec<_>>>()?.into_iter().all(|b| b);
        if !invariant || !v.contains_space(self) || v.dim() > bound {
            return Err(Error::Internal("diamond closure failed its postconditions".into()));
        }
        Ok(v)
    }

    /// Repeatedly adds L_i(basis) until the dimension stabilizes. Independent
    /// of the hull recursion.
    pub fn saturate(&self, ops: &[TranslationPolynomial], cap: usize) -> Saturation {
        let mut v = self.clone();
        for iteration in 0..cap.max(1) {
            let mut grew = false;
            for b in v.basis() {
                for op in ops {
                    if let Ok(img) = op.apply(&b) {
                        grew |= v.insert(img);
                    }
                }
            }
            if !grew {
                return Saturation { space: v, iterations: iteration, capped: false };
            }
        }
        Saturation { space: v, iterations: cap.max(1), capped: true }
    }
}

/// Output of [`FunctionSubspace::saturate`].
#[derive(Clone, Debug)]
pub struct Saturation {
    pub space: FunctionSubspace,
    pub iterations: usize,
    /// True when the cap was hit before the dimension stabilized.
    pub capped: bool,
}

/// dim V·Π(s_i + 1).
pub fn diamond_dimension_bound(dim_v: usize, s: impl IntoIterator<Item = u32>) -> usize {
    s.into_iter().fold(dim_v, |acc, si| acc.saturating_mul(si as usize + 1))
}

//! Complex least squares by Householder QR with column pivoting.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative threshold on a column's remaining norm below which it counts
/// as dependent.
pub const RANK_TOLERANCE: f64 = 1e-10;
/// Largest accepted ratio between the first and last kept pivot.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Clone, Debug)]
pub struct LeastSquares {
    pub coefficients: Vec<Complex64>,
    pub rank: usize,
    pub condition_estimate: f64,
    /// max_i |b_i − (A x)_i|.
    pub max_residual: f64,
}

/// Minimum-norm solution of min ‖A x − b‖ for `columns` (each of length m)
/// and `b`.
pub fn least_squares(columns: &[Vec<Complex64>], b: &[Complex64]) -> Result<LeastSquares> {
    let m = b.len();
    let n = columns.len();
    if columns.iter().any(|c| c.len() != m) {
        return Err(Error::Internal("least-squares columns have unequal lengths".into()));
    }
    let scale: Vec<f64> = columns.iter().map(|c| norm(c)).collect();
    let mut a: Vec<Vec<Complex64>> = columns
        .iter()
        .zip(&scale)
        .map(|(c, &s)| if s > 0.0 { c.iter().map(|x| x / s).collect() } else { c.clone() })
        .collect();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rhs = b.to_vec();
    let mut diag = Vec::new();
    let steps = m.min(n);
    let mut rank = 0;
    for k in 0..steps {
        let (j, best) =
            (k..n).map(|j| (j, norm(&a[j][k..]))).fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= RANK_TOLERANCE {
            break;
        }
        a.swap(k, j);
        perm.swap(k, j);
        let x0 = a[k][k];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { Complex64::new(1.0, 0.0) };
        let alpha = -phase * best;
        let mut v: Vec<Complex64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vn = norm(&v);
        if vn > 0.0 {
            for x in v.iter_mut() {
                *x /= vn;
            }
            for col in a.iter_mut().skip(k) {
                reflect(&v, &mut col[k..]);
            }
            reflect(&v, &mut rhs[k..]);
        }
        a[k][k] = alpha;
        diag.push(alpha.norm());
        rank += 1;
    }
    let condition_estimate = match (diag.first(), diag.last()) {
        (Some(f), Some(l)) if *l > 0.0 => f / l,
        _ => 1.0,
    };
    if condition_estimate > MAX_CONDITION {
        return Err(Error::IllConditionedFit(condition_estimate));
    }
    let mut z = vec![Complex64::new(0.0, 0.0); rank];
    for i in (0..rank).rev() {
        let mut s = rhs[i];
        for (j, zj) in z.iter().enumerate().skip(i + 1) {
            s -= a[j][i] * zj;
        }
        z[i] = s / a[i][i];
    }
    let unscale = |col: usize, y: Complex64| if scale[col] > 0.0 { y / scale[col] } else { y };
    let mut coefficients = vec![Complex64::new(0.0, 0.0); n];
    for (i, zi) in z.into_iter().enumerate() {
        coefficients[perm[i]] = unscale(perm[i], zi);
    }
    // Null vectors [−R11⁻¹R12 e_j; e_j], then remove their component.
    let null: Vec<Vec<Complex64>> = (rank..n)
        .map(|j| {
            let mut y = vec![Complex64::new(0.0, 0.0); rank];
            for i in (0..rank).rev() {
                let mut s = a[j][i];
                for (l, yl) in y.iter().enumerate().skip(i + 1) {
                    s -= a[l][i] * yl;
                }
                y[i] = s / a[i][i];
            }
            let mut v = vec![Complex64::new(0.0, 0.0); n];
            for (i, yi) in y.into_iter().enumerate() {
                v[perm[i]] = unscale(perm[i], -yi);
            }
            v[perm[j]] = unscale(perm[j], Complex64::new(1.0, 0.0));
            v
        })
        .collect();
    if !null.is_empty() {
        let proj = least_squares(&null, &coefficients)?;
        for (v, c) in null.iter().zip(&proj.coefficients) {
            for (x, vi) in coefficients.iter_mut().zip(v) {
                *x -= c * vi;
            }
        }
    }
    let max_residual = (0..m)
        .map(|i| {
            let fit: Complex64 = columns.iter().zip(&coefficients).map(|(c, x)| c[i] * x).sum();
            (b[i] - fit).norm()
        })
        .fold(0.0, f64::max);
    Ok(LeastSquares { coefficients, rank, condition_estimate, max_residual })
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// x ← (I − 2vv*)x for unit v.
fn reflect(v: &[Complex64], x: &mut [Complex64]) {
    let dot: Complex64 = v.iter().zip(x.iter()).map(|(a, b)| a.conj() * b).sum();
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= 2.0 * vi * dot;
    }
}

//! Self-adjoint eigendecomposition and the spectral functional calculus.
//!
//! The eigensolver is a cyclic complex Jacobi method. Each rotation first
//! removes the phase of the pivot `a_pq` and then applies the classical
//! real Jacobi rotation, so the working matrix stays exactly Hermitian.

use num_complex::Complex64;

use crate::error::{Result, TomoError};
use crate::hermitian::HermitianMatrix;

/// Sweep cap for the Jacobi iteration.
pub const MAX_SWEEPS: usize = 100;
/// Convergence threshold on the off-diagonal Frobenius mass, relative to `||A||_F`.
pub const OFF_DIAGONAL_TOLERANCE: f64 = 1e-14;

/// Eigenvalues in ascending order together with a unitary matrix whose
/// columns are the matching eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub eigenvalues: Vec<f64>,
    /// Row-major `N x N`; column `j` is the eigenvector of `eigenvalues[j]`.
    pub vectors: Vec<Complex64>,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector_entry(&self, row: usize, col: usize) -> Complex64 {
        self.vectors[row * self.dim() + col]
    }

    /// `V diag(values) V*`.
    pub fn reconstruct_with(&self, values: &[f64]) -> HermitianMatrix {
        let n = self.dim();
        debug_assert_eq!(values.len(), n);
        // W = V diag(values), then W V*; only the upper triangle is needed.
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            let vi = &self.vectors[i * n..(i + 1) * n];
            for j in i..n {
                let vj = &self.vectors[j * n..(j + 1) * n];
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    acc += vi[k] * vj[k].conj() * values[k];
                }
                out[i * n + j] = acc;
                out[j * n + i] = acc.conj();
            }
        }
        HermitianMatrix::symmetrized(n, out)
    }

    /// `V f(Lambda) V*` with a fallible scalar function.
    pub fn map(&self, f: impl Fn(f64) -> Option<f64>) -> Result<HermitianMatrix> {
        let values = self
            .eigenvalues
            .iter()
            .map(|&l| match f(l) {
                Some(v) if v.is_finite() => Ok(v),
                _ => Err(TomoError::SpectralDomain { eigenvalue: l }),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.reconstruct_with(&values))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(f64::NAN)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(f64::NAN)
    }
}

fn off_diagonal_mass(n: usize, a: &[Complex64]) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            s += 2.0 * a[i * n + j].norm_sqr();
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi eigendecomposition of a Hermitian matrix.
pub fn eig_hermitian(m: &HermitianMatrix) -> Result<EigenSystem> {
    let n = m.dim();
    let mut a = m.as_slice().to_vec();
    let mut v = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        v[i * n + i] = Complex64::new(1.0, 0.0);
    }
    let norm = m.frobenius_norm();
    let target = OFF_DIAGONAL_TOLERANCE * norm;

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_mass(n, &a);
        if off <= target || off == 0.0 {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(TomoError::EigenNoConvergence { sweeps, residual: off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(n, &mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let eigenvalues = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = vec![Complex64::new(0.0, 0.0); n * n];
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..n {
            vectors[row * n + new_col] = v[row * n + old_col];
        }
    }
    Ok(EigenSystem { eigenvalues, vectors })
}

#[inline]
fn rotate(n: usize, a: &mut [Complex64], v: &mut [Complex64], p: usize, q: usize) {
    let apq = a[p * n + q];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let app = a[p * n + p].re;
    let aqq = a[q * n + q].re;
    // Pivots below the rounding level of both diagonal entries are dropped outright.
    let g = 100.0 * mag;
    if app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
        a[p * n + q] = Complex64::new(0.0, 0.0);
        a[q * n + p] = Complex64::new(0.0, 0.0);
        return;
    }

    let theta = (aqq - app) / (2.0 * mag);
    let t = if theta.is_infinite() {
        1.0 / (2.0 * theta)
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    // G = diag(1, e^{-i phi}) R with R = [[c, s], [-s, c]].
    let phase = apq / mag; // e^{i phi}
    let phase_conj = phase.conj();
    let gqp = -phase_conj * s;
    let gqq = phase_conj * c;

    // A <- G* A G. Off the (p, q) block only columns p, q change, and rows
    // p, q follow by Hermitian symmetry.
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = a[k * n + p];
        let akq = a[k * n + q];
        let new_kp = akp * c + akq * gqp;
        let new_kq = akp * s + akq * gqq;
        a[k * n + p] = new_kp;
        a[k * n + q] = new_kq;
        a[p * n + k] = new_kp.conj();
        a[q * n + k] = new_kq.conj();
    }
    a[p * n + q] = Complex64::new(0.0, 0.0);
    a[q * n + p] = Complex64::new(0.0, 0.0);
    a[p * n + p] = Complex64::new(app - t * mag, 0.0);
    a[q * n + q] = Complex64::new(aqq + t * mag, 0.0);

    for k in 0..n {
        let vkp = v[k * n + p];
        let vkq = v[k * n + q];
        v[k * n + p] = vkp * c + vkq * gqp;
        v[k * n + q] = vkp * s + vkq * gqq;
    }
}

/// Applies a real scalar function through the eigendecomposition.
///
/// `f` returns `None` (or a non-finite value) where it is undefined; the
/// offending eigenvalue is reported in the error.
pub fn apply_spectral(a: &HermitianMatrix, f: impl Fn(f64) -> Option<f64>) -> Result<HermitianMatrix> {
    eig_hermitian(a)?.map(f)
}

/// Natural logarithm, defined for positive arguments.
pub fn ln_checked(x: f64) -> Option<f64> {
    (x > 0.0).then(|| x.ln())
}

/// Trace norm `sum |lambda_i|`.
pub fn trace_norm(a: &HermitianMatrix) -> Result<f64> {
    Ok(eig_hermitian(a)?.eigenvalues.iter().map(|l| l.abs()).sum())
}

/// Shifts every eigenvalue by `eps`, i.e. returns `A + eps I`.
pub fn floor_eigenvalues(a: &HermitianMatrix, eps: f64) -> HermitianMatrix {
    if eps == 0.0 {
        return a.clone();
    }
    a.shift(eps)
}
